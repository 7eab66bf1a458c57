use super::diagnostic::Diagnostic;
use super::lexer::TokenKind;
use super::parser::{NodeKind, ParseTree};
use super::registry::CommandRegistry;

/// Checks every rule check in `deck` (including ones nested in blocks)
/// against the registry. Unknown commands are errors only when `strict`.
pub fn validate(deck: &ParseTree, registry: &CommandRegistry, strict: bool) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    walk(deck, registry, strict, &mut diags);
    diags
}

fn walk(node: &ParseTree, registry: &CommandRegistry, strict: bool, out: &mut Vec<Diagnostic>) {
    if node.node_kind == NodeKind::RuleCheck {
        check_rule(node, registry, strict, out);
    }
    for child in &node.children {
        walk(child, registry, strict, out);
    }
}

/// Option key as seen by the registry: `READ ALL` is the MODE option.
pub(crate) fn option_key(option: &ParseTree) -> &str {
    match option.children.first().and_then(|c| c.token_text()) {
        Some("READ") if option.children.len() == 2 => "MODE",
        Some(key) => key,
        None => "",
    }
}

fn check_rule(rule: &ParseTree, registry: &CommandRegistry, strict: bool, out: &mut Vec<Diagnostic>) {
    let name_node = &rule.children[0];
    let name = name_node.token_text().unwrap_or_default();
    let Some(entry) = registry.get(name) else {
        let msg = format!("unknown command {name}");
        out.push(if strict {
            Diagnostic::error("unknown-command", msg, name_node.span)
        } else {
            Diagnostic::warning("unknown-command", msg, name_node.span)
        });
        return;
    };

    let layers = rule.children[1..]
        .iter()
        .take_while(|c| {
            c.is_terminal() && c.token.as_ref().map(|t| t.kind) == Some(TokenKind::Ident)
        })
        .count();
    if layers < entry.min_layers {
        out.push(Diagnostic::error(
            "layer-count",
            format!("layer count {layers} below minimum {}", entry.min_layers),
            rule.span,
        ));
    } else if layers > entry.max_layers {
        out.push(Diagnostic::error(
            "layer-count",
            format!("layer count {layers} above maximum {}", entry.max_layers),
            rule.span,
        ));
    }

    let has_condition = rule
        .children
        .iter()
        .any(|c| c.node_kind == NodeKind::Condition);
    if entry.requires_condition && !has_condition {
        out.push(Diagnostic::error(
            "missing-condition",
            format!("{name} requires a condition"),
            rule.span,
        ));
    }

    for opt in rule.children.iter().filter(|c| c.node_kind == NodeKind::Option) {
        let key = option_key(opt);
        if !entry.allowed_options.contains(key) {
            out.push(Diagnostic::error(
                "disallowed-option",
                format!("option {key} is not allowed for {name}"),
                opt.span,
            ));
        }
    }

    if let Some(block) = rule.children.iter().find(|c| c.node_kind == NodeKind::Block) {
        if !entry.allows_block {
            out.push(Diagnostic::error(
                "block-not-allowed",
                format!("{name} does not take a block"),
                block.span,
            ));
        }
    }
}
