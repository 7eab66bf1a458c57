use crate::error::{Error, Result};
use crate::grammar::{
    has_errors, option_key, parse_deck, CommandRegistry, Diagnostic, NodeKind, ParseTree,
    TokenKind,
};

use super::{Atom, BoolOp, CommandNode, Condition, LayerDefNode, LayerExpr, OptionNode, RuleAst};

/// Lowers a DECK (or a single statement node) to one AST per statement.
pub fn lower(tree: &ParseTree) -> Result<Vec<RuleAst>> {
    match tree.node_kind {
        NodeKind::Deck => tree.children.iter().map(lower_statement).collect(),
        NodeKind::RuleCheck | NodeKind::LayerDef => Ok(vec![lower_statement(tree)?]),
        other => Err(bad(tree, format!("{other} is not a statement"))),
    }
}

/// Parses `source` and lowers it, failing on the first ERROR diagnostic.
pub fn parse_and_lower(source: &str, registry: &CommandRegistry) -> Result<Vec<RuleAst>> {
    let (deck, diags) = parse_deck(source, registry);
    if has_errors(&diags) {
        let first = diags.iter().find(|d| d.is_error()).map(Diagnostic::to_string);
        return Err(Error::InvalidCode(first.unwrap_or_default()));
    }
    lower(&deck)
}

fn bad(node: &ParseTree, message: impl Into<String>) -> Error {
    Error::Lower {
        span: node.span,
        message: message.into(),
    }
}

fn text(node: &ParseTree) -> Result<&str> {
    node.token_text()
        .ok_or_else(|| bad(node, format!("expected a terminal, found {}", node.node_kind)))
}

fn lower_statement(node: &ParseTree) -> Result<RuleAst> {
    match node.node_kind {
        NodeKind::RuleCheck => lower_rule(node).map(RuleAst::Command),
        NodeKind::LayerDef => {
            let [target, _assign, expr] = node.children.as_slice() else {
                return Err(bad(node, "malformed layer definition"));
            };
            Ok(RuleAst::LayerDef(LayerDefNode {
                target: text(target)?.to_string(),
                expr: lower_expr(expr)?,
            }))
        }
        other => Err(bad(node, format!("{other} is not a statement"))),
    }
}

fn lower_rule(node: &ParseTree) -> Result<CommandNode> {
    let mut children = node.children.iter();
    let name = text(children.next().ok_or_else(|| bad(node, "empty rule check"))?)?;
    let mut cmd = CommandNode {
        name: name.to_string(),
        layers: Vec::new(),
        condition: None,
        options: Vec::new(),
        body: Vec::new(),
    };
    let mut reports = Vec::new();

    for child in children {
        match child.node_kind {
            NodeKind::Terminal => {
                if !cmd.options.is_empty() || cmd.condition.is_some() {
                    return Err(bad(child, "layer after condition or options"));
                }
                cmd.layers.push(text(child)?.to_string());
            }
            NodeKind::Condition => cmd.condition = Some(lower_condition(child)?),
            NodeKind::Option => cmd.options.push(lower_option(child)?),
            NodeKind::Block => {
                for item in &child.children {
                    match item.node_kind {
                        NodeKind::Terminal => {}
                        NodeKind::ReportStmt => {
                            let msg = item
                                .children
                                .get(1)
                                .and_then(|t| t.token.as_ref())
                                .and_then(|t| t.string_value())
                                .ok_or_else(|| bad(item, "REPORT without string"))?;
                            reports.push(OptionNode::report(msg));
                        }
                        _ => cmd.body.push(lower_statement(item)?),
                    }
                }
            }
            other => return Err(bad(child, format!("unexpected {other} in rule check"))),
        }
    }
    if cmd.layers.is_empty() {
        return Err(bad(node, "LAYERS section required"));
    }
    cmd.options.extend(reports);
    Ok(cmd)
}

fn lower_condition(node: &ParseTree) -> Result<Condition> {
    let op_node = node.children.first().ok_or_else(|| bad(node, "empty condition"))?;
    let op = text(op_node)?
        .parse()
        .map_err(|e: String| bad(op_node, e))?;
    let num = node.children.get(1).ok_or_else(|| bad(node, "condition without number"))?;
    let value = parse_number(num)?;
    let unit = match node.children.get(2) {
        Some(u) => Some(text(u)?.to_string()),
        None => None,
    };
    Ok(Condition { op, value, unit })
}

fn parse_number(node: &ParseTree) -> Result<f64> {
    let raw = text(node)?;
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(bad(node, format!("{raw:?} is not a finite number"))),
    }
}

fn lower_option(node: &ParseTree) -> Result<OptionNode> {
    let key = option_key(node);
    let option = if key == OptionNode::MODE && text(&node.children[0])? == "READ" {
        OptionNode::mode(["READ", "ALL"])
    } else {
        let mut values = Vec::new();
        for v in &node.children[1..] {
            let tok = v.token.as_ref().ok_or_else(|| bad(v, "option value must be a token"))?;
            values.push(match tok.kind {
                TokenKind::Number => Atom::Number(parse_number(v)?),
                TokenKind::String => Atom::Str(tok.string_value().unwrap_or_default()),
                _ => Atom::Ident(tok.text.clone()),
            });
        }
        OptionNode {
            key: key.to_string(),
            values,
        }
    };
    option.check().map_err(|e| bad(node, e))?;
    Ok(option)
}

fn lower_expr(node: &ParseTree) -> Result<LayerExpr> {
    if node.node_kind != NodeKind::LayerExpr {
        return Err(bad(node, format!("expected LAYER_EXPR, found {}", node.node_kind)));
    }
    match node.children.as_slice() {
        [leaf] => Ok(LayerExpr::leaf(text(leaf)?)),
        [not, operand] if not.token_text() == Some("NOT") => Ok(LayerExpr::not(lower_expr(operand)?)),
        [open, inner, _close] if open.token_text() == Some("(") => lower_expr(inner),
        [left, op, right] => {
            let op = match text(op)? {
                "AND" => BoolOp::And,
                "OR" => BoolOp::Or,
                other => return Err(bad(node, format!("unknown operator {other}"))),
            };
            Ok(LayerExpr::binary(op, lower_expr(left)?, lower_expr(right)?))
        }
        _ => Err(bad(node, "malformed layer expression")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::CmpOp;

    pub(crate) const APPENDIX_RULE: &str =
        "SPACE_CMD METAL1 METAL2 >= 0.5 READ ALL {\n    REPORT \"Spacing violation detected\"\n}";

    fn lower_src(src: &str) -> Vec<RuleAst> {
        parse_and_lower(src, &CommandRegistry::default()).unwrap()
    }

    #[test]
    fn appendix_rule_lowers_to_command() {
        let asts = lower_src(APPENDIX_RULE);
        let expected = CommandNode::new("SPACE_CMD", &["METAL1", "METAL2"])
            .with_condition(CmpOp::Ge, 0.5)
            .with_option(OptionNode::mode(["READ", "ALL"]))
            .with_option(OptionNode::report("Spacing violation detected"));
        assert_eq!(asts, vec![RuleAst::Command(expected)]);
    }

    #[test]
    fn layer_def_lowers_to_binary() {
        let asts = lower_src("M3 = METAL1 AND METAL2");
        assert_eq!(
            asts,
            vec![RuleAst::LayerDef(LayerDefNode {
                target: "M3".into(),
                expr: LayerExpr::binary(
                    BoolOp::And,
                    LayerExpr::leaf("METAL1"),
                    LayerExpr::leaf("METAL2")
                ),
            })]
        );
    }

    #[test]
    fn parentheses_are_streamlined() {
        let a = lower_src("X = NOT (A AND B)");
        let b = lower_src("X = NOT ((A) AND (B))");
        assert_eq!(a, b);
        let RuleAst::LayerDef(d) = &a[0] else { panic!() };
        assert_eq!(d.expr.skeleton(), "NOT(AND(_,_))");
    }

    #[test]
    fn empty_deck_lowers_to_nothing() {
        assert!(lower_src("").is_empty());
        assert!(lower_src("// only a comment").is_empty());
    }

    #[test]
    fn nested_statements_land_in_body() {
        let asts = lower_src("SPACE_CMD A B > 1 { REPORT \"a\" M3 = A OR B }");
        let cmd = asts[0].as_command().unwrap();
        assert_eq!(cmd.body.len(), 1);
        assert_eq!(cmd.options, vec![OptionNode::report("a")]);
        assert_eq!(asts[0].flatten().len(), 2);
    }

    #[test]
    fn unit_and_values_are_kept() {
        let asts = lower_src("DENSITY_CMD M1 < 0.8um WINDOW 100 NOTE \"x\"");
        let cmd = asts[0].as_command().unwrap();
        assert_eq!(cmd.condition.as_ref().unwrap().unit.as_deref(), Some("um"));
        assert_eq!(cmd.options[0].values, vec![Atom::Number(100.0)]);
        assert_eq!(cmd.options[1].values, vec![Atom::Str("x".into())]);
    }

    #[test]
    fn malformed_tree_reports_span() {
        let tree = ParseTree::node(
            NodeKind::RuleCheck,
            vec![ParseTree::node(
                NodeKind::Condition,
                vec![ParseTree::terminal(crate::grammar::tokenize(">=").0[0].clone())],
            )],
        );
        match lower(&tree) {
            Err(Error::Lower { span, .. }) => assert_eq!(span.column, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_source_is_rejected() {
        assert!(matches!(
            parse_and_lower("SPACE_CMD {", &CommandRegistry::default()),
            Err(Error::InvalidCode(_))
        ));
    }
}
