//! Linearized, bracketed AST text.
//!
//! ```text
//! (COMMAND (NAME n) (LAYERS (LAYER l1) (LAYER l2)) (CONDITION (OP op) (VAL v)) (OPTIONS (key v ...) ...))
//! (LAYERDEF (TARGET t) (EXPR (AND (LAYER a) (NOT (LAYER b)))))
//! ```
//!
//! CONDITION, OPTIONS and BODY are left out when empty. A condition unit is
//! written as a trailing `(UNIT um)`. Strings are double-quoted with `"` and
//! `\` escaped by a backslash. Numbers use the shortest text that parses
//! back to the same value.

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::{Atom, BoolOp, CommandNode, Condition, LayerDefNode, LayerExpr, OptionNode, RuleAst};

pub fn serialize(ast: &RuleAst) -> String {
    let mut out = String::new();
    write_ast(ast, &mut out);
    out
}

/// One serialized AST per line.
pub fn serialize_deck(asts: &[RuleAst]) -> String {
    asts.iter().map(serialize).collect::<Vec<_>>().join("\n")
}

fn write_ast(ast: &RuleAst, out: &mut String) {
    match ast {
        RuleAst::Command(c) => write_command(c, out),
        RuleAst::LayerDef(d) => {
            let _ = write!(out, "(LAYERDEF (TARGET {}) (EXPR ", d.target);
            write_expr(&d.expr, out);
            out.push_str("))");
        }
    }
}

fn write_command(c: &CommandNode, out: &mut String) {
    let _ = write!(out, "(COMMAND (NAME {}) (LAYERS", c.name);
    for l in &c.layers {
        let _ = write!(out, " (LAYER {l})");
    }
    out.push(')');
    if let Some(cond) = &c.condition {
        let _ = write!(out, " (CONDITION (OP {}) (VAL {})", cond.op, cond.value);
        if let Some(unit) = &cond.unit {
            let _ = write!(out, " (UNIT {unit})");
        }
        out.push(')');
    }
    if !c.options.is_empty() {
        out.push_str(" (OPTIONS");
        for o in &c.options {
            let _ = write!(out, " ({}", o.key);
            for v in &o.values {
                out.push(' ');
                write_atom(v, out);
            }
            out.push(')');
        }
        out.push(')');
    }
    if !c.body.is_empty() {
        out.push_str(" (BODY");
        for nested in &c.body {
            out.push(' ');
            write_ast(nested, out);
        }
        out.push(')');
    }
    out.push(')');
}

fn write_atom(atom: &Atom, out: &mut String) {
    match atom {
        Atom::Ident(s) => out.push_str(s),
        Atom::Number(n) => {
            let _ = write!(out, "{n}");
        }
        Atom::Str(s) => {
            out.push('"');
            for ch in s.chars() {
                if ch == '"' || ch == '\\' {
                    out.push('\\');
                }
                out.push(ch);
            }
            out.push('"');
        }
    }
}

fn write_expr(expr: &LayerExpr, out: &mut String) {
    match expr {
        LayerExpr::Leaf(l) => {
            let _ = write!(out, "(LAYER {l})");
        }
        LayerExpr::Not(c) => {
            out.push_str("(NOT ");
            write_expr(c, out);
            out.push(')');
        }
        LayerExpr::Binary { op, left, right } => {
            let _ = write!(out, "({} ", op.as_str());
            write_expr(left, out);
            out.push(' ');
            write_expr(right, out);
            out.push(')');
        }
    }
}

/// Generic bracketed tree read from linearized text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom {
        text: String,
        quoted: bool,
        offset: usize,
    },
    List {
        items: Vec<SExpr>,
        offset: usize,
    },
}

impl SExpr {
    pub fn offset(&self) -> usize {
        match self {
            SExpr::Atom { offset, .. } | SExpr::List { offset, .. } => *offset,
        }
    }

    /// Head symbol of a list, if it starts with an unquoted atom.
    pub fn head(&self) -> Option<&str> {
        match self {
            SExpr::List { items, .. } => match items.first() {
                Some(SExpr::Atom {
                    text,
                    quoted: false,
                    ..
                }) => Some(text),
                _ => None,
            },
            SExpr::Atom { .. } => None,
        }
    }

    /// Items after the head.
    pub fn tail(&self) -> &[SExpr] {
        match self {
            SExpr::List { items, .. } if !items.is_empty() => &items[1..],
            _ => &[],
        }
    }

    /// Canonical text of this subtree.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self {
            SExpr::Atom { text, quoted, .. } => {
                if *quoted {
                    write_atom(&Atom::Str(text.clone()), out);
                } else {
                    out.push_str(text);
                }
            }
            SExpr::List { items, .. } => {
                out.push('(');
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    it.render_into(out);
                }
                out.push(')');
            }
        }
    }

    /// Structural equality ignoring offsets.
    pub fn same_as(&self, other: &SExpr) -> bool {
        match (self, other) {
            (
                SExpr::Atom {
                    text: a, quoted: qa, ..
                },
                SExpr::Atom {
                    text: b, quoted: qb, ..
                },
            ) => a == b && qa == qb,
            (SExpr::List { items: a, .. }, SExpr::List { items: b, .. }) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_as(y))
            }
            _ => false,
        }
    }

    /// Reads exactly one bracketed expression from `text`.
    pub fn parse(text: &str) -> Result<SExpr> {
        let mut reader = Reader {
            src: text.as_bytes(),
            text,
            pos: 0,
        };
        reader.skip_ws();
        let expr = reader.expr()?;
        reader.skip_ws();
        if reader.pos < reader.src.len() {
            let msg = if reader.src[reader.pos] == b')' {
                "unbalanced parentheses"
            } else {
                "trailing content"
            };
            return Err(de_err(reader.pos, msg));
        }
        Ok(expr)
    }
}

fn de_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Deserialize {
        offset,
        message: message.into(),
    }
}

struct Reader<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl Reader<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expr(&mut self) -> Result<SExpr> {
        // Explicit stack so deeply nested input cannot exhaust the call stack.
        let mut stack: Vec<(usize, Vec<SExpr>)> = Vec::new();
        loop {
            self.skip_ws();
            if self.pos >= self.src.len() {
                return Err(match stack.last() {
                    Some((open, _)) => de_err(*open, "unbalanced parentheses"),
                    None => de_err(self.pos, "unexpected end of input"),
                });
            }
            let finished = match self.src[self.pos] {
                b'(' => {
                    stack.push((self.pos, Vec::new()));
                    self.pos += 1;
                    continue;
                }
                b')' => {
                    let Some((open, items)) = stack.pop() else {
                        return Err(de_err(self.pos, "unbalanced parentheses"));
                    };
                    self.pos += 1;
                    SExpr::List {
                        items,
                        offset: open,
                    }
                }
                b'"' => self.string()?,
                _ => self.symbol(),
            };
            match stack.last_mut() {
                Some((_, items)) => items.push(finished),
                None => return Ok(finished),
            }
        }
    }

    fn string(&mut self) -> Result<SExpr> {
        let start = self.pos;
        self.pos += 1;
        let mut value = String::new();
        let mut seg_start = self.pos;
        loop {
            if self.pos >= self.src.len() {
                return Err(de_err(start, "unterminated string"));
            }
            match self.src[self.pos] {
                b'"' => {
                    value.push_str(&self.text[seg_start..self.pos]);
                    self.pos += 1;
                    return Ok(SExpr::Atom {
                        text: value,
                        quoted: true,
                        offset: start,
                    });
                }
                b'\\' => {
                    value.push_str(&self.text[seg_start..self.pos]);
                    match self.src.get(self.pos + 1) {
                        Some(b'"') => value.push('"'),
                        Some(b'\\') => value.push('\\'),
                        _ => return Err(de_err(self.pos, "malformed escape")),
                    }
                    self.pos += 2;
                    seg_start = self.pos;
                }
                _ => self.pos += 1,
            }
        }
    }

    fn symbol(&mut self) -> SExpr {
        let start = self.pos;
        while self.pos < self.src.len() {
            let b = self.src[self.pos];
            if b.is_ascii_whitespace() || b == b'(' || b == b')' || b == b'"' {
                break;
            }
            self.pos += 1;
        }
        SExpr::Atom {
            text: self.text[start..self.pos].to_string(),
            quoted: false,
            offset: start,
        }
    }
}

/// Parses linearized text back into an AST.
pub fn deserialize(text: &str) -> Result<RuleAst> {
    let sx = SExpr::parse(text)?;
    let ast = read_ast(&sx)?;
    ast.check().map_err(|e| de_err(sx.offset(), e))?;
    Ok(ast)
}

fn read_ast(sx: &SExpr) -> Result<RuleAst> {
    match sx.head() {
        Some("COMMAND") => read_command(sx).map(RuleAst::Command),
        Some("LAYERDEF") => read_layer_def(sx).map(RuleAst::LayerDef),
        Some(other) => Err(de_err(sx.offset(), format!("unknown node tag {other}"))),
        None => Err(de_err(sx.offset(), "expected a tagged list")),
    }
}

/// `(TAG atom)` → atom text.
fn single_symbol<'a>(sx: &'a SExpr, tag: &str) -> Result<&'a str> {
    if sx.head() != Some(tag) {
        return Err(de_err(sx.offset(), format!("expected ({tag} ...)")));
    }
    match sx.tail() {
        [SExpr::Atom {
            text,
            quoted: false,
            ..
        }] => Ok(text),
        _ => Err(de_err(sx.offset(), format!("{tag} takes exactly one symbol"))),
    }
}

fn read_command(sx: &SExpr) -> Result<CommandNode> {
    let sections = sx.tail();
    let mut it = sections.iter().peekable();
    let name = match it.next() {
        Some(s) if s.head() == Some("NAME") => single_symbol(s, "NAME")?.to_string(),
        _ => return Err(de_err(sx.offset(), "NAME section required")),
    };
    let layers_sx = match it.next() {
        Some(s) if s.head() == Some("LAYERS") => s,
        _ => return Err(de_err(sx.offset(), "LAYERS section required")),
    };
    let layers = layers_sx
        .tail()
        .iter()
        .map(|l| single_symbol(l, "LAYER").map(str::to_string))
        .collect::<Result<Vec<_>>>()?;

    let mut cmd = CommandNode {
        name,
        layers,
        condition: None,
        options: Vec::new(),
        body: Vec::new(),
    };
    let order = ["CONDITION", "OPTIONS", "BODY"];
    let mut last = 0;
    for section in it {
        let tag = section.head().unwrap_or_default();
        let Some(rank) = order.iter().position(|t| *t == tag).map(|p| p + 1) else {
            return Err(de_err(section.offset(), format!("unknown node tag {tag}")));
        };
        if rank <= last {
            return Err(de_err(section.offset(), format!("unexpected {tag} section")));
        }
        last = rank;
        match tag {
            "CONDITION" => cmd.condition = Some(read_condition(section)?),
            "OPTIONS" => {
                cmd.options = section
                    .tail()
                    .iter()
                    .map(read_option)
                    .collect::<Result<_>>()?
            }
            _ => cmd.body = section.tail().iter().map(read_ast).collect::<Result<_>>()?,
        }
    }
    Ok(cmd)
}

fn read_condition(sx: &SExpr) -> Result<Condition> {
    let parts = sx.tail();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(de_err(sx.offset(), "CONDITION takes OP, VAL and an optional UNIT"));
    }
    let op_text = single_symbol(&parts[0], "OP")?;
    let op = op_text.parse().map_err(|e: String| de_err(parts[0].offset(), e))?;
    let value = read_number(single_symbol(&parts[1], "VAL")?, parts[1].offset())?;
    let unit = match parts.get(2) {
        Some(u) => Some(single_symbol(u, "UNIT")?.to_string()),
        None => None,
    };
    Ok(Condition { op, value, unit })
}

fn read_number(text: &str, offset: usize) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(de_err(offset, format!("{text:?} is not a finite number"))),
    }
}

fn read_option(sx: &SExpr) -> Result<OptionNode> {
    let key = sx
        .head()
        .ok_or_else(|| de_err(sx.offset(), "option must start with its key"))?;
    let values = sx
        .tail()
        .iter()
        .map(|v| match v {
            SExpr::Atom {
                text, quoted: true, ..
            } => Ok(Atom::Str(text.clone())),
            SExpr::Atom { text, offset, .. } if text.starts_with(|c: char| c.is_ascii_digit()) => {
                read_number(text, *offset).map(Atom::Number)
            }
            SExpr::Atom { text, .. } => Ok(Atom::Ident(text.clone())),
            SExpr::List { offset, .. } => Err(de_err(*offset, "option values must be atoms")),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptionNode {
        key: key.to_string(),
        values,
    })
}

fn read_layer_def(sx: &SExpr) -> Result<LayerDefNode> {
    let [target, expr] = sx.tail() else {
        return Err(de_err(sx.offset(), "LAYERDEF takes TARGET and EXPR"));
    };
    let target = single_symbol(target, "TARGET")?.to_string();
    if expr.head() != Some("EXPR") || expr.tail().len() != 1 {
        return Err(de_err(expr.offset(), "expected (EXPR <expression>)"));
    }
    Ok(LayerDefNode {
        target,
        expr: read_expr(&expr.tail()[0])?,
    })
}

fn read_expr(sx: &SExpr) -> Result<LayerExpr> {
    // Left-deep chains can be long, so walk the left spine iteratively.
    let mut spine: Vec<(BoolOp, &SExpr)> = Vec::new();
    let mut node = sx;
    let mut base = loop {
        match (node.head(), node.tail()) {
            (Some("LAYER"), _) => break LayerExpr::leaf(single_symbol(node, "LAYER")?),
            (Some("NOT"), [child]) => break LayerExpr::not(read_expr(child)?),
            (Some(tag @ ("AND" | "OR")), [left, right]) => {
                let op = if tag == "AND" { BoolOp::And } else { BoolOp::Or };
                spine.push((op, right));
                node = left;
            }
            (Some(tag), _) => {
                return Err(de_err(node.offset(), format!("unknown node tag {tag}")))
            }
            (None, _) => return Err(de_err(node.offset(), "expected a layer expression")),
        }
    };
    while let Some((op, right)) = spine.pop() {
        base = LayerExpr::binary(op, base, read_expr(right)?);
    }
    Ok(base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse_and_lower, CmpOp};
    use crate::grammar::CommandRegistry;
    use proptest::prelude::*;

    const APPENDIX_RULE: &str =
        "SPACE_CMD METAL1 METAL2 >= 0.5 READ ALL {\n    REPORT \"Spacing violation detected\"\n}";
    const APPENDIX_LINEAR: &str = "(COMMAND (NAME SPACE_CMD) (LAYERS (LAYER METAL1) (LAYER METAL2)) (CONDITION (OP >=) (VAL 0.5)) (OPTIONS (MODE READ ALL) (REPORT \"Spacing violation detected\")))";

    fn one(src: &str) -> RuleAst {
        parse_and_lower(src, &CommandRegistry::default())
            .unwrap()
            .remove(0)
    }

    #[test]
    fn appendix_serialization() {
        let ast = one(APPENDIX_RULE);
        assert_eq!(serialize(&ast), APPENDIX_LINEAR);
        assert_eq!(deserialize(APPENDIX_LINEAR).unwrap(), ast);
    }

    #[test]
    fn minimal_command() {
        let ast = RuleAst::Command(CommandNode::new("WIDTH_CMD", &["M1"]));
        assert_eq!(serialize(&ast), "(COMMAND (NAME WIDTH_CMD) (LAYERS (LAYER M1)))");
    }

    #[test]
    fn layer_def() {
        let ast = one("M3 = METAL1 AND METAL2");
        assert_eq!(
            serialize(&ast),
            "(LAYERDEF (TARGET M3) (EXPR (AND (LAYER METAL1) (LAYER METAL2))))"
        );
    }

    #[test]
    fn escapes_strings() {
        let ast = RuleAst::Command(
            CommandNode::new("X_CMD", &["A"]).with_option(OptionNode::report("say \"hi\" \\ bye")),
        );
        let text = serialize(&ast);
        assert!(text.contains(r#"(REPORT "say \"hi\" \\ bye")"#), "{text}");
        assert_eq!(deserialize(&text).unwrap(), ast);
    }

    #[test]
    fn missing_layers_section() {
        let err = deserialize("(COMMAND (NAME X))").unwrap_err();
        assert!(err.to_string().contains("LAYERS section required"), "{err}");
    }

    #[test]
    fn unbalanced_parentheses() {
        let err = deserialize("(COMMAND (NAME A) (LAYERS (LAYER B))").unwrap_err();
        assert_eq!(err.to_string(), "unbalanced parentheses at offset 0");
        let err = deserialize("(COMMAND (NAME A) (LAYERS (LAYER B))))").unwrap_err();
        assert_eq!(err.to_string(), "unbalanced parentheses at offset 37");
    }

    #[test]
    fn unknown_tag_and_bad_escape() {
        let err = deserialize("(RULE (NAME A))").unwrap_err();
        assert!(err.to_string().contains("unknown node tag RULE"));
        let err = deserialize(r#"(COMMAND (NAME A) (LAYERS (LAYER B)) (OPTIONS (REPORT "a\nb")))"#)
            .unwrap_err();
        assert_eq!(err.to_string(), "malformed escape at offset 56");
    }

    #[test]
    fn empty_layers_rejected() {
        let err = deserialize("(COMMAND (NAME A) (LAYERS))").unwrap_err();
        assert!(err.to_string().contains("LAYERS section required"));
    }

    #[test]
    fn unit_and_body_round_trip() {
        let src = "SPACE_CMD A B >= 0.25um PROJECTING 3 { M3 = NOT A OR B AND C WIDTH_CMD M3 > 1 }";
        let ast = one(src);
        let text = serialize(&ast);
        assert!(text.contains("(UNIT um)"));
        assert!(text.contains("(BODY (LAYERDEF"));
        assert_eq!(deserialize(&text).unwrap(), ast);
    }

    #[test]
    fn long_chain_round_trip() {
        let mut expr = LayerExpr::leaf("L0");
        for i in 1..1000 {
            expr = LayerExpr::binary(BoolOp::Or, expr, LayerExpr::leaf(format!("L{i}")));
        }
        let ast = RuleAst::LayerDef(LayerDefNode {
            target: "T".into(),
            expr,
        });
        let text = serialize(&ast);
        assert_eq!(deserialize(&text).unwrap(), ast);
    }

    fn ident() -> impl Strategy<Value = String> {
        "[A-Z][A-Z0-9_]{0,5}".prop_filter("reserved", |s| {
            !matches!(s.as_str(), "AND" | "OR" | "NOT" | "LAYER")
        })
    }

    fn expr() -> impl Strategy<Value = LayerExpr> {
        let leaf = ident().prop_map(LayerExpr::Leaf);
        leaf.prop_recursive(4, 16, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(LayerExpr::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| LayerExpr::binary(BoolOp::And, a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| LayerExpr::binary(BoolOp::Or, a, b)),
            ]
        })
    }

    fn atom() -> impl Strategy<Value = Atom> {
        prop_oneof![
            ident().prop_map(Atom::Ident),
            (0u32..100000).prop_map(|n| Atom::Number(n as f64 / 1000.0)),
            "[ -~]{0,8}".prop_map(Atom::Str),
        ]
    }

    pub(crate) fn rule_ast() -> impl Strategy<Value = RuleAst> {
        let cmd = (
            ident(),
            prop::collection::vec(ident(), 1..4),
            prop::option::of((0usize..6, 0u32..10000)),
            prop::collection::vec((ident(), prop::collection::vec(atom(), 0..3)), 0..3),
        )
            .prop_map(|(name, layers, cond, opts)| {
                let ops = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];
                RuleAst::Command(CommandNode {
                    name: format!("{name}_CMD"),
                    layers,
                    condition: cond.map(|(o, v)| Condition {
                        op: ops[o],
                        value: v as f64 / 100.0,
                        unit: None,
                    }),
                    options: opts
                        .into_iter()
                        .map(|(key, values)| OptionNode { key, values })
                        .filter(|o| o.check().is_ok())
                        .collect(),
                    body: Vec::new(),
                })
            });
        let def = (ident(), expr()).prop_map(|(target, expr)| RuleAst::LayerDef(LayerDefNode { target, expr }));
        prop_oneof![cmd, def]
    }

    proptest! {
        #[test]
        fn round_trip(ast in rule_ast()) {
            let text = serialize(&ast);
            prop_assert_eq!(deserialize(&text).unwrap(), ast);
        }

        #[test]
        fn injective(a in rule_ast(), b in rule_ast()) {
            prop_assert_eq!(a == b, serialize(&a) == serialize(&b));
        }
    }
}
