//! Streamlined rule ASTs.
//!
//! A statement lowers to either a [`CommandNode`] (a rule check with
//! NAME / LAYERS / CONDITION / OPTIONS sections) or a [`LayerDefNode`]
//! (a derived layer defined by a boolean layer expression).

mod diff;
mod linear;
mod lower;
mod signature;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use diff::{structural_diff, DiffReport, Mismatch, MismatchKind};
pub use linear::{deserialize, serialize, serialize_deck, SExpr};
pub use lower::{lower, parse_and_lower};
pub use signature::{deck_signature, signature, AstSignature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

impl FromStr for CmpOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            other => return Err(format!("unknown comparison operator {other:?}")),
        })
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub op: CmpOp,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

/// A single option value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Atom {
    Ident(String),
    Number(f64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionNode {
    pub key: String,
    pub values: Vec<Atom>,
}

impl OptionNode {
    pub const MODE: &'static str = "MODE";
    pub const REPORT: &'static str = "REPORT";

    pub fn report(message: impl Into<String>) -> Self {
        OptionNode {
            key: Self::REPORT.to_string(),
            values: vec![Atom::Str(message.into())],
        }
    }

    pub fn mode<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        OptionNode {
            key: Self::MODE.to_string(),
            values: values.into_iter().map(|v| Atom::Ident(v.into())).collect(),
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        match self.key.as_str() {
            Self::REPORT => match self.values.as_slice() {
                [Atom::Str(_)] => Ok(()),
                _ => Err("REPORT carries exactly one string".into()),
            },
            Self::MODE => {
                if !self.values.is_empty() && self.values.iter().all(|v| matches!(v, Atom::Ident(_)))
                {
                    Ok(())
                } else {
                    Err("MODE carries one or more identifiers".into())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoolOp {
    And,
    Or,
}

impl BoolOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BoolOp::And => "AND",
            BoolOp::Or => "OR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerExpr {
    Leaf(String),
    Not(Box<LayerExpr>),
    Binary {
        op: BoolOp,
        left: Box<LayerExpr>,
        right: Box<LayerExpr>,
    },
}

impl LayerExpr {
    pub fn leaf(name: impl Into<String>) -> Self {
        LayerExpr::Leaf(name.into())
    }

    pub fn not(child: LayerExpr) -> Self {
        LayerExpr::Not(Box::new(child))
    }

    pub fn binary(op: BoolOp, left: LayerExpr, right: LayerExpr) -> Self {
        LayerExpr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Leaf layer names, left to right.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            LayerExpr::Leaf(l) => out.push(l),
            LayerExpr::Not(c) => c.collect_leaves(out),
            LayerExpr::Binary { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    /// Number of AND/OR/NOT operators.
    pub fn operator_count(&self) -> usize {
        match self {
            LayerExpr::Leaf(_) => 0,
            LayerExpr::Not(c) => 1 + c.operator_count(),
            LayerExpr::Binary { left, right, .. } => {
                1 + left.operator_count() + right.operator_count()
            }
        }
    }

    /// Operator skeleton with layer names erased, e.g. `NOT(AND(_,_))`.
    pub fn skeleton(&self) -> String {
        match self {
            LayerExpr::Leaf(_) => "_".to_string(),
            LayerExpr::Not(c) => format!("NOT({})", c.skeleton()),
            LayerExpr::Binary { op, left, right } => {
                format!("{}({},{})", op.as_str(), left.skeleton(), right.skeleton())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandNode {
    pub name: String,
    pub layers: Vec<String>,
    pub condition: Option<Condition>,
    pub options: Vec<OptionNode>,
    /// Statements nested inside the rule's block, in source order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub body: Vec<RuleAst>,
}

impl CommandNode {
    pub fn new(name: impl Into<String>, layers: &[&str]) -> Self {
        CommandNode {
            name: name.into(),
            layers: layers.iter().map(|s| s.to_string()).collect(),
            condition: None,
            options: Vec::new(),
            body: Vec::new(),
        }
    }

    pub fn with_condition(mut self, op: CmpOp, value: f64) -> Self {
        self.condition = Some(Condition {
            op,
            value,
            unit: None,
        });
        self
    }

    pub fn with_option(mut self, option: OptionNode) -> Self {
        self.options.push(option);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDefNode {
    pub target: String,
    pub expr: LayerExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RuleAst {
    Command(CommandNode),
    LayerDef(LayerDefNode),
}

impl RuleAst {
    pub fn as_command(&self) -> Option<&CommandNode> {
        match self {
            RuleAst::Command(c) => Some(c),
            RuleAst::LayerDef(_) => None,
        }
    }

    /// This statement followed by every statement nested in its blocks,
    /// depth first.
    pub fn flatten(&self) -> Vec<&RuleAst> {
        let mut out = Vec::new();
        self.flatten_into(&mut out);
        out
    }

    fn flatten_into<'a>(&'a self, out: &mut Vec<&'a RuleAst>) {
        out.push(self);
        if let RuleAst::Command(c) = self {
            for nested in &c.body {
                nested.flatten_into(out);
            }
        }
    }

    /// Layer identifiers referenced by this statement (not its body), in
    /// order of appearance.
    pub fn layer_refs(&self) -> Vec<&str> {
        match self {
            RuleAst::Command(c) => c.layers.iter().map(String::as_str).collect(),
            RuleAst::LayerDef(d) => {
                let mut v = vec![d.target.as_str()];
                v.extend(d.expr.leaves());
                v
            }
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        match self {
            RuleAst::Command(c) => {
                if c.layers.is_empty() {
                    return Err("LAYERS section required".into());
                }
                if let Some(cond) = &c.condition {
                    if !cond.value.is_finite() {
                        return Err("condition value must be finite".into());
                    }
                }
                for o in &c.options {
                    o.check()?;
                }
                for n in &c.body {
                    n.check()?;
                }
                Ok(())
            }
            RuleAst::LayerDef(_) => Ok(()),
        }
    }
}

impl fmt::Display for RuleAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}
