use std::fmt;

use serde::{Deserialize, Serialize};

use super::linear::{serialize, SExpr};
use super::RuleAst;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MismatchKind {
    MissingNode,
    ExtraNode,
    LabelMismatch,
    OrderMismatch,
}

impl fmt::Display for MismatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MismatchKind::MissingNode => "MISSING_NODE",
            MismatchKind::ExtraNode => "EXTRA_NODE",
            MismatchKind::LabelMismatch => "LABEL_MISMATCH",
            MismatchKind::OrderMismatch => "ORDER_MISMATCH",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    /// Slash-joined tags of the node whose children differ.
    pub path: String,
    pub kind: MismatchKind,
    pub candidate_fragment: Option<String>,
    pub reference_fragment: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    pub mismatches: Vec<Mismatch>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.mismatches {
            writeln!(
                f,
                "{} at {}: candidate {} / reference {}",
                m.kind,
                m.path,
                m.candidate_fragment.as_deref().unwrap_or("-"),
                m.reference_fragment.as_deref().unwrap_or("-")
            )?;
        }
        Ok(())
    }
}

/// Sections whose children are tagged lists with unique tags; these are
/// matched by tag rather than by position.
const KEYED: [&str; 3] = ["COMMAND", "LAYERDEF", "CONDITION"];

pub fn structural_diff(candidate: &RuleAst, reference: &RuleAst) -> DiffReport {
    let cand = SExpr::parse(&serialize(candidate)).expect("serialized AST reads back");
    let refr = SExpr::parse(&serialize(reference)).expect("serialized AST reads back");
    let mut out = Vec::new();
    diff_node("", &cand, &refr, &mut out);
    DiffReport { mismatches: out }
}

fn push(
    out: &mut Vec<Mismatch>,
    path: &str,
    kind: MismatchKind,
    cand: Option<&SExpr>,
    refr: Option<&SExpr>,
) {
    out.push(Mismatch {
        path: if path.is_empty() { "/".to_string() } else { path.to_string() },
        kind,
        candidate_fragment: cand.map(SExpr::render),
        reference_fragment: refr.map(SExpr::render),
    });
}

fn join(path: &str, tag: &str) -> String {
    if path.is_empty() {
        tag.to_string()
    } else {
        format!("{path}/{tag}")
    }
}

fn diff_node(path: &str, cand: &SExpr, refr: &SExpr, out: &mut Vec<Mismatch>) {
    if cand.same_as(refr) {
        return;
    }
    let (Some(tag), Some(ref_tag)) = (cand.head(), refr.head()) else {
        push(out, path, MismatchKind::LabelMismatch, Some(cand), Some(refr));
        return;
    };
    if tag != ref_tag {
        push(out, path, MismatchKind::LabelMismatch, Some(cand), Some(refr));
        return;
    }
    let here = join(path, tag);
    let (cs, rs) = (cand.tail(), refr.tail());

    if KEYED.contains(&tag) {
        for r in rs {
            match cs.iter().find(|c| c.head() == r.head()) {
                Some(c) => diff_node(&here, c, r, out),
                None => push(out, &here, MismatchKind::MissingNode, None, Some(r)),
            }
        }
        for c in cs {
            if !rs.iter().any(|r| r.head() == c.head()) {
                push(out, &here, MismatchKind::ExtraNode, Some(c), None);
            }
        }
        return;
    }

    if cs.len() == rs.len() && cs.len() > 1 && same_multiset(cs, rs) {
        push(out, &here, MismatchKind::OrderMismatch, Some(cand), Some(refr));
        return;
    }
    for (c, r) in cs.iter().zip(rs) {
        diff_node(&here, c, r, out);
    }
    for c in cs.iter().skip(rs.len()) {
        push(out, &here, MismatchKind::ExtraNode, Some(c), None);
    }
    for r in rs.iter().skip(cs.len()) {
        push(out, &here, MismatchKind::MissingNode, None, Some(r));
    }
}

fn same_multiset(a: &[SExpr], b: &[SExpr]) -> bool {
    let mut x: Vec<String> = a.iter().map(SExpr::render).collect();
    let mut y: Vec<String> = b.iter().map(SExpr::render).collect();
    x.sort();
    y.sort();
    x == y
}
