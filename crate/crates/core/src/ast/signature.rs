//! Rename- and value-invariant structural fingerprints.
//!
//! A signature is the multiset of (parent, child) label pairs met on a
//! depth-first walk. Layer names become positional placeholders `L1, L2, ...`
//! in order of first appearance, numbers become `#` and strings become `$`.
//! Layer list entries and binary operands carry their position so that
//! order is still visible after renaming.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Atom, LayerExpr, RuleAst};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstSignature {
    bigrams: BTreeMap<(String, String), usize>,
}

impl AstSignature {
    pub fn is_empty(&self) -> bool {
        self.bigrams.is_empty()
    }

    /// Total number of bigrams, counting repeats.
    pub fn len(&self) -> usize {
        self.bigrams.values().sum()
    }

    pub fn count(&self, parent: &str, child: &str) -> usize {
        self.bigrams
            .get(&(parent.to_string(), child.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, usize)> {
        self.bigrams
            .iter()
            .map(|((p, c), n)| (p.as_str(), c.as_str(), *n))
    }

    fn add(&mut self, parent: &str, child: &str) {
        *self
            .bigrams
            .entry((parent.to_string(), child.to_string()))
            .or_insert(0) += 1;
    }

    /// Multiset Jaccard similarity: Σ min / Σ max. Two empty signatures
    /// are identical and score 1.
    pub fn jaccard(&self, other: &AstSignature) -> f64 {
        let mut inter = 0usize;
        let mut union = 0usize;
        for (k, &a) in &self.bigrams {
            let b = other.bigrams.get(k).copied().unwrap_or(0);
            inter += a.min(b);
            union += a.max(b);
        }
        for (k, &b) in &other.bigrams {
            if !self.bigrams.contains_key(k) {
                union += b;
            }
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

#[derive(Default)]
struct Walker {
    placeholders: HashMap<String, String>,
    sig: AstSignature,
}

impl Walker {
    fn layer(&mut self, name: &str) -> String {
        let next = self.placeholders.len() + 1;
        self.placeholders
            .entry(name.to_string())
            .or_insert_with(|| format!("L{next}"))
            .clone()
    }

    fn statement(&mut self, ast: &RuleAst) -> &'static str {
        match ast {
            RuleAst::Command(c) => {
                self.sig.add("COMMAND", &format!("NAME={}", c.name));
                self.sig.add("COMMAND", "LAYERS");
                for (i, l) in c.layers.iter().enumerate() {
                    let ph = self.layer(l);
                    self.sig.add("LAYERS", &format!("{}:LAYER={ph}", i + 1));
                }
                if let Some(cond) = &c.condition {
                    self.sig.add("COMMAND", "CONDITION");
                    self.sig.add("CONDITION", &format!("OP={}", cond.op));
                    self.sig.add("CONDITION", "VAL=#");
                    if let Some(u) = &cond.unit {
                        self.sig.add("CONDITION", &format!("UNIT={u}"));
                    }
                }
                if !c.options.is_empty() {
                    self.sig.add("COMMAND", "OPTIONS");
                    for o in &c.options {
                        let mut label = o.key.clone();
                        for v in &o.values {
                            label.push(' ');
                            match v {
                                Atom::Ident(s) => label.push_str(s),
                                Atom::Number(_) => label.push('#'),
                                Atom::Str(_) => label.push('$'),
                            }
                        }
                        self.sig.add("OPTIONS", &label);
                    }
                }
                if !c.body.is_empty() {
                    self.sig.add("COMMAND", "BODY");
                    for nested in &c.body {
                        let root = self.statement(nested);
                        self.sig.add("BODY", root);
                    }
                }
                "COMMAND"
            }
            RuleAst::LayerDef(d) => {
                let ph = self.layer(&d.target);
                self.sig.add("LAYERDEF", &format!("TARGET={ph}"));
                self.sig.add("LAYERDEF", "EXPR");
                let root = self.expr(&d.expr);
                self.sig.add("EXPR", &root);
                "LAYERDEF"
            }
        }
    }

    /// Emits the bigrams below `expr` and returns its own label.
    fn expr(&mut self, expr: &LayerExpr) -> String {
        match expr {
            LayerExpr::Leaf(l) => format!("LAYER={}", self.layer(l)),
            LayerExpr::Not(c) => {
                let child = self.expr(c);
                self.sig.add("NOT", &child);
                "NOT".to_string()
            }
            LayerExpr::Binary { op, left, right } => {
                let l = self.expr(left);
                let r = self.expr(right);
                self.sig.add(op.as_str(), &format!("1:{l}"));
                self.sig.add(op.as_str(), &format!("2:{r}"));
                op.as_str().to_string()
            }
        }
    }
}

pub fn signature(ast: &RuleAst) -> AstSignature {
    deck_signature(std::slice::from_ref(ast))
}

/// Signature of several statements with one shared placeholder numbering.
pub fn deck_signature(asts: &[RuleAst]) -> AstSignature {
    let mut w = Walker::default();
    for ast in asts {
        w.statement(ast);
    }
    w.sig
}
