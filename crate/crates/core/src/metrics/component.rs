//! Command / option / layer accuracies and their weighted blend.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::ast::{Atom, RuleAst};
use crate::error::{Error, Result};

/// Blend weights for command, option and layer accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for WeightProfile {
    fn default() -> Self {
        WeightProfile {
            w1: 0.4,
            w2: 0.2,
            w3: 0.4,
        }
    }
}

impl WeightProfile {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        let p = WeightProfile { w1, w2, w3 };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        for w in [self.w1, self.w2, self.w3] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Config(format!("weight {w} outside [0, 1]")));
            }
        }
        let sum = self.w1 + self.w2 + self.w3;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Parses `w1,w2,w3`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<f64> = text
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad weights {text:?}: {e}")))?;
        match parts.as_slice() {
            [a, b, c] => WeightProfile::new(*a, *b, *c),
            _ => Err(Error::Config(format!("expected three weights, got {text:?}"))),
        }
    }

    pub fn blend(&self, s: &ComponentScores) -> f64 {
        self.w1 * s.c_acc + self.w2 * s.o_acc + self.w3 * s.l_acc
    }

    /// The blend on a 0-100 scale. Weights are scaled before mixing so that
    /// round profiles give round percentages.
    pub fn percent(&self, s: &ComponentScores) -> f64 {
        (100.0 * self.w1) * s.c_acc + (100.0 * self.w2) * s.o_acc + (100.0 * self.w3) * s.l_acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub c_acc: f64,
    pub o_acc: f64,
    pub l_acc: f64,
}

impl ComponentScores {
    pub const PERFECT: ComponentScores = ComponentScores {
        c_acc: 1.0,
        o_acc: 1.0,
        l_acc: 1.0,
    };
    pub const ZERO: ComponentScores = ComponentScores {
        c_acc: 0.0,
        o_acc: 0.0,
        l_acc: 0.0,
    };

    pub fn new(c_acc: f64, o_acc: f64, l_acc: f64) -> Self {
        ComponentScores { c_acc, o_acc, l_acc }
    }
}

/// The parts of a statement that the accuracies look at.
struct CommandView {
    name: String,
    layers: Vec<String>,
    options: Vec<String>,
}

impl CommandView {
    fn of(ast: &RuleAst) -> Self {
        match ast {
            RuleAst::Command(c) => {
                let mut options: Vec<String> = c
                    .options
                    .iter()
                    .map(|o| {
                        let mut s = o.key.clone();
                        for v in &o.values {
                            s.push(' ');
                            match v {
                                Atom::Ident(x) => s.push_str(x),
                                Atom::Number(n) => s.push_str(&n.to_string()),
                                Atom::Str(x) => s.push_str(&format!("{x:?}")),
                            }
                        }
                        s
                    })
                    .collect();
                if let Some(cond) = &c.condition {
                    // distinguished pseudo-option; unit is not compared
                    options.push(format!("\u{0}CONDITION {} {}", cond.op, cond.value));
                }
                CommandView {
                    name: c.name.clone(),
                    layers: c.layers.clone(),
                    options,
                }
            }
            RuleAst::LayerDef(d) => CommandView {
                name: format!("LAYERDEF {}", d.expr.skeleton()),
                layers: ast.layer_refs().into_iter().map(str::to_string).collect(),
                options: Vec::new(),
            },
        }
    }
}

fn counts(items: &[String]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for i in items {
        *m.entry(i.as_str()).or_insert(0) += 1;
    }
    m
}

fn multiset_overlap(a: &[String], b: &[String]) -> usize {
    let cb = counts(b);
    counts(a)
        .iter()
        .map(|(k, &n)| n.min(cb.get(k).copied().unwrap_or(0)))
        .sum()
}

fn layer_jaccard(a: &[String], b: &[String]) -> f64 {
    let inter = multiset_overlap(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn option_f1(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * multiset_overlap(a, b) as f64 / (a.len() + b.len()) as f64
}

fn layer_position_accuracy(cand: &[String], refr: &[String]) -> f64 {
    let denom = cand.len().max(refr.len());
    if denom == 0 {
        return 1.0;
    }
    let agree = cand.iter().zip(refr).filter(|(a, b)| a == b).count();
    agree as f64 / denom as f64
}

/// Greedy alignment: reference statements in order each take the unused
/// candidate with the same name and highest layer Jaccard (earliest on
/// ties); leftovers are then paired regardless of name by the same rule.
fn align(cand: &[CommandView], refr: &[CommandView]) -> Vec<(usize, usize)> {
    let mut used = vec![false; cand.len()];
    let mut matched = vec![None; refr.len()];
    for same_name_only in [true, false] {
        for (ri, r) in refr.iter().enumerate() {
            if matched[ri].is_some() {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (ci, c) in cand.iter().enumerate() {
                if used[ci] || (same_name_only && c.name != r.name) {
                    continue;
                }
                let j = layer_jaccard(&c.layers, &r.layers);
                if best.is_none_or(|(_, bj)| j > bj) {
                    best = Some((ci, j));
                }
            }
            if let Some((ci, _)) = best {
                used[ci] = true;
                matched[ri] = Some(ci);
            }
        }
    }
    matched
        .into_iter()
        .enumerate()
        .filter_map(|(ri, ci)| ci.map(|ci| (ci, ri)))
        .collect()
}

/// Scores a candidate deck against a reference deck. Statements nested in
/// blocks take part as ordinary statements.
pub fn component_scores(candidate: &[RuleAst], reference: &[RuleAst]) -> ComponentScores {
    let cand: Vec<CommandView> = candidate
        .iter()
        .flat_map(RuleAst::flatten)
        .map(CommandView::of)
        .collect();
    let refr: Vec<CommandView> = reference
        .iter()
        .flat_map(RuleAst::flatten)
        .map(CommandView::of)
        .collect();
    if cand.is_empty() && refr.is_empty() {
        return ComponentScores::PERFECT;
    }
    let pairs = align(&cand, &refr);
    let denom = cand.len().max(refr.len()) as f64;
    let c_acc = pairs
        .iter()
        .filter(|(c, r)| cand[*c].name == refr[*r].name)
        .count() as f64
        / denom;
    if pairs.is_empty() {
        return ComponentScores::new(c_acc, 0.0, 0.0);
    }
    let k = pairs.len() as f64;
    let l_acc = pairs
        .iter()
        .map(|(c, r)| layer_position_accuracy(&cand[*c].layers, &refr[*r].layers))
        .sum::<f64>()
        / k;
    let o_acc = pairs
        .iter()
        .map(|(c, r)| option_f1(&cand[*c].options, &refr[*r].options))
        .sum::<f64>()
        / k;
    ComponentScores { c_acc, o_acc, l_acc }
}

/// `100 / N * Σ (w1·c + w2·o + w3·l)`.
pub fn ast_weighted_accuracy(scores: &[ComponentScores], profile: &WeightProfile) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Metric("empty evaluation set".into()));
    }
    profile.check()?;
    let total: f64 = scores.iter().map(|s| profile.percent(s)).sum();
    Ok(total / scores.len() as f64)
}

/// Percentage change from `baseline` to `improved`.
pub fn relative_improvement(baseline: f64, improved: f64) -> Result<f64> {
    if baseline <= 0.0 || !baseline.is_finite() {
        return Err(Error::Metric(format!(
            "baseline must be positive, got {baseline}"
        )));
    }
    Ok(100.0 * (improved - baseline) / baseline)
}
