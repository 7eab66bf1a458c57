use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ast::parse_and_lower;
use crate::corpus::read_jsonl;
use crate::error::{Error, Result};
use crate::grammar::CommandRegistry;

use super::component::{component_scores, WeightProfile};
use super::text::{bleu, code_tokens, rouge_l};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub id: String,
    pub candidate: String,
    pub reference: String,
}

impl EvalPair {
    pub fn new(id: impl Into<String>, candidate: impl Into<String>, reference: impl Into<String>) -> Self {
        EvalPair {
            id: id.into(),
            candidate: candidate.into(),
            reference: reference.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub id: String,
    pub bleu: f64,
    pub rouge_l: f64,
    /// Percentage in [0, 100]; zero whenever `parse_failed` is set.
    pub ast_weighted: f64,
    pub parse_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub bleu: f64,
    pub rouge_l: f64,
    pub ast_weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairError {
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub corpus: CorpusScores,
    pub per_example: Vec<MetricScores>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<PairError>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Scores one pair. The reference must lower cleanly.
pub fn evaluate_pair(
    pair: &EvalPair,
    profile: &WeightProfile,
    registry: &CommandRegistry,
) -> Result<MetricScores> {
    let reference = parse_and_lower(&pair.reference, registry).map_err(|e| Error::Entry {
        id: pair.id.clone(),
        message: format!("reference does not parse: {e}"),
    })?;
    let cand_tokens = code_tokens(&pair.candidate);
    let ref_tokens = code_tokens(&pair.reference);
    let (ast_weighted, parse_failed) = match parse_and_lower(&pair.candidate, registry) {
        Ok(candidate) => {
            let s = component_scores(&candidate, &reference);
            (profile.percent(&s), false)
        }
        Err(_) => (0.0, true),
    };
    Ok(MetricScores {
        id: pair.id.clone(),
        bleu: bleu(&cand_tokens, &ref_tokens, 4).score,
        rouge_l: rouge_l(&cand_tokens, &ref_tokens),
        ast_weighted,
        parse_failed,
    })
}

/// Scores every pair and averages. Pairs whose reference fails to parse are
/// listed under `errors` and left out of the means.
pub fn evaluate_corpus(
    pairs: &[EvalPair],
    profile: &WeightProfile,
    registry: &CommandRegistry,
) -> Result<MetricReport> {
    profile.check()?;
    let mut per_example = Vec::with_capacity(pairs.len());
    let mut errors = Vec::new();
    for pair in pairs {
        match evaluate_pair(pair, profile, registry) {
            Ok(s) => per_example.push(s),
            Err(e) => errors.push(PairError {
                id: pair.id.clone(),
                message: e.to_string(),
            }),
        }
    }
    if per_example.is_empty() {
        return Err(Error::Metric("empty evaluation set".into()));
    }
    let n = per_example.len() as f64;
    let mean = |f: fn(&MetricScores) -> f64| per_example.iter().map(f).sum::<f64>() / n;
    let corpus = CorpusScores {
        bleu: mean(|s| s.bleu),
        rouge_l: mean(|s| s.rouge_l),
        ast_weighted: mean(|s| s.ast_weighted),
    };
    Ok(MetricReport {
        n: per_example.len(),
        corpus,
        per_example,
        errors,
    })
}

#[derive(Deserialize)]
struct CodeRecord {
    id: String,
    code: String,
}

/// Joins candidate and reference JSONL files (`{id, code}` records) by id,
/// in reference order. A reference without a candidate is scored against
/// the empty string.
pub fn load_pairs(candidates: &Path, references: &Path) -> Result<Vec<EvalPair>> {
    let cands: Vec<CodeRecord> = read_jsonl(candidates)?;
    let refs: Vec<CodeRecord> = read_jsonl(references)?;
    let mut by_id = HashMap::with_capacity(cands.len());
    for c in cands {
        if by_id.insert(c.id.clone(), c.code).is_some() {
            return Err(Error::DuplicateId(c.id));
        }
    }
    Ok(refs
        .into_iter()
        .map(|r| {
            let candidate = by_id.remove(&r.id).unwrap_or_default();
            EvalPair::new(r.id, candidate, r.code)
        })
        .collect())
}
