//! Token-level similarity: BLEU and ROUGE-L.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

const PUNCT: &[char] = &['(', ')', '{', '}', '=', '<', '>', '!', ','];
const TWO_CHAR_OPS: [&str; 4] = ["<=", ">=", "==", "!="];

/// Splits code on whitespace, then splits punctuation off as separate
/// tokens. The comparison operators `<= >= == !=` stay whole.
pub fn code_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        let mut rest = chunk;
        while let Some(c) = rest.chars().next() {
            if PUNCT.contains(&c) {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                let len = if TWO_CHAR_OPS.iter().any(|op| rest.starts_with(op)) {
                    2
                } else {
                    1
                };
                out.push(rest[..len].to_string());
                rest = &rest[len..];
            } else {
                word.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    /// Modified precisions after smoothing, one per n-gram order used.
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts
            .entry(w.iter().map(AsRef::as_ref).collect())
            .or_insert(0) += 1;
    }
    counts
}

/// Sentence BLEU with uniform weights over orders `1..=max_n`.
///
/// Candidates shorter than `max_n` use their own length as the highest
/// order. A zero precision at order n is replaced by `1 / (2 * (c - n + 1))`.
pub fn bleu<S: AsRef<str>>(candidate: &[S], reference: &[S], max_n: usize) -> BleuScore {
    if candidate.is_empty() || reference.is_empty() || max_n == 0 {
        let which = if candidate.is_empty() {
            "empty candidate"
        } else if reference.is_empty() {
            "empty reference"
        } else {
            "max_n is zero"
        };
        return BleuScore {
            score: 0.0,
            precisions: Vec::new(),
            brevity_penalty: 0.0,
            warning: Some(which.to_string()),
        };
    }
    let c = candidate.len();
    let r = reference.len();
    let orders = max_n.min(c);

    let mut precisions = Vec::with_capacity(orders);
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        let total = c - n + 1;
        let clipped: usize = cand
            .iter()
            .map(|(g, &k)| k.min(refs.get(g).copied().unwrap_or(0)))
            .sum();
        let p = if clipped == 0 {
            1.0 / (2.0 * total as f64)
        } else {
            clipped as f64 / total as f64
        };
        precisions.push(p);
        log_sum += p.ln() / orders as f64;
    }
    let brevity_penalty = if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    BleuScore {
        score: (brevity_penalty * log_sum.exp()).clamp(0.0, 1.0),
        precisions,
        brevity_penalty,
        warning: None,
    }
}

/// Length of the longest common subsequence, in O(min(m, n)) memory.
pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// `2 * LCS / (|X| + |Y|)`; two empty sequences score 1.
pub fn rouge_l<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> f64 {
    let total = candidate.len() + reference.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * lcs_len(candidate, reference) as f64 / total as f64
}
