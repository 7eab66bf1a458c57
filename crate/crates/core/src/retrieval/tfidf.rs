use std::collections::{BTreeMap, HashMap};

/// Scores a query against every indexed description.
pub trait SemanticScorer: Send + Sync {
    /// Similarity in [0, 1] to each entry, in index order.
    fn similarities(&self, query: &str) -> Vec<f64>;
}

/// Lowercased word tokens. Dots and underscores stay inside words so that
/// values such as `0.5um` and names such as `metal_1` survive.
pub fn nl_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '.' || c == '_'))
        .map(|w| w.trim_matches('.'))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn term_counts(text: &str) -> BTreeMap<String, usize> {
    let mut tf = BTreeMap::new();
    for t in nl_tokens(text) {
        *tf.entry(t).or_insert(0) += 1;
    }
    tf
}

/// Term-frequency times `ln(1 + N / df)`, compared by cosine.
#[derive(Debug, Clone, Default)]
pub struct TfIdfScorer {
    n: usize,
    idf: BTreeMap<String, f64>,
    /// term -> (entry, weight)
    postings: BTreeMap<String, Vec<(usize, f64)>>,
    norms: Vec<f64>,
}

impl TfIdfScorer {
    pub fn fit<S: AsRef<str>>(docs: &[S]) -> Self {
        let counts: Vec<BTreeMap<String, usize>> = docs.iter().map(|d| term_counts(d.as_ref())).collect();
        let n = docs.len();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for tf in &counts {
            for term in tf.keys() {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let idf: BTreeMap<String, f64> = df
            .iter()
            .map(|(t, d)| (t.to_string(), (1.0 + n as f64 / *d as f64).ln()))
            .collect();
        let mut postings: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
        let mut norms = vec![0.0; n];
        for (i, tf) in counts.iter().enumerate() {
            for (term, c) in tf {
                let w = *c as f64 * idf[term];
                norms[i] += w * w;
                postings.entry(term.clone()).or_default().push((i, w));
            }
        }
        norms.iter_mut().for_each(|x| *x = x.sqrt());
        TfIdfScorer {
            n,
            idf,
            postings,
            norms,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.idf.get(term).copied()
    }

    pub fn weight(&self, term: &str, entry: usize) -> f64 {
        self.postings
            .get(term)
            .and_then(|p| p.iter().find(|(i, _)| *i == entry))
            .map_or(0.0, |(_, w)| *w)
    }
}

impl SemanticScorer for TfIdfScorer {
    fn similarities(&self, query: &str) -> Vec<f64> {
        let mut dots = vec![0.0; self.n];
        let mut qnorm = 0.0;
        let q: HashMap<String, usize> = term_counts(query).into_iter().collect();
        let mut terms: Vec<(&String, &usize)> = q.iter().collect();
        terms.sort();
        for (term, c) in terms {
            let Some(idf) = self.idf.get(term) else {
                continue;
            };
            let qw = *c as f64 * idf;
            qnorm += qw * qw;
            for (i, w) in &self.postings[term] {
                dots[*i] += qw * w;
            }
        }
        let qnorm = qnorm.sqrt();
        dots.iter()
            .zip(&self.norms)
            .map(|(d, n)| {
                if qnorm == 0.0 || *n == 0.0 {
                    0.0
                } else {
                    (d / (qnorm * n)).clamp(0.0, 1.0)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        assert_eq!(
            nl_tokens("Minimum spacing between METAL1 and METAL2 should be 0.5um."),
            ["minimum", "spacing", "between", "metal1", "and", "metal2", "should", "be", "0.5um"]
        );
    }

    #[test]
    fn idf_formula() {
        let s = TfIdfScorer::fit(&["a b", "a c", "a d"]);
        assert!((s.idf("a").unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((s.idf("b").unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(s.weight("b", 0), 4f64.ln());
        assert_eq!(s.weight("b", 1), 0.0);
    }

    #[test]
    fn identity_and_disjoint() {
        let s = TfIdfScorer::fit(&["minimum metal width", "via enclosure rule"]);
        let sims = s.similarities("minimum metal width");
        assert!((sims[0] - 1.0).abs() < 1e-12);
        assert_eq!(sims[1], 0.0);
        assert_eq!(s.similarities("unknown words"), vec![0.0, 0.0]);
    }
}
