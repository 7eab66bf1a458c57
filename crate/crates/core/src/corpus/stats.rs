use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{ComplexityClass, CorpusExample, Split};

/// Rounds percentages of `counts` to one decimal so that they still sum to
/// 100.0: each share is floored to a tenth and the missing tenths go to the
/// largest remainders.
pub fn round_percentages(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    let tenths: Vec<u64> = counts.iter().map(|&c| (c as u64 * 1000) / total as u64).collect();
    let rems: Vec<u64> = counts.iter().map(|&c| (c as u64 * 1000) % total as u64).collect();
    let mut out = tenths.clone();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]).then(a.cmp(&b)));
    let missing = 1000 - tenths.iter().sum::<u64>();
    for &i in order.iter().take(missing as usize) {
        out[i] += 1;
    }
    out.into_iter().map(|t| t as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: ComplexityClass,
    pub count: usize,
    pub percent: f64,
    /// Train, val and test counts; absent until every example has a split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub total: usize,
    pub rows: Vec<ClassRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_totals: Option<[usize; 3]>,
    /// Examples without a class.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub unclassified: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

pub fn distribution_stats(corpus: &[CorpusExample]) -> DistributionStats {
    let with_splits = !corpus.is_empty() && corpus.iter().all(|e| e.split.is_some());
    let mut counts = [0usize; 3];
    let mut cells = [[0usize; 3]; 3];
    let mut unclassified = 0;
    for ex in corpus {
        let Some(class) = ex.complexity else {
            unclassified += 1;
            continue;
        };
        counts[class as usize] += 1;
        if let Some(s) = ex.split {
            cells[class as usize][s.index()] += 1;
        }
    }
    let percents = round_percentages(&counts);
    let rows = ComplexityClass::ALL
        .into_iter()
        .enumerate()
        .map(|(i, class)| ClassRow {
            class,
            count: counts[i],
            percent: percents[i],
            splits: with_splits.then_some(cells[i]),
        })
        .collect();
    DistributionStats {
        total: corpus.len(),
        rows,
        split_totals: with_splits.then(|| [0, 1, 2].map(|s| cells.iter().map(|c| c[s]).sum())),
        unclassified,
    }
}

impl DistributionStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let splits = self.split_totals.is_some();
        write!(out, "{:<10} {:>7} {:>7}", "class", "count", "percent").unwrap();
        if splits {
            for s in Split::ALL {
                write!(out, " {:>7}", s.as_str()).unwrap();
            }
        }
        out.push('\n');
        for row in &self.rows {
            write!(out, "{:<10} {:>7} {:>7.1}", row.class.as_str(), row.count, row.percent).unwrap();
            if let Some(cells) = row.splits {
                for c in cells {
                    write!(out, " {c:>7}").unwrap();
                }
            }
            out.push('\n');
        }
        write!(out, "{:<10} {:>7} {:>7}", "total", self.total, "").unwrap();
        if let Some(totals) = self.split_totals {
            for c in totals {
                write!(out, " {c:>7}").unwrap();
            }
        }
        out.push('\n');
        if self.unclassified > 0 {
            writeln!(out, "unclassified: {}", self.unclassified).unwrap();
        }
        out
    }
}
