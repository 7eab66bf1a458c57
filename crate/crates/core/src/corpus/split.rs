use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::{ComplexityClass, CorpusExample, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Train, val and test fractions.
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: [0.8, 0.1, 0.1],
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn check(&self) -> Result<()> {
        if self.ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::Split(format!(
                "split ratios must each lie in (0, 1), got {:?}",
                self.ratios
            )));
        }
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Split(format!("split ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Largest-remainder apportionment of `n` items. Equal remainders go to the
/// earlier split first.
pub fn allocate(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut counts = quotas.map(|q| q.floor() as usize);
    let mut order = [0usize, 1, 2];
    // Rounded so that float noise in equal quotas cannot break the tie order.
    let rem = |i: usize| ((quotas[i] - quotas[i].floor()) * 1e9).round() as i64;
    order.sort_by(|&a, &b| rem(b).cmp(&rem(a)).then(a.cmp(&b)));
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

fn shuffle_key(seed: u64, id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    h.finalize().into()
}

/// Assigns a split to every example, class by class. Overall totals match
/// the apportionment of the whole corpus; per-class cells are moved by one
/// where needed, taking from the largest class first.
pub fn stratified_split(corpus: &mut [CorpusExample], config: &SplitConfig) -> Result<()> {
    config.check()?;
    if corpus.is_empty() {
        return Err(Error::Split("cannot split an empty corpus".into()));
    }
    let mut classes: BTreeMap<ComplexityClass, Vec<usize>> = BTreeMap::new();
    for (i, ex) in corpus.iter().enumerate() {
        let class = ex.complexity.ok_or_else(|| {
            Error::Split(format!("example {} has no complexity class; classify first", ex.id))
        })?;
        classes.entry(class).or_default().push(i);
    }

    let mut cells: BTreeMap<ComplexityClass, [usize; 3]> = classes
        .iter()
        .map(|(c, members)| (*c, allocate(members.len(), &config.ratios)))
        .collect();
    let target = allocate(corpus.len(), &config.ratios);
    let mut by_size: Vec<ComplexityClass> = classes.keys().copied().collect();
    by_size.sort_by_key(|c| std::cmp::Reverse(classes[c].len()));

    loop {
        let totals = [0, 1, 2].map(|s| cells.values().map(|c| c[s]).sum::<usize>());
        let Some(over) = (0..3).find(|&s| totals[s] > target[s]) else {
            break;
        };
        let under = (0..3)
            .find(|&s| totals[s] < target[s])
            .expect("totals and targets share a sum");
        let class = by_size
            .iter()
            .find(|c| cells[c][over] > 0)
            .copied()
            .expect("some class holds the surplus");
        let cell = cells.get_mut(&class).unwrap();
        cell[over] -= 1;
        cell[under] += 1;
    }

    for (class, mut members) in classes {
        members.sort_by_cached_key(|&i| shuffle_key(config.seed, &corpus[i].id));
        let [train, val, _] = cells[&class];
        for (rank, i) in members.into_iter().enumerate() {
            corpus[i].split = Some(if rank < train {
                Split::Train
            } else if rank < train + val {
                Split::Val
            } else {
                Split::Test
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn synthetic(counts: [usize; 3]) -> Vec<CorpusExample> {
        let mut out = Vec::new();
        for (class, n) in ComplexityClass::ALL.into_iter().zip(counts) {
            for i in 0..n {
                let mut ex = CorpusExample::new(format!("{class}-{i}"), "", "WIDTH_CMD A > 1");
                ex.complexity = Some(class);
                out.push(ex);
            }
        }
        out
    }

    fn cells(corpus: &[CorpusExample]) -> BTreeMap<ComplexityClass, [usize; 3]> {
        let mut m: BTreeMap<ComplexityClass, [usize; 3]> = BTreeMap::new();
        for ex in corpus {
            m.entry(ex.complexity.unwrap()).or_default()[ex.split.unwrap().index()] += 1;
        }
        m
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(allocate(10, &[0.8, 0.1, 0.1]), [8, 1, 1]);
        assert_eq!(allocate(741, &[0.8, 0.1, 0.1]), [593, 74, 74]);
        assert_eq!(allocate(241, &[0.8, 0.1, 0.1]), [193, 24, 24]);
        assert_eq!(allocate(347, &[0.8, 0.1, 0.1]), [277, 35, 35]);
        assert_eq!(allocate(153, &[0.8, 0.1, 0.1]), [123, 15, 15]);
        assert_eq!(allocate(1, &[0.8, 0.1, 0.1]), [1, 0, 0]);
        assert_eq!(allocate(2, &[0.5, 0.25, 0.25]), [1, 1, 0]);
    }

    #[test]
    fn full_corpus_allocation() {
        let mut c = synthetic([241, 347, 153]);
        stratified_split(&mut c, &SplitConfig::default()).unwrap();
        let m = cells(&c);
        let totals = [0, 1, 2].map(|s| m.values().map(|c| c[s]).sum::<usize>());
        assert_eq!(totals, [593, 74, 74]);
        let table = [[193, 24, 24], [278, 35, 34], [122, 15, 16]];
        for (class, want) in ComplexityClass::ALL.into_iter().zip(table) {
            for s in 0..3 {
                assert!(m[&class][s].abs_diff(want[s]) <= 1, "{class} {s}");
            }
        }
    }

    #[test]
    fn totals_adjusted_across_classes() {
        // Each class alone rounds train up; the corpus total does not.
        let mut c = synthetic([5, 5, 5]);
        stratified_split(&mut c, &SplitConfig { ratios: [0.5, 0.3, 0.2], seed: 1 }).unwrap();
        let m = cells(&c);
        let totals = [0, 1, 2].map(|s| m.values().map(|c| c[s]).sum::<usize>());
        assert_eq!(totals, allocate(15, &[0.5, 0.3, 0.2]));
    }

    #[test]
    fn errors() {
        let mut empty: Vec<CorpusExample> = Vec::new();
        assert!(stratified_split(&mut empty, &SplitConfig::default()).is_err());
        let mut c = synthetic([3, 0, 0]);
        let bad = SplitConfig { ratios: [0.8, 0.1, 0.2], seed: 0 };
        assert!(stratified_split(&mut c, &bad).unwrap_err().to_string().contains("sum"));
        let mut unclassified = vec![CorpusExample::new("a", "", "")];
        assert!(stratified_split(&mut unclassified, &SplitConfig::default()).is_err());
    }

    #[test]
    fn independent_of_file_order() {
        let mut a = synthetic([20, 30, 10]);
        let mut b = a.clone();
        b.reverse();
        stratified_split(&mut a, &SplitConfig::default()).unwrap();
        stratified_split(&mut b, &SplitConfig::default()).unwrap();
        b.reverse();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn partition_and_determinism(s in 1usize..60, m in 0usize..60, x in 0usize..60, seed in any::<u64>()) {
            let mut a = synthetic([s, m, x]);
            stratified_split(&mut a, &SplitConfig { seed, ..Default::default() }).unwrap();
            prop_assert!(a.iter().all(|e| e.split.is_some()));
            let totals = [0, 1, 2].map(|i| cells(&a).values().map(|c| c[i]).sum::<usize>());
            prop_assert_eq!(totals, allocate(a.len(), &[0.8, 0.1, 0.1]));

            let mut again = synthetic([s, m, x]);
            stratified_split(&mut again, &SplitConfig { seed, ..Default::default() }).unwrap();
            prop_assert_eq!(&a, &again);

            let mut other = synthetic([s, m, x]);
            stratified_split(&mut other, &SplitConfig { seed: seed.wrapping_add(1), ..Default::default() }).unwrap();
            prop_assert_eq!(cells(&a), cells(&other));
        }
    }
}
