//! Corpus files, complexity classes, stratified splitting and statistics.

mod complexity;
mod io;
mod split;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use complexity::{classify_complexity, classify_corpus, ComplexityFeatures};
pub use io::{
    check_unique_ids, parse_corpus, parse_jsonl, read_corpus, read_jsonl, to_jsonl, write_corpus,
    write_jsonl, CorpusExample,
};
pub use split::{allocate, stratified_split, SplitConfig};
pub use stats::{distribution_stats, round_percentages, ClassRow, DistributionStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComplexityClass {
    Simple,
    Moderate,
    Complex,
}

impl ComplexityClass {
    pub const ALL: [ComplexityClass; 3] = [
        ComplexityClass::Simple,
        ComplexityClass::Moderate,
        ComplexityClass::Complex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComplexityClass::Simple => "Simple",
            ComplexityClass::Moderate => "Moderate",
            ComplexityClass::Complex => "Complex",
        }
    }
}

impl fmt::Display for ComplexityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComplexityClass {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        ComplexityClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| crate::Error::Config(format!("unknown complexity class {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    /// Also the tie-break order for largest-remainder allocation.
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| crate::Error::Config(format!("unknown split {s}")))
    }
}
