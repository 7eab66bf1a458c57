//! Text and structure-aware scores for generated rule code.

mod component;
mod eval;
mod text;

pub use component::{
    ast_weighted_accuracy, component_scores, relative_improvement, ComponentScores, WeightProfile,
};
pub use eval::{
    evaluate_corpus, evaluate_pair, load_pairs, CorpusScores, EvalPair, MetricReport, MetricScores,
    PairError,
};
pub use text::{bleu, code_tokens, lcs_len, rouge_l, BleuScore};
