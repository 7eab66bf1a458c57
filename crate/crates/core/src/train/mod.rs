//! Training-side helpers: per-token loss weights, generation validation and
//! candidate rescoring.

mod rescore;
mod weights;

pub use rescore::{
    generation_diagnostics, rescore_candidates, validate_generation, Candidate, RescoreOutcome,
    RescoreResult, ValidationReport,
};
pub use weights::{token_weights, TokenClass, TokenClassWeights, TokenWeightMap, TokenWeightRecord};
