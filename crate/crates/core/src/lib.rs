//! Tooling for a design-rule checking DSL: parsing, AST lowering and
//! linearization, structure-aware evaluation metrics, training-side token
//! weights, candidate rescoring, exemplar retrieval and corpus management.

pub mod ast;
pub mod config;
pub mod corpus;
pub mod error;
pub mod grammar;
pub mod metrics;
pub mod report;
pub mod retrieval;
pub mod train;

pub use error::{Error, Result};
