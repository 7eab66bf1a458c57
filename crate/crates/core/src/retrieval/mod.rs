//! Exemplar retrieval over a knowledge base of verified rule examples and
//! few-shot prompt assembly.

mod index;
mod prompt;
mod tfidf;

pub use index::{
    build_index, read_kb, retrieve, KnowledgeEntry, RetrievalHit, RetrievalIndex, RetrievalResult,
    RetrieveOptions,
};
pub use prompt::{assemble_prompt, DEFAULT_INSTRUCTION, DEFAULT_TEMPLATE};
pub use tfidf::{nl_tokens, SemanticScorer, TfIdfScorer};
