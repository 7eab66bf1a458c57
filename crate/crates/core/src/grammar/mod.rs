//! Lexer, parser and registry-driven validator for the rule-deck language.

pub mod diagnostic;
pub mod lexer;
pub mod parser;
pub mod registry;
mod validate;

pub use diagnostic::{error_count, has_errors, Diagnostic, Severity, SourceSpan};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_deck, NodeKind, ParseTree};
pub use registry::{CommandRegistry, CommandRegistryEntry};
pub use validate::validate;

pub(crate) use validate::option_key;

/// Parses and validates in one step, returning the deck and every
/// diagnostic from both passes.
pub fn check_source(
    source: &str,
    registry: &CommandRegistry,
    strict: bool,
) -> (ParseTree, Vec<Diagnostic>) {
    let (deck, mut diags) = parse_deck(source, registry);
    diags.extend(validate(&deck, registry, strict));
    (deck, diags)
}
