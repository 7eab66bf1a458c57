use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ast::{parse_and_lower, RuleAst};
use crate::error::{Error, Result};
use crate::grammar::CommandRegistry;

use super::{ComplexityClass, CorpusExample};

/// The measurements the class thresholds are applied to.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityFeatures {
    pub commands: usize,
    pub nested: bool,
    pub max_operators: usize,
    pub distinct_layers: usize,
    pub max_options: usize,
}

impl ComplexityFeatures {
    pub fn of(deck: &[RuleAst]) -> Self {
        let mut f = ComplexityFeatures::default();
        let mut layers = BTreeSet::new();
        for top in deck {
            if top.as_command().is_some() {
                f.commands += 1;
            }
            for stmt in top.flatten() {
                layers.extend(stmt.layer_refs());
                match stmt {
                    RuleAst::Command(c) => {
                        f.nested |= !c.body.is_empty();
                        f.max_options = f.max_options.max(c.options.len());
                    }
                    RuleAst::LayerDef(d) => {
                        f.max_operators = f.max_operators.max(d.expr.operator_count());
                    }
                }
            }
        }
        f.distinct_layers = layers.len();
        f
    }

    pub fn class(&self) -> ComplexityClass {
        if self.nested || self.max_operators >= 2 || self.distinct_layers >= 3 || self.max_options >= 3 {
            ComplexityClass::Complex
        } else if self.commands == 1 && self.distinct_layers <= 2 && self.max_options <= 2 {
            ComplexityClass::Simple
        } else {
            ComplexityClass::Moderate
        }
    }
}

pub fn classify_complexity(example: &CorpusExample, registry: &CommandRegistry) -> Result<ComplexityClass> {
    let deck = parse_and_lower(&example.code, registry).map_err(|e| Error::Entry {
        id: example.id.clone(),
        message: e.to_string(),
    })?;
    Ok(ComplexityFeatures::of(&deck).class())
}

/// Fills in `complexity` for every example that lacks one.
pub fn classify_corpus(corpus: &mut [CorpusExample], registry: &CommandRegistry) -> Result<()> {
    for ex in corpus.iter_mut() {
        if ex.complexity.is_none() {
            ex.complexity = Some(classify_complexity(ex, registry)?);
        }
    }
    Ok(())
}
