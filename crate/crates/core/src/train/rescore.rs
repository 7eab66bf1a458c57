use serde::{Deserialize, Serialize};

use crate::ast::{lower, serialize_deck};
use crate::error::{Error, Result};
use crate::grammar::{check_source, error_count, CommandRegistry, Diagnostic, SourceSpan};

/// Diagnostics for generated code: parse, validation, and lowering. An
/// empty generation counts as one error.
pub fn generation_diagnostics(code: &str, registry: &CommandRegistry, strict: bool) -> Vec<Diagnostic> {
    let (deck, mut diags) = check_source(code, registry, strict);
    if error_count(&diags) > 0 {
        return diags;
    }
    match lower(&deck) {
        Ok(asts) if asts.is_empty() => diags.push(Diagnostic::error(
            "empty-generation",
            "generation contains no statements",
            SourceSpan::new(0, code.len(), 1, 1),
        )),
        Ok(_) => {}
        Err(Error::Lower { span, message }) => {
            diags.push(Diagnostic::error("invalid-statement", message, span))
        }
        Err(e) => diags.push(Diagnostic::error("invalid-statement", e.to_string(), deck.span)),
    }
    diags
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub well_formed: bool,
    pub diagnostics: Vec<Diagnostic>,
    /// Canonical linearized AST, present when well formed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ast: Option<String>,
}

pub fn validate_generation(code: &str, registry: &CommandRegistry, strict: bool) -> ValidationReport {
    let diagnostics = generation_diagnostics(code, registry, strict);
    let well_formed = error_count(&diagnostics) == 0;
    let ast = if well_formed {
        let (deck, _) = check_source(code, registry, strict);
        lower(&deck).ok().map(|asts| serialize_deck(&asts))
    } else {
        None
    };
    ValidationReport {
        well_formed,
        diagnostics,
        ast,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub code: String,
    pub model_score: f64,
}

impl Candidate {
    pub fn new(code: impl Into<String>, model_score: f64) -> Self {
        Candidate {
            code: code.into(),
            model_score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescoreResult {
    pub candidate_code: String,
    pub model_score: f64,
    pub penalty: f64,
    pub final_score: f64,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescoreOutcome {
    pub results: Vec<RescoreResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Penalizes each candidate by `lambda` per ERROR diagnostic and ranks by
/// `model_score - penalty`, keeping input order among equal scores. With
/// `discard` set, penalized candidates are dropped.
pub fn rescore_candidates(
    candidates: &[Candidate],
    lambda: f64,
    registry: &CommandRegistry,
    strict: bool,
    discard: bool,
) -> Result<RescoreOutcome> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be a non-negative number, got {lambda}")));
    }
    let mut results: Vec<RescoreResult> = candidates
        .iter()
        .map(|c| {
            let diagnostics = generation_diagnostics(&c.code, registry, strict);
            let penalty = lambda * error_count(&diagnostics) as f64;
            RescoreResult {
                candidate_code: c.code.clone(),
                model_score: c.model_score,
                penalty,
                final_score: c.model_score - penalty,
                diagnostics,
            }
        })
        .collect();
    if discard {
        results.retain(|r| error_count(&r.diagnostics) == 0);
    }
    results.sort_by(|a, b| b.final_score.total_cmp(&a.final_score));
    let warning = (discard && results.is_empty() && !candidates.is_empty())
        .then(|| "every candidate was malformed and discarded".to_string());
    Ok(RescoreOutcome { results, warning })
}

#[cfg(test)]
mod tests {
    use super::*;

    const RULE: &str = "SPACE_CMD METAL1 METAL2 >= 0.5 READ ALL { REPORT \"Spacing violation detected\" }";

    fn reg() -> CommandRegistry {
        CommandRegistry::default()
    }

    #[test]
    fn appendix_rule_is_well_formed() {
        let r = validate_generation(RULE, &reg(), true);
        assert!(r.well_formed);
        assert!(r.ast.unwrap().starts_with("(COMMAND (NAME SPACE_CMD)"));
    }

    #[test]
    fn missing_brace() {
        let r = validate_generation("SPACE_CMD METAL1 METAL2 >= 0.5 READ ALL { REPORT \"x\"", &reg(), true);
        assert!(!r.well_formed);
        assert_eq!(error_count(&r.diagnostics), 1);
        assert_eq!(r.diagnostics[0].span.line, 1);
        assert!(r.ast.is_none());
    }

    #[test]
    fn bare_expression_is_not_a_statement() {
        let r = validate_generation("NOT A AND B", &reg(), true);
        assert!(!r.well_formed);
    }

    #[test]
    fn empty_generation_is_malformed() {
        let r = validate_generation("   ", &reg(), false);
        assert!(!r.well_formed);
        assert_eq!(r.diagnostics[0].code, "empty-generation");
    }

    #[test]
    fn lowering_failure_is_an_error() {
        let r = validate_generation("WIDTH_CMD A > 1 MODE", &reg(), false);
        assert!(!r.well_formed);
        assert_eq!(r.diagnostics.last().unwrap().code, "invalid-statement");
    }

    #[test]
    fn valid_beats_malformed_after_penalty() {
        let out = rescore_candidates(
            &[Candidate::new("WIDTH_CMD A > 1 {", -0.5), Candidate::new("WIDTH_CMD A > 1", -1.0)],
            1.0,
            &reg(),
            true,
            false,
        )
        .unwrap();
        assert_eq!(out.results[0].candidate_code, "WIDTH_CMD A > 1");
        assert_eq!(out.results[0].final_score, -1.0);
        assert_eq!(out.results[0].penalty, 0.0);
        assert_eq!(out.results[1].final_score, -1.5);
    }

    #[test]
    fn all_valid_keeps_model_order_and_ties() {
        let cands = [
            Candidate::new("X = A", -2.0),
            Candidate::new("Y = B", -1.0),
            Candidate::new("Z = C", -2.0),
        ];
        let out = rescore_candidates(&cands, 1.0, &reg(), false, false).unwrap();
        let order: Vec<&str> = out.results.iter().map(|r| r.candidate_code.as_str()).collect();
        assert_eq!(order, ["Y = B", "X = A", "Z = C"]);
    }

    #[test]
    fn discard_everything_warns() {
        let out = rescore_candidates(&[Candidate::new("{", 0.0)], 1.0, &reg(), true, true).unwrap();
        assert!(out.results.is_empty());
        assert!(out.warning.is_some());
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(rescore_candidates(&[], -1.0, &reg(), true, false).is_err());
    }

    #[test]
    fn penalty_zero_iff_well_formed() {
        for code in [RULE, "X = A", "FOO_CMD A > 1", "WIDTH_CMD A B > 1", "", "NOT A"] {
            for strict in [false, true] {
                let v = validate_generation(code, &reg(), strict);
                let r = rescore_candidates(&[Candidate::new(code, 0.0)], 1.0, &reg(), strict, false).unwrap();
                assert_eq!(v.well_formed, r.results[0].penalty == 0.0, "{code:?} strict={strict}");
            }
        }
    }
}
