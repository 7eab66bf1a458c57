//! Python bindings for `rulegen-core`.
//!
//! Structured results cross the boundary as plain dicts and lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::de::DeserializeOwned;
use serde::Serialize;

use rulegen_core::ast::{deserialize, parse_and_lower, serialize, serialize_deck, structural_diff};
use rulegen_core::corpus::{classify_complexity, classify_corpus, distribution_stats, stratified_split, CorpusExample, SplitConfig};
use rulegen_core::grammar::{check_source, CommandRegistry};
use rulegen_core::metrics::{self, code_tokens, EvalPair, WeightProfile};
use rulegen_core::report::{point_gap, rows_from_json, ComparisonReport};
use rulegen_core::retrieval::{self, KnowledgeEntry, RetrievalHit, RetrieveOptions};
use rulegen_core::train::{self, Candidate, TokenClassWeights};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = value.py().import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(err)
}

/// Command registry used by parsing and validation.
#[pyclass(name = "Registry", module = "rulegen", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyRegistry(CommandRegistry);

#[pymethods]
impl PyRegistry {
    #[new]
    fn new() -> Self {
        PyRegistry::default()
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        CommandRegistry::from_toml_str(text).map(PyRegistry).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        CommandRegistry::load(path.as_ref()).map(PyRegistry).map_err(err)
    }

    fn to_toml(&self) -> String {
        self.0.to_toml_string()
    }
}

fn registry(r: Option<PyRef<'_, PyRegistry>>) -> CommandRegistry {
    r.map(|r| r.0.clone()).unwrap_or_default()
}

/// Parses and validates `code`; returns the diagnostics.
#[pyfunction]
#[pyo3(signature = (code, registry=None, strict=false))]
fn check<'py>(
    py: Python<'py>,
    code: &str,
    registry: Option<PyRef<'_, PyRegistry>>,
    strict: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let (_, diags) = check_source(code, &self::registry(registry), strict);
    to_py(py, &diags)
}

/// Parses `code` and returns the canonical S-expression of each statement.
#[pyfunction]
#[pyo3(signature = (code, registry=None))]
fn parse(code: &str, registry: Option<PyRef<'_, PyRegistry>>) -> PyResult<Vec<String>> {
    let asts = parse_and_lower(code, &self::registry(registry)).map_err(err)?;
    Ok(asts.iter().map(serialize).collect())
}

#[pyfunction]
#[pyo3(signature = (code, registry=None))]
fn serialize_code(code: &str, registry: Option<PyRef<'_, PyRegistry>>) -> PyResult<String> {
    let asts = parse_and_lower(code, &self::registry(registry)).map_err(err)?;
    Ok(serialize_deck(&asts))
}

/// Reads an S-expression back and returns it in canonical form.
#[pyfunction]
fn canonicalize(sexpr: &str) -> PyResult<String> {
    deserialize(sexpr).map(|a| serialize(&a)).map_err(err)
}

#[pyfunction]
fn diff<'py>(py: Python<'py>, candidate: &str, reference: &str) -> PyResult<Bound<'py, PyAny>> {
    let reg = CommandRegistry::default();
    let cand = parse_and_lower(candidate, &reg).map_err(err)?;
    let refr = parse_and_lower(reference, &reg).map_err(err)?;
    match (cand.first(), refr.first()) {
        (Some(c), Some(r)) => to_py(py, &structural_diff(c, r).mismatches),
        _ => Err(err("both sides need at least one statement")),
    }
}

#[pyfunction]
fn tokens(code: &str) -> Vec<String> {
    code_tokens(code)
}

#[pyfunction]
#[pyo3(signature = (candidate, reference, max_n=4))]
fn bleu(candidate: &str, reference: &str, max_n: usize) -> f64 {
    metrics::bleu(&code_tokens(candidate), &code_tokens(reference), max_n).score
}

#[pyfunction]
fn rouge_l(candidate: &str, reference: &str) -> f64 {
    metrics::rouge_l(&code_tokens(candidate), &code_tokens(reference))
}

/// Returns `(c_acc, o_acc, l_acc)` for two code strings.
#[pyfunction]
fn component_scores(candidate: &str, reference: &str) -> PyResult<(f64, f64, f64)> {
    let reg = CommandRegistry::default();
    let cand = parse_and_lower(candidate, &reg).map_err(err)?;
    let refr = parse_and_lower(reference, &reg).map_err(err)?;
    let s = metrics::component_scores(&cand, &refr);
    Ok((s.c_acc, s.o_acc, s.l_acc))
}

fn profile(weights: Option<(f64, f64, f64)>) -> PyResult<WeightProfile> {
    match weights {
        Some((a, b, c)) => WeightProfile::new(a, b, c).map_err(err),
        None => Ok(WeightProfile::default()),
    }
}

/// Weighted AST accuracy in percent.
#[pyfunction]
#[pyo3(signature = (candidate, reference, weights=None))]
fn ast_weighted_accuracy(candidate: &str, reference: &str, weights: Option<(f64, f64, f64)>) -> PyResult<f64> {
    let s = component_scores(candidate, reference)?;
    let scores = metrics::ComponentScores::new(s.0, s.1, s.2);
    metrics::ast_weighted_accuracy(&[scores], &profile(weights)?).map_err(err)
}

/// Scores `(id, candidate, reference)` triples; returns the metric report.
#[pyfunction]
#[pyo3(signature = (pairs, weights=None, registry=None))]
fn evaluate<'py>(
    py: Python<'py>,
    pairs: Vec<(String, String, String)>,
    weights: Option<(f64, f64, f64)>,
    registry: Option<PyRef<'_, PyRegistry>>,
) -> PyResult<Bound<'py, PyAny>> {
    let pairs: Vec<EvalPair> = pairs.into_iter().map(|(i, c, r)| EvalPair::new(i, c, r)).collect();
    let report = metrics::evaluate_corpus(&pairs, &profile(weights)?, &self::registry(registry)).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
fn relative_improvement(baseline: f64, improved: f64) -> PyResult<f64> {
    metrics::relative_improvement(baseline, improved).map_err(err)
}

#[pyfunction]
fn gap(a: f64, b: f64) -> f64 {
    point_gap(a, b)
}

/// Builds a comparison report from `{label: {phase: {acc, bleu, rouge_l}}}`.
#[pyfunction]
#[pyo3(signature = (tables, baseline=None))]
fn compare<'py>(
    py: Python<'py>,
    tables: &Bound<'py, pyo3::types::PyDict>,
    baseline: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut rows = Vec::new();
    for (label, table) in tables.iter() {
        let label: String = label.extract()?;
        let value: serde_json::Value = from_py(&table)?;
        rows.extend(rows_from_json(&label, None, &value.to_string()).map_err(err)?);
    }
    let report = ComparisonReport::build(rows, baseline).map_err(err)?;
    to_py(py, &report)
}

/// Per-token training weights for a reference program.
#[pyfunction]
#[pyo3(signature = (code, weights=None))]
fn token_weights<'py>(
    py: Python<'py>,
    code: &str,
    weights: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let weights: TokenClassWeights = match weights {
        Some(w) => from_py(w)?,
        None => TokenClassWeights::default(),
    };
    let map = train::token_weights(code, &weights, &CommandRegistry::default()).map_err(err)?;
    to_py(py, &map.records())
}

#[pyfunction]
#[pyo3(signature = (code, strict=false, registry=None))]
fn validate_generation<'py>(
    py: Python<'py>,
    code: &str,
    strict: bool,
    registry: Option<PyRef<'_, PyRegistry>>,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &train::validate_generation(code, &self::registry(registry), strict))
}

/// Reranks `(code, model_score)` candidates by validity-penalized score.
#[pyfunction]
#[pyo3(signature = (candidates, lam=1.0, strict=false, discard=false, registry=None))]
fn rescore<'py>(
    py: Python<'py>,
    candidates: Vec<(String, f64)>,
    lam: f64,
    strict: bool,
    discard: bool,
    registry: Option<PyRef<'_, PyRegistry>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cands: Vec<Candidate> = candidates.into_iter().map(|(c, s)| Candidate::new(c, s)).collect();
    let out = train::rescore_candidates(&cands, lam, &self::registry(registry), strict, discard).map_err(err)?;
    to_py(py, &out)
}

#[pyfunction]
fn classify(code: &str) -> PyResult<String> {
    let ex = CorpusExample::new("", "", code);
    classify_complexity(&ex, &CommandRegistry::default())
        .map(|c| c.as_str().to_string())
        .map_err(err)
}

/// Labels and splits a list of `{id, nl, code}` records.
#[pyfunction]
#[pyo3(signature = (records, ratios=(0.8, 0.1, 0.1), seed=0))]
fn split<'py>(
    py: Python<'py>,
    records: &Bound<'py, PyAny>,
    ratios: (f64, f64, f64),
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut corpus: Vec<CorpusExample> = from_py(records)?;
    classify_corpus(&mut corpus, &CommandRegistry::default()).map_err(err)?;
    let config = SplitConfig {
        ratios: [ratios.0, ratios.1, ratios.2],
        seed,
    };
    stratified_split(&mut corpus, &config).map_err(err)?;
    to_py(py, &corpus)
}

#[pyfunction]
fn stats<'py>(py: Python<'py>, records: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let corpus: Vec<CorpusExample> = from_py(records)?;
    to_py(py, &distribution_stats(&corpus))
}

/// Hybrid text and structure retrieval over a knowledge base.
#[pyclass(name = "Index", module = "rulegen")]
struct PyIndex(retrieval::RetrievalIndex);

#[pymethods]
impl PyIndex {
    /// `entries` is a list of `{id, nl, code, tags?}` dicts.
    #[new]
    fn new(entries: &Bound<'_, PyAny>) -> PyResult<Self> {
        let entries: Vec<KnowledgeEntry> = from_py(entries)?;
        retrieval::build_index(entries, &CommandRegistry::default())
            .map(PyIndex)
            .map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[pyo3(signature = (query, context=None, k=3, alpha=0.6, tags=Vec::new()))]
    fn retrieve<'py>(
        &self,
        py: Python<'py>,
        query: &str,
        context: Option<&str>,
        k: usize,
        alpha: f64,
        tags: Vec<String>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let opts = RetrieveOptions {
            k,
            alpha,
            required_tags: tags.into_iter().collect(),
        };
        let result = retrieval::retrieve(&self.0, query, context, &opts).map_err(err)?;
        to_py(py, &result)
    }

    /// Retrieves and renders a few-shot prompt.
    #[pyo3(signature = (query, context=None, k=3, alpha=0.6, template=None))]
    fn prompt(
        &self,
        query: &str,
        context: Option<&str>,
        k: usize,
        alpha: f64,
        template: Option<&str>,
    ) -> PyResult<String> {
        let opts = RetrieveOptions {
            k,
            alpha,
            ..RetrieveOptions::default()
        };
        let result = retrieval::retrieve(&self.0, query, context, &opts).map_err(err)?;
        let hits: &[RetrievalHit] = &result.hits;
        Ok(retrieval::assemble_prompt(query, hits, &self.0, template))
    }
}

#[pymodule]
fn rulegen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRegistry>()?;
    m.add_class::<PyIndex>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(serialize_code, m)?)?;
    m.add_function(wrap_pyfunction!(canonicalize, m)?)?;
    m.add_function(wrap_pyfunction!(diff, m)?)?;
    m.add_function(wrap_pyfunction!(tokens, m)?)?;
    m.add_function(wrap_pyfunction!(bleu, m)?)?;
    m.add_function(wrap_pyfunction!(rouge_l, m)?)?;
    m.add_function(wrap_pyfunction!(component_scores, m)?)?;
    m.add_function(wrap_pyfunction!(ast_weighted_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(relative_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(gap, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(token_weights, m)?)?;
    m.add_function(wrap_pyfunction!(validate_generation, m)?)?;
    m.add_function(wrap_pyfunction!(rescore, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(split, m)?)?;
    m.add_function(wrap_pyfunction!(stats, m)?)?;
    Ok(())
}
