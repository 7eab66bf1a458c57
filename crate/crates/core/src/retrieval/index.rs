use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ast::{deck_signature, lower, parse_and_lower, AstSignature};
use crate::corpus::{read_jsonl, ComplexityClass};
use crate::error::{Error, Result};
use crate::grammar::{check_source, CommandRegistry};

use super::tfidf::{SemanticScorer, TfIdfScorer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeEntry {
    pub id: String,
    #[serde(rename = "nl")]
    pub nl_text: String,
    pub code: String,
    #[serde(default, rename = "tags", skip_serializing_if = "BTreeSet::is_empty")]
    pub intent_tags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<ComplexityClass>,
    /// Computed when the index is built.
    #[serde(skip)]
    pub ast_signature: AstSignature,
}

impl KnowledgeEntry {
    pub fn new(id: impl Into<String>, nl_text: impl Into<String>, code: impl Into<String>) -> Self {
        KnowledgeEntry {
            id: id.into(),
            nl_text: nl_text.into(),
            code: code.into(),
            intent_tags: BTreeSet::new(),
            complexity: None,
            ast_signature: AstSignature::default(),
        }
    }

    pub fn with_tags<I: IntoIterator<Item = S>, S: Into<String>>(mut self, tags: I) -> Self {
        self.intent_tags = tags.into_iter().map(Into::into).collect();
        self
    }
}

/// Reads a knowledge base file: one `{id, nl, code, tags?}` record per line.
pub fn read_kb(path: &Path) -> Result<Vec<KnowledgeEntry>> {
    read_jsonl(path)
}

pub struct RetrievalIndex {
    entries: Vec<KnowledgeEntry>,
    by_id: HashMap<String, usize>,
    scorer: Box<dyn SemanticScorer>,
    registry: CommandRegistry,
}

impl fmt::Debug for RetrievalIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RetrievalIndex")
            .field("entries", &self.entries.len())
            .finish_non_exhaustive()
    }
}

impl RetrievalIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[KnowledgeEntry] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&KnowledgeEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    /// Swaps the text scorer; it must score entries in index order.
    pub fn set_scorer(&mut self, scorer: Box<dyn SemanticScorer>) {
        self.scorer = scorer;
    }
}

/// Verifies every entry, computes its signature and fits the default
/// tf-idf scorer over the descriptions.
pub fn build_index(entries: Vec<KnowledgeEntry>, registry: &CommandRegistry) -> Result<RetrievalIndex> {
    let mut by_id = HashMap::with_capacity(entries.len());
    let mut verified = Vec::with_capacity(entries.len());
    for (i, mut entry) in entries.into_iter().enumerate() {
        if by_id.insert(entry.id.clone(), i).is_some() {
            return Err(Error::DuplicateId(entry.id));
        }
        let (deck, diags) = check_source(&entry.code, registry, false);
        if let Some(d) = diags.iter().find(|d| d.is_error()) {
            return Err(Error::Entry {
                id: entry.id,
                message: d.to_string(),
            });
        }
        let asts = lower(&deck).map_err(|e| Error::Entry {
            id: entry.id.clone(),
            message: e.to_string(),
        })?;
        entry.ast_signature = deck_signature(&asts);
        verified.push(entry);
    }
    let texts: Vec<&str> = verified.iter().map(|e| e.nl_text.as_str()).collect();
    Ok(RetrievalIndex {
        scorer: Box::new(TfIdfScorer::fit(&texts)),
        entries: verified,
        by_id,
        registry: registry.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub id: String,
    pub sem_score: f64,
    pub struct_score: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub hits: Vec<RetrievalHit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieveOptions {
    pub k: usize,
    /// Weight of the text score; the structural score gets `1 - alpha`.
    pub alpha: f64,
    /// Only entries carrying all of these tags are considered.
    #[serde(default)]
    pub required_tags: BTreeSet<String>,
}

impl Default for RetrieveOptions {
    fn default() -> Self {
        RetrieveOptions {
            k: 3,
            alpha: 0.6,
            required_tags: BTreeSet::new(),
        }
    }
}

/// Top-k entries by `alpha * sem + (1 - alpha) * struct`, ties by id.
pub fn retrieve(
    index: &RetrievalIndex,
    nl_query: &str,
    context_code: Option<&str>,
    options: &RetrieveOptions,
) -> Result<RetrievalResult> {
    if index.is_empty() {
        return Err(Error::Retrieval("the index is empty".into()));
    }
    if options.k == 0 {
        return Err(Error::Retrieval("k must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&options.alpha) {
        return Err(Error::Retrieval(format!("alpha must lie in [0, 1], got {}", options.alpha)));
    }
    let mut warnings = Vec::new();
    let mut alpha = options.alpha;
    let context = match context_code {
        None => {
            alpha = 1.0;
            None
        }
        Some(code) => match parse_and_lower(code, &index.registry) {
            Ok(asts) => Some(deck_signature(&asts)),
            Err(e) => {
                warnings.push(format!("context code ignored, retrieval is text-only: {e}"));
                alpha = 1.0;
                None
            }
        },
    };

    let sems = index.scorer.similarities(nl_query);
    let mut hits: Vec<RetrievalHit> = index
        .entries
        .iter()
        .zip(sems)
        .filter(|(e, _)| options.required_tags.is_subset(&e.intent_tags))
        .map(|(e, sem)| {
            let sem = sem.clamp(0.0, 1.0);
            let st = context.as_ref().map_or(0.0, |s| s.jaccard(&e.ast_signature));
            RetrievalHit {
                id: e.id.clone(),
                sem_score: sem,
                struct_score: st,
                combined: (alpha * sem + (1.0 - alpha) * st).clamp(0.0, 1.0),
            }
        })
        .collect();
    hits.sort_by(|a, b| b.combined.total_cmp(&a.combined).then_with(|| a.id.cmp(&b.id)));
    hits.truncate(options.k);
    Ok(RetrievalResult { hits, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kb() -> Vec<KnowledgeEntry> {
        vec![
            KnowledgeEntry::new(
                "r1",
                "Minimum spacing between METAL1 and METAL2 layers should not be less than 0.5um",
                "SPACE_CMD METAL1 METAL2 >= 0.5 READ ALL { REPORT \"Spacing violation detected\" }",
            )
            .with_tags(["spacing"]),
            KnowledgeEntry::new("r2", "Minimum width of POLY must be 0.1um", "WIDTH_CMD POLY >= 0.1")
                .with_tags(["width"]),
            KnowledgeEntry::new(
                "r3",
                "Derived layer GATE is POLY overlapping DIFF but not outside",
                "GATE = POLY AND NOT DIFF",
            ),
        ]
    }

    fn index() -> RetrievalIndex {
        build_index(kb(), &CommandRegistry::default()).unwrap()
    }

    fn opts(k: usize, alpha: f64) -> RetrieveOptions {
        RetrieveOptions { k, alpha, ..Default::default() }
    }

    #[test]
    fn builds_with_all_ids() {
        let idx = index();
        assert_eq!(idx.len(), 3);
        for id in ["r1", "r2", "r3"] {
            assert!(idx.get(id).is_some());
            assert!(!idx.get(id).unwrap().ast_signature.is_empty());
        }
    }

    #[test]
    fn build_errors() {
        let mut entries = kb();
        entries[1].id = "r1".into();
        let err = build_index(entries, &CommandRegistry::default()).unwrap_err();
        assert_eq!(err.to_string(), "duplicate id r1");

        let mut entries = kb();
        entries[2].code = "GATE = POLY AND (".into();
        let err = build_index(entries, &CommandRegistry::default()).unwrap_err();
        assert!(err.to_string().starts_with("entry r3: error"), "{err}");
    }

    #[test]
    fn text_identity_ranks_first() {
        let idx = index();
        let r = retrieve(&idx, &kb()[1].nl_text, None, &opts(3, 1.0)).unwrap();
        assert_eq!(r.hits[0].id, "r2");
        assert!((r.hits[0].sem_score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn renamed_structure_ranks_first() {
        let idx = index();
        let r = retrieve(&idx, "unrelated", Some("WIDTH_CMD M7 >= 0.3"), &opts(1, 0.0)).unwrap();
        assert_eq!(r.hits.len(), 1);
        assert_eq!(r.hits[0].id, "r2");
        assert_eq!(r.hits[0].struct_score, 1.0);
    }

    #[test]
    fn large_k_returns_everything_sorted() {
        let r = retrieve(&index(), "minimum spacing", None, &opts(10, 0.6)).unwrap();
        assert_eq!(r.hits.len(), 3);
        assert!(r.hits.windows(2).all(|w| w[0].combined >= w[1].combined));
        assert_eq!(r.hits[0].id, "r1");
    }

    #[test]
    fn bad_context_warns_and_falls_back_to_text() {
        let r = retrieve(&index(), "minimum width", Some("WIDTH_CMD ( >="), &opts(3, 0.0)).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.hits[0].id, "r2");
        assert_eq!(r.hits[0].combined, r.hits[0].sem_score);
    }

    #[test]
    fn tag_filter() {
        let mut o = opts(3, 0.6);
        o.required_tags.insert("width".into());
        let r = retrieve(&index(), "minimum spacing", None, &o).unwrap();
        assert_eq!(r.hits.len(), 1);
        assert_eq!(r.hits[0].id, "r2");
    }

    #[test]
    fn argument_errors() {
        let idx = index();
        assert!(retrieve(&idx, "q", None, &opts(0, 0.5)).is_err());
        assert!(retrieve(&idx, "q", None, &opts(1, 1.5)).is_err());
        let empty = build_index(Vec::new(), &CommandRegistry::default()).unwrap();
        assert!(retrieve(&empty, "q", None, &opts(1, 0.5)).is_err());
    }

    #[test]
    fn ties_break_by_id() {
        let idx = index();
        let r = retrieve(&idx, "nothing matches", None, &opts(3, 1.0)).unwrap();
        let ids: Vec<&str> = r.hits.iter().map(|h| h.id.as_str()).collect();
        assert_eq!(ids, ["r1", "r2", "r3"]);
    }

    #[test]
    fn kb_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.jsonl");
        crate::corpus::write_jsonl(&kb(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().next().unwrap().contains("\"nl\":"));
        assert!(text.lines().next().unwrap().contains("\"tags\":[\"spacing\"]"));
        assert_eq!(read_kb(&path).unwrap(), kb());
    }
}
