use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ComplexityClass, Split};

/// One NL ↔ code pair. Fields this crate does not know about are kept and
/// written back unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusExample {
    pub id: String,
    pub nl: String,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<ComplexityClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl CorpusExample {
    pub fn new(id: impl Into<String>, nl: impl Into<String>, code: impl Into<String>) -> Self {
        CorpusExample {
            id: id.into(),
            nl: nl.into(),
            code: code.into(),
            complexity: None,
            split: None,
            extra: serde_json::Map::new(),
        }
    }
}

/// Parses JSON Lines text; blank lines are skipped and errors carry the
/// 1-based line number.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| Error::Line {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(to_jsonl(items).as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn check_unique_ids(corpus: &[CorpusExample]) -> Result<()> {
    let mut seen = HashSet::new();
    for ex in corpus {
        if !seen.insert(ex.id.as_str()) {
            return Err(Error::DuplicateId(ex.id.clone()));
        }
    }
    Ok(())
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusExample>> {
    let corpus: Vec<CorpusExample> = parse_jsonl(text)?;
    check_unique_ids(&corpus)?;
    Ok(corpus)
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusExample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text)
}

pub fn write_corpus(corpus: &[CorpusExample], path: &Path) -> Result<()> {
    write_jsonl(corpus, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"{"id":"s1","nl":"Minimum spacing between METAL1 and METAL2 layers should not be less than 0.5um","code":"SPACE_CMD METAL1 METAL2 >= 0.5"}"#;

    #[test]
    fn reads_single_pair() {
        let c = parse_corpus(PAIR).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].nl.starts_with("Minimum spacing"));
        assert_eq!(c[0].code, "SPACE_CMD METAL1 METAL2 >= 0.5");
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        assert!(parse_corpus("").unwrap().is_empty());
        assert!(parse_corpus("\n\n").unwrap().is_empty());
    }

    #[test]
    fn malformed_line_is_reported() {
        let mut text = String::new();
        for i in 0..6 {
            text.push_str(&format!("{{\"id\":\"e{i}\",\"nl\":\"n\",\"code\":\"c\"}}\n"));
        }
        text.push_str("{not json\n");
        let err = parse_corpus(&text).unwrap_err();
        assert!(err.to_string().starts_with("line 7"), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = format!("{PAIR}\n{PAIR}\n");
        assert_eq!(parse_corpus(&text).unwrap_err().to_string(), "duplicate id s1");
    }

    #[test]
    fn unknown_fields_survive_round_trip() {
        let line = r#"{"id":"a","nl":"n","code":"c","complexity":"Simple","source":"manual","meta":{"k":[1,2]}}"#;
        let c = parse_corpus(line).unwrap();
        assert_eq!(c[0].complexity, Some(ComplexityClass::Simple));
        assert_eq!(to_jsonl(&c).trim_end(), line);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        write_corpus(&c, &path).unwrap();
        assert_eq!(read_corpus(&path).unwrap(), c);
    }
}
