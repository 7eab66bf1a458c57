mod common;

use rulegen_core::corpus::{
    classify_corpus, distribution_stats, read_corpus, stratified_split, write_corpus, write_jsonl, Split,
    SplitConfig,
};
use rulegen_core::grammar::CommandRegistry;
use rulegen_core::metrics::{evaluate_corpus, load_pairs, WeightProfile};
use rulegen_core::retrieval::{assemble_prompt, build_index, read_kb, retrieve, KnowledgeEntry, RetrieveOptions};
use rulegen_core::train::{token_weights, TokenClassWeights};

#[test]
fn corpus_file_to_split_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    write_corpus(&common::corpus(1, [40, 50, 10]), &path).unwrap();

    let mut corpus = read_corpus(&path).unwrap();
    classify_corpus(&mut corpus, &CommandRegistry::default()).unwrap();
    stratified_split(&mut corpus, &SplitConfig { seed: 42, ..Default::default() }).unwrap();
    let out = dir.path().join("split.jsonl");
    write_corpus(&corpus, &out).unwrap();

    let back = read_corpus(&out).unwrap();
    assert_eq!(back, corpus);
    let stats = distribution_stats(&back);
    assert_eq!(stats.split_totals, Some([80, 10, 10]));
    assert_eq!(stats.rows.iter().map(|r| r.count).collect::<Vec<_>>(), [40, 50, 10]);
    assert_eq!(back.iter().filter(|e| e.split == Some(Split::Test)).count(), 10);
}

#[test]
fn scoring_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let refs: Vec<serde_json::Value> = common::mixed(2, 12)
        .into_iter()
        .map(|e| serde_json::json!({"id": e.id, "code": e.code}))
        .collect();
    let mut cands = refs.clone();
    cands[3]["code"] = serde_json::json!("SPACE_CMD METAL1 {");
    cands.remove(5);
    write_jsonl(&refs, &dir.path().join("r.jsonl")).unwrap();
    write_jsonl(&cands, &dir.path().join("c.jsonl")).unwrap();

    let pairs = load_pairs(&dir.path().join("c.jsonl"), &dir.path().join("r.jsonl")).unwrap();
    assert_eq!(pairs.len(), 12);
    let report = evaluate_corpus(&pairs, &WeightProfile::default(), &CommandRegistry::default()).unwrap();
    assert_eq!(report.n, 12);
    assert!(report.per_example[3].parse_failed);
    assert_eq!(report.per_example[5].bleu, 0.0);
    assert_eq!(report.per_example[5].ast_weighted, 0.0);
    let mean: f64 = report.per_example.iter().map(|s| s.ast_weighted).sum::<f64>() / 12.0;
    assert!((report.corpus.ast_weighted - mean).abs() < 1e-12);
    assert!(report.corpus.ast_weighted < 100.0);
}

#[test]
fn knowledge_base_to_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kb.jsonl");
    let mut entries = vec![KnowledgeEntry::new("appendix", common::APPENDIX_NL, common::APPENDIX_RULE)];
    for e in common::mixed(8, 20).into_iter().skip(1) {
        entries.push(KnowledgeEntry::new(e.id, e.nl, e.code));
    }
    write_jsonl(&entries, &path).unwrap();

    let index = build_index(read_kb(&path).unwrap(), &CommandRegistry::default()).unwrap();
    let opts = RetrieveOptions { k: 2, ..Default::default() };
    let result = retrieve(&index, common::APPENDIX_NL, None, &opts).unwrap();
    assert_eq!(result.hits[0].id, "appendix");
    let prompt = assemble_prompt(common::APPENDIX_NL, &result.hits, &index, None);
    let block = format!("Description: {}\nCode: {}\n", common::APPENDIX_NL, common::APPENDIX_RULE);
    assert!(prompt.contains(&block));
    assert_eq!(prompt, assemble_prompt(common::APPENDIX_NL, &result.hits, &index, None));
}

#[test]
fn weights_for_every_generated_reference() {
    let reg = CommandRegistry::default();
    for e in common::mixed(6, 60) {
        let map = token_weights(&e.code, &TokenClassWeights::default(), &reg).unwrap();
        assert_eq!(map.records().len(), map.len());
        assert_eq!(map.to_jsonl().lines().count(), map.len());
    }
}
