use super::index::{RetrievalHit, RetrievalIndex};

pub const DEFAULT_INSTRUCTION: &str =
    "Translate the design rule description into rule deck code. Follow the syntax of the examples.";

pub const DEFAULT_TEMPLATE: &str = "{instruction}\n\n{exemplars}Description: {query}\nCode:";

/// Replaces each `{name}` placeholder in one pass, so substituted text is
/// never scanned again. Unknown braces are copied through.
fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        match values
            .iter()
            .find(|(name, _)| tail[1..].starts_with(name) && tail[1 + name.len()..].starts_with('}'))
        {
            Some((name, value)) => {
                out.push_str(value);
                rest = &tail[name.len() + 2..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Builds a few-shot prompt: instruction, one exemplar per hit in ranking
/// order, then the query. Hits whose id is not in the index are skipped.
pub fn assemble_prompt(
    nl_query: &str,
    hits: &[RetrievalHit],
    index: &RetrievalIndex,
    template: Option<&str>,
) -> String {
    let mut ranked: Vec<&RetrievalHit> = hits.iter().collect();
    ranked.sort_by(|a, b| b.combined.total_cmp(&a.combined).then_with(|| a.id.cmp(&b.id)));
    let mut exemplars = String::new();
    for hit in ranked {
        if let Some(e) = index.get(&hit.id) {
            exemplars.push_str(&format!("Description: {}\nCode: {}\n\n", e.nl_text, e.code));
        }
    }
    render(
        template.unwrap_or(DEFAULT_TEMPLATE),
        &[
            ("instruction", DEFAULT_INSTRUCTION),
            ("exemplars", &exemplars),
            ("query", nl_query),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::CommandRegistry;
    use crate::retrieval::{build_index, retrieve, KnowledgeEntry, RetrieveOptions};

    const NL: &str = "Minimum spacing between METAL1 and METAL2 layers should not be less than 0.5um";
    const CODE: &str = "SPACE_CMD METAL1 METAL2 >= 0.5 READ ALL { REPORT \"Spacing violation detected\" }";

    fn index() -> RetrievalIndex {
        build_index(
            vec![
                KnowledgeEntry::new("a", NL, CODE),
                KnowledgeEntry::new("b", "Minimum width of POLY is 0.1um", "WIDTH_CMD POLY >= 0.1"),
            ],
            &CommandRegistry::default(),
        )
        .unwrap()
    }

    fn hit(id: &str, combined: f64) -> RetrievalHit {
        RetrievalHit {
            id: id.into(),
            sem_score: combined,
            struct_score: 0.0,
            combined,
        }
    }

    #[test]
    fn zero_hits() {
        let p = assemble_prompt("q text", &[], &index(), None);
        assert_eq!(p, format!("{DEFAULT_INSTRUCTION}\n\nDescription: q text\nCode:"));
    }

    #[test]
    fn exemplar_order_follows_scores() {
        let p = assemble_prompt("q", &[hit("a", 0.2), hit("b", 0.9)], &index(), None);
        let a = p.find("Code: SPACE_CMD").unwrap();
        let b = p.find("Code: WIDTH_CMD").unwrap();
        assert!(b < a);
    }

    #[test]
    fn embeds_retrieved_pair() {
        let idx = index();
        let r = retrieve(&idx, NL, None, &RetrieveOptions { k: 1, ..Default::default() }).unwrap();
        let p = assemble_prompt(NL, &r.hits, &idx, None);
        assert!(p.contains(&format!("Description: {NL}\nCode: {CODE}\n")));
        assert!(p.ends_with(&format!("Description: {NL}\nCode:")));
    }

    #[test]
    fn custom_template() {
        let p = assemble_prompt("{exemplars}", &[hit("b", 1.0)], &index(), Some("Q={query} {x}\n{exemplars}END"));
        assert!(p.starts_with("Q={exemplars} {x}\nDescription: Minimum width"));
        assert!(p.ends_with("END"));
    }
}
