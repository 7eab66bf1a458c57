//! Seeded generators for synthetic rule decks shared by the integration
//! and acceptance tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rulegen_core::corpus::{ComplexityClass, CorpusExample};

pub const APPENDIX_NL: &str =
    "Minimum spacing between METAL1 and METAL2 layers should not be less than 0.5um";
pub const APPENDIX_RULE: &str =
    "SPACE_CMD METAL1 METAL2 >= 0.5 READ ALL {\n    REPORT \"Spacing violation detected\"\n}";

const LAYERS: [&str; 8] = ["METAL1", "METAL2", "METAL3", "POLY", "DIFF", "VIA1", "NWELL", "CONT"];
const OPS: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn layers(r: &mut ChaCha8Rng, n: usize) -> Vec<&'static str> {
    LAYERS.choose_multiple(r, n).copied().collect()
}

fn value(r: &mut ChaCha8Rng) -> String {
    format!("{}", r.gen_range(1..=40) as f64 / 20.0)
}

/// One command with its registry-valid layer count and options.
fn command(r: &mut ChaCha8Rng, layer_pool: &[&str], max_options: usize) -> String {
    let (name, arity, extra): (&str, usize, &[&str]) = match r.gen_range(0..5) {
        0 => ("SPACE_CMD", 2, &["OPPOSITE", "SAME_NET", "COUNT 2", "PROJECTING"]),
        1 => ("WIDTH_CMD", 1, &["REGION 4"]),
        2 => ("ENC_CMD", 2, &["OUTSIDE", "PROJECTING"]),
        3 => ("AREA_CMD", 1, &[]),
        _ => ("DENSITY_CMD", 1, &["WINDOW 10", "STEP 5"]),
    };
    let ls: Vec<&str> = layer_pool.choose_multiple(r, arity).copied().collect();
    let mut s = format!("{name} {} {} {}", ls.join(" "), OPS.choose(r).unwrap(), value(r));
    if r.gen_bool(0.5) {
        s.push_str(" um");
    }
    let mut options = 0;
    if max_options > 0 && r.gen_bool(0.7) {
        s.push_str(" READ ALL");
        options += 1;
    }
    if options < max_options && !extra.is_empty() && r.gen_bool(0.3) {
        s.push(' ');
        s.push_str(extra.choose(r).unwrap());
        options += 1;
    }
    if options < max_options && r.gen_bool(0.5) {
        s.push_str(&format!(" {{\n    REPORT \"{name} check failed\"\n}}"));
    }
    s
}

/// Code whose complexity class is `class` under the default thresholds.
pub fn code_of_class(r: &mut ChaCha8Rng, class: ComplexityClass) -> String {
    match class {
        ComplexityClass::Simple => {
            let pool = layers(r, 2);
            command(r, &pool, 2)
        }
        ComplexityClass::Moderate => {
            let pool = layers(r, 2);
            format!("{}\n{}", command(r, &pool, 2), command(r, &pool, 2))
        }
        ComplexityClass::Complex => match r.gen_range(0..3) {
            0 => {
                let l = layers(r, 3);
                format!(
                    "GATE = {} AND ({} OR {})\nWIDTH_CMD GATE >= {}",
                    l[0],
                    l[1],
                    l[2],
                    value(r)
                )
            }
            1 => {
                let pool = layers(r, 2);
                format!(
                    "SPACE_CMD {} {} >= {} READ ALL {{\n    {}\n}}",
                    pool[0],
                    pool[1],
                    value(r),
                    command(r, &pool, 1)
                )
            }
            _ => {
                let l = layers(r, 2);
                format!(
                    "SPACE_CMD {} {} > {} READ ALL OPPOSITE {{\n    REPORT \"too close\"\n}}",
                    l[0],
                    l[1],
                    value(r)
                )
            }
        },
    }
}

fn describe(code: &str) -> String {
    let first = code.split_whitespace().next().unwrap_or("");
    format!("Rule built around {first} covering {}", code.split_whitespace().count())
}

/// A corpus with exactly `counts[i]` examples generated for each class, in
/// class order.
pub fn corpus(seed: u64, counts: [usize; 3]) -> Vec<CorpusExample> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for (class, n) in ComplexityClass::ALL.into_iter().zip(counts) {
        for i in 0..n {
            let code = code_of_class(&mut r, class);
            out.push(CorpusExample::new(
                format!("{}-{i:04}", class.as_str().to_lowercase()),
                describe(&code),
                code,
            ));
        }
    }
    out
}

/// A mixed corpus of `n` examples, always starting with the reference rule.
pub fn mixed(seed: u64, n: usize) -> Vec<CorpusExample> {
    let mut r = rng(seed);
    let mut out = vec![CorpusExample::new("appendix", APPENDIX_NL, APPENDIX_RULE)];
    for i in 1..n {
        let class = *ComplexityClass::ALL.choose(&mut r).unwrap();
        let code = code_of_class(&mut r, class);
        out.push(CorpusExample::new(format!("ex-{i:04}"), describe(&code), code));
    }
    out
}

/// Random token sequences over a small alphabet.
pub fn token_pair(r: &mut ChaCha8Rng, max_len: usize, alphabet: usize, min_len: usize) -> (Vec<String>, Vec<String>) {
    let seq = |r: &mut ChaCha8Rng| {
        let n = r.gen_range(min_len..=max_len);
        (0..n)
            .map(|_| ((b'a' + r.gen_range(0..alphabet) as u8) as char).to_string())
            .collect::<Vec<_>>()
    };
    let a = seq(r);
    let b = seq(r);
    (a, b)
}
