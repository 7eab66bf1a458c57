use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use rulegen_core::ast::{lower, serialize_deck};
use rulegen_core::config::RunConfig;
use rulegen_core::corpus::{
    classify_corpus, distribution_stats, read_corpus, stratified_split, to_jsonl, SplitConfig,
};
use rulegen_core::grammar::{check_source, has_errors, parse_deck, CommandRegistry, Diagnostic};
use rulegen_core::metrics::{evaluate_corpus, load_pairs, WeightProfile};
use rulegen_core::report::{load_rows, read_curves, summarize_curves, ComparisonReport, MetricsSource};
use rulegen_core::retrieval::{assemble_prompt, build_index, read_kb, retrieve, RetrieveOptions};
use rulegen_core::train::{rescore_candidates, token_weights, Candidate};

#[derive(Parser)]
#[command(name = "rulegen", version, about = "Parse, score and retrieve design-rule deck code")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Run configuration (TOML). Defaults to $RULEGEN_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Command registry (TOML), overriding the config.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    /// Treat unknown commands as errors.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a deck and print its parse tree.
    Parse {
        file: PathBuf,
        /// Print the linearized AST instead.
        #[arg(long)]
        serialize: bool,
    },
    /// Parse and validate a deck against the registry.
    Validate { file: PathBuf },
    /// Score candidate code against references.
    Score {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        references: PathBuf,
        /// Command, option and layer weights, e.g. 0.4,0.2,0.4.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign complexity classes to a corpus.
    Classify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign train/val/test splits, stratified by complexity.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        /// Train, val and test fractions, e.g. 0.8,0.1,0.1.
        #[arg(long)]
        ratios: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class and split counts of a corpus.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Rank knowledge-base entries for a query.
    Retrieve {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        query: String,
        /// File with code whose structure should match.
        #[arg(long)]
        context: Option<PathBuf>,
        #[arg(short)]
        k: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Only entries with this tag; may be repeated.
        #[arg(long = "tag")]
        tags: Vec<String>,
    },
    /// Build a few-shot prompt from retrieved exemplars.
    Prompt {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long)]
        context: Option<PathBuf>,
        #[arg(short)]
        k: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Template with {instruction}, {exemplars} and {query}.
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Per-token loss weights for a reference deck.
    Weights {
        #[arg(long = "in")]
        input: PathBuf,
        /// Config file whose [token_weights] table is used.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-rank generation candidates with grammar penalties.
    Rescore {
        /// JSONL records {code, model_score}.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Drop malformed candidates.
        #[arg(long)]
        discard: bool,
    },
    /// Compare metric files across models.
    Report {
        /// label[@phase]=path; may be repeated.
        #[arg(long = "metrics", required = true)]
        metrics: Vec<String>,
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Summarize learning curves from CSV.
    Curves {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Success, or a run that found ERROR diagnostics.
enum Status {
    Ok,
    Diagnostics,
}

struct RunContext {
    config: RunConfig,
    registry: CommandRegistry,
    strict: bool,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn print_diagnostics(file: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}:{d}", file.display());
    }
}

fn parse_triple(text: &str, what: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("{what} must be three comma-separated numbers"))?;
    match parts.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!("{what} must be three comma-separated numbers, got {text}"),
    }
}

fn options(ctx: &RunContext, k: Option<usize>, alpha: Option<f64>) -> RetrieveOptions {
    RetrieveOptions {
        k: k.unwrap_or(ctx.config.retrieval.k),
        alpha: alpha.unwrap_or(ctx.config.retrieval.alpha),
        ..Default::default()
    }
}

#[derive(Deserialize)]
struct CandidateRecord {
    code: String,
    model_score: f64,
}

fn run(cli: Cli) -> Result<Status> {
    let config = RunConfig::resolve(cli.global.config.as_deref())?;
    let registry = match &cli.global.registry {
        Some(p) => CommandRegistry::load(p)?,
        None => config.load_registry()?,
    };
    let ctx = RunContext {
        strict: cli.global.strict || config.strict,
        config,
        registry,
    };

    match cli.command {
        Command::Parse { file, serialize } => {
            let source = read(&file)?;
            let (deck, diags) = parse_deck(&source, &ctx.registry);
            print_diagnostics(&file, &diags);
            if has_errors(&diags) {
                return Ok(Status::Diagnostics);
            }
            if serialize {
                let asts = lower(&deck)?;
                emit(None, &format!("{}\n", serialize_deck(&asts)))?;
            } else {
                emit(None, &deck.pretty())?;
            }
        }
        Command::Validate { file } => {
            let source = read(&file)?;
            let (_, diags) = check_source(&source, &ctx.registry, ctx.strict);
            print_diagnostics(&file, &diags);
            if has_errors(&diags) {
                return Ok(Status::Diagnostics);
            }
            println!("{}: ok", file.display());
        }
        Command::Score {
            candidates,
            references,
            weights,
            out,
        } => {
            let profile = match weights {
                Some(w) => {
                    let [a, b, c] = parse_triple(&w, "--weights")?;
                    WeightProfile::new(a, b, c)?
                }
                None => ctx.config.profile,
            };
            let pairs = load_pairs(&candidates, &references)?;
            let report = evaluate_corpus(&pairs, &profile, &ctx.registry)?;
            for e in &report.errors {
                eprintln!("warning: {}", e.message);
            }
            emit(out.as_deref(), &format!("{}\n", report.to_json()))?;
        }
        Command::Classify { input, out } => {
            let mut corpus = read_corpus(&input)?;
            classify_corpus(&mut corpus, &ctx.registry)?;
            emit(out.as_deref(), &to_jsonl(&corpus))?;
        }
        Command::Split {
            input,
            ratios,
            seed,
            out,
        } => {
            let mut cfg = SplitConfig {
                seed: seed.unwrap_or(ctx.config.seed),
                ..Default::default()
            };
            if let Some(r) = ratios {
                cfg.ratios = parse_triple(&r, "--ratios")?;
            }
            let mut corpus = read_corpus(&input)?;
            classify_corpus(&mut corpus, &ctx.registry)?;
            stratified_split(&mut corpus, &cfg)?;
            emit(out.as_deref(), &to_jsonl(&corpus))?;
        }
        Command::Stats { input, json } => {
            let stats = distribution_stats(&read_corpus(&input)?);
            let text = if json { format!("{}\n", stats.to_json()) } else { stats.to_table() };
            emit(None, &text)?;
        }
        Command::Retrieve {
            kb,
            query,
            context,
            k,
            alpha,
            tags,
        } => {
            let index = build_index(read_kb(&kb)?, &ctx.registry)?;
            let context = context.as_deref().map(read).transpose()?;
            let mut opts = options(&ctx, k, alpha);
            opts.required_tags = tags.into_iter().collect();
            let result = retrieve(&index, &query, context.as_deref(), &opts)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            emit(None, &format!("{}\n", serde_json::to_string_pretty(&result.hits)?))?;
        }
        Command::Prompt {
            kb,
            query,
            context,
            k,
            alpha,
            template,
        } => {
            let index = build_index(read_kb(&kb)?, &ctx.registry)?;
            let context = context.as_deref().map(read).transpose()?;
            let template = template.as_deref().map(read).transpose()?;
            let result = retrieve(&index, &query, context.as_deref(), &options(&ctx, k, alpha))?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            let prompt = assemble_prompt(&query, &result.hits, &index, template.as_deref());
            emit(None, &format!("{prompt}\n"))?;
        }
        Command::Weights { input, profile, out } => {
            let weights = match profile {
                Some(p) => RunConfig::load(&p)?.token_weights,
                None => ctx.config.token_weights,
            };
            let map = token_weights(&read(&input)?, &weights, &ctx.registry)
                .with_context(|| format!("{} is not a valid reference", input.display()))?;
            emit(Some(&out), &map.to_jsonl())?;
        }
        Command::Rescore {
            candidates,
            lambda,
            discard,
        } => {
            let records: Vec<CandidateRecord> = rulegen_core::corpus::read_jsonl(&candidates)?;
            let cands: Vec<Candidate> = records
                .into_iter()
                .map(|r| Candidate::new(r.code, r.model_score))
                .collect();
            let outcome = rescore_candidates(&cands, lambda, &ctx.registry, ctx.strict, discard)?;
            if let Some(w) = &outcome.warning {
                eprintln!("warning: {w}");
            }
            emit(None, &format!("{}\n", serde_json::to_string_pretty(&outcome.results)?))?;
        }
        Command::Report {
            metrics,
            baseline,
            json,
        } => {
            let mut rows = Vec::new();
            for m in &metrics {
                rows.extend(load_rows(&MetricsSource::parse(m)?)?);
            }
            let report = ComparisonReport::build(rows, baseline.as_deref())?;
            let text = if json { format!("{}\n", report.to_json()) } else { report.to_table() };
            emit(None, &text)?;
        }
        Command::Curves { input, json } => {
            let summary = summarize_curves(&read_curves(&input)?)?;
            let text = if json {
                format!("{}\n", serde_json::to_string_pretty(&summary)?)
            } else {
                summary.to_table()
            };
            emit(None, &text)?;
        }
    }
    Ok(Status::Ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Diagnostics) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
