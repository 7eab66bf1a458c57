//! Model comparison tables and learning-curve summaries.

use std::collections::BTreeSet;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Split;
use crate::error::{Error, Result};
use crate::metrics::{relative_improvement, MetricReport};

/// Difference of two table values in percentage points, snapped to 1e-9 so
/// that three-decimal inputs give three-decimal results.
pub fn point_gap(a: f64, b: f64) -> f64 {
    ((a - b) * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub phase: Split,
    pub acc: f64,
    pub bleu: f64,
    pub rouge_l: f64,
}

impl ReportRow {
    pub fn new(label: impl Into<String>, phase: Split, acc: f64, bleu: f64, rouge_l: f64) -> Self {
        ReportRow {
            label: label.into(),
            phase,
            acc,
            bleu,
            rouge_l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub label: String,
    pub phase: Split,
    pub baseline_acc: f64,
    pub acc: f64,
    /// Percent change relative to the baseline accuracy.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub label: String,
    /// Train accuracy minus test accuracy, in percentage points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_minus_test: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_minus_test: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub improvements: Vec<Improvement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gaps: Vec<Gap>,
}

fn labels(rows: &[ReportRow]) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for r in rows {
        if !out.contains(&r.label.as_str()) {
            out.push(&r.label);
        }
    }
    out
}

fn phases_of(rows: &[ReportRow], label: &str) -> BTreeSet<Split> {
    rows.iter().filter(|r| r.label == label).map(|r| r.phase).collect()
}

fn find<'a>(rows: &'a [ReportRow], label: &str, phase: Split) -> Option<&'a ReportRow> {
    rows.iter().find(|r| r.label == label && r.phase == phase)
}

fn phase_list(p: &BTreeSet<Split>) -> String {
    p.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
}

impl ComparisonReport {
    /// Derives improvements over `baseline` and per-label gaps from the rows.
    pub fn build(rows: Vec<ReportRow>, baseline: Option<&str>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Report("no metrics to report".into()));
        }
        let names = labels(&rows);
        for r in &rows {
            if rows.iter().filter(|o| o.label == r.label && o.phase == r.phase).count() > 1 {
                return Err(Error::Report(format!("{} has more than one {} row", r.label, r.phase)));
            }
        }
        let first = phases_of(&rows, names[0]);
        for name in &names[1..] {
            let p = phases_of(&rows, name);
            if p != first {
                return Err(Error::Report(format!(
                    "phases of {name} ({}) do not match {} ({})",
                    phase_list(&p),
                    names[0],
                    phase_list(&first)
                )));
            }
        }

        let mut improvements = Vec::new();
        if let Some(base) = baseline {
            if !names.contains(&base) {
                return Err(Error::Report(format!("baseline {base} is not among the inputs")));
            }
            for name in names.iter().filter(|n| **n != base) {
                for &phase in &first {
                    let b = find(&rows, base, phase).unwrap();
                    let r = find(&rows, name, phase).unwrap();
                    improvements.push(Improvement {
                        label: name.to_string(),
                        phase,
                        baseline_acc: b.acc,
                        acc: r.acc,
                        relative: relative_improvement(b.acc, r.acc)?,
                    });
                }
            }
        }

        let gaps = names
            .iter()
            .filter_map(|name| {
                let acc = |p| find(&rows, name, p).map(|r| r.acc);
                let test = acc(Split::Test)?;
                Some(Gap {
                    label: name.to_string(),
                    train_minus_test: acc(Split::Train).map(|t| point_gap(t, test)),
                    val_minus_test: acc(Split::Val).map(|v| point_gap(v, test)),
                })
            })
            .collect();

        Ok(ComparisonReport {
            rows,
            baseline: baseline.map(str::to_string),
            improvements,
            gaps,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per label with acc, BLEU and ROUGE-L for each phase, then
    /// the derived sections.
    pub fn to_table(&self) -> String {
        let names = labels(&self.rows);
        let phases = phases_of(&self.rows, names[0]);
        let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        write!(out, "{:<width$}", "model").unwrap();
        for p in &phases {
            write!(out, " | {:<5} {:>8} {:>6} {:>6}", p.as_str(), "acc", "bleu", "r-l").unwrap();
        }
        out.push('\n');
        for name in &names {
            write!(out, "{name:<width$}").unwrap();
            for &p in &phases {
                let r = find(&self.rows, name, p).unwrap();
                write!(out, " | {:<5} {:>8.3} {:>6.3} {:>6.3}", "", r.acc, r.bleu, r.rouge_l).unwrap();
            }
            out.push('\n');
        }
        if let Some(base) = &self.baseline {
            writeln!(out, "\nrelative accuracy improvement over {base}:").unwrap();
            for i in &self.improvements {
                writeln!(
                    out,
                    "  {:<width$} {:<5} {:>8.3} -> {:>8.3}  {:+.1}%",
                    i.label, i.phase.as_str(), i.baseline_acc, i.acc, i.relative
                )
                .unwrap();
            }
        }
        if !self.gaps.is_empty() {
            writeln!(out, "\naccuracy gaps (percentage points):").unwrap();
            for g in &self.gaps {
                write!(out, "  {:<width$}", g.label).unwrap();
                if let Some(x) = g.train_minus_test {
                    write!(out, "  train-test {x:.3}").unwrap();
                }
                if let Some(x) = g.val_minus_test {
                    write!(out, "  val-test {x:.3}").unwrap();
                }
                out.push('\n');
            }
        }
        out
    }
}

/// A `label[@phase]=path` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSource {
    pub label: String,
    pub phase: Option<Split>,
    pub path: PathBuf,
}

impl MetricsSource {
    pub fn parse(arg: &str) -> Result<Self> {
        let (head, path) = arg
            .split_once('=')
            .ok_or_else(|| Error::Report(format!("expected label=path, got {arg}")))?;
        let (label, phase) = match head.rsplit_once('@') {
            Some((l, p)) => (l, Some(p.parse::<Split>()?)),
            None => (head, None),
        };
        if label.is_empty() || path.is_empty() {
            return Err(Error::Report(format!("expected label=path, got {arg}")));
        }
        Ok(MetricsSource {
            label: label.to_string(),
            phase,
            path: PathBuf::from(path),
        })
    }
}

#[derive(Deserialize)]
struct PhaseScores {
    acc: f64,
    bleu: f64,
    rouge_l: f64,
}

/// Rows from a metrics file: either a metric report (which needs an
/// explicit phase) or an object keyed by phase name.
pub fn rows_from_json(label: &str, phase: Option<Split>, text: &str) -> Result<Vec<ReportRow>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Report(format!("{label}: {e}")))?;
    if value.get("per_example").is_some() {
        let report: MetricReport =
            serde_json::from_value(value).map_err(|e| Error::Report(format!("{label}: {e}")))?;
        let phase = phase.ok_or_else(|| {
            Error::Report(format!("{label}: a metric report needs a phase, as {label}@test=path"))
        })?;
        return Ok(vec![ReportRow::new(
            label,
            phase,
            report.corpus.ast_weighted,
            report.corpus.bleu,
            report.corpus.rouge_l,
        )]);
    }
    let by_phase: std::collections::BTreeMap<String, PhaseScores> =
        serde_json::from_value(value).map_err(|e| Error::Report(format!("{label}: {e}")))?;
    let mut rows = Vec::new();
    for (name, s) in by_phase {
        let p: Split = name.parse()?;
        if phase.is_none_or(|want| want == p) {
            rows.push(ReportRow::new(label, p, s.acc, s.bleu, s.rouge_l));
        }
    }
    if rows.is_empty() {
        return Err(Error::Report(format!("{label}: no matching phase in metrics file")));
    }
    rows.sort_by_key(|r| r.phase);
    Ok(rows)
}

pub fn load_rows(source: &MetricsSource) -> Result<Vec<ReportRow>> {
    let text = std::fs::read_to_string(&source.path).map_err(|e| Error::io(&source.path, e))?;
    rows_from_json(&source.label, source.phase, &text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: u32,
    pub phase: Split,
    pub loss: f64,
    pub acc: f64,
    pub bleu: f64,
    pub rouge_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub epochs: u32,
    /// Last recorded point of each phase.
    pub final_points: Vec<CurvePoint>,
    /// Largest train accuracy minus val accuracy at a shared epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_train_val_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_gap_epoch: Option<u32>,
}

pub fn parse_curves<R: std::io::Read>(input: R) -> Result<Vec<CurvePoint>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in reader.deserialize().enumerate() {
        out.push(rec.map_err(|e| Error::Line {
            line: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_curves(path: &Path) -> Result<Vec<CurvePoint>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_curves(f)
}

pub fn summarize_curves(points: &[CurvePoint]) -> Result<CurveSummary> {
    if points.is_empty() {
        return Err(Error::Report("curve file has no rows".into()));
    }
    let mut final_points = Vec::new();
    for phase in Split::ALL {
        if let Some(p) = points.iter().filter(|p| p.phase == phase).max_by_key(|p| p.epoch) {
            final_points.push(p.clone());
        }
    }
    let mut max_gap: Option<(f64, u32)> = None;
    for t in points.iter().filter(|p| p.phase == Split::Train) {
        if let Some(v) = points.iter().find(|p| p.phase == Split::Val && p.epoch == t.epoch) {
            let gap = point_gap(t.acc, v.acc);
            if max_gap.is_none_or(|(g, _)| gap > g) {
                max_gap = Some((gap, t.epoch));
            }
        }
    }
    Ok(CurveSummary {
        epochs: points.iter().map(|p| p.epoch).max().unwrap_or(0),
        final_points,
        max_train_val_gap: max_gap.map(|g| g.0),
        max_gap_epoch: max_gap.map(|g| g.1),
    })
}

impl CurveSummary {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<6} {:>6} {:>8} {:>8} {:>6} {:>7}", "phase", "epoch", "loss", "acc", "bleu", "rouge_l").unwrap();
        for p in &self.final_points {
            writeln!(
                out,
                "{:<6} {:>6} {:>8.3} {:>8.3} {:>6.3} {:>7.3}",
                p.phase.as_str(), p.epoch, p.loss, p.acc, p.bleu, p.rouge_l
            )
            .unwrap();
        }
        if let (Some(g), Some(e)) = (self.max_train_val_gap, self.max_gap_epoch) {
            writeln!(out, "max train-val accuracy gap {g:.3} at epoch {e}").unwrap();
        }
        out
    }
}
