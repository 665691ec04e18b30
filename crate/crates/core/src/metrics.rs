//! Trial statistics, growth-curve fitting and comparison tables, plus the
//! CSV / JSON-lines schemas everything is exported through.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::drr::ForestStats;
use crate::error::{Error, Result};
use crate::transport::{MetricsSnapshot, PhaseLabel};

/// Per-phase row of a run record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub phase: PhaseLabel,
    pub rounds: u64,
    pub msgs_sent: u64,
    pub msgs_delivered: u64,
}

/// Compact forest shape attached to ranking runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestSummary {
    pub trees: usize,
    pub max_size: usize,
    pub max_height: usize,
}

/// One run's complexity record; the JSON-lines unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run_id: u64,
    pub protocol: String,
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
    pub phases: Vec<PhaseRow>,
    pub total_rounds: u64,
    pub total_msgs_sent: u64,
    pub total_msgs_delivered: u64,
    pub correct: bool,
    pub max_rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub forest: Option<ForestSummary>,
    /// Per-node answers (null for nodes holding none); populated only when
    /// explicitly requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub answers: Option<Vec<Option<f64>>>,
}

impl RunMetrics {
    #[allow(clippy::too_many_arguments)]
    pub fn from_snapshot(
        run_id: u64,
        protocol: &str,
        n: usize,
        delta: f64,
        seed: u64,
        snapshot: &MetricsSnapshot,
        correct: bool,
        max_rel_error: Option<f64>,
        stats: Option<&ForestStats>,
    ) -> Self {
        let phases: Vec<PhaseRow> = snapshot
            .iter()
            .filter(|(_, m)| m.rounds > 0 || m.messages_sent > 0)
            .map(|(phase, m)| PhaseRow {
                phase,
                rounds: m.rounds,
                msgs_sent: m.messages_sent,
                msgs_delivered: m.messages_delivered,
            })
            .collect();
        RunMetrics {
            run_id,
            protocol: protocol.to_string(),
            n,
            delta,
            seed,
            phases,
            total_rounds: snapshot.total_rounds(),
            total_msgs_sent: snapshot.total_sent(),
            total_msgs_delivered: snapshot.total_delivered(),
            correct,
            max_rel_error,
            forest: stats.map(|s| ForestSummary {
                trees: s.tree_count,
                max_size: s.max_size,
                max_height: s.max_height,
            }),
            answers: None,
        }
    }
}

pub const RUN_CSV_HEADER: &str =
    "run_id,protocol,n,delta,seed,phase,rounds,msgs_sent,msgs_delivered";

/// Append one run as per-phase CSV rows (no header).
pub fn write_run_csv<W: Write>(out: &mut W, run: &RunMetrics) -> std::io::Result<()> {
    for p in &run.phases {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            run.run_id,
            run.protocol,
            run.n,
            run.delta,
            run.seed,
            p.phase,
            p.rounds,
            p.msgs_sent,
            p.msgs_delivered
        )?;
    }
    Ok(())
}

/// Append one run as a JSON-lines record.
pub fn write_run_jsonl<W: Write>(out: &mut W, run: &RunMetrics) -> Result<()> {
    let line = serde_json::to_string(run)
        .map_err(|e| Error::invalid(format!("serialize run: {e}")))?;
    writeln!(out, "{line}").map_err(|source| Error::Io {
        path: "<writer>".into(),
        source,
    })
}

/// Read a JSON-lines metrics stream, skipping header records.
pub fn read_runs_jsonl(path: &str) -> Result<Vec<RunMetrics>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut runs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| Error::InputFormat {
                path: path.to_string(),
                line: lineno + 1,
                reason: format!("bad json: {e}"),
            })?;
        if value.get("record").and_then(|v| v.as_str()) == Some("header") {
            continue;
        }
        let run: RunMetrics =
            serde_json::from_value(value).map_err(|e| Error::InputFormat {
                path: path.to_string(),
                line: lineno + 1,
                reason: format!("bad run record: {e}"),
            })?;
        runs.push(run);
    }
    Ok(runs)
}

/// Descriptive statistics of one (protocol, n) group plus the normalized
/// complexity ratios used for growth comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: String,
    pub n: usize,
    pub trials: usize,
    pub rounds_mean: f64,
    pub rounds_std: f64,
    pub rounds_p10: f64,
    pub rounds_p50: f64,
    pub rounds_p90: f64,
    pub msgs_mean: f64,
    pub msgs_std: f64,
    pub msgs_p10: f64,
    pub msgs_p50: f64,
    pub msgs_p90: f64,
    pub correct_rate: f64,
    pub msgs_per_n_loglog: Option<f64>,
    pub msgs_per_n_log: Option<f64>,
    pub rounds_per_log: Option<f64>,
    pub rounds_per_log_sq: Option<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Nearest-rank quantile on a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

fn finite_ratio(num: f64, den: f64) -> Option<f64> {
    (den.is_finite() && den > 0.0).then(|| num / den)
}

/// Group runs by (protocol, n) and summarize each group.
pub fn summarize(runs: &[RunMetrics]) -> Result<Vec<SummaryRow>> {
    if runs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: BTreeMap<(String, usize), Vec<&RunMetrics>> = BTreeMap::new();
    for r in runs {
        groups.entry((r.protocol.clone(), r.n)).or_default().push(r);
    }
    let mut rows = Vec::new();
    for ((protocol, n), group) in groups {
        let mut rounds: Vec<f64> = group.iter().map(|r| r.total_rounds as f64).collect();
        let mut msgs: Vec<f64> = group.iter().map(|r| r.total_msgs_sent as f64).collect();
        let correct = group.iter().filter(|r| r.correct).count();
        let (rounds_mean, rounds_std) = (mean(&rounds), std_dev(&rounds));
        let (msgs_mean, msgs_std) = (mean(&msgs), std_dev(&msgs));
        rounds.sort_by(f64::total_cmp);
        msgs.sort_by(f64::total_cmp);

        let log2n = (n as f64).log2();
        let loglog = log2n.log2();
        rows.push(SummaryRow {
            protocol,
            n,
            trials: group.len(),
            rounds_mean,
            rounds_std,
            rounds_p10: quantile(&rounds, 0.1),
            rounds_p50: quantile(&rounds, 0.5),
            rounds_p90: quantile(&rounds, 0.9),
            msgs_mean,
            msgs_std,
            msgs_p10: quantile(&msgs, 0.1),
            msgs_p50: quantile(&msgs, 0.5),
            msgs_p90: quantile(&msgs, 0.9),
            correct_rate: correct as f64 / group.len() as f64,
            msgs_per_n_loglog: finite_ratio(msgs_mean, n as f64 * loglog),
            msgs_per_n_log: finite_ratio(msgs_mean, n as f64 * log2n),
            rounds_per_log: finite_ratio(rounds_mean, log2n),
            rounds_per_log_sq: finite_ratio(rounds_mean, log2n * log2n),
        });
    }
    Ok(rows)
}

pub const SUMMARY_CSV_HEADER: &str = "protocol,n,trials,rounds_mean,rounds_std,rounds_p10,rounds_p50,rounds_p90,msgs_mean,msgs_std,msgs_p10,msgs_p50,msgs_p90,correct_rate,msgs_per_n_loglog,msgs_per_n_log,rounds_per_log,rounds_per_log_sq";

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_summary_csv<W: Write>(out: &mut W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.protocol,
            r.n,
            r.trials,
            r.rounds_mean,
            r.rounds_std,
            r.rounds_p10,
            r.rounds_p50,
            r.rounds_p90,
            r.msgs_mean,
            r.msgs_std,
            r.msgs_p10,
            r.msgs_p50,
            r.msgs_p90,
            r.correct_rate,
            opt_cell(r.msgs_per_n_loglog),
            opt_cell(r.msgs_per_n_log),
            opt_cell(r.rounds_per_log),
            opt_cell(r.rounds_per_log_sq),
        )?;
    }
    Ok(())
}

/// Candidate growth shapes for least-squares comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    Log2N,
    Log2Log2N,
    Log2NSquared,
    N,
    NLog2N,
    NLog2Log2N,
}

impl Regressor {
    pub const ALL: [Regressor; 6] = [
        Regressor::Log2N,
        Regressor::Log2Log2N,
        Regressor::Log2NSquared,
        Regressor::N,
        Regressor::NLog2N,
        Regressor::NLog2Log2N,
    ];

    pub fn eval(self, n: f64) -> f64 {
        let log2n = n.log2();
        match self {
            Regressor::Log2N => log2n,
            Regressor::Log2Log2N => log2n.log2(),
            Regressor::Log2NSquared => log2n * log2n,
            Regressor::N => n,
            Regressor::NLog2N => n * log2n,
            Regressor::NLog2Log2N => n * log2n.log2(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regressor::Log2N => "log2(n)",
            Regressor::Log2Log2N => "log2(log2(n))",
            Regressor::Log2NSquared => "log2(n)^2",
            Regressor::N => "n",
            Regressor::NLog2N => "n*log2(n)",
            Regressor::NLog2Log2N => "n*log2(log2(n))",
        }
    }
}

/// Least-squares fit of `y = slope * g(n) + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_growth(points: &[(f64, f64)], regressor: Regressor) -> Result<Fit> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid(format!(
            "fit needs >= 3 distinct n, got {}",
            distinct.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| regressor.eval(p.0)).collect();
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateRegressor(format!(
            "{} is undefined at some n",
            regressor.name()
        )));
    }
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let xbar = mean(&xs);
    let ybar = mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRegressor(format!(
            "{} is constant over the inputs",
            regressor.name()
        )));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(Fit {
        slope,
        intercept,
        r2,
    })
}

/// One rendered comparison line: normalized complexity ratios plus the
/// message ratio against the reference protocol at the same n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub protocol: String,
    pub n: usize,
    pub rounds_mean: f64,
    pub rounds_per_log: Option<f64>,
    pub msgs_mean: f64,
    pub msgs_per_n_loglog: Option<f64>,
    /// reference messages / this protocol's messages; the reference is
    /// uniform-push-sum when present, else the first protocol seen.
    pub msgs_ratio_vs_ref: Option<f64>,
}

pub fn comparison_table(summaries: &[SummaryRow]) -> Vec<ComparisonRow> {
    let reference: Option<String> = summaries
        .iter()
        .find(|s| s.protocol == "uniform-push-sum")
        .map(|s| s.protocol.clone())
        .or_else(|| summaries.first().map(|s| s.protocol.clone()));
    let ref_msgs: BTreeMap<usize, f64> = summaries
        .iter()
        .filter(|s| Some(&s.protocol) == reference.as_ref())
        .map(|s| (s.n, s.msgs_mean))
        .collect();
    summaries
        .iter()
        .map(|s| ComparisonRow {
            protocol: s.protocol.clone(),
            n: s.n,
            rounds_mean: s.rounds_mean,
            rounds_per_log: s.rounds_per_log,
            msgs_mean: s.msgs_mean,
            msgs_per_n_loglog: s.msgs_per_n_loglog,
            msgs_ratio_vs_ref: ref_msgs.get(&s.n).map(|m| m / s.msgs_mean),
        })
        .collect()
}

pub const COMPARISON_CSV_HEADER: &str =
    "protocol,n,rounds_mean,rounds_per_log,msgs_mean,msgs_per_n_loglog,msgs_ratio_vs_ref";

pub fn write_comparison_csv<W: Write>(out: &mut W, rows: &[ComparisonRow]) -> std::io::Result<()> {
    writeln!(out, "{COMPARISON_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.protocol,
            r.n,
            r.rounds_mean,
            opt_cell(r.rounds_per_log),
            r.msgs_mean,
            opt_cell(r.msgs_per_n_loglog),
            opt_cell(r.msgs_ratio_vs_ref),
        )?;
    }
    Ok(())
}

/// Plain-text rendering for the report command.
pub fn render_comparison(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>8} {:>12} {:>12} {:>14} {:>16} {:>12}\n",
        "protocol", "n", "rounds", "rounds/log2n", "messages", "msgs/(n loglog)", "ref ratio"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<18} {:>8} {:>12.1} {:>12.3} {:>14.1} {:>16.3} {:>12.3}\n",
            r.protocol,
            r.n,
            r.rounds_mean,
            r.rounds_per_log.unwrap_or(f64::NAN),
            r.msgs_mean,
            r.msgs_per_n_loglog.unwrap_or(f64::NAN),
            r.msgs_ratio_vs_ref.unwrap_or(f64::NAN),
        ));
    }
    out
}
