//! Batch-oriented command line: execute experiments, sweep network sizes,
//! run the invariant suite, and render comparison reports.
//!
//! Configuration comes from flags plus an optional flat `key=value` file
//! (flags win). Every run is deterministic in `(spec, seed)`: trial `k`
//! uses `seed ^ mix64(k)`, and `--no-timestamp` suppresses the single
//! timestamp field so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::drr::{run_drr, validate_forest};
use crate::error::{Error, Result};
use crate::gossip::write_ave_trace_csv;
use crate::metrics::{
    comparison_table, fit_growth, read_runs_jsonl, render_comparison, summarize,
    write_comparison_csv, write_run_csv, write_run_jsonl, write_summary_csv, Regressor,
    RunMetrics, RUN_CSV_HEADER,
};
use crate::protocols::{
    drr_gossip_ave, run_protocol, BudgetOverrides, DrrMode, ProtocolConfig, ProtocolKind,
    TopologySpec, ValueDist,
};
use crate::rng::{seeded_rng, trial_seed};
use crate::topology;
use crate::transport::NetworkSim;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(
    name = "drr-gossip",
    version,
    about = "Round-synchronous gossip aggregation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one experiment and stream per-run metrics.
    Run(RunArgs),
    /// Run an experiment across a list of network sizes and summarize.
    Sweep(SweepArgs),
    /// Run the invariant suite; exit 0 iff every check passes.
    Validate(ValidateArgs),
    /// Summarize metrics files into a comparison table and growth fits.
    Report(ReportArgs),
}

#[derive(Args, Clone, Default)]
struct SpecArgs {
    /// Protocol: drr-gossip-max | drr-gossip-ave | uniform-push-sum |
    /// drr-only | local-drr-only
    #[arg(long)]
    protocol: Option<String>,
    /// Topology: complete:n | dregular:n,d | chord:bits | file:path
    #[arg(long)]
    topology: Option<String>,
    /// Per-message failure probability in [0, 1).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Value distribution: uniform:a,b | constant:v | zipf:s
    #[arg(long)]
    values: Option<String>,
    /// Parallel trial workers.
    #[arg(long)]
    jobs: Option<usize>,
    /// Ranking mode override: sampled | local.
    #[arg(long)]
    drr_mode: Option<String>,
    /// Relative-error threshold behind the correctness flag.
    #[arg(long)]
    error_tolerance: Option<f64>,
    #[arg(long)]
    budget_gossip_rounds: Option<usize>,
    #[arg(long)]
    budget_sampling_rounds: Option<usize>,
    #[arg(long)]
    budget_c: Option<f64>,
    #[arg(long)]
    budget_ave_rounds: Option<usize>,
    #[arg(long)]
    budget_alpha: Option<f64>,
    #[arg(long)]
    budget_baseline_rounds: Option<usize>,
    #[arg(long)]
    budget_probe_rounds: Option<usize>,
    /// Meter each probe as query + reply instead of one exchange.
    #[arg(long)]
    count_probe_replies: bool,
    /// Relay each received gossip message separately instead of one
    /// combined forward per relay per round.
    #[arg(long)]
    no_forward_batching: bool,
    /// Omit the timestamp field from the output header.
    #[arg(long)]
    no_timestamp: bool,
    /// Flat key=value defaults; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Metrics JSON-lines path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional per-phase CSV mirror.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Optional push-sum trace CSV (first trial, drr-gossip-ave only).
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Include per-node answers in each record.
    #[arg(long)]
    emit_answers: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Comma-separated sizes substituted for {N} in the topology template.
    #[arg(long)]
    n_list: Option<String>,
    /// Summary CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional JSON-lines stream of every underlying run.
    #[arg(long)]
    runs_out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Desynchronize the message ledger to prove the audit catches it.
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Metrics JSON-lines files.
    files: Vec<String>,
    /// Optional comparison CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Resolved experiment description: every field defaulted except protocol
/// and topology.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub protocol: ProtocolKind,
    pub topology: String,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    pub values: ValueDist,
    pub jobs: usize,
    pub drr_mode: Option<DrrMode>,
    pub error_tolerance: Option<f64>,
    pub budgets: BudgetOverrides,
    pub count_probe_replies: bool,
    pub forward_batching: bool,
    pub no_timestamp: bool,
}

fn read_config_file(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::InputFormat {
            path: path.display().to_string(),
            line: lineno + 1,
            reason: "expected key=value".into(),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parsed<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::invalid(format!("config key {key}={raw:?} failed to parse"))),
    }
}

impl SpecArgs {
    fn resolve(&self) -> Result<ExperimentSpec> {
        let file = match &self.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        let protocol_name = self
            .protocol
            .clone()
            .or_else(|| file.get("protocol").cloned())
            .ok_or_else(|| Error::invalid("--protocol is required"))?;
        let topology = self
            .topology
            .clone()
            .or_else(|| file.get("topology").cloned())
            .ok_or_else(|| Error::invalid("--topology is required"))?;
        let values = match self.values.clone().or_else(|| file.get("values").cloned()) {
            Some(v) => ValueDist::parse(&v)?,
            None => ValueDist::default(),
        };
        let drr_mode = match self
            .drr_mode
            .clone()
            .or_else(|| file.get("drr-mode").cloned())
            .as_deref()
        {
            None => None,
            Some("sampled") => Some(DrrMode::Sampled),
            Some("local") => Some(DrrMode::Local),
            Some(other) => return Err(Error::invalid(format!("unknown drr mode {other:?}"))),
        };

        let budgets = BudgetOverrides {
            gossip_rounds: self
                .budget_gossip_rounds
                .or(parsed(&file, "budget-gossip-rounds")?),
            sampling_rounds: self
                .budget_sampling_rounds
                .or(parsed(&file, "budget-sampling-rounds")?),
            c: self.budget_c.or(parsed(&file, "budget-c")?),
            ave_rounds: self.budget_ave_rounds.or(parsed(&file, "budget-ave-rounds")?),
            alpha: self.budget_alpha.or(parsed(&file, "budget-alpha")?),
            baseline_rounds: self
                .budget_baseline_rounds
                .or(parsed(&file, "budget-baseline-rounds")?),
            probe_rounds: self
                .budget_probe_rounds
                .or(parsed(&file, "budget-probe-rounds")?),
        };

        Ok(ExperimentSpec {
            protocol: ProtocolKind::parse(&protocol_name)?,
            topology,
            delta: match self.delta.or(parsed(&file, "delta")?) {
                Some(d) if (0.0..1.0).contains(&d) => d,
                Some(d) => return Err(Error::invalid(format!("delta {d} outside [0, 1)"))),
                None => 0.0,
            },
            trials: self.trials.or(parsed(&file, "trials")?).unwrap_or(1),
            seed: self.seed.or(parsed(&file, "seed")?).unwrap_or(1),
            values,
            jobs: self.jobs.or(parsed(&file, "jobs")?).unwrap_or(1).max(1),
            drr_mode,
            error_tolerance: self.error_tolerance.or(parsed(&file, "error-tolerance")?),
            budgets,
            count_probe_replies: self.count_probe_replies
                || parsed(&file, "count-probe-replies")?.unwrap_or(false),
            forward_batching: !(self.no_forward_batching
                || parsed(&file, "no-forward-batching")?.unwrap_or(false)),
            no_timestamp: self.no_timestamp
                || parsed(&file, "no-timestamp")?.unwrap_or(false),
        })
    }
}

fn protocol_config(spec: &ExperimentSpec, topology: &str, k: u64) -> Result<ProtocolConfig> {
    let topo = TopologySpec::parse(topology)?;
    let mut cfg = ProtocolConfig::new(topo, trial_seed(spec.seed, k));
    cfg.delta = spec.delta;
    cfg.values = spec.values;
    cfg.budgets = spec.budgets;
    cfg.count_probe_replies = spec.count_probe_replies;
    cfg.forward_batching = spec.forward_batching;
    if let Some(mode) = spec.drr_mode {
        cfg.drr_mode = mode;
    }
    if let Some(tol) = spec.error_tolerance {
        cfg.error_tolerance = tol;
    }
    match spec.protocol {
        ProtocolKind::DrrOnly => cfg.drr_mode = DrrMode::Sampled,
        ProtocolKind::LocalDrrOnly => cfg.drr_mode = DrrMode::Local,
        _ => {}
    }
    Ok(cfg)
}

/// Run all trials of one (spec, topology) pair; records come back in trial
/// order regardless of worker scheduling.
fn execute_trials(
    spec: &ExperimentSpec,
    topology: &str,
    emit_answers: bool,
    trace_out: Option<&PathBuf>,
) -> Result<Vec<RunMetrics>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    let results: Vec<Result<RunMetrics>> = pool.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|k| {
                let mut cfg = protocol_config(spec, topology, k)?;
                cfg.record_ave_trace =
                    k == 0 && trace_out.is_some() && spec.protocol == ProtocolKind::DrrGossipAve;
                let result = run_protocol(&cfg, spec.protocol)?;
                if let (0, Some(path), Some(trace)) = (k, trace_out, &result.ave_trace) {
                    let mut w = BufWriter::new(File::create(path).map_err(|source| Error::Io {
                        path: path.display().to_string(),
                        source,
                    })?);
                    write_ave_trace_csv(&mut w, trace).map_err(|source| Error::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                }
                let mut metrics = result.metrics;
                metrics.run_id = k;
                if emit_answers {
                    metrics.answers = Some(result.answers.clone());
                }
                Ok(metrics)
            })
            .collect()
    });
    results.into_iter().collect()
}

fn open_out(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(std::io::stdout().lock())),
        Some(p) => {
            let f = File::create(p).map_err(|source| Error::Io {
                path: p.display().to_string(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn write_header<W: Write>(out: &mut W, spec: &ExperimentSpec) -> Result<()> {
    let created = if spec.no_timestamp {
        serde_json::Value::Null
    } else {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        serde_json::Value::from(now)
    };
    let header = serde_json::json!({
        "record": "header",
        "tool": "drr-gossip",
        "protocol": spec.protocol.name(),
        "topology": spec.topology,
        "seed": spec.seed,
        "created_at_unix": created,
    });
    writeln!(out, "{header}").map_err(|source| Error::Io {
        path: "<out>".into(),
        source,
    })
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let spec = args.spec.resolve()?;
    let runs = execute_trials(&spec, &spec.topology, args.emit_answers, args.trace_out.as_ref())?;

    let mut out = open_out(args.out.as_ref())?;
    write_header(&mut out, &spec)?;
    for run in &runs {
        write_run_jsonl(&mut out, run)?;
    }
    out.flush().map_err(|source| Error::Io {
        path: "<out>".into(),
        source,
    })?;

    if let Some(path) = &args.csv_out {
        let mut csv = open_out(Some(path))?;
        writeln!(csv, "{RUN_CSV_HEADER}").map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        for run in &runs {
            write_run_csv(&mut csv, run).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let spec = args.spec.resolve()?;
    let raw_list = args
        .n_list
        .as_deref()
        .ok_or_else(|| Error::invalid("--n-list is required for sweep"))?;
    let sizes: Vec<u64> = raw_list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::invalid(format!("bad n-list entry {s:?}")))
        })
        .collect::<Result<_>>()?;
    if sizes.is_empty() {
        return Err(Error::invalid("--n-list must name at least one size"));
    }
    if !spec.topology.contains("{N}") {
        return Err(Error::invalid(
            "sweep topology must carry an {N} placeholder, e.g. complete:{N}",
        ));
    }

    let mut all_runs = Vec::new();
    for &n in &sizes {
        let topology = spec.topology.replace("{N}", &n.to_string());
        let runs = execute_trials(&spec, &topology, false, None)?;
        all_runs.extend(runs);
    }

    if let Some(path) = &args.runs_out {
        let mut out = open_out(Some(path))?;
        write_header(&mut out, &spec)?;
        for run in &all_runs {
            write_run_jsonl(&mut out, run)?;
        }
    }

    let rows = summarize(&all_runs)?;
    let mut out = open_out(args.out.as_ref())?;
    write_summary_csv(&mut out, &rows).map_err(|source| Error::Io {
        path: "<out>".into(),
        source,
    })?;
    Ok(())
}

/// One named check of the invariant suite.
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: Result<()>) -> Check {
    match result {
        Ok(()) => Check {
            name,
            passed: true,
            detail: "ok".into(),
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::ModelViolation(msg.into()))
    }
}

/// The invariant suite behind `validate`.
pub fn validation_suite(seed: u64, inject_fault: bool) -> Vec<Check> {
    let mut checks = Vec::new();

    checks.push(check("topology-validate", (|| {
        for g in [
            topology::build_complete(64)?,
            topology::build_d_regular(64, 4, seed)?,
            topology::build_chord(6)?,
        ] {
            let v = g.validate();
            ensure(v.is_empty(), format!("{}: {v:?}", g.kind()))?;
        }
        Ok(())
    })()));

    checks.push(check("chord-greedy-routing", (|| {
        let g = topology::build_chord(8)?;
        let mut rng = seeded_rng(seed);
        for _ in 0..200 {
            let src = crate::topology::NodeId(rand::Rng::gen_range(&mut rng, 0..256u32));
            let r = topology::route_to_random(&g, src, &mut rng)?;
            ensure(r.hops <= 8, format!("route used {} hops", r.hops))?;
        }
        Ok(())
    })()));

    checks.push(check("drr-forest-invariants", (|| {
        for s in 0..5u64 {
            for delta in [0.0, 0.2] {
                let mut sim = NetworkSim::new(64, delta, seed ^ s)?;
                let f = run_drr(&mut sim, 64, &mut seeded_rng(seed.wrapping_add(s)))?;
                let report = validate_forest(&f);
                ensure(report.is_empty(), format!("violations: {report:?}"))?;
                sim.audit_ledger()?;
            }
        }
        Ok(())
    })()));

    checks.push(check("local-drr-forest-invariants", (|| {
        for topo in ["chord:3", "dregular:16,3", "chord:6"] {
            let g = TopologySpec::parse(topo)?.build(seed)?;
            let mut sim = NetworkSim::new(g.n(), 0.0, seed)?;
            let f = crate::drr::run_local_drr(&mut sim, &g, &mut seeded_rng(seed + 7))?;
            let report = validate_forest(&f);
            ensure(report.is_empty(), format!("{topo}: {report:?}"))?;
        }
        Ok(())
    })()));

    checks.push(check("convergecast-oracle-equivalence", (|| {
        use crate::aggregation::{convergecast_max, convergecast_sum};
        let mut rng = seeded_rng(seed ^ 0x55);
        for case in 0..25u64 {
            let n = 2 + (case as usize % 31);
            let mut sim = NetworkSim::new(n, 0.1, seed ^ case)?;
            let f = run_drr(&mut sim, n, &mut rng)?;
            let vals: Vec<f64> = (0..n)
                .map(|_| rand::Rng::gen_range(&mut rng, -20..20) as f64)
                .collect();
            let maxes = convergecast_max(&mut sim, &f, &vals)?;
            let sums = convergecast_sum(&mut sim, &f, &vals)?;
            let mut s_total = 0.0;
            let mut g_total = 0u64;
            for &r in f.roots() {
                let members: Vec<usize> = (0..n)
                    .filter(|&i| f.root_of(crate::topology::NodeId::new(i)) == r)
                    .collect();
                let om = members.iter().map(|&i| vals[i]).fold(f64::NEG_INFINITY, f64::max);
                let os: f64 = members.iter().map(|&i| vals[i]).sum();
                ensure(maxes[&r] == om, "max disagrees with direct scan")?;
                ensure(sums[&r].sum == os, "sum disagrees with direct scan")?;
                s_total += sums[&r].sum;
                g_total += sums[&r].size;
            }
            ensure(s_total == vals.iter().sum::<f64>(), "sum not conserved")?;
            ensure(g_total == n as u64, "size not conserved")?;
        }
        Ok(())
    })()));

    checks.push(check("push-sum-conservation", (|| {
        let mut cfg = ProtocolConfig::new(TopologySpec::Complete { n: 64 }, seed);
        cfg.delta = 0.0;
        let r = drr_gossip_ave(&cfg)?;
        let totals = r.ave_round_totals.expect("ave carries totals");
        let s0 = totals[0].s;
        for t in &totals {
            ensure(
                (t.s - s0).abs() <= 1e-9 * s0.abs().max(1.0),
                "sum mass drifted",
            )?;
            ensure((t.g - 64.0).abs() <= 1e-9 * 64.0, "size mass drifted")?;
        }
        Ok(())
    })()));

    checks.push(check("gossip-max-consensus-small", (|| {
        let mut correct = 0;
        for k in 0..20u64 {
            let cfg = ProtocolConfig::new(
                TopologySpec::Complete { n: 64 },
                trial_seed(seed, k),
            );
            let r = crate::protocols::drr_gossip_max(&cfg)?;
            if r.metrics.correct {
                correct += 1;
            }
        }
        ensure(correct >= 18, format!("only {correct}/20 runs correct"))?;
        Ok(())
    })()));

    checks.push(check("determinism", (|| {
        let cfg = ProtocolConfig::new(TopologySpec::Complete { n: 64 }, seed);
        let a = drr_gossip_ave(&cfg)?;
        let b = drr_gossip_ave(&cfg)?;
        ensure(a.metrics == b.metrics, "identical configs diverged")?;
        Ok(())
    })()));

    checks.push(check("meter-ledger-audit", (|| {
        let mut sim = NetworkSim::new(16, 0.0, seed)?;
        run_drr(&mut sim, 16, &mut seeded_rng(seed))?;
        if inject_fault {
            sim.debug_corrupt_audit();
        }
        sim.audit_ledger()
    })()));

    checks
}

fn cmd_validate(args: &ValidateArgs) -> i32 {
    let checks = validation_suite(args.seed.unwrap_or(1), args.inject_fault);
    let mut ok = true;
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        ok &= c.passed;
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILURE
    }
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    if args.files.is_empty() {
        return Err(Error::invalid("report needs at least one metrics file"));
    }
    let mut runs = Vec::new();
    for path in &args.files {
        runs.extend(read_runs_jsonl(path)?);
    }
    let rows = summarize(&runs)?;
    let table = comparison_table(&rows);
    print!("{}", render_comparison(&table));

    // Growth fits per protocol whenever at least three sizes are present.
    let mut by_protocol: BTreeMap<&str, Vec<&crate::metrics::SummaryRow>> = BTreeMap::new();
    for r in &rows {
        by_protocol.entry(&r.protocol).or_default().push(r);
    }
    for (protocol, group) in by_protocol {
        if group.iter().map(|r| r.n).collect::<std::collections::BTreeSet<_>>().len() < 3 {
            continue;
        }
        let msg_points: Vec<(f64, f64)> =
            group.iter().map(|r| (r.n as f64, r.msgs_mean)).collect();
        let round_points: Vec<(f64, f64)> =
            group.iter().map(|r| (r.n as f64, r.rounds_mean)).collect();
        println!("\ngrowth fits for {protocol}:");
        for (label, points, regs) in [
            (
                "messages",
                &msg_points,
                [Regressor::NLog2Log2N, Regressor::NLog2N, Regressor::N].as_slice(),
            ),
            (
                "rounds",
                &round_points,
                [Regressor::Log2N, Regressor::Log2NSquared].as_slice(),
            ),
        ] {
            for &reg in regs {
                match fit_growth(points, reg) {
                    Ok(fit) => println!(
                        "  {label:>9} ~ {:<16} slope {:>12.4}  r2 {:.6}",
                        reg.name(),
                        fit.slope,
                        fit.r2
                    ),
                    Err(e) => println!("  {label:>9} ~ {:<16} unavailable: {e}", reg.name()),
                }
            }
        }
    }

    if let Some(path) = &args.out {
        let mut out = open_out(Some(path))?;
        write_comparison_csv(&mut out, &table).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

/// Entry point used by the binary and by tests; returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message; --help/--version land here too.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate(args) => return cmd_validate(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e @ (Error::InvalidArgument(_) | Error::Usage(_))) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CHECK_FAILURE
        }
    }
}
