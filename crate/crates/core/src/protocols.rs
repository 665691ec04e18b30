//! End-to-end orchestration of the ranking, convergecast and gossip phases,
//! with independent ground-truth oracles and full phase metering.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::{
    broadcast_down, broadcast_root_addresses, convergecast_max, convergecast_sum,
};
use crate::drr::{forest_stats, run_drr_with, run_local_drr, DrrConfig, Forest, ForestStats};
use crate::error::{Error, Result};
use crate::gossip::{
    baseline_rounds, data_spread_multi_on, gossip_ave_on, gossip_max_on, gossip_size_pairs_on,
    uniform_push_sum_baseline, AveTraceRow, Fabric, GossipBudgets, RoundTotals, SizePair,
};
use crate::metrics::RunMetrics;
use crate::rng::{mix64, seeded_rng, PROTOCOL_STREAM, SIM_STREAM};
use crate::topology::{self, Graph, GraphKind, NodeId};
use crate::transport::{Field, NetworkSim, Payload};

/// Which protocol an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    DrrGossipMax,
    DrrGossipAve,
    UniformPushSum,
    DrrOnly,
    LocalDrrOnly,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::DrrGossipMax => "drr-gossip-max",
            ProtocolKind::DrrGossipAve => "drr-gossip-ave",
            ProtocolKind::UniformPushSum => "uniform-push-sum",
            ProtocolKind::DrrOnly => "drr-only",
            ProtocolKind::LocalDrrOnly => "local-drr-only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "drr-gossip-max" => Ok(ProtocolKind::DrrGossipMax),
            "drr-gossip-ave" => Ok(ProtocolKind::DrrGossipAve),
            "uniform-push-sum" => Ok(ProtocolKind::UniformPushSum),
            "drr-only" => Ok(ProtocolKind::DrrOnly),
            "local-drr-only" => Ok(ProtocolKind::LocalDrrOnly),
            other => Err(Error::invalid(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Topology requested by a run; graphs are built per trial from this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySpec {
    Complete { n: usize },
    DRegular { n: usize, d: usize },
    Chord { bits: u32 },
    File { path: String },
}

impl TopologySpec {
    /// Parse `complete:n`, `dregular:n,d`, `chord:bits` or `file:path`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("topology {s:?} is missing ':'")))?;
        let parse_usize = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad number {t:?} in topology {s:?}")))
        };
        match kind {
            "complete" => Ok(TopologySpec::Complete { n: parse_usize(rest)? }),
            "dregular" => {
                let (n, d) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::invalid(format!("dregular needs n,d in {s:?}")))?;
                Ok(TopologySpec::DRegular {
                    n: parse_usize(n)?,
                    d: parse_usize(d)?,
                })
            }
            "chord" => Ok(TopologySpec::Chord {
                bits: parse_usize(rest)? as u32,
            }),
            "file" => Ok(TopologySpec::File { path: rest.to_string() }),
            other => Err(Error::invalid(format!("unknown topology kind {other:?}"))),
        }
    }

    pub fn build(&self, seed: u64) -> Result<Graph> {
        match self {
            TopologySpec::Complete { n } => topology::build_complete(*n),
            TopologySpec::DRegular { n, d } => topology::build_d_regular(*n, *d, seed),
            TopologySpec::Chord { bits } => topology::build_chord(*bits),
            TopologySpec::File { path } => topology::load_adjacency(path),
        }
    }

    pub fn display(&self) -> String {
        match self {
            TopologySpec::Complete { n } => format!("complete:{n}"),
            TopologySpec::DRegular { n, d } => format!("dregular:{n},{d}"),
            TopologySpec::Chord { bits } => format!("chord:{bits}"),
            TopologySpec::File { path } => format!("file:{path}"),
        }
    }
}

/// How node values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueDist {
    Uniform { a: f64, b: f64 },
    Constant { v: f64 },
    Zipf { s: f64 },
}

impl Default for ValueDist {
    fn default() -> Self {
        ValueDist::Uniform { a: 0.0, b: 1.0 }
    }
}

impl ValueDist {
    /// Parse `uniform:a,b`, `constant:v` or `zipf:s`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("values {text:?} is missing ':'")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad number {t:?} in values {text:?}")))
        };
        match kind {
            "uniform" => {
                let (a, b) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::invalid(format!("uniform needs a,b in {text:?}")))?;
                let (a, b) = (num(a)?, num(b)?);
                if !(a < b) {
                    return Err(Error::invalid("uniform needs a < b"));
                }
                Ok(ValueDist::Uniform { a, b })
            }
            "constant" => Ok(ValueDist::Constant { v: num(rest)? }),
            "zipf" => {
                let s = num(rest)?;
                if !(s > 0.0) {
                    return Err(Error::invalid("zipf exponent must be positive"));
                }
                Ok(ValueDist::Zipf { s })
            }
            other => Err(Error::invalid(format!("unknown value distribution {other:?}"))),
        }
    }

    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match *self {
            ValueDist::Uniform { a, b } => (0..n).map(|_| rng.gen_range(a..b)).collect(),
            ValueDist::Constant { v } => vec![v; n],
            ValueDist::Zipf { s } => {
                let zipf = rand_distr::Zipf::new(n as u64, s)
                    .expect("validated at parse time");
                (0..n).map(|_| rng.sample(zipf)).collect()
            }
        }
    }

    pub fn display(&self) -> String {
        match self {
            ValueDist::Uniform { a, b } => format!("uniform:{a},{b}"),
            ValueDist::Constant { v } => format!("constant:{v}"),
            ValueDist::Zipf { s } => format!("zipf:{s}"),
        }
    }
}

/// Optional overrides for every derived budget.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetOverrides {
    pub gossip_rounds: Option<usize>,
    pub sampling_rounds: Option<usize>,
    pub c: Option<f64>,
    pub ave_rounds: Option<usize>,
    pub alpha: Option<f64>,
    /// Rounds for the uniform push-sum baseline (default `4 log2 n`).
    pub baseline_rounds: Option<usize>,
    /// Probe budget for sampled ranking (default `ceil(log2 n) - 1`).
    pub probe_rounds: Option<usize>,
}

impl BudgetOverrides {
    fn resolve(&self, n: usize, m: usize, delta: f64) -> GossipBudgets {
        let mut b = GossipBudgets::derive(n, m, delta);
        if let Some(c) = self.c {
            b.c = c;
            b.sampling_rounds = ((1.0 / c) * (n.max(1) as f64).log2()).ceil() as usize;
        }
        if let Some(alpha) = self.alpha {
            b.alpha = alpha;
            b.ave_rounds = ((m.max(1) as f64).log2() + 2.0 * alpha * (n.max(1) as f64).log2())
                .ceil() as usize;
        }
        if let Some(g) = self.gossip_rounds {
            b.gossip_rounds = g;
        }
        if let Some(s) = self.sampling_rounds {
            b.sampling_rounds = s;
        }
        if let Some(a) = self.ave_rounds {
            b.ave_rounds = a;
        }
        b
    }
}

/// Which ranking variant Phase I runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrrMode {
    /// Random probing; requires the complete graph.
    Sampled,
    /// Highest-ranked-neighbor rule; requires explicit adjacency.
    Local,
}

/// Full description of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub topology: TopologySpec,
    pub delta: f64,
    pub seed: u64,
    pub budgets: BudgetOverrides,
    pub drr_mode: DrrMode,
    pub values: ValueDist,
    /// Pre-run crash mask; `false` marks a node that crashed before start.
    pub alive_mask: Option<Vec<bool>>,
    /// Relative-error threshold behind the correctness flag (exact-match
    /// protocols use equality regardless).
    pub error_tolerance: f64,
    pub count_probe_replies: bool,
    pub forward_batching: bool,
    pub record_ave_trace: bool,
}

impl ProtocolConfig {
    pub fn new(topology: TopologySpec, seed: u64) -> Self {
        let drr_mode = match topology {
            TopologySpec::Complete { .. } => DrrMode::Sampled,
            _ => DrrMode::Local,
        };
        ProtocolConfig {
            topology,
            delta: 0.0,
            seed,
            budgets: BudgetOverrides::default(),
            drr_mode,
            values: ValueDist::default(),
            alive_mask: None,
            error_tolerance: 1e-2,
            count_probe_replies: false,
            forward_batching: true,
            record_ave_trace: false,
        }
    }
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    /// Final answer at every live node; crashed nodes hold none.
    pub answers: Vec<Option<f64>>,
    /// Ground truth from the direct-scan oracle; none for ranking-only runs.
    pub oracle: Option<f64>,
    pub metrics: RunMetrics,
    pub forest_stats: Option<ForestStats>,
    /// (s, g, w) totals at every push-sum round boundary.
    pub ave_round_totals: Option<Vec<RoundTotals>>,
    pub ave_trace: Option<Vec<AveTraceRow>>,
}

/// Direct single-pass ground truth.
pub fn oracle_aggregate(vals: &[f64], kind: AggregateKind) -> Result<f64> {
    if vals.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(match kind {
        AggregateKind::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        AggregateKind::Sum => vals.iter().sum(),
        AggregateKind::Count => vals.len() as f64,
        AggregateKind::Ave => vals.iter().sum::<f64>() / vals.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKind {
    Max,
    Sum,
    Ave,
    Count,
}

struct Prepared {
    graph: Graph,
    /// Live-node relabeling: position k holds the original id of live node k.
    live: Vec<NodeId>,
    values: Vec<f64>,
    sim: NetworkSim,
    proto_rng: ChaCha8Rng,
}

/// Build the graph, apply the crash mask, draw values, seed the streams.
fn prepare(cfg: &ProtocolConfig, needs_values: bool) -> Result<Prepared> {
    let graph = cfg.topology.build(cfg.seed)?;
    let n_full = graph.n();
    let mut proto_rng = seeded_rng(mix64(cfg.seed ^ PROTOCOL_STREAM));
    let all_values = if needs_values {
        cfg.values.sample(n_full, &mut proto_rng)
    } else {
        vec![0.0; n_full]
    };

    let (graph, live, values) = match &cfg.alive_mask {
        None => {
            let live = (0..n_full).map(NodeId::new).collect();
            (graph, live, all_values)
        }
        Some(mask) => {
            if mask.len() != n_full {
                return Err(Error::invalid(format!(
                    "alive mask covers {} of {} nodes",
                    mask.len(),
                    n_full
                )));
            }
            let live: Vec<NodeId> = (0..n_full)
                .filter(|&i| mask[i])
                .map(NodeId::new)
                .collect();
            if live.is_empty() {
                return Err(Error::invalid("alive mask kills every node"));
            }
            let values = live.iter().map(|&i| all_values[i.index()]).collect();
            let graph = restrict_to_alive(&graph, &live)?;
            (graph, live, values)
        }
    };

    let sim = NetworkSim::new(graph.n(), cfg.delta, mix64(cfg.seed ^ SIM_STREAM))?;
    Ok(Prepared {
        graph,
        live,
        values,
        sim,
        proto_rng,
    })
}

/// Induced subgraph on the surviving nodes, relabeled densely.
fn restrict_to_alive(g: &Graph, live: &[NodeId]) -> Result<Graph> {
    match g.kind() {
        GraphKind::Complete => topology::build_complete(live.len()),
        GraphKind::Chord => Err(Error::invalid(
            "crash masks are not supported on chord (finger routing needs every ring id)",
        )),
        _ => {
            let mut dense = vec![u32::MAX; g.n()];
            for (k, &i) in live.iter().enumerate() {
                dense[i.index()] = k as u32;
            }
            let mut edges = Vec::new();
            for &i in live {
                for &j in g.neighbors(i).iter() {
                    if dense[j.index()] != u32::MAX && i < j {
                        edges.push((NodeId(dense[i.index()]), NodeId(dense[j.index()])));
                    }
                }
            }
            topology::from_edges(live.len(), &edges)
        }
    }
}

fn run_phase_one(cfg: &ProtocolConfig, p: &mut Prepared) -> Result<Forest> {
    match cfg.drr_mode {
        DrrMode::Sampled => {
            if p.graph.kind() != GraphKind::Complete {
                return Err(Error::invalid(
                    "sampled ranking requires the complete topology; use local mode",
                ));
            }
            run_drr_with(
                &mut p.sim,
                p.graph.n(),
                &mut p.proto_rng,
                DrrConfig {
                    probe_budget_override: cfg.budgets.probe_rounds,
                    count_probe_replies: cfg.count_probe_replies,
                },
            )
        }
        DrrMode::Local => {
            if !p.graph.has_explicit_adjacency() {
                return Err(Error::invalid(
                    "local ranking requires explicit adjacency; use sampled mode",
                ));
            }
            run_local_drr(&mut p.sim, &p.graph, &mut p.proto_rng)
        }
    }
}

fn fabric_for(g: &Graph) -> Fabric<'_> {
    match g.kind() {
        GraphKind::Chord => Fabric::Routed(g),
        _ => Fabric::CliqueTwoHop,
    }
}

/// Map the dense live-node answers back onto the full node range.
fn scatter_answers(n_full: usize, live: &[NodeId], dense: Vec<f64>) -> Vec<Option<f64>> {
    let mut out = vec![None; n_full];
    for (k, &i) in live.iter().enumerate() {
        out[i.index()] = Some(dense[k]);
    }
    out
}

fn finish(
    cfg: &ProtocolConfig,
    protocol: ProtocolKind,
    p: &Prepared,
    answers: Vec<Option<f64>>,
    oracle: Option<f64>,
    exact: bool,
    stats: Option<ForestStats>,
    ave_round_totals: Option<Vec<RoundTotals>>,
    ave_trace: Option<Vec<AveTraceRow>>,
) -> Result<ProtocolResult> {
    p.sim.audit_ledger()?;
    let snapshot = p.sim.snapshot_metrics();

    let (correct, max_rel_error) = match oracle {
        None => (true, None),
        Some(truth) => {
            let mut worst: f64 = 0.0;
            let mut all_present = true;
            for (i, a) in answers.iter().enumerate() {
                let alive = cfg
                    .alive_mask
                    .as_ref()
                    .map(|m| m[i])
                    .unwrap_or(true);
                if !alive {
                    continue;
                }
                match a {
                    None => all_present = false,
                    Some(v) => {
                        let err = if truth == 0.0 {
                            (v - truth).abs()
                        } else {
                            (v - truth).abs() / truth.abs()
                        };
                        worst = worst.max(err);
                    }
                }
            }
            let ok = all_present
                && if exact {
                    worst == 0.0
                } else {
                    worst <= cfg.error_tolerance
                };
            (ok, Some(worst))
        }
    };

    let metrics = RunMetrics::from_snapshot(
        0,
        protocol.name(),
        p.graph.n(),
        cfg.delta,
        cfg.seed,
        &snapshot,
        correct,
        max_rel_error,
        stats.as_ref(),
    );
    Ok(ProtocolResult {
        answers,
        oracle,
        metrics,
        forest_stats: stats,
        ave_round_totals,
        ave_trace,
    })
}

/// Ranking, max-convergecast, gossip-max, final broadcast.
pub fn drr_gossip_max(cfg: &ProtocolConfig) -> Result<ProtocolResult> {
    let mut p = prepare(cfg, true)?;
    p.sim.set_forward_batching(cfg.forward_batching);
    let n = p.graph.n();
    let forest = run_phase_one(cfg, &mut p)?;
    broadcast_root_addresses(&mut p.sim, &forest)?;
    let cov = convergecast_max(&mut p.sim, &forest, &p.values)?;
    let budgets = cfg.budgets.resolve(n, forest.roots().len(), cfg.delta);
    let est = gossip_max_on(
        &mut p.sim,
        &forest,
        fabric_for(&p.graph),
        &cov,
        &budgets,
    )?;
    let per_node = broadcast_down(&mut p.sim, &forest, &est, |v| {
        Payload::new(&[Field::Value(*v)])
    })?;

    let stats = forest_stats(&forest);
    let oracle = oracle_aggregate(&p.values, AggregateKind::Max)?;
    let answers = scatter_answers(
        cfg.alive_mask.as_ref().map(|m| m.len()).unwrap_or(n),
        &p.live,
        per_node,
    );
    finish(
        cfg,
        ProtocolKind::DrrGossipMax,
        &p,
        answers,
        Some(oracle),
        true,
        Some(stats),
        None,
        None,
    )
}

/// Ranking, sum-convergecast, size consensus, push-sum, data-spread of the
/// largest root's estimate, final broadcast.
pub fn drr_gossip_ave(cfg: &ProtocolConfig) -> Result<ProtocolResult> {
    let mut p = prepare(cfg, true)?;
    p.sim.set_forward_batching(cfg.forward_batching);
    let n = p.graph.n();
    let forest = run_phase_one(cfg, &mut p)?;
    broadcast_root_addresses(&mut p.sim, &forest)?;
    let cov = convergecast_sum(&mut p.sim, &forest, &p.values)?;
    let budgets = cfg.budgets.resolve(n, forest.roots().len(), cfg.delta);
    let fabric = fabric_for(&p.graph);

    // Size consensus: every root learns the (size, id) maximum, so the
    // owner of the largest tree can recognize itself.
    let sizes: BTreeMap<NodeId, u64> = cov.iter().map(|(&r, s)| (r, s.size)).collect();
    let consensus = gossip_size_pairs_on(&mut p.sim, &forest, fabric, &sizes, &budgets)?;
    let winners: Vec<NodeId> = forest
        .roots()
        .iter()
        .copied()
        .filter(|&r| consensus[&r] == SizePair { size: sizes[&r], root: r })
        .collect();
    debug_assert!(!winners.is_empty(), "the true largest root always self-identifies");

    let init: BTreeMap<NodeId, (f64, f64)> = cov
        .iter()
        .map(|(&r, s)| (r, (s.sum, s.size as f64)))
        .collect();
    let ave = gossip_ave_on(
        &mut p.sim,
        &forest,
        fabric,
        &init,
        &budgets,
        cfg.record_ave_trace,
    )?;

    // On the high-probability path exactly one winner spreads its estimate;
    // a consensus failure can leave several, folded by max.
    let sources: BTreeMap<NodeId, f64> = winners
        .iter()
        .map(|&r| (r, ave.estimates[&r]))
        .collect();
    let spread = data_spread_multi_on(&mut p.sim, &forest, fabric, &sources, &budgets)?;

    // The spread value is authoritative; a root the spread never reached
    // falls back to its own estimate so every node still answers.
    let final_per_root: BTreeMap<NodeId, f64> = forest
        .roots()
        .iter()
        .map(|&r| (r, spread[&r].unwrap_or(ave.estimates[&r])))
        .collect();
    let per_node = broadcast_down(&mut p.sim, &forest, &final_per_root, |v| {
        Payload::new(&[Field::Value(*v)])
    })?;

    let stats = forest_stats(&forest);
    let oracle = oracle_aggregate(&p.values, AggregateKind::Ave)?;
    let answers = scatter_answers(
        cfg.alive_mask.as_ref().map(|m| m.len()).unwrap_or(n),
        &p.live,
        per_node,
    );
    finish(
        cfg,
        ProtocolKind::DrrGossipAve,
        &p,
        answers,
        Some(oracle),
        false,
        Some(stats),
        Some(ave.round_totals),
        ave.trace,
    )
}

/// The measured baseline: classic push-sum over all nodes.
pub fn uniform_push_sum(cfg: &ProtocolConfig) -> Result<ProtocolResult> {
    let mut p = prepare(cfg, true)?;
    if p.graph.kind() != GraphKind::Complete {
        return Err(Error::invalid(
            "uniform push-sum is defined on the complete topology",
        ));
    }
    let n = p.graph.n();
    let rounds = cfg.budgets.baseline_rounds.unwrap_or_else(|| baseline_rounds(n));
    let est = uniform_push_sum_baseline(&mut p.sim, n, &p.values, rounds)?;
    let oracle = oracle_aggregate(&p.values, AggregateKind::Ave)?;
    let answers = scatter_answers(
        cfg.alive_mask.as_ref().map(|m| m.len()).unwrap_or(n),
        &p.live,
        est,
    );
    finish(
        cfg,
        ProtocolKind::UniformPushSum,
        &p,
        answers,
        Some(oracle),
        false,
        None,
        None,
        None,
    )
}

/// Phase I alone, for forest-structure experiments.
pub fn ranking_only(cfg: &ProtocolConfig, protocol: ProtocolKind) -> Result<ProtocolResult> {
    let mut p = prepare(cfg, false)?;
    let forest = match protocol {
        ProtocolKind::DrrOnly => {
            if cfg.drr_mode != DrrMode::Sampled {
                return Err(Error::invalid("drr-only runs in sampled mode"));
            }
            run_phase_one(cfg, &mut p)?
        }
        ProtocolKind::LocalDrrOnly => {
            if cfg.drr_mode != DrrMode::Local {
                return Err(Error::invalid("local-drr-only runs in local mode"));
            }
            run_phase_one(cfg, &mut p)?
        }
        _ => return Err(Error::invalid("ranking_only expects a ranking protocol")),
    };
    if !crate::drr::validate_forest(&forest).is_empty() {
        return Err(Error::ModelViolation("ranking produced an invalid forest".into()));
    }
    let stats = forest_stats(&forest);
    let n_full = cfg.alive_mask.as_ref().map(|m| m.len()).unwrap_or(p.graph.n());
    finish(
        cfg,
        protocol,
        &p,
        vec![None; n_full],
        None,
        true,
        Some(stats),
        None,
        None,
    )
}

/// Dispatch on the protocol kind.
pub fn run_protocol(cfg: &ProtocolConfig, protocol: ProtocolKind) -> Result<ProtocolResult> {
    match protocol {
        ProtocolKind::DrrGossipMax => drr_gossip_max(cfg),
        ProtocolKind::DrrGossipAve => drr_gossip_ave(cfg),
        ProtocolKind::UniformPushSum => uniform_push_sum(cfg),
        ProtocolKind::DrrOnly | ProtocolKind::LocalDrrOnly => ranking_only(cfg, protocol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete_cfg(n: usize, seed: u64) -> ProtocolConfig {
        ProtocolConfig::new(TopologySpec::Complete { n }, seed)
    }

    #[test]
    fn oracle_aggregates() {
        let vals = [1.0, 2.0, 3.0];
        assert_eq!(oracle_aggregate(&vals, AggregateKind::Max).unwrap(), 3.0);
        assert_eq!(oracle_aggregate(&vals, AggregateKind::Ave).unwrap(), 2.0);
        assert_eq!(oracle_aggregate(&vals, AggregateKind::Sum).unwrap(), 6.0);
        assert_eq!(oracle_aggregate(&vals, AggregateKind::Count).unwrap(), 3.0);
        assert!(matches!(
            oracle_aggregate(&[], AggregateKind::Max),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn single_node_runs_exactly() {
        let cfg = complete_cfg(1, 3);
        let r = drr_gossip_max(&cfg).unwrap();
        assert_eq!(r.answers[0], Some(r.oracle.unwrap()));
        assert_eq!(r.metrics.total_msgs_sent, 0);

        let r = drr_gossip_ave(&cfg).unwrap();
        assert_eq!(r.answers[0], Some(r.oracle.unwrap()));
    }

    #[test]
    fn consensus_max_matches_oracle_on_small_nets() {
        let mut correct = 0;
        let trials = 100;
        for seed in 0..trials {
            let cfg = complete_cfg(64, seed);
            let r = drr_gossip_max(&cfg).unwrap();
            if r.metrics.correct {
                correct += 1;
            }
        }
        assert!(correct * 100 >= trials * 99, "{correct}/{trials} correct");
    }

    #[test]
    fn constant_values_give_exact_average() {
        let mut cfg = complete_cfg(256, 17);
        cfg.values = ValueDist::Constant { v: 6.25 };
        let r = drr_gossip_ave(&cfg).unwrap();
        for a in r.answers.iter().flatten() {
            assert!((a - 6.25).abs() <= 1e-9 * 6.25);
        }
    }

    #[test]
    fn ave_protocol_carries_round_totals() {
        let cfg = complete_cfg(128, 5);
        let r = drr_gossip_ave(&cfg).unwrap();
        let totals = r.ave_round_totals.unwrap();
        assert!(!totals.is_empty());
        let s0 = totals[0].s;
        for t in &totals {
            assert!((t.s - s0).abs() <= 1e-9 * s0.abs().max(1.0));
            assert!((t.g - 128.0).abs() <= 1e-9 * 128.0);
        }
    }

    #[test]
    fn phase_meters_sum_to_global_counters() {
        let cfg = complete_cfg(128, 9);
        let r = drr_gossip_ave(&cfg).unwrap();
        let by_phase: u64 = r.metrics.phases.iter().map(|p| p.msgs_sent).sum();
        assert_eq!(by_phase, r.metrics.total_msgs_sent);
        let rounds: u64 = r.metrics.phases.iter().map(|p| p.rounds).sum();
        assert_eq!(rounds, r.metrics.total_rounds);
        // Lossless channel: every phase delivers everything it sends.
        for p in &r.metrics.phases {
            assert_eq!(p.msgs_delivered, p.msgs_sent, "{}", p.phase);
        }
    }

    #[test]
    fn identical_config_identical_result() {
        let cfg = complete_cfg(128, 77);
        let a = drr_gossip_ave(&cfg).unwrap();
        let b = drr_gossip_ave(&cfg).unwrap();
        assert_eq!(a.answers, b.answers);
        assert_eq!(a.metrics, b.metrics);
    }

    #[test]
    fn mode_topology_mismatch_is_invalid() {
        let mut cfg = complete_cfg(16, 1);
        cfg.drr_mode = DrrMode::Local;
        assert!(drr_gossip_max(&cfg).is_err());

        let mut cfg = ProtocolConfig::new(TopologySpec::Chord { bits: 4 }, 1);
        cfg.drr_mode = DrrMode::Sampled;
        assert!(drr_gossip_max(&cfg).is_err());
    }

    #[test]
    fn baseline_requires_complete() {
        let cfg = ProtocolConfig::new(TopologySpec::Chord { bits: 4 }, 1);
        assert!(uniform_push_sum(&cfg).is_err());
    }

    #[test]
    fn chord_end_to_end_max() {
        let cfg = ProtocolConfig::new(TopologySpec::Chord { bits: 6 }, 21);
        let r = drr_gossip_max(&cfg).unwrap();
        assert!(r.metrics.correct, "max err {:?}", r.metrics.max_rel_error);
    }

    #[test]
    fn crash_mask_runs_on_survivors() {
        let mut cfg = complete_cfg(64, 13);
        let mut mask = vec![true; 64];
        for i in 0..10 {
            mask[i * 6] = false;
        }
        cfg.alive_mask = Some(mask.clone());
        let r = drr_gossip_max(&cfg).unwrap();
        for (i, a) in r.answers.iter().enumerate() {
            assert_eq!(a.is_some(), mask[i]);
        }
        assert!(r.metrics.correct);

        // The oracle covers survivors only.
        assert!(r.oracle.is_some());
    }

    #[test]
    fn exactly_one_root_self_identifies() {
        // Probed via determinism: rerun the ave protocol and check the
        // debug assertion path stays quiet while results agree.
        for seed in 0..20 {
            let cfg = complete_cfg(256, 1000 + seed);
            let r = drr_gossip_ave(&cfg).unwrap();
            assert!(r.metrics.correct, "seed {seed}: err {:?}", r.metrics.max_rel_error);
        }
    }

    #[test]
    fn parse_helpers() {
        assert_eq!(
            TopologySpec::parse("complete:64").unwrap(),
            TopologySpec::Complete { n: 64 }
        );
        assert_eq!(
            TopologySpec::parse("dregular:1024,8").unwrap(),
            TopologySpec::DRegular { n: 1024, d: 8 }
        );
        assert_eq!(
            TopologySpec::parse("chord:10").unwrap(),
            TopologySpec::Chord { bits: 10 }
        );
        assert!(TopologySpec::parse("ring:4").is_err());
        assert!(TopologySpec::parse("complete").is_err());

        assert_eq!(
            ValueDist::parse("uniform:0,5").unwrap(),
            ValueDist::Uniform { a: 0.0, b: 5.0 }
        );
        assert_eq!(
            ValueDist::parse("constant:2.5").unwrap(),
            ValueDist::Constant { v: 2.5 }
        );
        assert!(ValueDist::parse("uniform:5,0").is_err());
        assert!(ValueDist::parse("zipf:-1").is_err());
    }
}
