//! Phase III: gossip among the forest's roots.
//!
//! Roots address messages to uniformly drawn nodes; a non-root relays what
//! it receives to its own root, so reaching a random root costs at most two
//! hops on the complete graph. On sparse graphs the same procedures run on
//! top of greedy finger routing. Value-carrying relays are batched into one
//! combined forward per relay per round by default; addressed inquiries
//! cannot be combined within the payload limit and are always relayed
//! one-for-one.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;

use crate::drr::Forest;
use crate::error::{Error, Result};
use crate::topology::{route_to, Graph, NodeId};
use crate::transport::{Field, Message, NetworkSim, Payload, PhaseLabel, SendKind};

/// Round budgets for the gossip procedures.
///
/// Defaults follow the procedure analyses with all constants pinned:
/// `c = 0.25`, `alpha = 1`, growth factor `beta = 1 + (1-2c)(1-2delta)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GossipBudgets {
    pub gossip_rounds: usize,
    pub sampling_rounds: usize,
    pub c: f64,
    pub ave_rounds: usize,
    pub alpha: f64,
}

impl GossipBudgets {
    /// Derive default budgets for `n` nodes, `m` roots, loss rate `delta`.
    pub fn derive(n: usize, m: usize, delta: f64) -> Self {
        let c = 0.25;
        let alpha = 1.0;
        let log2n = (n.max(1) as f64).log2();
        // Budgets assume delta < 1/2; the clamp keeps them finite beyond.
        let eff = (1.0 - 2.0 * delta).max(0.05);
        let beta = 1.0 + (1.0 - 2.0 * c) * eff / 2.0;
        let gossip_rounds =
            (8.0 * log2n / eff).ceil() as usize + ((n.max(1) as f64).ln() / beta.ln()).ceil() as usize;
        let sampling_rounds = ((1.0 / c) * log2n).ceil() as usize;
        let ave_rounds = ((m.max(1) as f64).log2() + 2.0 * alpha * log2n).ceil() as usize;
        // All positive for n >= 2; a single-node network needs no rounds.
        GossipBudgets {
            gossip_rounds,
            sampling_rounds,
            c,
            ave_rounds,
            alpha,
        }
    }
}

/// How gossip messages travel between roots.
#[derive(Clone, Copy)]
pub enum Fabric<'g> {
    /// Complete-graph model: direct call, plus one relay hop for non-root
    /// targets.
    CliqueTwoHop,
    /// Sparse model: greedy finger routing to the drawn ring id, then up the
    /// relay's tree path; every hop is a metered message and a model round.
    Routed(&'g Graph),
}

/// Value that can ride a gossip-max message.
pub trait GossipValue: Copy {
    fn encode(v: &Option<Self>) -> Payload;
    /// Strict order used for the max fold.
    fn beats(&self, other: &Self) -> bool;
}

impl GossipValue for f64 {
    fn encode(v: &Option<Self>) -> Payload {
        match v {
            Some(x) => Payload::new(&[Field::Value(*x)]),
            None => Payload::new(&[Field::Count(0)]),
        }
    }

    fn beats(&self, other: &Self) -> bool {
        self.total_cmp(other) == std::cmp::Ordering::Greater
    }
}

/// (tree size, root id) under lexicographic order; larger id wins ties so
/// exactly one root can recognize itself as owning the largest tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SizePair {
    pub size: u64,
    pub root: NodeId,
}

impl GossipValue for SizePair {
    fn encode(v: &Option<Self>) -> Payload {
        match v {
            Some(p) => Payload::new(&[Field::Count(p.size), Field::Id(p.root)]),
            None => Payload::new(&[Field::Count(0)]),
        }
    }

    fn beats(&self, other: &Self) -> bool {
        self > other
    }
}

fn fold<V: GossipValue>(acc: &mut Option<V>, incoming: Option<V>) {
    if let Some(v) = incoming {
        match acc {
            Some(cur) if !v.beats(cur) => {}
            _ => *acc = Some(v),
        }
    }
}

/// Dense bookkeeping shared by the gossip engines.
struct RootIndex {
    roots: Vec<NodeId>,
    dense: BTreeMap<NodeId, usize>,
}

impl RootIndex {
    fn new(f: &Forest) -> Self {
        let roots = f.roots().to_vec();
        let dense = roots.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        RootIndex { roots, dense }
    }

    fn of(&self, root: NodeId) -> usize {
        self.dense[&root]
    }
}

/// Deliver one message along a greedy route and then up the destination's
/// tree; returns the owning root if every hop survived, plus the number of
/// model rounds the path consumed.
fn route_and_climb(
    sim: &mut NetworkSim,
    f: &Forest,
    g: &Graph,
    src: NodeId,
    target: NodeId,
    phase: PhaseLabel,
    first_kind: SendKind,
    payload: Payload,
) -> Result<(Option<NodeId>, u64)> {
    let route = route_to(g, src, target)?;
    let mut hops_taken = 0u64;
    let mut cur = src;
    let mask = (g.n() - 1) as u32;
    let mut alive = true;
    // Finger hops toward the drawn ring id.
    let mut remaining = target.0.wrapping_sub(cur.0) & mask;
    while remaining != 0 {
        let step = 1u32 << (31 - remaining.leading_zeros());
        let next = NodeId((cur.0 + step) & mask);
        let kind = if hops_taken == 0 { first_kind } else { SendKind::Forward };
        let delivered = sim.send(&Message {
            src: cur,
            dst: next,
            phase,
            kind,
            payload,
        })?;
        hops_taken += 1;
        cur = next;
        remaining = target.0.wrapping_sub(cur.0) & mask;
        if !delivered {
            alive = false;
            break;
        }
    }
    debug_assert!(hops_taken <= route.hops as u64);
    if !alive {
        return Ok((None, hops_taken));
    }
    // Climb the relay's tree to its root.
    while let Some(parent) = f.parent(cur) {
        let delivered = sim.send(&Message {
            src: cur,
            dst: parent,
            phase,
            kind: SendKind::Forward,
            payload,
        })?;
        hops_taken += 1;
        cur = parent;
        if !delivered {
            return Ok((None, hops_taken));
        }
    }
    Ok((Some(cur), hops_taken))
}

/// One gossip-procedure round: every root pushes its value toward a
/// uniformly drawn node; surviving values fold as max at the owning roots.
fn gossip_push_round<V: GossipValue>(
    sim: &mut NetworkSim,
    f: &Forest,
    idx: &RootIndex,
    fabric: Fabric<'_>,
    phase: PhaseLabel,
    est: &mut [Option<V>],
) -> Result<()> {
    sim.begin_round(phase)?;
    let mut staged: Vec<(usize, Option<V>)> = Vec::new();
    let mut relay_buf: BTreeMap<NodeId, Option<V>> = BTreeMap::new();
    let mut max_path: u64 = 1;

    for (ri, &root) in idx.roots.iter().enumerate() {
        let value = est[ri];
        let payload = V::encode(&value);
        let target = sim.draw_node();
        match fabric {
            Fabric::CliqueTwoHop => {
                let troot = f.root_of(target);
                if target == troot {
                    let delivered = sim.send(&Message {
                        src: root,
                        dst: target,
                        phase,
                        kind: SendKind::Initiation,
                        payload,
                    })?;
                    if delivered {
                        staged.push((idx.of(troot), value));
                    }
                } else if sim.forward_batching() {
                    let delivered = sim.send(&Message {
                        src: root,
                        dst: target,
                        phase,
                        kind: SendKind::Initiation,
                        payload,
                    })?;
                    if delivered {
                        let slot = relay_buf.entry(target).or_insert(None);
                        fold(slot, value);
                    }
                } else {
                    let out = sim.two_hop_root_send(root, target, f.root_of_table(), payload)?;
                    if out.delivered_to_root {
                        staged.push((idx.of(out.root), value));
                    }
                }
            }
            Fabric::Routed(g) => {
                let (reached, path) = route_and_climb(
                    sim,
                    f,
                    g,
                    root,
                    target,
                    phase,
                    SendKind::Initiation,
                    payload,
                )?;
                max_path = max_path.max(path);
                if let Some(r) = reached {
                    staged.push((idx.of(r), value));
                }
            }
        }
    }

    // Each relay combines what landed on it and forwards once.
    for (relay, combined) in relay_buf {
        let delivered = sim.send(&Message {
            src: relay,
            dst: f.root_of(relay),
            phase,
            kind: SendKind::Forward,
            payload: V::encode(&combined),
        })?;
        if delivered {
            staged.push((idx.of(f.root_of(relay)), combined));
        }
    }

    if max_path > 1 {
        sim.charge_extra_rounds(max_path - 1)?;
    }
    for (ri, v) in staged {
        fold(&mut est[ri], v);
    }
    sim.end_round()?;
    Ok(())
}

/// One sampling-procedure round: every root inquires at the root owning a
/// uniformly drawn node; the inquired root answers straight back, and the
/// inquirer folds the answer. Replies are single unretried messages.
fn gossip_sample_round<V: GossipValue>(
    sim: &mut NetworkSim,
    f: &Forest,
    idx: &RootIndex,
    fabric: Fabric<'_>,
    phase: PhaseLabel,
    est: &mut [Option<V>],
) -> Result<()> {
    sim.begin_round(phase)?;
    let mut arrivals: Vec<(usize, NodeId)> = Vec::new(); // (responder, inquirer)
    let mut max_inquiry: u64 = 1;
    for &root in &idx.roots {
        let target = sim.draw_node();
        let payload = Payload::new(&[Field::Id(root)]);
        match fabric {
            Fabric::CliqueTwoHop => {
                let out = sim.two_hop_root_send(root, target, f.root_of_table(), payload)?;
                if out.delivered_to_root {
                    arrivals.push((idx.of(out.root), root));
                }
            }
            Fabric::Routed(g) => {
                let (reached, path) =
                    route_and_climb(sim, f, g, root, target, phase, SendKind::Initiation, payload)?;
                max_inquiry = max_inquiry.max(path);
                if let Some(r) = reached {
                    arrivals.push((idx.of(r), root));
                }
            }
        }
    }

    let mut staged: Vec<(usize, Option<V>)> = Vec::new();
    let mut max_reply: u64 = 0;
    for (responder, inquirer) in arrivals {
        let value = est[responder];
        let payload = V::encode(&value);
        let responder_id = idx.roots[responder];
        match fabric {
            Fabric::CliqueTwoHop => {
                let delivered = sim.send(&Message {
                    src: responder_id,
                    dst: inquirer,
                    phase,
                    kind: SendKind::Reply,
                    payload,
                })?;
                if delivered {
                    staged.push((idx.of(inquirer), value));
                }
            }
            Fabric::Routed(g) => {
                let (reached, path) = route_and_climb(
                    sim,
                    f,
                    g,
                    responder_id,
                    inquirer,
                    phase,
                    SendKind::Reply,
                    payload,
                )?;
                max_reply = max_reply.max(path);
                if reached.is_some() {
                    staged.push((idx.of(inquirer), value));
                }
            }
        }
    }

    let span = max_inquiry + max_reply;
    if span > 1 {
        sim.charge_extra_rounds(span - 1)?;
    }
    for (ri, v) in staged {
        fold(&mut est[ri], v);
    }
    sim.end_round()?;
    Ok(())
}

fn run_gossip_max_engine<V: GossipValue>(
    sim: &mut NetworkSim,
    f: &Forest,
    fabric: Fabric<'_>,
    phases: (PhaseLabel, PhaseLabel),
    init: Vec<Option<V>>,
    budgets: &GossipBudgets,
) -> Result<Vec<Option<V>>> {
    let idx = RootIndex::new(f);
    let mut est = init;
    for _ in 0..budgets.gossip_rounds {
        gossip_push_round(sim, f, &idx, fabric, phases.0, &mut est)?;
    }
    for _ in 0..budgets.sampling_rounds {
        gossip_sample_round(sim, f, &idx, fabric, phases.1, &mut est)?;
    }
    Ok(est)
}

fn dense_init<V: Copy>(
    f: &Forest,
    init: &BTreeMap<NodeId, V>,
) -> Result<Vec<Option<V>>> {
    let mut out = Vec::with_capacity(f.roots().len());
    for r in f.roots() {
        match init.get(r) {
            Some(v) => out.push(Some(*v)),
            None => return Err(Error::invalid(format!("init missing root {r}"))),
        }
    }
    if init.len() != f.roots().len() {
        return Err(Error::invalid("init keyed by a non-root"));
    }
    Ok(out)
}

/// Gossip-max over the roots: gossip procedure then sampling procedure.
///
/// `init` must cover exactly the forest's roots; `root_of` must already be
/// known network-wide (run the address broadcast first).
pub fn gossip_max(
    sim: &mut NetworkSim,
    f: &Forest,
    init: &BTreeMap<NodeId, f64>,
    budgets: &GossipBudgets,
) -> Result<BTreeMap<NodeId, f64>> {
    gossip_max_on(sim, f, Fabric::CliqueTwoHop, init, budgets)
}

pub fn gossip_max_on(
    sim: &mut NetworkSim,
    f: &Forest,
    fabric: Fabric<'_>,
    init: &BTreeMap<NodeId, f64>,
    budgets: &GossipBudgets,
) -> Result<BTreeMap<NodeId, f64>> {
    let dense = dense_init(f, init)?;
    let est = run_gossip_max_engine(
        sim,
        f,
        fabric,
        (PhaseLabel::GossipMax, PhaseLabel::GossipSample),
        dense,
        budgets,
    )?;
    Ok(f.roots()
        .iter()
        .zip(est)
        .map(|(&r, v)| (r, v.expect("estimates can only grow from a total init")))
        .collect())
}

/// Gossip-max on (tree size, root id) pairs; the unique root whose own pair
/// equals the consensus knows it owns the largest tree.
pub(crate) fn gossip_size_pairs_on(
    sim: &mut NetworkSim,
    f: &Forest,
    fabric: Fabric<'_>,
    sizes: &BTreeMap<NodeId, u64>,
    budgets: &GossipBudgets,
) -> Result<BTreeMap<NodeId, SizePair>> {
    let init: BTreeMap<NodeId, SizePair> = sizes
        .iter()
        .map(|(&r, &size)| (r, SizePair { size, root: r }))
        .collect();
    let dense = dense_init(f, &init)?;
    let est = run_gossip_max_engine(
        sim,
        f,
        fabric,
        (PhaseLabel::GossipMax, PhaseLabel::GossipSample),
        dense,
        budgets,
    )?;
    Ok(f.roots()
        .iter()
        .zip(est)
        .map(|(&r, v)| (r, v.expect("pair init is total")))
        .collect())
}

/// Spread one root's value to every root; other roots start from the
/// explicit absent sentinel, which folds as identity.
pub fn data_spread(
    sim: &mut NetworkSim,
    f: &Forest,
    source_root: NodeId,
    value: f64,
    budgets: &GossipBudgets,
) -> Result<BTreeMap<NodeId, Option<f64>>> {
    data_spread_on(sim, f, Fabric::CliqueTwoHop, source_root, value, budgets)
}

pub fn data_spread_on(
    sim: &mut NetworkSim,
    f: &Forest,
    fabric: Fabric<'_>,
    source_root: NodeId,
    value: f64,
    budgets: &GossipBudgets,
) -> Result<BTreeMap<NodeId, Option<f64>>> {
    if !f.is_root(source_root) {
        return Err(Error::invalid(format!(
            "data-spread source {source_root} is not a root"
        )));
    }
    let sources = BTreeMap::from([(source_root, value)]);
    data_spread_multi_on(sim, f, fabric, &sources, budgets)
}

/// Data-spread from a set of self-identified sources. Single-source is the
/// normal call; the multi-source form exists because, off the
/// high-probability path, size-consensus can leave more than one root
/// believing it is largest; folding max keeps the outcome well-defined.
pub(crate) fn data_spread_multi_on(
    sim: &mut NetworkSim,
    f: &Forest,
    fabric: Fabric<'_>,
    sources: &BTreeMap<NodeId, f64>,
    budgets: &GossipBudgets,
) -> Result<BTreeMap<NodeId, Option<f64>>> {
    for r in sources.keys() {
        if !f.is_root(*r) {
            return Err(Error::invalid(format!("data-spread source {r} is not a root")));
        }
    }
    let init: Vec<Option<f64>> = f
        .roots()
        .iter()
        .map(|r| sources.get(r).copied())
        .collect();
    let est = run_gossip_max_engine(
        sim,
        f,
        fabric,
        (PhaseLabel::DataSpread, PhaseLabel::DataSpread),
        init,
        budgets,
    )?;
    Ok(f.roots().iter().zip(est).map(|(&r, v)| (r, v)).collect())
}

/// Per-round mass totals of a push-sum run; with no loss these are exact
/// conserved quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTotals {
    pub s: f64,
    pub g: f64,
    pub w: f64,
}

/// One row of the optional per-round trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveTraceRow {
    pub round: usize,
    pub root: NodeId,
    pub s: f64,
    pub g: f64,
    pub estimate: f64,
}

/// Outcome of a gossip-ave run.
#[derive(Debug, Clone)]
pub struct AveResult {
    pub estimates: BTreeMap<NodeId, f64>,
    /// Totals at every round boundary, starting with the initial state.
    pub round_totals: Vec<RoundTotals>,
    pub trace: Option<Vec<AveTraceRow>>,
}

/// Write a recorded trace as CSV: `round,root,s,g,estimate`.
pub fn write_ave_trace_csv<W: Write>(out: &mut W, trace: &[AveTraceRow]) -> std::io::Result<()> {
    writeln!(out, "round,root,s,g,estimate")?;
    for row in trace {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.round, row.root, row.s, row.g, row.estimate
        )?;
    }
    Ok(())
}

/// Push-sum over the roots: halve the (s, g) pair, keep one half, push the
/// other toward a uniformly drawn node. A dropped half is lost mass, exactly
/// as the failure model permits; there is no retransmission here.
pub fn gossip_ave(
    sim: &mut NetworkSim,
    f: &Forest,
    init: &BTreeMap<NodeId, (f64, f64)>,
    budgets: &GossipBudgets,
) -> Result<AveResult> {
    gossip_ave_on(sim, f, Fabric::CliqueTwoHop, init, budgets, false)
}

pub fn gossip_ave_on(
    sim: &mut NetworkSim,
    f: &Forest,
    fabric: Fabric<'_>,
    init: &BTreeMap<NodeId, (f64, f64)>,
    budgets: &GossipBudgets,
    record_trace: bool,
) -> Result<AveResult> {
    let dense = dense_init(f, init)?;
    let mut state: Vec<(f64, f64, f64)> = Vec::with_capacity(dense.len());
    for v in dense {
        let (s, g) = v.unwrap();
        if !(g > 0.0) {
            return Err(Error::invalid(format!("nonpositive initial weight g = {g}")));
        }
        state.push((s, g, 1.0));
    }
    let idx = RootIndex::new(f);
    let mut totals = vec![totals_of(&state)];
    let mut trace: Option<Vec<AveTraceRow>> = record_trace.then(Vec::new);

    for round in 0..budgets.ave_rounds {
        sim.begin_round(PhaseLabel::GossipAve)?;
        let mut staged: Vec<(usize, (f64, f64, f64))> = Vec::new();
        let mut relay_buf: BTreeMap<NodeId, (f64, f64, f64)> = BTreeMap::new();
        let mut max_path: u64 = 1;

        for (ri, &root) in idx.roots.iter().enumerate() {
            let (s, g, w) = state[ri];
            let half = (s / 2.0, g / 2.0, w / 2.0);
            state[ri] = half;
            let payload = Payload::new(&[Field::Value(half.0), Field::Value(half.1)]);
            let target = sim.draw_node();
            match fabric {
                Fabric::CliqueTwoHop => {
                    let troot = f.root_of(target);
                    if target == troot {
                        let delivered = sim.send(&Message {
                            src: root,
                            dst: target,
                            phase: PhaseLabel::GossipAve,
                            kind: SendKind::Initiation,
                            payload,
                        })?;
                        if delivered {
                            staged.push((idx.of(troot), half));
                        }
                    } else if sim.forward_batching() {
                        let delivered = sim.send(&Message {
                            src: root,
                            dst: target,
                            phase: PhaseLabel::GossipAve,
                            kind: SendKind::Initiation,
                            payload,
                        })?;
                        if delivered {
                            let slot = relay_buf.entry(target).or_insert((0.0, 0.0, 0.0));
                            slot.0 += half.0;
                            slot.1 += half.1;
                            slot.2 += half.2;
                        }
                    } else {
                        let out =
                            sim.two_hop_root_send(root, target, f.root_of_table(), payload)?;
                        if out.delivered_to_root {
                            staged.push((idx.of(out.root), half));
                        }
                    }
                }
                Fabric::Routed(g_ref) => {
                    let (reached, path) = route_and_climb(
                        sim,
                        f,
                        g_ref,
                        root,
                        target,
                        PhaseLabel::GossipAve,
                        SendKind::Initiation,
                        payload,
                    )?;
                    max_path = max_path.max(path);
                    if let Some(r) = reached {
                        staged.push((idx.of(r), half));
                    }
                }
            }
        }

        for (relay, sum) in relay_buf {
            let payload = Payload::new(&[Field::Value(sum.0), Field::Value(sum.1)]);
            let delivered = sim.send(&Message {
                src: relay,
                dst: f.root_of(relay),
                phase: PhaseLabel::GossipAve,
                kind: SendKind::Forward,
                payload,
            })?;
            if delivered {
                staged.push((idx.of(f.root_of(relay)), sum));
            }
        }

        if max_path > 1 {
            sim.charge_extra_rounds(max_path - 1)?;
        }
        for (ri, (ds, dg, dw)) in staged {
            state[ri].0 += ds;
            state[ri].1 += dg;
            state[ri].2 += dw;
        }
        sim.end_round()?;
        totals.push(totals_of(&state));
        if let Some(rows) = trace.as_mut() {
            for (ri, &root) in idx.roots.iter().enumerate() {
                let (s, g, _) = state[ri];
                rows.push(AveTraceRow {
                    round: round + 1,
                    root,
                    s,
                    g,
                    estimate: s / g,
                });
            }
        }
    }

    let estimates = idx
        .roots
        .iter()
        .enumerate()
        .map(|(ri, &r)| (r, state[ri].0 / state[ri].1))
        .collect();
    Ok(AveResult {
        estimates,
        round_totals: totals,
        trace,
    })
}

fn totals_of(state: &[(f64, f64, f64)]) -> RoundTotals {
    RoundTotals {
        s: state.iter().map(|t| t.0).sum(),
        g: state.iter().map(|t| t.1).sum(),
        w: state.iter().map(|t| t.2).sum(),
    }
}

/// Classic uniform push-sum over all `n` nodes, metered for comparison
/// tables: every node pushes one half-pair to a uniformly drawn node each
/// round, so messages are exactly `n` per round regardless of loss.
pub fn uniform_push_sum_baseline(
    sim: &mut NetworkSim,
    n: usize,
    vals: &[f64],
    rounds: usize,
) -> Result<Vec<f64>> {
    if n == 0 || vals.len() != n || sim.n() != n {
        return Err(Error::invalid("baseline needs matching n, sim and values"));
    }
    let mut state: Vec<(f64, f64)> = vals.iter().map(|&v| (v, 1.0)).collect();
    for _ in 0..rounds {
        sim.begin_round(PhaseLabel::Baseline)?;
        let mut staged: Vec<(usize, (f64, f64))> = Vec::new();
        for i in 0..n {
            let (s, w) = state[i];
            let half = (s / 2.0, w / 2.0);
            state[i] = half;
            let target = sim.draw_node();
            let delivered = sim.send(&Message {
                src: NodeId::new(i),
                dst: target,
                phase: PhaseLabel::Baseline,
                kind: SendKind::Initiation,
                payload: Payload::new(&[Field::Value(half.0), Field::Value(half.1)]),
            })?;
            if delivered {
                staged.push((target.index(), half));
            }
        }
        for (i, (ds, dw)) in staged {
            state[i].0 += ds;
            state[i].1 += dw;
        }
        sim.end_round()?;
    }
    Ok(state.into_iter().map(|(s, w)| s / w).collect())
}

/// Default round budget for the baseline.
pub fn baseline_rounds(n: usize) -> usize {
    ((n.max(2) as f64).log2() * 4.0).ceil() as usize
}

/// Trace of the push-sum potential diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTrace {
    /// Potential before any round; equals `m - 1` at unit-vector init.
    pub phi0: f64,
    /// Per-round mean of the contraction ratio `phi_{t+1} / phi_t`.
    pub mean_ratios: Vec<f64>,
}

/// Instrumented push-sum on full contribution vectors.
///
/// Roots are selected with probability proportional to tree size; each push
/// survives with probability `1 - delta`. Tracks the potential
/// `phi_t = sum_{i,j} (y_{t,i,j} - w_{t,i}/m)^2` and returns the empirical
/// per-round contraction ratios averaged over `trials` independent runs.
pub fn track_push_sum_potential(
    m: usize,
    tree_sizes: &[u64],
    delta: f64,
    trials: usize,
    rounds: usize,
    seed: u64,
) -> Result<PotentialTrace> {
    if m < 2 || tree_sizes.len() != m {
        return Err(Error::invalid("potential tracker needs m >= 2 tree sizes"));
    }
    if tree_sizes.contains(&0) {
        return Err(Error::invalid("tree sizes must be positive"));
    }
    if trials == 0 || rounds == 0 {
        return Err(Error::invalid("trials and rounds must be positive"));
    }
    let n: u64 = tree_sizes.iter().sum();
    let mut owner_bounds = Vec::with_capacity(m);
    let mut acc = 0u64;
    for &s in tree_sizes {
        acc += s;
        owner_bounds.push(acc);
    }

    let inv_m = 1.0 / m as f64;
    let mut ratio_sums = vec![0.0f64; rounds];
    let mut phi0 = 0.0;
    let mut rng = crate::rng::seeded_rng(seed);

    for _ in 0..trials {
        let mut y: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut e = vec![0.0; m];
                e[i] = 1.0;
                e
            })
            .collect();
        let mut w = vec![1.0f64; m];
        let mut phi = potential(&y, &w, inv_m);
        phi0 = phi;

        for ratio_slot in ratio_sums.iter_mut().take(rounds) {
            // Halve in place; the kept half equals the pushed half.
            for row in y.iter_mut() {
                for v in row.iter_mut() {
                    *v *= 0.5;
                }
            }
            for wi in w.iter_mut() {
                *wi *= 0.5;
            }
            let halves = y.clone();
            let whalves = w.clone();
            for i in 0..m {
                let u = rng.gen_range(0..n);
                let dest = owner_bounds.partition_point(|&b| b <= u);
                let delivered = delta == 0.0 || rng.gen_bool(1.0 - delta);
                if delivered {
                    for j in 0..m {
                        y[dest][j] += halves[i][j];
                    }
                    w[dest] += whalves[i];
                }
            }
            let next = potential(&y, &w, inv_m);
            *ratio_slot += next / phi;
            phi = next;
        }
    }

    Ok(PotentialTrace {
        phi0,
        mean_ratios: ratio_sums.iter().map(|s| s / trials as f64).collect(),
    })
}

fn potential(y: &[Vec<f64>], w: &[f64], inv_m: f64) -> f64 {
    y.iter()
        .zip(w)
        .map(|(row, &wi)| {
            let center = wi * inv_m;
            row.iter().map(|&v| (v - center).powi(2)).sum::<f64>()
        })
        .sum()
}
