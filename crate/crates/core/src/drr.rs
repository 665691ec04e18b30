//! Phase I: distributed random ranking.
//!
//! Every node draws a uniform rank; on the complete graph each node probes
//! random peers for a strictly higher rank to adopt as parent, on arbitrary
//! graphs each node parents to its highest-ranked neighbor. Either way the
//! strictly-increasing parent ranks rule out cycles, so the result is a
//! forest of disjoint trees.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::topology::{Graph, NodeId};
use crate::transport::{Field, Message, NetworkSim, Payload, PhaseLabel, SendKind};

/// A node's rank: uniform real with the node id as tiebreak, making the
/// order total even under (vanishingly unlikely) value collisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rank {
    pub value: f64,
    pub tiebreak: NodeId,
}

impl Eq for Rank {}

impl Ord for Rank {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.tiebreak.cmp(&other.tiebreak))
    }
}

impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The disjoint-tree partition produced by ranking.
#[derive(Debug, Clone)]
pub struct Forest {
    n: usize,
    rank: Vec<Rank>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    roots: Vec<NodeId>,
    root_of: Vec<NodeId>,
}

impl Forest {
    /// Assemble a forest from explicit links.
    ///
    /// No invariants are enforced here; feed the result to
    /// [`validate_forest`] to check it.
    pub fn from_raw_parts(rank: Vec<Rank>, parent: Vec<Option<NodeId>>) -> Forest {
        let n = rank.len();
        let mut children = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for i in 0..n {
            match parent[i] {
                Some(p) if p.index() < n => children[p.index()].push(NodeId::new(i)),
                Some(_) => {}
                None => roots.push(NodeId::new(i)),
            }
        }
        let root_of = resolve_roots(&parent, n);
        Forest {
            n,
            rank,
            parent,
            children,
            roots,
            root_of,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self, i: NodeId) -> Rank {
        self.rank[i.index()]
    }

    pub fn parent(&self, i: NodeId) -> Option<NodeId> {
        self.parent[i.index()]
    }

    pub fn children(&self, i: NodeId) -> &[NodeId] {
        &self.children[i.index()]
    }

    /// Sorted root set.
    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn is_root(&self, i: NodeId) -> bool {
        self.parent[i.index()].is_none()
    }

    pub fn root_of(&self, i: NodeId) -> NodeId {
        self.root_of[i.index()]
    }

    /// Dense `node -> root` table, indexable by `NodeId::index`.
    pub fn root_of_table(&self) -> &[NodeId] {
        &self.root_of
    }

    /// Depth of every node (roots at 0).
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.n];
        let mut stack: Vec<NodeId> = self.roots.clone();
        while let Some(i) = stack.pop() {
            for &c in self.children(i) {
                depth[c.index()] = depth[i.index()] + 1;
                stack.push(c);
            }
        }
        depth
    }

    /// JSON-lines dump, one `{id, rank, parent, root}` record per node.
    pub fn dump_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Row {
            id: u32,
            rank: f64,
            parent: Option<u32>,
            root: u32,
        }
        for i in 0..self.n {
            let row = Row {
                id: i as u32,
                rank: self.rank[i].value,
                parent: self.parent[i].map(|p| p.0),
                root: self.root_of[i].0,
            };
            serde_json::to_writer(&mut w, &row)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

fn resolve_roots(parent: &[Option<NodeId>], n: usize) -> Vec<NodeId> {
    // Path-following with memoization; cycles (possible in hand-built
    // forests) resolve to the smallest node on the cycle so that
    // validate_forest can still report on a well-formed table.
    let mut root_of: Vec<Option<NodeId>> = vec![None; n];
    for start in 0..n {
        if root_of[start].is_some() {
            continue;
        }
        let mut path = vec![NodeId::new(start)];
        let root;
        loop {
            let cur = *path.last().unwrap();
            if let Some(r) = root_of[cur.index()] {
                root = r;
                break;
            }
            match parent[cur.index()] {
                None => {
                    root = cur;
                    break;
                }
                Some(p) if p.index() >= n || path.contains(&p) => {
                    root = path.iter().copied().min().unwrap();
                    break;
                }
                Some(p) => path.push(p),
            }
        }
        for v in path {
            root_of[v.index()] = Some(root);
        }
    }
    root_of.into_iter().map(Option::unwrap).collect()
}

/// Knobs for the sampled (complete-graph) ranking phase.
#[derive(Debug, Clone, Copy, Default)]
pub struct DrrConfig {
    /// Override for the probe budget `max(0, ceil(log2 n) - 1)`.
    pub probe_budget_override: Option<usize>,
    /// Meter a probe as two messages (query plus rank reply) instead of one
    /// exchange.
    pub count_probe_replies: bool,
}

/// Default probe budget for an `n`-node network.
pub fn probe_budget(n: usize) -> usize {
    ((n as f64).log2().ceil() as usize).saturating_sub(1)
}

/// Ranking by random probing on the complete graph.
///
/// Each node probes uniformly drawn peers (one per round, with replacement,
/// self excluded) until it sees a strictly higher rank or exhausts its
/// budget. A dropped probe burns the attempt; a dropped connection message
/// is retried every round until it lands, since an unlinked non-root would
/// corrupt the partition.
pub fn run_drr(sim: &mut NetworkSim, n: usize, rng: &mut impl Rng) -> Result<Forest> {
    run_drr_with(sim, n, rng, DrrConfig::default())
}

pub fn run_drr_with(
    sim: &mut NetworkSim,
    n: usize,
    rng: &mut impl Rng,
    cfg: DrrConfig,
) -> Result<Forest> {
    if n == 0 {
        return Err(Error::invalid("drr needs n >= 1"));
    }
    if sim.n() != n {
        return Err(Error::invalid(format!(
            "sim is sized for {} nodes, drr asked for {n}",
            sim.n()
        )));
    }

    let rank = draw_ranks(n, rng);
    let budget = cfg.probe_budget_override.unwrap_or_else(|| probe_budget(n));
    let mut parent: Vec<Option<NodeId>> = vec![None; n];

    if n >= 2 {
        for _ in 0..budget {
            sim.begin_round(PhaseLabel::DrrProbe)?;
            for i in 0..n {
                if parent[i].is_some() {
                    continue;
                }
                let me = NodeId::new(i);
                // i.i.d. uniform over V \ {i}, with replacement across probes.
                let raw = rng.gen_range(0..(n - 1) as u32);
                let target = NodeId(if raw >= me.0 { raw + 1 } else { raw });
                let probe = Message {
                    src: me,
                    dst: target,
                    phase: PhaseLabel::DrrProbe,
                    kind: SendKind::Initiation,
                    payload: Payload::new(&[Field::Rank(rank[i].value)]),
                };
                let mut learned = sim.send(&probe)?;
                // Under the two-message metering, the rank comes back in a
                // separate reply, which only exists if the query arrived.
                if cfg.count_probe_replies && learned {
                    let reply = Message {
                        src: target,
                        dst: me,
                        phase: PhaseLabel::DrrProbe,
                        kind: SendKind::Reply,
                        payload: Payload::new(&[Field::Rank(rank[target.index()].value)]),
                    };
                    learned = sim.send(&reply)?;
                }
                if learned && rank[target.index()] > rank[i] {
                    parent[i] = Some(target);
                }
            }
            sim.end_round()?;
        }
    }

    // Connection rounds: everyone who found a parent announces the link,
    // retrying drops until every link is established.
    let mut pending: Vec<NodeId> = (0..n)
        .filter(|&i| parent[i].is_some())
        .map(NodeId::new)
        .collect();
    while !pending.is_empty() {
        sim.begin_round(PhaseLabel::DrrConnect)?;
        let mut still = Vec::new();
        for me in pending {
            let dst = parent[me.index()].unwrap();
            let connect = Message {
                src: me,
                dst,
                phase: PhaseLabel::DrrConnect,
                kind: SendKind::Initiation,
                payload: Payload::new(&[Field::Id(me)]),
            };
            if !sim.send(&connect)? {
                still.push(me);
            }
        }
        sim.end_round()?;
        pending = still;
    }

    Ok(Forest::from_raw_parts(rank, parent))
}

/// Ranking by local maxima on a graph with explicit adjacency.
///
/// One round of simultaneous rank exchange with all neighbors (two messages
/// per edge), then every node parents to its highest-ranked neighbor; local
/// maxima and isolated nodes become roots.
pub fn run_local_drr(sim: &mut NetworkSim, g: &Graph, rng: &mut impl Rng) -> Result<Forest> {
    if !g.has_explicit_adjacency() {
        return Err(Error::invalid(
            "local drr needs explicit adjacency; use run_drr on complete graphs",
        ));
    }
    let n = g.n();
    if sim.n() != n {
        return Err(Error::invalid(format!(
            "sim is sized for {} nodes, graph has {n}",
            sim.n()
        )));
    }

    let rank = draw_ranks(n, rng);

    sim.begin_round(PhaseLabel::DrrProbe)?;
    sim.charge_neighbor_exchange(2 * g.edge_count())?;
    sim.end_round()?;

    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    for i in 0..n {
        let me = NodeId::new(i);
        let best = g
            .neighbors(me)
            .iter()
            .copied()
            .max_by_key(|&j| rank[j.index()]);
        if let Some(b) = best {
            if rank[b.index()] > rank[i] {
                parent[i] = Some(b);
            }
        }
    }
    Ok(Forest::from_raw_parts(rank, parent))
}

fn draw_ranks(n: usize, rng: &mut impl Rng) -> Vec<Rank> {
    (0..n)
        .map(|i| Rank {
            value: rng.gen::<f64>(),
            tiebreak: NodeId::new(i),
        })
        .collect()
}

/// A single violated forest invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum ForestViolation {
    RootWithParent(NodeId),
    RankNotIncreasing { child: NodeId, parent: NodeId },
    ParentOutOfRange { child: NodeId },
    CyclicParentChain(NodeId),
    ChildrenNotInverse { parent: NodeId, child: NodeId },
    RootOfInconsistent { node: NodeId },
    RootSetMismatch,
}

impl std::fmt::Display for ForestViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ForestViolation::RootWithParent(i) => write!(f, "node {i} is in roots but has a parent"),
            ForestViolation::RankNotIncreasing { child, parent } => {
                write!(f, "edge {child} -> {parent} does not increase rank")
            }
            ForestViolation::ParentOutOfRange { child } => {
                write!(f, "node {child} has an out-of-range parent")
            }
            ForestViolation::CyclicParentChain(i) => {
                write!(f, "parent chain from node {i} never reaches a root")
            }
            ForestViolation::ChildrenNotInverse { parent, child } => {
                write!(f, "children list of {parent} disagrees with parent link of {child}")
            }
            ForestViolation::RootOfInconsistent { node } => {
                write!(f, "root_of({node}) disagrees with the parent chain")
            }
            ForestViolation::RootSetMismatch => write!(f, "root set disagrees with parent links"),
        }
    }
}

/// Check every structural invariant; an empty report means a valid forest.
pub fn validate_forest(f: &Forest) -> Vec<ForestViolation> {
    let n = f.n;
    let mut report = Vec::new();

    let root_set: std::collections::BTreeSet<NodeId> = f.roots.iter().copied().collect();
    let derived: std::collections::BTreeSet<NodeId> = (0..n)
        .map(NodeId::new)
        .filter(|&i| f.parent[i.index()].is_none())
        .collect();
    if root_set != derived {
        report.push(ForestViolation::RootSetMismatch);
    }
    for &r in &f.roots {
        if f.parent[r.index()].is_some() {
            report.push(ForestViolation::RootWithParent(r));
        }
    }

    for i in 0..n {
        let child = NodeId::new(i);
        if let Some(p) = f.parent[i] {
            if p.index() >= n {
                report.push(ForestViolation::ParentOutOfRange { child });
                continue;
            }
            if f.rank[p.index()] <= f.rank[i] {
                report.push(ForestViolation::RankNotIncreasing { child, parent: p });
            }
            if !f.children[p.index()].contains(&child) {
                report.push(ForestViolation::ChildrenNotInverse { parent: p, child });
            }
        }
    }
    for (i, kids) in f.children.iter().enumerate() {
        let parent = NodeId::new(i);
        for &c in kids {
            if f.parent[c.index()] != Some(parent) {
                report.push(ForestViolation::ChildrenNotInverse { parent, child: c });
            }
        }
    }

    // Acyclicity and root_of consistency by bounded path walking.
    for i in 0..n {
        let start = NodeId::new(i);
        let mut cur = start;
        let mut steps = 0usize;
        let reached = loop {
            match f.parent[cur.index()] {
                None => break Some(cur),
                Some(p) if p.index() >= n => break None,
                Some(p) => {
                    cur = p;
                    steps += 1;
                    if steps > n {
                        break None;
                    }
                }
            }
        };
        match reached {
            None => report.push(ForestViolation::CyclicParentChain(start)),
            Some(root) => {
                if f.root_of[i] != root {
                    report.push(ForestViolation::RootOfInconsistent { node: start });
                }
            }
        }
    }
    report
}

/// Structural statistics of a forest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForestStats {
    pub tree_count: usize,
    /// tree size -> number of trees of that size
    pub size_histogram: BTreeMap<usize, usize>,
    /// tree height -> number of trees of that height
    pub height_histogram: BTreeMap<usize, usize>,
    pub max_size: usize,
    pub max_height: usize,
}

impl ForestStats {
    pub fn mean_size(&self) -> f64 {
        let total: usize = self.size_histogram.iter().map(|(s, c)| s * c).sum();
        total as f64 / self.tree_count as f64
    }

    pub fn csv_header() -> &'static str {
        "tree_count,max_size,max_height,mean_size"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.tree_count,
            self.max_size,
            self.max_height,
            self.mean_size()
        )
    }
}

pub fn forest_stats(f: &Forest) -> ForestStats {
    let mut size: BTreeMap<NodeId, usize> = f.roots.iter().map(|&r| (r, 0)).collect();
    let mut height: BTreeMap<NodeId, usize> = f.roots.iter().map(|&r| (r, 0)).collect();
    let depths = f.depths();
    for i in 0..f.n {
        let r = f.root_of(NodeId::new(i));
        *size.get_mut(&r).expect("root_of points at a root") += 1;
        let h = height.get_mut(&r).expect("root_of points at a root");
        *h = (*h).max(depths[i]);
    }
    let mut size_histogram = BTreeMap::new();
    for &s in size.values() {
        *size_histogram.entry(s).or_insert(0) += 1;
    }
    let mut height_histogram = BTreeMap::new();
    for &h in height.values() {
        *height_histogram.entry(h).or_insert(0) += 1;
    }
    ForestStats {
        tree_count: f.roots.len(),
        max_size: size.values().copied().max().unwrap_or(0),
        max_height: height.values().copied().max().unwrap_or(0),
        size_histogram,
        height_histogram,
    }
}
