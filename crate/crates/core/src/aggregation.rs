//! Phase II: level-synchronous convergecast of max / (sum, size) up each
//! tree and broadcast back down.
//!
//! Unlike the gossip phase, a lost subtree aggregate is unrecoverable, so
//! every tree-edge message is retried until delivered; the ack that stops a
//! retry rides inside the same exchange and is not metered separately.

use std::collections::BTreeMap;
use std::io::Write;

use crate::drr::{validate_forest, Forest};
use crate::error::{Error, Result};
use crate::topology::NodeId;
use crate::transport::{Field, Message, NetworkSim, Payload, PhaseLabel, SendKind};

/// Running (sum, size) pair carried up a tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumPair {
    pub sum: f64,
    pub size: u64,
}

fn check_inputs(sim: &NetworkSim, f: &Forest, vals: Option<&[f64]>) -> Result<()> {
    if sim.n() != f.n() {
        return Err(Error::ModelViolation(format!(
            "sim sized for {} nodes, forest has {}",
            sim.n(),
            f.n()
        )));
    }
    if let Some(vals) = vals {
        if vals.len() != f.n() {
            return Err(Error::ModelViolation(format!(
                "value assignment covers {} of {} nodes",
                vals.len(),
                f.n()
            )));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelViolation("non-finite node value".into()));
        }
    }
    if !validate_forest(f).is_empty() {
        return Err(Error::ModelViolation("forest fails validation".into()));
    }
    Ok(())
}

/// Per-root maximum over each tree.
pub fn convergecast_max(
    sim: &mut NetworkSim,
    f: &Forest,
    vals: &[f64],
) -> Result<BTreeMap<NodeId, f64>> {
    check_inputs(sim, f, Some(vals))?;
    let acc = run_convergecast(
        sim,
        f,
        vals.to_vec(),
        |acc, child| *acc = acc.max(child),
        |v| Payload::new(&[Field::Value(*v)]),
    )?;
    Ok(f.roots().iter().map(|&r| (r, acc[r.index()])).collect())
}

/// Per-root (value sum, tree size) over each tree.
///
/// A child's pair is folded into its parent exactly once, on the delivery
/// that finally lands; the sender conceptually resets its pair on the ack,
/// so retries never double-count.
pub fn convergecast_sum(
    sim: &mut NetworkSim,
    f: &Forest,
    vals: &[f64],
) -> Result<BTreeMap<NodeId, SumPair>> {
    check_inputs(sim, f, Some(vals))?;
    let init: Vec<SumPair> = vals.iter().map(|&v| SumPair { sum: v, size: 1 }).collect();
    let acc = run_convergecast(
        sim,
        f,
        init,
        |acc, child| {
            acc.sum += child.sum;
            acc.size += child.size;
        },
        |p| Payload::new(&[Field::Value(p.sum), Field::Count(p.size)]),
    )?;
    Ok(f.roots().iter().map(|&r| (r, acc[r.index()])).collect())
}

/// Leaf-to-root aggregation engine.
///
/// A node sends only after all of its children have reported, so with no
/// loss the round count equals the maximum tree height and the message
/// count is exactly `n - |roots|`.
fn run_convergecast<V: Copy>(
    sim: &mut NetworkSim,
    f: &Forest,
    init: Vec<V>,
    fold: impl Fn(&mut V, V),
    encode: impl Fn(&V) -> Payload,
) -> Result<Vec<V>> {
    let n = f.n();
    let mut acc = init;
    let mut waiting_on: Vec<usize> = (0..n).map(|i| f.children(NodeId::new(i)).len()).collect();
    let mut reported = vec![false; n];
    let mut outstanding = n - f.roots().len();

    while outstanding > 0 {
        sim.begin_round(PhaseLabel::Convergecast)?;
        // Stage sends against the state at round start, apply after.
        let ready: Vec<usize> = (0..n)
            .filter(|&i| !reported[i] && waiting_on[i] == 0 && f.parent(NodeId::new(i)).is_some())
            .collect();
        for i in ready {
            let parent = f.parent(NodeId::new(i)).unwrap();
            let msg = Message {
                src: NodeId::new(i),
                dst: parent,
                phase: PhaseLabel::Convergecast,
                kind: SendKind::TreeEdge,
                payload: encode(&acc[i]),
            };
            if sim.send(&msg)? {
                let child_val = acc[i];
                fold(&mut acc[parent.index()], child_val);
                waiting_on[parent.index()] -= 1;
                reported[i] = true;
                outstanding -= 1;
            }
        }
        sim.end_round()?;
    }
    Ok(acc)
}

/// Push a per-root payload down every tree, level by level.
///
/// Returns the payload each node ends with; node `i` always receives the
/// value held by `root_of(i)`.
pub fn broadcast_down<T: Copy>(
    sim: &mut NetworkSim,
    f: &Forest,
    per_root: &BTreeMap<NodeId, T>,
    encode: impl Fn(&T) -> Payload,
) -> Result<Vec<T>> {
    check_inputs(sim, f, None)?;
    for &r in f.roots() {
        if !per_root.contains_key(&r) {
            return Err(Error::invalid(format!("payload missing for root {r}")));
        }
    }
    if per_root.len() != f.roots().len() {
        return Err(Error::invalid(
            "payload keyed by a non-root or duplicate root",
        ));
    }

    let n = f.n();
    let mut slot: Vec<Option<T>> = vec![None; n];
    let mut outstanding = n - f.roots().len();
    for &r in f.roots() {
        slot[r.index()] = Some(per_root[&r]);
    }

    while outstanding > 0 {
        sim.begin_round(PhaseLabel::Broadcast)?;
        let holders: Vec<usize> = (0..n).filter(|&i| slot[i].is_some()).collect();
        let mut landed: Vec<(usize, T)> = Vec::new();
        for i in holders {
            let value = slot[i].unwrap();
            for &c in f.children(NodeId::new(i)) {
                if slot[c.index()].is_some() {
                    continue;
                }
                let msg = Message {
                    src: NodeId::new(i),
                    dst: c,
                    phase: PhaseLabel::Broadcast,
                    kind: SendKind::TreeEdge,
                    payload: encode(&value),
                };
                if sim.send(&msg)? {
                    landed.push((c.index(), value));
                }
            }
        }
        for (i, v) in landed {
            if slot[i].is_none() {
                slot[i] = Some(v);
                outstanding -= 1;
            }
        }
        sim.end_round()?;
    }
    Ok(slot.into_iter().map(Option::unwrap).collect())
}

/// Broadcast each root's address through its tree; the refreshed
/// `node -> root` table this yields is what gossip forwarding relies on.
pub fn broadcast_root_addresses(sim: &mut NetworkSim, f: &Forest) -> Result<Vec<NodeId>> {
    let per_root: BTreeMap<NodeId, NodeId> = f.roots().iter().map(|&r| (r, r)).collect();
    broadcast_down(sim, f, &per_root, |r| Payload::new(&[Field::Id(*r)]))
}

/// CSV export of per-root max aggregates: `root_id,max`.
pub fn write_max_csv<W: Write>(out: &mut W, agg: &BTreeMap<NodeId, f64>) -> std::io::Result<()> {
    writeln!(out, "root_id,max")?;
    for (r, v) in agg {
        writeln!(out, "{r},{v}")?;
    }
    Ok(())
}

/// CSV export of per-root sum aggregates: `root_id,s,g`.
pub fn write_sum_csv<W: Write>(
    out: &mut W,
    agg: &BTreeMap<NodeId, SumPair>,
) -> std::io::Result<()> {
    writeln!(out, "root_id,s,g")?;
    for (r, p) in agg {
        writeln!(out, "{r},{},{}", p.sum, p.size)?;
    }
    Ok(())
}
