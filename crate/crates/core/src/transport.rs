//! The round-synchronous random phone-call fabric: one initiation per node
//! per round, per-message loss with probability `delta`, and per-phase
//! round/message meters that every protocol phase charges through.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use crate::topology::NodeId;

/// Metered protocol phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    DrrProbe,
    DrrConnect,
    Convergecast,
    Broadcast,
    GossipMax,
    GossipSample,
    GossipAve,
    DataSpread,
    Baseline,
}

impl PhaseLabel {
    pub const ALL: [PhaseLabel; 9] = [
        PhaseLabel::DrrProbe,
        PhaseLabel::DrrConnect,
        PhaseLabel::Convergecast,
        PhaseLabel::Broadcast,
        PhaseLabel::GossipMax,
        PhaseLabel::GossipSample,
        PhaseLabel::GossipAve,
        PhaseLabel::DataSpread,
        PhaseLabel::Baseline,
    ];

    fn index(self) -> usize {
        Self::ALL.iter().position(|&p| p == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            PhaseLabel::DrrProbe => "drr_probe",
            PhaseLabel::DrrConnect => "drr_connect",
            PhaseLabel::Convergecast => "convergecast",
            PhaseLabel::Broadcast => "broadcast",
            PhaseLabel::GossipMax => "gossip_max",
            PhaseLabel::GossipSample => "gossip_sample",
            PhaseLabel::GossipAve => "gossip_ave",
            PhaseLabel::DataSpread => "data_spread",
            PhaseLabel::Baseline => "baseline",
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One scalar payload field. The model limits message length to
/// `O(log n + log s)`; its executable form is a cap on how many of these
/// fields a message may carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Id(NodeId),
    Rank(f64),
    Value(f64),
    Count(u64),
}

pub const PAYLOAD_CAPACITY: usize = 8;

/// Fixed-capacity field record so hot loops never allocate per message.
#[derive(Debug, Clone, Copy)]
pub struct Payload {
    fields: [Field; PAYLOAD_CAPACITY],
    len: u8,
}

impl Payload {
    pub fn new(fields: &[Field]) -> Self {
        assert!(fields.len() <= PAYLOAD_CAPACITY, "payload capacity exceeded");
        let mut buf = [Field::Count(0); PAYLOAD_CAPACITY];
        buf[..fields.len()].copy_from_slice(fields);
        Payload {
            fields: buf,
            len: fields.len() as u8,
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields[..self.len as usize]
    }
}

/// How a message relates to the one-call-per-round rule.
///
/// Only fresh call initiations are limited; replies within an established
/// call, traffic along already-established tree links, and forwards relayed
/// toward a known root are exempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SendKind {
    /// A fresh call; at most one per node per round.
    Initiation,
    /// Parent/child traffic over a link built in the ranking phase.
    TreeEdge,
    /// Relay of a received gossip message toward the relay's root.
    Forward,
    /// Direct answer to a message received this round.
    Reply,
}

#[derive(Debug, Clone, Copy)]
pub struct Message {
    pub src: NodeId,
    pub dst: NodeId,
    pub phase: PhaseLabel,
    pub kind: SendKind,
    pub payload: Payload,
}

/// Per-phase complexity counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseMeter {
    pub rounds: u64,
    pub messages_sent: u64,
    pub messages_delivered: u64,
}

/// Immutable copy of every phase meter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsSnapshot {
    phases: [PhaseMeter; PhaseLabel::ALL.len()],
}

impl MetricsSnapshot {
    pub fn phase(&self, p: PhaseLabel) -> PhaseMeter {
        self.phases[p.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (PhaseLabel, PhaseMeter)> + '_ {
        PhaseLabel::ALL.iter().map(|&p| (p, self.phases[p.index()]))
    }

    pub fn total_rounds(&self) -> u64 {
        self.phases.iter().map(|m| m.rounds).sum()
    }

    pub fn total_sent(&self) -> u64 {
        self.phases.iter().map(|m| m.messages_sent).sum()
    }

    pub fn total_delivered(&self) -> u64 {
        self.phases.iter().map(|m| m.messages_delivered).sum()
    }
}

/// Outcome of a two-hop send toward the root owning a uniformly drawn node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoHopOutcome {
    pub delivered_to_root: bool,
    pub root: NodeId,
}

struct OpenRound {
    phase: PhaseLabel,
}

/// The round clock, failure injector, and complexity ledger for one trial.
///
/// Single-threaded by design; distinct trials own distinct sims.
pub struct NetworkSim {
    n: usize,
    delta: f64,
    rng: ChaCha8Rng,
    meters: [PhaseMeter; PhaseLabel::ALL.len()],
    round: u64,
    payload_field_limit: usize,
    forward_batching: bool,
    open: Option<OpenRound>,
    /// Epoch stamps marking which nodes already initiated a call this round.
    initiated: Vec<u64>,
    epoch: u64,
    /// Independent tally of every message charge, for the ledger audit.
    audit_charges: u64,
}

pub const DEFAULT_PAYLOAD_FIELD_LIMIT: usize = 4;

impl NetworkSim {
    pub fn new(n: usize, delta: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("simulator needs n >= 1"));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::invalid(format!(
                "delta must lie in [0, 1), got {delta}"
            )));
        }
        Ok(NetworkSim {
            n,
            delta,
            rng: seeded_rng(seed),
            meters: Default::default(),
            round: 0,
            payload_field_limit: DEFAULT_PAYLOAD_FIELD_LIMIT,
            forward_batching: true,
            open: None,
            initiated: vec![0; n],
            epoch: 0,
            audit_charges: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Global round counter; monotone non-decreasing.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn payload_field_limit(&self) -> usize {
        self.payload_field_limit
    }

    pub fn set_payload_field_limit(&mut self, limit: usize) {
        self.payload_field_limit = limit.min(PAYLOAD_CAPACITY);
    }

    pub fn forward_batching(&self) -> bool {
        self.forward_batching
    }

    /// When off, a relay forwards each received gossip message separately
    /// instead of one combined message; used for sensitivity analysis.
    pub fn set_forward_batching(&mut self, on: bool) {
        self.forward_batching = on;
    }

    /// Open a metered round for `phase`.
    pub fn begin_round(&mut self, phase: PhaseLabel) -> Result<()> {
        if let Some(open) = &self.open {
            return Err(Error::Usage(format!(
                "begin_round({phase}) while a {} round is open",
                open.phase
            )));
        }
        self.round += 1;
        self.epoch += 1;
        self.meters[phase.index()].rounds += 1;
        self.open = Some(OpenRound { phase });
        Ok(())
    }

    pub fn end_round(&mut self) -> Result<()> {
        if self.open.take().is_none() {
            return Err(Error::Usage("end_round without an open round".into()));
        }
        Ok(())
    }

    fn open_phase(&self) -> Result<PhaseLabel> {
        self.open
            .as_ref()
            .map(|o| o.phase)
            .ok_or_else(|| Error::Usage("send outside an open round".into()))
    }

    /// Charge and deliver one message.
    ///
    /// Returns whether the message survived the lossy link. Initiations are
    /// checked against the one-call-per-round rule; payloads against the
    /// field limit.
    pub fn send(&mut self, msg: &Message) -> Result<bool> {
        let phase = self.open_phase()?;
        if msg.phase != phase {
            return Err(Error::Usage(format!(
                "message tagged {} sent during a {} round",
                msg.phase, phase
            )));
        }
        if msg.payload.len() > self.payload_field_limit {
            return Err(Error::ModelViolation(format!(
                "payload of {} fields exceeds the {}-field limit",
                msg.payload.len(),
                self.payload_field_limit
            )));
        }
        if msg.kind == SendKind::Initiation {
            let slot = &mut self.initiated[msg.src.index()];
            if *slot == self.epoch {
                return Err(Error::ModelViolation(format!(
                    "node {} initiated two calls in one round",
                    msg.src
                )));
            }
            *slot = self.epoch;
        }
        self.meters[phase.index()].messages_sent += 1;
        self.audit_charges += 1;
        let delivered = self.deliver();
        if delivered {
            self.meters[phase.index()].messages_delivered += 1;
        }
        Ok(delivered)
    }

    /// One gossip initiation toward the root that owns `target`.
    ///
    /// A root target costs one message; a non-root target costs two (the
    /// initial call plus the relay's forward), each dropped independently,
    /// so end-to-end success probability is `(1 - delta)^2`.
    pub fn two_hop_root_send(
        &mut self,
        src: NodeId,
        target: NodeId,
        root_of: &[NodeId],
        payload: Payload,
    ) -> Result<TwoHopOutcome> {
        let phase = self.open_phase()?;
        let root = root_of[target.index()];
        let first = self.send(&Message {
            src,
            dst: target,
            phase,
            kind: SendKind::Initiation,
            payload,
        })?;
        if target == root {
            return Ok(TwoHopOutcome {
                delivered_to_root: first,
                root,
            });
        }
        let second = self.send(&Message {
            src: target,
            dst: root,
            phase,
            kind: SendKind::Forward,
            payload,
        })?;
        Ok(TwoHopOutcome {
            delivered_to_root: first && second,
            root,
        })
    }

    /// Charge a reliable simultaneous neighbor exchange (sparse-graph model),
    /// where each node may talk to all neighbors in one round.
    pub fn charge_neighbor_exchange(&mut self, messages: u64) -> Result<()> {
        let phase = self.open_phase()?;
        let meter = &mut self.meters[phase.index()];
        meter.messages_sent += messages;
        meter.messages_delivered += messages;
        self.audit_charges += messages;
        Ok(())
    }

    /// Stretch the open round by `extra` model rounds.
    ///
    /// Routed gossip on sparse graphs spends several lockstep rounds per
    /// gossip round (one per routing hop); this keeps the clock honest.
    pub fn charge_extra_rounds(&mut self, extra: u64) -> Result<()> {
        let phase = self.open_phase()?;
        self.meters[phase.index()].rounds += extra;
        self.round += extra;
        Ok(())
    }

    /// Uniform draw over all `n` nodes from the sim's stream.
    pub fn draw_node(&mut self) -> NodeId {
        NodeId(self.rng.gen_range(0..self.n as u32))
    }

    /// Uniform draw over `V \ {exclude}`.
    pub fn draw_other_node(&mut self, exclude: NodeId) -> NodeId {
        debug_assert!(self.n >= 2);
        let raw = self.rng.gen_range(0..(self.n - 1) as u32);
        NodeId(if raw >= exclude.0 { raw + 1 } else { raw })
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn deliver(&mut self) -> bool {
        if self.delta == 0.0 {
            true
        } else {
            self.rng.gen_bool(1.0 - self.delta)
        }
    }

    pub fn snapshot_metrics(&self) -> MetricsSnapshot {
        MetricsSnapshot {
            phases: self.meters,
        }
    }

    /// Cross-check the meters against the independent charge tally.
    pub fn audit_ledger(&self) -> Result<()> {
        let total: u64 = self.meters.iter().map(|m| m.messages_sent).sum();
        if total != self.audit_charges {
            return Err(Error::ModelViolation(format!(
                "meter ledger mismatch: {total} metered sends vs {} charges",
                self.audit_charges
            )));
        }
        Ok(())
    }

    /// Test hook: desynchronize the audit tally so `audit_ledger` trips.
    #[doc(hidden)]
    pub fn debug_corrupt_audit(&mut self) {
        self.audit_charges += 1;
    }
}
