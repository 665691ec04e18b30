//! Round-synchronous simulator and library for gossip-based aggregate
//! computation over random-ranking forests.
//!
//! The pipeline has three phases: a ranking phase partitions the network
//! into a forest of small disjoint trees, a convergecast/broadcast phase
//! moves local aggregates between roots and their trees, and a gossip phase
//! brings the roots to consensus on the global aggregate. Every message and
//! round is metered per phase, and a uniform push-sum baseline is included
//! for complexity comparisons.

pub mod aggregation;
pub mod cli;
pub mod drr;
pub mod error;
pub mod gossip;
pub mod metrics;
pub mod protocols;
pub mod rng;
pub mod topology;
pub mod transport;

pub use error::{Error, Result};
