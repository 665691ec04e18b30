//! End-to-end protocol behavior at realistic sizes: correctness rates under
//! loss and the message-growth shape of the ranking phase.

use rayon::prelude::*;

use drr_gossip::metrics::{fit_growth, Regressor};
use drr_gossip::protocols::{drr_gossip_max, run_protocol, ProtocolConfig, ProtocolKind, TopologySpec};
use drr_gossip::rng::trial_seed;
use drr_gossip::transport::PhaseLabel;

#[test]
fn max_consensus_small_network_rate() {
    let trials = 500u64;
    let correct: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = ProtocolConfig::new(
                TopologySpec::Complete { n: 64 },
                trial_seed(0xE2E, t),
            );
            u64::from(drr_gossip_max(&cfg).unwrap().metrics.correct)
        })
        .sum();
    assert!(
        correct * 100 >= trials * 99,
        "only {correct}/{trials} runs matched the oracle"
    );
}

#[test]
fn max_correct_under_message_loss() {
    let trials = 200u64;
    let correct: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut cfg = ProtocolConfig::new(
                TopologySpec::Complete { n: 1024 },
                trial_seed(0xE2E + 1, t),
            );
            cfg.delta = 0.05;
            u64::from(drr_gossip_max(&cfg).unwrap().metrics.correct)
        })
        .sum();
    assert!(
        correct * 100 >= trials * 95,
        "correctness rate {correct}/{trials} under delta = 0.05"
    );
}

/// Mean ranking-phase messages grow like n log log n: the loglog regressor
/// explains the sweep at least as well as plain n.
#[test]
fn ranking_messages_track_n_loglog() {
    let sizes = [256usize, 1024, 4096, 16384];
    let trials = 30u64;
    let mut points = Vec::new();
    let mut per_node = Vec::new();
    for &n in &sizes {
        let total: u64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let cfg = ProtocolConfig::new(
                    TopologySpec::Complete { n },
                    trial_seed(0xE2E + n as u64, t),
                );
                let r = run_protocol(&cfg, ProtocolKind::DrrOnly).unwrap();
                r.metrics
                    .phases
                    .iter()
                    .filter(|p| p.phase == PhaseLabel::DrrProbe)
                    .map(|p| p.msgs_sent)
                    .sum::<u64>()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        per_node.push(mean / n as f64);
        points.push((n as f64, mean));
    }
    let loglog = fit_growth(&points, Regressor::NLog2Log2N).unwrap();
    let linear = fit_growth(&points, Regressor::N).unwrap();
    assert!(
        loglog.r2 >= linear.r2,
        "r2 loglog {} below r2 linear {}",
        loglog.r2,
        linear.r2
    );
    // Probe count per node grows, but slowly (loglog-fashion).
    assert!(per_node.windows(2).all(|w| w[1] > w[0]));
    assert!(per_node.last().unwrap() / per_node.first().unwrap() < 2.0);
}
