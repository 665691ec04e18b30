//! Acceptance suite: one test per release criterion, each printing a
//! single PASS line with its measured margins. Thresholds are pinned here,
//! not tuned at runtime.
//!
//! Run with `cargo test -p drr-gossip --test acceptance -- --nocapture`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use drr_gossip::aggregation::{broadcast_root_addresses, convergecast_max, convergecast_sum};
use drr_gossip::drr::{
    forest_stats, run_drr, run_local_drr, validate_forest, Forest, Rank,
};
use drr_gossip::gossip::{
    gossip_ave, gossip_max, track_push_sum_potential, GossipBudgets, SizePair,
};
use drr_gossip::metrics::{fit_growth, summarize, Regressor, RunMetrics};
use drr_gossip::protocols::{
    drr_gossip_ave, oracle_aggregate, uniform_push_sum, AggregateKind, ProtocolConfig,
    ProtocolKind, TopologySpec,
};
use drr_gossip::rng::{seeded_rng, trial_seed};
use drr_gossip::topology::{build_chord, build_d_regular, NodeId};
use drr_gossip::transport::NetworkSim;

use rand::Rng;

fn pass(criterion: u32, name: &str, detail: String) {
    println!("criterion {criterion} ({name}): PASS - {detail}");
}

/// Criterion 1: DRR forest structure at n in {256, 1024, 4096}, 200 trials
/// each: (a) every forest validates, (b) mean tree count within 10% of the
/// summation oracle, (c) max tree size <= C log2 n in >= 99% of trials.
///
/// C is the pilot-calibrated constant the criterion calls for. A 2000-trial
/// pilot (both this implementation and an independent minimal re-simulation
/// of the ranking rule) puts the 99th percentile of max tree size at
/// {8.9, 11.3, 13.7} x log2 n for the three sizes, so C = 16 holds the 99%
/// bar with margin everywhere; 12 sits at the ~97.3rd percentile at
/// n = 4096 and cannot pass.
const SIZE_CAP_CONSTANT: f64 = 16.0;

#[test]
fn criterion_1_forest_structure() {
    let trials = 200u64;
    let mut detail = Vec::new();
    for &n in &[256usize, 1024, 4096] {
        let budget = ((n as f64).log2().ceil() as i32) - 1;
        // Independent oracle: E[#roots] = sum_i (i/n)^budget.
        let oracle: f64 = (1..=n).map(|i| (i as f64 / n as f64).powi(budget)).sum();
        let size_cap = (SIZE_CAP_CONSTANT * (n as f64).log2()) as usize;

        let outcomes: Vec<(usize, usize)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(0xC1 + n as u64, t);
                let mut sim = NetworkSim::new(n, 0.0, seed).unwrap();
                let f = run_drr(&mut sim, n, &mut seeded_rng(seed ^ 1)).unwrap();
                assert!(validate_forest(&f).is_empty(), "n={n} trial {t} invalid");
                let stats = forest_stats(&f);
                (stats.tree_count, stats.max_size)
            })
            .collect();

        let mean = outcomes.iter().map(|o| o.0 as f64).sum::<f64>() / trials as f64;
        assert!(
            (mean - oracle).abs() <= 0.10 * oracle,
            "n={n}: mean tree count {mean} vs oracle {oracle}"
        );
        let within = outcomes.iter().filter(|o| o.1 <= size_cap).count() as u64;
        assert!(
            within * 100 >= trials * 99,
            "n={n}: only {within}/{trials} trials under the size cap {size_cap}"
        );
        detail.push(format!(
            "n={n}: mean trees {mean:.1} vs oracle {oracle:.1}, size cap {size_cap} ok {within}/{trials}"
        ));
    }
    pass(1, "forest structure", detail.join("; "));
}

/// Criterion 2: Local-DRR on a d-regular graph matches the exact expected
/// root count n/(d+1) within 5% over 200 trials.
#[test]
fn criterion_2_local_drr_expectation() {
    let (n, d, trials) = (1024usize, 8usize, 200u64);
    let expected = n as f64 / (d + 1) as f64;
    let total: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(0xC2, t);
            let g = build_d_regular(n, d, seed).unwrap();
            let mut sim = NetworkSim::new(n, 0.0, seed).unwrap();
            let f = run_local_drr(&mut sim, &g, &mut seeded_rng(seed ^ 2)).unwrap();
            f.roots().len()
        })
        .sum();
    let mean = total as f64 / trials as f64;
    assert!(
        (mean - expected).abs() <= 0.05 * expected,
        "mean root count {mean} vs exact expectation {expected}"
    );
    pass(
        2,
        "local-drr exact expectation",
        format!("mean roots {mean:.2} vs {expected:.2} (within 5%)"),
    );
}

/// Criterion 3: Local-DRR tree heights stay under 3 log2 n in >= 99% of
/// trials, on chord:10 and on dregular:1024,8.
#[test]
fn criterion_3_local_drr_height() {
    let trials = 200u64;
    let n = 1024usize;
    let cap = (3.0 * (n as f64).log2()) as usize;
    let mut detail = Vec::new();
    for topo in ["chord", "dregular"] {
        let within: u64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(0xC3, t);
                let g = match topo {
                    "chord" => build_chord(10).unwrap(),
                    _ => build_d_regular(n, 8, seed).unwrap(),
                };
                let mut sim = NetworkSim::new(n, 0.0, seed).unwrap();
                let f = run_local_drr(&mut sim, &g, &mut seeded_rng(seed ^ 3)).unwrap();
                u64::from(forest_stats(&f).max_height <= cap)
            })
            .sum();
        assert!(
            within * 100 >= trials * 99,
            "{topo}: only {within}/{trials} under height cap {cap}"
        );
        detail.push(format!("{topo}: {within}/{trials} under 3*log2(n) = {cap}"));
    }
    pass(3, "local-drr height", detail.join("; "));
}

/// Random forest of arbitrary shape: nodes sorted by rank, each non-root
/// parents to a uniformly chosen strictly-higher-ranked node.
fn random_forest(n: usize, rng: &mut impl Rng) -> Forest {
    let ranks: Vec<Rank> = (0..n)
        .map(|i| Rank {
            value: rng.gen::<f64>(),
            tiebreak: NodeId::new(i),
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ranks[a].cmp(&ranks[b]));
    let mut parent = vec![None; n];
    for (pos, &i) in order.iter().enumerate() {
        let higher = n - 1 - pos;
        if higher > 0 && rng.gen_bool(0.8) {
            let pick = order[pos + 1 + rng.gen_range(0..higher)];
            parent[i] = Some(NodeId::new(pick));
        }
    }
    Forest::from_raw_parts(ranks, parent)
}

/// Criterion 4: convergecast results equal the direct-scan oracle exactly
/// on 500 randomized small forests with integer values, including under
/// delta = 0.2 with retries; totals are always conserved.
#[test]
fn criterion_4_convergecast_exactness() {
    let mut rng = seeded_rng(0xC4);
    for case in 0..500u64 {
        let n = 1 + (case as usize % 64);
        let delta = if case % 2 == 0 { 0.0 } else { 0.2 };
        let f = random_forest(n, &mut rng);
        assert!(validate_forest(&f).is_empty());
        let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-100..100) as f64).collect();

        let mut sim = NetworkSim::new(n, delta, case).unwrap();
        let maxes = convergecast_max(&mut sim, &f, &vals).unwrap();
        let sums = convergecast_sum(&mut sim, &f, &vals).unwrap();

        let mut s_total = 0.0;
        let mut g_total = 0u64;
        for &r in f.roots() {
            let members: Vec<usize> =
                (0..n).filter(|&i| f.root_of(NodeId::new(i)) == r).collect();
            let oracle_max = members.iter().map(|&i| vals[i]).fold(f64::NEG_INFINITY, f64::max);
            let oracle_sum: f64 = members.iter().map(|&i| vals[i]).sum();
            assert_eq!(maxes[&r], oracle_max, "case {case}");
            assert_eq!(sums[&r].sum, oracle_sum, "case {case}");
            assert_eq!(sums[&r].size as usize, members.len(), "case {case}");
            s_total += sums[&r].sum;
            g_total += sums[&r].size;
        }
        assert_eq!(s_total, vals.iter().sum::<f64>(), "case {case}");
        assert_eq!(g_total, n as u64, "case {case}");
    }
    pass(
        4,
        "convergecast exactness",
        "500 randomized forests exact under delta in {0, 0.2}".into(),
    );
}

/// Criterion 5: push-sum mass conservation at every round boundary of the
/// full ave protocol, 100 trials at n = 256, delta = 0.
#[test]
fn criterion_5_push_sum_conservation() {
    let trials = 100u64;
    (0..trials).into_par_iter().for_each(|t| {
        let mut cfg = ProtocolConfig::new(
            TopologySpec::Complete { n: 256 },
            trial_seed(0xC5, t),
        );
        cfg.delta = 0.0;
        let r = drr_gossip_ave(&cfg).unwrap();
        let totals = r.ave_round_totals.expect("ave protocol carries totals");
        let s0 = totals[0].s;
        for (round, tot) in totals.iter().enumerate() {
            assert!(
                (tot.s - s0).abs() <= 1e-9 * s0.abs().max(1.0),
                "trial {t} round {round}: sum mass drifted"
            );
            assert!(
                (tot.g - 256.0).abs() <= 1e-9 * 256.0,
                "trial {t} round {round}: size mass drifted"
            );
        }
    });
    pass(
        5,
        "push-sum conservation",
        format!("{trials} trials, |dS|/S and |dG|/n <= 1e-9 at every boundary"),
    );
}

/// Phases I-III of the max pipeline, returning whether every root's gossip
/// estimate equals the oracle maximum.
fn max_consensus_trial(n: usize, delta: f64, seed: u64) -> bool {
    let mut sim = NetworkSim::new(n, delta, seed).unwrap();
    let mut rng = seeded_rng(seed ^ 0x6a);
    let f = run_drr(&mut sim, n, &mut rng).unwrap();
    broadcast_root_addresses(&mut sim, &f).unwrap();
    let vals: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let cov = convergecast_max(&mut sim, &f, &vals).unwrap();
    let budgets = GossipBudgets::derive(n, f.roots().len(), delta);
    let est = gossip_max(&mut sim, &f, &cov, &budgets).unwrap();
    let truth = oracle_aggregate(&vals, AggregateKind::Max).unwrap();
    est.values().all(|&v| v == truth)
}

/// Criterion 6: gossip-max consensus at n = 1024 with default budgets:
/// all roots hold the oracle max in >= 99% of trials at delta = 0 and
/// >= 95% at delta = 0.05.
#[test]
fn criterion_6_gossip_max_consensus() {
    let trials = 200u64;
    let mut detail = Vec::new();
    for (delta, needed) in [(0.0, 99u64), (0.05, 95u64)] {
        let ok: u64 = (0..trials)
            .into_par_iter()
            .map(|t| u64::from(max_consensus_trial(1024, delta, trial_seed(0xC6, t))))
            .sum();
        assert!(
            ok * 100 >= trials * needed,
            "delta {delta}: consensus in {ok}/{trials} trials, needed {needed}%"
        );
        detail.push(format!("delta {delta}: {ok}/{trials}"));
    }
    pass(6, "gossip-max consensus", detail.join("; "));
}

/// Criterion 7: gossip-ave accuracy at n = 1024, delta = 0, alpha = 1:
/// the largest root's relative error is <= 2/(n-1) after the default
/// ave_rounds in >= 95% of trials, and the end-to-end all-node error is
/// <= 1e-2 in >= 95% of trials.
#[test]
fn criterion_7_gossip_ave_accuracy() {
    let n = 1024usize;
    let trials = 200u64;
    let bound = 2.0 / (n as f64 - 1.0);

    let root_ok: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(0xC7, t);
            let mut sim = NetworkSim::new(n, 0.0, seed).unwrap();
            let mut rng = seeded_rng(seed ^ 0x7a);
            let f = run_drr(&mut sim, n, &mut rng).unwrap();
            broadcast_root_addresses(&mut sim, &f).unwrap();
            let vals: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let cov = convergecast_sum(&mut sim, &f, &vals).unwrap();
            let budgets = GossipBudgets::derive(n, f.roots().len(), 0.0);
            let init: BTreeMap<NodeId, (f64, f64)> = cov
                .iter()
                .map(|(&r, p)| (r, (p.sum, p.size as f64)))
                .collect();
            let out = gossip_ave(&mut sim, &f, &init, &budgets).unwrap();
            // The largest tree's root under the same total order the
            // protocol's size consensus uses.
            let z = cov
                .iter()
                .map(|(&r, p)| SizePair { size: p.size, root: r })
                .max()
                .unwrap()
                .root;
            let truth = oracle_aggregate(&vals, AggregateKind::Ave).unwrap();
            let err = (out.estimates[&z] - truth).abs() / truth.abs();
            u64::from(err <= bound)
        })
        .sum();
    assert!(
        root_ok * 100 >= trials * 95,
        "largest-root error under {bound:.2e} in only {root_ok}/{trials} trials"
    );

    let node_ok: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut cfg =
                ProtocolConfig::new(TopologySpec::Complete { n }, trial_seed(0xC7 + 1, t));
            cfg.delta = 0.0;
            cfg.error_tolerance = 1e-2;
            let r = drr_gossip_ave(&cfg).unwrap();
            u64::from(r.metrics.correct)
        })
        .sum();
    assert!(
        node_ok * 100 >= trials * 95,
        "all-node error under 1e-2 in only {node_ok}/{trials} trials"
    );
    pass(
        7,
        "gossip-ave accuracy",
        format!(
            "largest-root err <= {bound:.2e} in {root_ok}/{trials}; all-node err <= 1e-2 in {node_ok}/{trials}"
        ),
    );
}

/// Criterion 8: the push-sum potential starts at exactly m - 1 and its
/// empirical mean contraction ratio stays <= 0.55 in every round
/// (m = 64 roots, uniform sizes, delta = 0, 1000 trials).
#[test]
fn criterion_8_potential_contraction() {
    let m = 64usize;
    let rounds = 20usize;
    let trace = track_push_sum_potential(m, &[16; 64], 0.0, 1000, rounds, 0xC8).unwrap();
    assert_eq!(trace.phi0, (m - 1) as f64, "phi0 must be exactly m - 1");
    for (t, ratio) in trace.mean_ratios.iter().enumerate() {
        assert!(*ratio <= 0.55, "round {t}: mean contraction ratio {ratio}");
    }
    let worst = trace.mean_ratios.iter().cloned().fold(0.0f64, f64::max);
    pass(
        8,
        "potential contraction",
        format!("phi0 = {}, worst mean ratio {worst:.4} over {rounds} rounds", trace.phi0),
    );
}

fn sweep_runs(protocol: ProtocolKind, sizes: &[usize], trials: u64, tag: u64) -> Vec<RunMetrics> {
    let mut all = Vec::new();
    for &n in sizes {
        let runs: Vec<RunMetrics> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut cfg = ProtocolConfig::new(
                    TopologySpec::Complete { n },
                    trial_seed(tag ^ n as u64, t),
                );
                cfg.delta = 0.0;
                let r = match protocol {
                    ProtocolKind::DrrGossipAve => drr_gossip_ave(&cfg).unwrap(),
                    ProtocolKind::UniformPushSum => uniform_push_sum(&cfg).unwrap(),
                    _ => unreachable!(),
                };
                r.metrics
            })
            .collect();
        all.extend(runs);
    }
    all
}

/// Criterion 9: complexity separation over n in {2^8, 2^10, 2^12, 2^14},
/// 50 trials each at delta = 0: (a) total rounds / log2 n stays in a band
/// with max/min <= 2, (b) messages fit n log2 log2 n better than
/// n log2 n by r^2, (c) the baseline/DRR message ratio strictly grows.
#[test]
fn criterion_9_complexity_separation() {
    let sizes = [256usize, 1024, 4096, 16384];
    let trials = 50u64;
    let drr = sweep_runs(ProtocolKind::DrrGossipAve, &sizes, trials, 0xC9);
    let base = sweep_runs(ProtocolKind::UniformPushSum, &sizes, trials, 0xC9 ^ 0xff);

    let drr_rows = summarize(&drr).unwrap();
    let base_rows = summarize(&base).unwrap();

    // (a) fixed band for rounds / log2 n.
    let ratios: Vec<f64> = drr_rows.iter().map(|r| r.rounds_per_log.unwrap()).collect();
    let (lo, hi) = (
        ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        ratios.iter().cloned().fold(0.0f64, f64::max),
    );
    assert!(hi / lo <= 2.0, "rounds/log2n band [{lo}, {hi}] too wide");

    // (b) r^2 model comparison on mean messages.
    let points: Vec<(f64, f64)> = drr_rows
        .iter()
        .map(|r| (r.n as f64, r.msgs_mean))
        .collect();
    let loglog = fit_growth(&points, Regressor::NLog2Log2N).unwrap();
    let log = fit_growth(&points, Regressor::NLog2N).unwrap();
    assert!(
        loglog.r2 > log.r2,
        "r2(n loglog n) = {} not above r2(n log n) = {}",
        loglog.r2,
        log.r2
    );

    // (c) strictly increasing baseline/DRR message ratio.
    let mut prev = 0.0;
    let mut ratios_c = Vec::new();
    for (d, b) in drr_rows.iter().zip(&base_rows) {
        assert_eq!(d.n, b.n);
        let ratio = b.msgs_mean / d.msgs_mean;
        assert!(
            ratio > prev,
            "baseline/DRR ratio not increasing at n = {}: {ratio} after {prev}",
            d.n
        );
        prev = ratio;
        ratios_c.push(format!("n={}: {ratio:.3}", d.n));
    }
    pass(
        9,
        "complexity separation",
        format!(
            "rounds/log2n in [{lo:.2}, {hi:.2}]; r2 loglog {:.6} > log {:.6}; ratios {}",
            loglog.r2,
            log.r2,
            ratios_c.join(", ")
        ),
    );
}

/// Criterion 10: on chord rings with b in {8, 10, 12}, the ave protocol's
/// total rounds fit (log2 n)^e with e in [1.5, 2.5].
#[test]
fn criterion_10_chord_scaling() {
    let bits = [8u32, 10, 12];
    let trials = 50u64;
    let mut points = Vec::new();
    for &b in &bits {
        let total: u64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let cfg = ProtocolConfig::new(
                    TopologySpec::Chord { bits: b },
                    trial_seed(0xCA ^ b as u64, t),
                );
                drr_gossip_ave(&cfg).unwrap().metrics.total_rounds
            })
            .sum();
        let mean = total as f64 / trials as f64;
        points.push((b as f64, mean));
    }
    // Fit log(rounds) = e * log(log2 n) + c by least squares.
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xb = xs.iter().sum::<f64>() / xs.len() as f64;
    let yb = ys.iter().sum::<f64>() / ys.len() as f64;
    let e = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xb) * (y - yb))
        .sum::<f64>()
        / xs.iter().map(|x| (x - xb).powi(2)).sum::<f64>();
    assert!(
        (1.5..=2.5).contains(&e),
        "fitted round-growth exponent {e} outside [1.5, 2.5]"
    );
    pass(
        10,
        "chord scaling",
        format!(
            "mean rounds {:?}, fitted exponent {e:.2}",
            points.iter().map(|p| p.1.round()).collect::<Vec<_>>()
        ),
    );
}

/// Criterion 11: a fixed experiment spec run twice produces byte-identical
/// metrics output with timestamps suppressed.
#[test]
fn criterion_11_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.jsonl");
    let out_b = dir.path().join("b.jsonl");
    for out in [&out_a, &out_b] {
        let code = drr_gossip::cli::main_with_args([
            "drr-gossip",
            "run",
            "--protocol",
            "drr-gossip-ave",
            "--topology",
            "complete:256",
            "--trials",
            "5",
            "--seed",
            "42",
            "--delta",
            "0.1",
            "--jobs",
            "2",
            "--no-timestamp",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "reruns differ byte-for-byte");
    pass(
        11,
        "determinism",
        format!("two runs, {} bytes, byte-identical", a.len()),
    );
}
