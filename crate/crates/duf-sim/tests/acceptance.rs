//! Acceptance suite: one test per release gate, each printing a PASS line
//! with the measured numbers (run with `--nocapture` to see them).
//!
//! The gates pin down: cross-engine equivalence on random and exhaustive
//! inputs, the sub-linear per-round cycle trend over code distance, the
//! iteration distribution at the default operating point, cycle growth in
//! noise strength and in weight resolution, logical-rate suppression with
//! distance plus a coarse threshold crossover, and the zero-noise /
//! determinism trivia.

use duf_sim::correction::{check_annihilation, forest_from_parents, peel};
use duf_sim::distributed::{run_staged, run_synchronous};
use duf_sim::experiment::{
    rows_to_csv, run_experiment, run_experiment_sequential, sweep, ExperimentConfig, Mode,
    NoiseSpec, SweepRow,
};
use duf_sim::graph::{DecodingGraph, GraphConfig};
use duf_sim::noise::{syndrome_from_errors, ErrorPattern};
use duf_sim::serial::decode_serial;

const TRIALS: u64 = 10_000;

fn uniform(d: u32, p: f64, trials: u64, mode: Mode) -> ExperimentConfig {
    ExperimentConfig::uniform(d, p, trials, 0xACCE97, mode)
}

/// Gate 1: serial, staged and synchronous decoders produce identical
/// partitions and growth-iteration counts over 10^4 random trials for each
/// (d, p) in {3,5,7,9} x {0.001, 0.005, 0.02}.
#[test]
fn equivalence_across_engines() {
    for d in [3u32, 5, 7, 9] {
        for p in [0.001, 0.005, 0.02] {
            let cfg = uniform(d, p, TRIALS, Mode::Verify);
            let stats = run_experiment(&cfg)
                .unwrap_or_else(|e| panic!("equivalence broken at d={d} p={p}: {e}"));
            assert_eq!(stats.equivalence_mismatches, 0);
            assert_eq!(stats.trials, TRIALS);
        }
    }
    println!(
        "PASS equivalence: serial/staged/sync identical over {} trials x 12 configs (d in 3..9, p in 0.001..0.02)",
        TRIALS
    );
}

/// Gate 2: exhaustive small-instance oracle. Every error pattern with at
/// most two flipped edges on the d=3, two-round graph decodes to a
/// correction that annihilates its syndrome, in every engine, with
/// partitions matching the serial reference.
#[test]
fn exhaustive_small_patterns() {
    let graph = DecodingGraph::build(GraphConfig::unweighted(3, 2)).unwrap();
    let m = graph.edge_count() as u32;
    let mut patterns: Vec<Vec<u32>> = vec![vec![]];
    patterns.extend((0..m).map(|e| vec![e]));
    for a in 0..m {
        for b in a + 1..m {
            patterns.push(vec![a, b]);
        }
    }
    assert_eq!(patterns.len(), 1 + 22 + 231);
    for flipped in &patterns {
        let pattern = ErrorPattern {
            flipped: flipped.clone(),
            probs: None,
        };
        let syndrome = syndrome_from_errors(&graph, &pattern);
        let serial = decode_serial(&graph, &syndrome).unwrap();
        assert!(
            check_annihilation(&graph, &pattern.flipped, &serial.correction),
            "serial correction failed on {flipped:?}"
        );
        let staged = run_staged(&graph, &syndrome, 1).unwrap();
        let sync = run_synchronous(&graph, &syndrome).unwrap();
        assert_eq!(staged.partition, serial.partition, "staged on {flipped:?}");
        assert_eq!(sync.partition, serial.partition, "sync on {flipped:?}");
        assert_eq!(staged.growth_iterations, serial.growth_iterations);
        assert_eq!(sync.growth_iterations, serial.growth_iterations);
        for parents in [&staged.parents, &sync.parents] {
            let forest = forest_from_parents(&graph, parents).unwrap();
            let corr = peel(&graph, &forest, &syndrome).unwrap();
            assert!(check_annihilation(&graph, &pattern.flipped, &corr.edges));
        }
    }
    println!(
        "PASS exhaustive: all {} patterns with <= 2 flipped edges at d=3, rounds=2 decode cleanly in every engine",
        patterns.len()
    );
}

/// Gate 3: simulated cycles per measurement round strictly decrease with
/// the code distance at p = 0.001 (d in {5, 9, 13, 17, 21}).
#[test]
fn per_round_cycles_decrease_with_distance() {
    let configs: Vec<ExperimentConfig> = [5u32, 9, 13, 17, 21]
        .iter()
        .map(|&d| uniform(d, 0.001, TRIALS, Mode::Sync))
        .collect();
    let rows: Vec<SweepRow> = sweep(&configs).unwrap();
    let per_round: Vec<f64> = rows
        .iter()
        .map(|r| r.mean_cycles / r.rounds as f64)
        .collect();
    for w in per_round.windows(2) {
        assert!(
            w[1] < w[0],
            "cycles per round must decrease with d, got {per_round:?}"
        );
    }
    println!(
        "PASS scaling: mean cycles per round strictly decreasing over d=5..21: {:?}",
        per_round
            .iter()
            .map(|x| (x * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
}

/// Gate 4: at d = 13, p = 0.001 at least 85% of trials finish within two
/// growth iterations.
#[test]
fn iteration_distribution_d13() {
    let stats = run_experiment(&uniform(13, 0.001, TRIALS, Mode::Sync)).unwrap();
    let frac = stats.iterations_at_most(2);
    assert!(
        (0.85..=1.0).contains(&frac),
        "fraction with <= 2 iterations out of range: {frac}"
    );
    println!(
        "PASS iterations: {:.4} of d=13 trials needed at most two growth iterations",
        frac
    );
}

/// Gate 5: mean cycles strictly increase with the physical error rate
/// (d = 13, p in {0.0005, 0.001, 0.002}).
#[test]
fn cycles_increase_with_noise() {
    let means: Vec<f64> = [0.0005, 0.001, 0.002]
        .iter()
        .map(|&p| {
            run_experiment(&uniform(13, p, TRIALS, Mode::Sync))
                .unwrap()
                .cycles
                .unwrap()
                .mean
        })
        .collect();
    assert!(
        means[0] < means[1] && means[1] < means[2],
        "means must increase with p, got {means:?}"
    );
    println!(
        "PASS noise: mean cycles increase with p: {:?}",
        means
            .iter()
            .map(|x| (x * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    );
}

/// Gate 6: with per-edge probabilities from Normal(0.001, 0.0005), mean
/// cycles are nondecreasing in the weight resolution w_max in {2,4,8,16}.
#[test]
fn weighted_cycles_nondecreasing_wmax() {
    let means: Vec<f64> = [2u32, 4, 8, 16]
        .iter()
        .map(|&w_max| {
            let cfg = ExperimentConfig {
                d: 13,
                rounds: 13,
                noise: NoiseSpec::Weighted {
                    mean: 0.001,
                    stddev: 0.0005,
                    w_max,
                },
                trials: TRIALS,
                seed: 0xACCE97,
                mode: Mode::Sync,
                clock_ns: 10.0,
            };
            run_experiment(&cfg).unwrap().cycles.unwrap().mean
        })
        .collect();
    for w in means.windows(2) {
        assert!(
            w[1] >= w[0],
            "means must not decrease with w_max, got {means:?}"
        );
    }
    println!(
        "PASS weighted: mean cycles nondecreasing over w_max 2,4,8,16: {:?}",
        means
            .iter()
            .map(|x| (x * 100.0).round() / 100.0)
            .collect::<Vec<_>>()
    );
}

/// Gate 7: decoder quality sanity. The logical failure rate at p = 0.005 is
/// strictly decreasing over d in {3,5,7} (10^5 trials), and the d=3 vs d=7
/// crossover over p in {0.01..0.04} lands inside [0.015, 0.04].
#[test]
fn logical_rate_suppression_and_crossover() {
    let trials = 100_000u64;
    let rates: Vec<f64> = [3u32, 5, 7]
        .iter()
        .map(|&d| {
            run_experiment(&uniform(d, 0.005, trials, Mode::Serial))
                .unwrap()
                .logical_rate()
        })
        .collect();
    assert!(
        rates[0] > rates[1] && rates[1] > rates[2],
        "suppression with distance failed: {rates:?}"
    );

    let grid: Vec<f64> = vec![0.01, 0.015, 0.02, 0.025, 0.03, 0.035, 0.04];
    let rate = |d: u32, p: f64| {
        run_experiment(&uniform(d, p, trials, Mode::Serial))
            .unwrap()
            .logical_rate()
    };
    let r3: Vec<f64> = grid.iter().map(|&p| rate(3, p)).collect();
    let r7: Vec<f64> = grid.iter().map(|&p| rate(7, p)).collect();
    assert!(r3[0] > r7[0], "d=3 must fail more than d=7 below threshold");
    let crossover = grid
        .iter()
        .zip(r3.iter().zip(&r7))
        .find(|(_, (a, b))| b >= a)
        .map(|(&p, _)| p)
        .expect("no crossover found up to p = 0.04");
    assert!(
        (0.015..=0.04).contains(&crossover),
        "crossover at {crossover} outside [0.015, 0.04]"
    );
    println!(
        "PASS quality: rates at p=0.005 {:?}; d3/d7 crossover at p={}",
        rates, crossover
    );
}

/// Gate 8: zero noise means zero defects, zero iterations, zero failures
/// and a constant terminate handshake; identical seeds give byte-identical
/// reports no matter the worker count.
#[test]
fn zero_noise_and_worker_determinism() {
    let mut handshake = None;
    for d in [5u32, 9] {
        let stats = run_experiment(&uniform(d, 0.0, 2_000, Mode::Sync)).unwrap();
        assert_eq!(stats.logical_failures, 0);
        assert_eq!(
            stats.growth_iterations,
            std::collections::BTreeMap::from([(0u32, 2_000u64)])
        );
        let cycles = stats.cycles.unwrap();
        assert_eq!(
            cycles.histogram.len(),
            1,
            "terminate handshake must cost the same in every trial"
        );
        let cost = *cycles.histogram.keys().next().unwrap();
        match handshake {
            None => handshake = Some(cost),
            Some(h) => assert_eq!(h, cost, "handshake must not depend on d"),
        }
    }

    let configs = [
        uniform(5, 0.005, 2_000, Mode::Sync),
        uniform(7, 0.001, 2_000, Mode::Verify),
    ];
    let parallel = rows_to_csv(&sweep(&configs).unwrap());
    let sequential_rows: Vec<SweepRow> = configs
        .iter()
        .map(|cfg| {
            let stats = run_experiment_sequential(cfg).unwrap();
            SweepRow::from_stats(cfg, &stats)
        })
        .collect();
    assert_eq!(parallel, rows_to_csv(&sequential_rows));
    println!(
        "PASS trivia: p=0 handshake constant at {} cycles; 1-worker and N-worker reports byte-identical",
        handshake.unwrap()
    );
}
