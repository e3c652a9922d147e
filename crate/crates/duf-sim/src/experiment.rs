//! Experiment harness: seeded trial batches, statistics and sweeps.
//!
//! Per trial: sample an error pattern, derive the syndrome, decode in the
//! requested mode, peel a correction, then score annihilation and logical
//! failure. `verify` mode decodes with all three engines and compares their
//! partitions and growth-iteration counts. Any annihilation failure or
//! cross-engine mismatch aborts the run with the offending trial index.
//!
//! Trials draw from per-trial RNG streams and the reduction is ordered by
//! trial index, so a report is byte-identical no matter how many workers
//! ran it (the `parallel` feature only changes wall-clock time).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::correction::{self, CorrectionPattern};
use crate::distributed::{run_staged, run_synchronous};
use crate::error::{Error, TrialFailure};
use crate::graph::{quantized_weights, DecodingGraph, EdgeIndex, GraphConfig, WeightMode};
use crate::noise::{
    batch_rng, sample_edge_probabilities, sample_errors, sample_errors_weighted,
    syndrome_from_errors, trial_rng, ErrorPattern, Syndrome,
};
use crate::serial::decode_serial;

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_CLOCK_NS: f64 = 10.0;
pub const DEFAULT_P: f64 = 0.001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Serial,
    Staged,
    Sync,
    Verify,
}

impl Mode {
    /// Modes whose result carries a cycle count.
    pub fn has_cycles(self) -> bool {
        matches!(self, Mode::Sync | Mode::Verify)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Serial => "serial",
            Mode::Staged => "staged",
            Mode::Sync => "sync",
            Mode::Verify => "verify",
        };
        f.write_str(s)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "serial" => Ok(Mode::Serial),
            "staged" => Ok(Mode::Staged),
            "sync" => Ok(Mode::Sync),
            "verify" => Ok(Mode::Verify),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode `{other}` (expected serial|staged|sync|verify)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseSpec {
    /// Every edge flips with the same probability.
    Uniform { p: f64 },
    /// Per-edge probabilities drawn once per experiment from
    /// `Normal(mean, stddev)` truncated to (0, 0.5); edge weights follow by
    /// log-proportional quantization into `[2, w_max]`.
    Weighted { mean: f64, stddev: f64, w_max: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d: u32,
    pub rounds: u32,
    pub noise: NoiseSpec,
    pub trials: u64,
    pub seed: u64,
    pub mode: Mode,
    pub clock_ns: f64,
}

impl ExperimentConfig {
    pub fn uniform(d: u32, p: f64, trials: u64, seed: u64, mode: Mode) -> Self {
        ExperimentConfig {
            d,
            rounds: d,
            noise: NoiseSpec::Uniform { p },
            trials,
            seed,
            mode,
            clock_ns: DEFAULT_CLOCK_NS,
        }
    }

    /// The probability the report's `p` column shows (the mean in weighted
    /// mode).
    pub fn p_label(&self) -> f64 {
        match self.noise {
            NoiseSpec::Uniform { p } => p,
            NoiseSpec::Weighted { mean, .. } => mean,
        }
    }

    pub fn graph_config(&self) -> GraphConfig {
        let weight_mode = match self.noise {
            NoiseSpec::Uniform { .. } => WeightMode::Unweighted,
            NoiseSpec::Weighted { w_max, .. } => WeightMode::Weighted { w_max },
        };
        GraphConfig {
            d: self.d,
            rounds: self.rounds,
            weight_mode,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.graph_config().validate()?;
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if let NoiseSpec::Uniform { p } = self.noise {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "p must lie in [0, 1], got {p}"
                )));
            }
        }
        if !self.clock_ns.is_finite() || self.clock_ns <= 0.0 {
            return Err(Error::InvalidParameter("clock_ns must be positive".into()));
        }
        Ok(())
    }
}

/// Cycle statistics of a batch (synchronous mode only). Percentiles use the
/// nearest-rank convention on the sorted sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub mean: f64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub p999: u64,
    pub p9999: u64,
    pub histogram: BTreeMap<u64, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: u64,
    pub cycles: Option<CycleStats>,
    /// growth iterations -> trial count
    pub growth_iterations: BTreeMap<u32, u64>,
    /// mean cycles x clock period / rounds; `None` without cycle data.
    pub ns_per_round: Option<f64>,
    pub logical_failures: u64,
    pub equivalence_mismatches: u64,
}

impl TrialStats {
    pub fn logical_rate(&self) -> f64 {
        self.logical_failures as f64 / self.trials as f64
    }

    /// Fraction of trials that needed at most `k` growth iterations.
    pub fn iterations_at_most(&self, k: u32) -> f64 {
        let hits: u64 = self
            .growth_iterations
            .iter()
            .filter(|(&i, _)| i <= k)
            .map(|(_, &c)| c)
            .sum();
        hits as f64 / self.trials as f64
    }
}

/// Everything one trial contributes to the aggregate.
#[derive(Clone, Debug)]
struct TrialOutcome {
    cycles: Option<u64>,
    iterations: u32,
    logical_failure: bool,
    failure: Option<TrialFailure>,
}

/// Per-trial record for the JSON-lines log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialLine {
    pub trial: u64,
    pub defects: Vec<u32>,
    pub flipped: Vec<EdgeIndex>,
}

/// Graph plus (in weighted mode) the per-edge probabilities of the batch.
pub struct Workspace {
    pub graph: DecodingGraph,
    pub probs: Option<Arc<[f64]>>,
}

/// Build the graph for a config and, in weighted mode, draw the batch's
/// edge probabilities (RNG stream 0) and assign the quantized weights.
pub fn prepare_workspace(cfg: &ExperimentConfig) -> Result<Workspace, Error> {
    cfg.validate()?;
    let mut graph = DecodingGraph::build(cfg.graph_config())?;
    let probs = match cfg.noise {
        NoiseSpec::Uniform { .. } => None,
        NoiseSpec::Weighted {
            mean,
            stddev,
            w_max,
        } => {
            let mut rng = batch_rng(cfg.seed);
            let probs = sample_edge_probabilities(&graph, mean, stddev, &mut rng)?;
            let weights = quantized_weights(&probs, w_max)?;
            graph.set_weights(&weights)?;
            Some(Arc::from(probs.into_boxed_slice()))
        }
    };
    Ok(Workspace { graph, probs })
}

fn sample_trial(
    ws: &Workspace,
    cfg: &ExperimentConfig,
    trial: u64,
) -> (ErrorPattern, Syndrome, u64) {
    let mut rng = trial_rng(cfg.seed, trial);
    let pattern = match (&cfg.noise, &ws.probs) {
        (NoiseSpec::Uniform { p }, _) => sample_errors(&ws.graph, *p, &mut rng),
        (NoiseSpec::Weighted { .. }, Some(probs)) => {
            sample_errors_weighted(&ws.graph, probs, &mut rng)
        }
        (NoiseSpec::Weighted { .. }, None) => unreachable!("weighted workspace carries probs"),
    };
    let syndrome = syndrome_from_errors(&ws.graph, &pattern);
    let schedule_seed: u64 = rng.gen();
    (pattern, syndrome, schedule_seed)
}

fn score(
    graph: &DecodingGraph,
    pattern: &ErrorPattern,
    correction: &[EdgeIndex],
) -> Result<bool, TrialFailure> {
    if !correction::check_annihilation(graph, &pattern.flipped, correction) {
        return Err(TrialFailure::Annihilation);
    }
    correction::check_logical_failure(graph, &pattern.flipped, correction)
        .map_err(|e| TrialFailure::Decode(e.to_string()))
}

fn run_one(ws: &Workspace, cfg: &ExperimentConfig, trial: u64) -> TrialOutcome {
    let (pattern, syndrome, schedule_seed) = sample_trial(ws, cfg, trial);
    let graph = &ws.graph;
    let mut out = TrialOutcome {
        cycles: None,
        iterations: 0,
        logical_failure: false,
        failure: None,
    };
    let result: Result<(), TrialFailure> = (|| {
        let decode_err = |e: Error| TrialFailure::Decode(e.to_string());
        match cfg.mode {
            Mode::Serial => {
                let r = decode_serial(graph, &syndrome).map_err(decode_err)?;
                out.iterations = r.growth_iterations;
                out.logical_failure = score(graph, &pattern, &r.correction)?;
            }
            Mode::Staged => {
                let r = run_staged(graph, &syndrome, schedule_seed).map_err(decode_err)?;
                out.iterations = r.growth_iterations;
                let corr = peel_dist(graph, &r.parents, &syndrome).map_err(decode_err)?;
                out.logical_failure = score(graph, &pattern, &corr.edges)?;
            }
            Mode::Sync => {
                let r = run_synchronous(graph, &syndrome).map_err(decode_err)?;
                out.iterations = r.growth_iterations;
                out.cycles = r.cycles;
                let corr = peel_dist(graph, &r.parents, &syndrome).map_err(decode_err)?;
                out.logical_failure = score(graph, &pattern, &corr.edges)?;
            }
            Mode::Verify => {
                let serial = decode_serial(graph, &syndrome).map_err(decode_err)?;
                let staged = run_staged(graph, &syndrome, schedule_seed).map_err(decode_err)?;
                let sync = run_synchronous(graph, &syndrome).map_err(decode_err)?;
                if staged.partition != serial.partition || sync.partition != serial.partition {
                    return Err(TrialFailure::Mismatch("cluster partitions differ".into()));
                }
                if staged.growth_iterations != serial.growth_iterations
                    || sync.growth_iterations != serial.growth_iterations
                {
                    return Err(TrialFailure::Mismatch(format!(
                        "growth iterations differ: serial {}, staged {}, sync {}",
                        serial.growth_iterations, staged.growth_iterations, sync.growth_iterations
                    )));
                }
                out.iterations = serial.growth_iterations;
                out.cycles = sync.cycles;
                // Every engine's correction must annihilate; logical failure
                // is scored on the serial one.
                let staged_corr =
                    peel_dist(graph, &staged.parents, &syndrome).map_err(decode_err)?;
                let sync_corr = peel_dist(graph, &sync.parents, &syndrome).map_err(decode_err)?;
                score(graph, &pattern, &staged_corr.edges)?;
                score(graph, &pattern, &sync_corr.edges)?;
                out.logical_failure = score(graph, &pattern, &serial.correction)?;
            }
        }
        Ok(())
    })();
    if let Err(kind) = result {
        out.failure = Some(kind);
    }
    out
}

fn peel_dist(
    graph: &DecodingGraph,
    parents: &[u32],
    syndrome: &Syndrome,
) -> Result<CorrectionPattern, Error> {
    let forest = correction::forest_from_parents(graph, parents)?;
    correction::peel(graph, &forest, syndrome)
}

fn aggregate(cfg: &ExperimentConfig, outcomes: Vec<TrialOutcome>) -> Result<TrialStats, Error> {
    for (trial, out) in outcomes.iter().enumerate() {
        if let Some(kind) = &out.failure {
            return Err(Error::Trial {
                trial: trial as u64,
                seed: cfg.seed,
                kind: kind.clone(),
            });
        }
    }
    let trials = outcomes.len() as u64;
    let mut growth_iterations = BTreeMap::new();
    let mut logical_failures = 0u64;
    let mut cycles: Vec<u64> = Vec::new();
    for out in &outcomes {
        *growth_iterations.entry(out.iterations).or_insert(0) += 1;
        logical_failures += out.logical_failure as u64;
        if let Some(c) = out.cycles {
            cycles.push(c);
        }
    }
    let cycle_stats = if cycles.is_empty() {
        None
    } else {
        cycles.sort_unstable();
        let n = cycles.len();
        let rank = |q: f64| cycles[(((q * n as f64).ceil() as usize).max(1) - 1).min(n - 1)];
        let mut histogram = BTreeMap::new();
        for &c in &cycles {
            *histogram.entry(c).or_insert(0u64) += 1;
        }
        Some(CycleStats {
            mean: cycles.iter().sum::<u64>() as f64 / n as f64,
            p50: rank(0.50),
            p90: rank(0.90),
            p99: rank(0.99),
            p999: rank(0.999),
            p9999: rank(0.9999),
            histogram,
        })
    };
    let ns_per_round = cycle_stats
        .as_ref()
        .map(|c| c.mean * cfg.clock_ns / cfg.rounds as f64);
    Ok(TrialStats {
        trials,
        cycles: cycle_stats,
        growth_iterations,
        ns_per_round,
        logical_failures,
        equivalence_mismatches: 0,
    })
}

/// Run every trial of the config and aggregate. Uses the rayon thread pool
/// when the `parallel` feature is enabled.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrialStats, Error> {
    let ws = prepare_workspace(cfg)?;
    let outcomes = collect_outcomes(&ws, cfg);
    aggregate(cfg, outcomes)
}

/// Single-threaded variant; byte-identical results to [`run_experiment`].
pub fn run_experiment_sequential(cfg: &ExperimentConfig) -> Result<TrialStats, Error> {
    let ws = prepare_workspace(cfg)?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials).map(|t| run_one(&ws, cfg, t)).collect();
    aggregate(cfg, outcomes)
}

#[cfg(feature = "parallel")]
fn collect_outcomes(ws: &Workspace, cfg: &ExperimentConfig) -> Vec<TrialOutcome> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_one(ws, cfg, t))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn collect_outcomes(ws: &Workspace, cfg: &ExperimentConfig) -> Vec<TrialOutcome> {
    (0..cfg.trials).map(|t| run_one(ws, cfg, t)).collect()
}

/// Run an experiment and also return the per-trial syndrome log.
pub fn run_experiment_recorded(
    cfg: &ExperimentConfig,
) -> Result<(TrialStats, Vec<TrialLine>), Error> {
    let ws = prepare_workspace(cfg)?;
    let outcomes = collect_outcomes(&ws, cfg);
    let stats = aggregate(cfg, outcomes)?;
    let lines = (0..cfg.trials)
        .map(|t| {
            let (pattern, syndrome, _) = sample_trial(&ws, cfg, t);
            TrialLine {
                trial: t,
                defects: syndrome.defects.iter().map(|d| d.0).collect(),
                flipped: pattern.flipped,
            }
        })
        .collect();
    Ok((stats, lines))
}

/// Detailed single-shot result for the CLI `decode` command.
#[derive(Clone, Debug, Serialize)]
pub struct ShotReport {
    pub d: u32,
    pub rounds: u32,
    pub p: f64,
    pub mode: Mode,
    pub seed: u64,
    pub trial: u64,
    pub defects: Vec<u32>,
    pub flipped: Vec<EdgeIndex>,
    pub growth_iterations: u32,
    pub cycles: Option<u64>,
    pub clusters: usize,
    pub correction: Vec<EdgeIndex>,
    pub annihilated: bool,
    pub logical_failure: bool,
}

/// Decode one sampled shot, optionally streaming register traces from the
/// distributed engines.
pub fn run_single_shot(
    cfg: &ExperimentConfig,
    trial: u64,
    mut trace: Option<&mut dyn FnMut(crate::distributed::TraceEvent)>,
) -> Result<ShotReport, Error> {
    let ws = prepare_workspace(cfg)?;
    let graph = &ws.graph;
    let (pattern, syndrome, schedule_seed) = sample_trial(&ws, cfg, trial);

    let (iterations, cycles, parents_or_corr) = match cfg.mode {
        Mode::Serial => {
            let r = decode_serial(graph, &syndrome)?;
            (r.growth_iterations, None, Err(r))
        }
        Mode::Staged => {
            let r = match trace.as_deref_mut() {
                Some(sink) => {
                    crate::distributed::run_staged_traced(graph, &syndrome, schedule_seed, sink)?
                }
                None => run_staged(graph, &syndrome, schedule_seed)?,
            };
            (r.growth_iterations, None, Ok(r))
        }
        Mode::Sync | Mode::Verify => {
            let r = match trace {
                Some(sink) => crate::distributed::run_synchronous_traced(
                    graph,
                    &syndrome,
                    crate::distributed::DEFAULT_CYCLE_BUDGET,
                    sink,
                )?,
                None => run_synchronous(graph, &syndrome)?,
            };
            if cfg.mode == Mode::Verify {
                let serial = decode_serial(graph, &syndrome)?;
                let staged = run_staged(graph, &syndrome, schedule_seed)?;
                if serial.partition != r.partition || staged.partition != r.partition {
                    return Err(Error::Trial {
                        trial,
                        seed: cfg.seed,
                        kind: TrialFailure::Mismatch("cluster partitions differ".into()),
                    });
                }
            }
            (r.growth_iterations, r.cycles, Ok(r))
        }
    };

    let (correction, partition) = match parents_or_corr {
        Ok(dist) => (
            peel_dist(graph, &dist.parents, &syndrome)?.edges,
            dist.partition,
        ),
        Err(serial) => (serial.correction, serial.partition),
    };
    let annihilated = correction::check_annihilation(graph, &pattern.flipped, &correction);
    let logical_failure =
        annihilated && correction::check_logical_failure(graph, &pattern.flipped, &correction)?;
    Ok(ShotReport {
        d: cfg.d,
        rounds: cfg.rounds,
        p: cfg.p_label(),
        mode: cfg.mode,
        seed: cfg.seed,
        trial,
        defects: syndrome.defects.iter().map(|d| d.0).collect(),
        flipped: pattern.flipped,
        growth_iterations: iterations,
        cycles,
        clusters: partition.nontrivial_clusters().len(),
        correction,
        annihilated,
        logical_failure,
    })
}

/// One row of a sweep report; field order matches the CSV schema.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub d: u32,
    pub rounds: u32,
    pub p: f64,
    pub mode: Mode,
    pub trials: u64,
    pub mean_cycles: f64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub p999: u64,
    pub p9999: u64,
    pub ns_per_round: f64,
    pub logical_rate: f64,
    pub mismatches: u64,
}

impl SweepRow {
    pub fn from_stats(cfg: &ExperimentConfig, stats: &TrialStats) -> Self {
        let c = stats.cycles.as_ref();
        SweepRow {
            d: cfg.d,
            rounds: cfg.rounds,
            p: cfg.p_label(),
            mode: cfg.mode,
            trials: stats.trials,
            mean_cycles: c.map_or(0.0, |c| c.mean),
            p50: c.map_or(0, |c| c.p50),
            p90: c.map_or(0, |c| c.p90),
            p99: c.map_or(0, |c| c.p99),
            p999: c.map_or(0, |c| c.p999),
            p9999: c.map_or(0, |c| c.p9999),
            ns_per_round: stats.ns_per_round.unwrap_or(0.0),
            logical_rate: stats.logical_rate(),
            mismatches: stats.equivalence_mismatches,
        }
    }
}

pub const CSV_HEADER: &str =
    "d,rounds,p,mode,trials,mean_cycles,p50,p90,p99,p999,p9999,ns_per_round,logical_rate,mismatches";

/// Render sweep rows as CSV with the stable documented schema.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.d,
            r.rounds,
            r.p,
            r.mode,
            r.trials,
            r.mean_cycles,
            r.p50,
            r.p90,
            r.p99,
            r.p999,
            r.p9999,
            r.ns_per_round,
            r.logical_rate,
            r.mismatches
        ));
    }
    out
}

/// Run each config in turn and collect the report rows.
pub fn sweep(configs: &[ExperimentConfig]) -> Result<Vec<SweepRow>, Error> {
    if configs.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs at least one config".into(),
        ));
    }
    configs
        .iter()
        .map(|cfg| Ok(SweepRow::from_stats(cfg, &run_experiment(cfg)?)))
        .collect()
}
