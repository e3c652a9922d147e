//! JSON-lines trial records and replay.
//!
//! A record file is self-contained: the first line holds the experiment
//! config (plus the assigned edge weights in weighted mode), every further
//! line one trial as `{"trial":k,"defects":[ids],"flipped":[edge indices]}`.
//! Replay rebuilds the graph, re-derives each syndrome from the recorded
//! flipped edges (cross-checking the recorded defects) and decodes it, so
//! all aggregate statistics can be recomputed from the log alone.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::correction;
use crate::distributed::{run_staged, run_synchronous};
use crate::error::Error;
use crate::experiment::{ExperimentConfig, Mode, TrialLine};
use crate::graph::{DecodingGraph, VertexId};
use crate::noise::{syndrome_from_errors, trial_rng, ErrorPattern, Syndrome};
use crate::serial::decode_serial;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub config: ExperimentConfig,
    /// Per-edge weights of the batch, present in weighted mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<u32>>,
}

pub fn write_records(
    mut w: impl Write,
    header: &RecordHeader,
    lines: &[TrialLine],
) -> Result<(), Error> {
    serde_json::to_writer(&mut w, header).map_err(io_err)?;
    w.write_all(b"\n")?;
    for line in lines {
        serde_json::to_writer(&mut w, line).map_err(io_err)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Parse a record file; errors carry the 1-based line number.
pub fn read_records(r: impl BufRead) -> Result<(RecordHeader, Vec<TrialLine>), Error> {
    let mut lines = r.lines();
    let head = lines
        .next()
        .ok_or(Error::Record {
            line: 1,
            msg: "empty record file".into(),
        })?
        .map_err(Error::Io)?;
    let header: RecordHeader = serde_json::from_str(&head).map_err(|e| Error::Record {
        line: 1,
        msg: e.to_string(),
    })?;
    let mut trials = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let text = line.map_err(Error::Io)?;
        if text.trim().is_empty() {
            continue;
        }
        let t: TrialLine = serde_json::from_str(&text).map_err(|e| Error::Record {
            line: lineno,
            msg: e.to_string(),
        })?;
        trials.push(t);
    }
    Ok((header, trials))
}

/// Outcome of replaying one recorded trial.
#[derive(Clone, Debug, Serialize)]
pub struct ReplayTrial {
    pub trial: u64,
    pub growth_iterations: u32,
    pub cycles: Option<u64>,
    pub clusters: usize,
    pub annihilated: bool,
    pub logical_failure: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayReport {
    pub mode: Mode,
    pub trials: Vec<ReplayTrial>,
}

/// Rebuild the recorded graph (including weights) for replay.
pub fn graph_from_header(header: &RecordHeader) -> Result<DecodingGraph, Error> {
    let mut graph = DecodingGraph::build(header.config.graph_config())?;
    if let Some(weights) = &header.weights {
        graph.set_weights(weights)?;
    }
    Ok(graph)
}

/// Re-decode every recorded trial in `mode` (default: the recorded mode).
/// Optionally streams register traces for the distributed engines.
pub fn replay(
    header: &RecordHeader,
    lines: &[TrialLine],
    mode: Option<Mode>,
    mut trace: Option<&mut dyn FnMut(crate::distributed::TraceEvent)>,
) -> Result<ReplayReport, Error> {
    let graph = graph_from_header(header)?;
    let mode = mode.unwrap_or(header.config.mode);
    let mut trials = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let lineno = i + 2;
        let bad = |msg: String| Error::Record { line: lineno, msg };
        for &e in &line.flipped {
            if e as usize >= graph.edge_count() {
                return Err(bad(format!("flipped edge {e} out of range")));
            }
        }
        let mut flipped = line.flipped.clone();
        flipped.sort_unstable();
        flipped.dedup();
        let pattern = ErrorPattern {
            flipped,
            probs: None,
        };
        let syndrome = syndrome_from_errors(&graph, &pattern);
        let recorded: Vec<u32> = {
            let mut d = line.defects.clone();
            d.sort_unstable();
            d
        };
        let derived: Vec<u32> = syndrome.defects.iter().map(|d| d.0).collect();
        if recorded != derived {
            return Err(bad(format!(
                "recorded defects {recorded:?} do not match the flipped edges (expected {derived:?})"
            )));
        }
        let outcome = replay_one(
            &graph,
            &header.config,
            line.trial,
            &pattern,
            &syndrome,
            mode,
            &mut trace,
        )?;
        trials.push(outcome);
    }
    Ok(ReplayReport { mode, trials })
}

fn replay_one(
    graph: &DecodingGraph,
    cfg: &ExperimentConfig,
    trial: u64,
    pattern: &ErrorPattern,
    syndrome: &Syndrome,
    mode: Mode,
    trace: &mut Option<&mut dyn FnMut(crate::distributed::TraceEvent)>,
) -> Result<ReplayTrial, Error> {
    use rand::Rng;
    // Same schedule-seed derivation as the harness: the draw after the
    // error sampling on the trial stream.
    let mut rng = trial_rng(cfg.seed, trial);
    match cfg.noise {
        crate::experiment::NoiseSpec::Uniform { p } => {
            let _ = crate::noise::sample_errors(graph, p, &mut rng);
        }
        crate::experiment::NoiseSpec::Weighted { .. } => {
            for _ in 0..graph.edge_count() {
                let _: f64 = rng.gen();
            }
        }
    }
    let schedule_seed: u64 = rng.gen();

    let (iterations, cycles, correction, partition) = match mode {
        Mode::Serial => {
            let r = decode_serial(graph, syndrome)?;
            (r.growth_iterations, None, r.correction, r.partition)
        }
        Mode::Staged => {
            let r = match trace.as_deref_mut() {
                Some(sink) => {
                    crate::distributed::run_staged_traced(graph, syndrome, schedule_seed, sink)?
                }
                None => run_staged(graph, syndrome, schedule_seed)?,
            };
            let forest = correction::forest_from_parents(graph, &r.parents)?;
            let corr = correction::peel(graph, &forest, syndrome)?;
            (r.growth_iterations, None, corr.edges, r.partition)
        }
        Mode::Sync | Mode::Verify => {
            let r = match trace.as_deref_mut() {
                Some(sink) => crate::distributed::run_synchronous_traced(
                    graph,
                    syndrome,
                    crate::distributed::DEFAULT_CYCLE_BUDGET,
                    sink,
                )?,
                None => run_synchronous(graph, syndrome)?,
            };
            if mode == Mode::Verify {
                let serial = decode_serial(graph, syndrome)?;
                let staged = run_staged(graph, syndrome, schedule_seed)?;
                if serial.partition != r.partition
                    || staged.partition != r.partition
                    || serial.growth_iterations != r.growth_iterations
                {
                    return Err(Error::Trial {
                        trial,
                        seed: cfg.seed,
                        kind: crate::error::TrialFailure::Mismatch(
                            "replayed engines disagree".into(),
                        ),
                    });
                }
            }
            let forest = correction::forest_from_parents(graph, &r.parents)?;
            let corr = correction::peel(graph, &forest, syndrome)?;
            (r.growth_iterations, r.cycles, corr.edges, r.partition)
        }
    };
    let annihilated = correction::check_annihilation(graph, &pattern.flipped, &correction);
    let logical_failure =
        annihilated && correction::check_logical_failure(graph, &pattern.flipped, &correction)?;
    Ok(ReplayTrial {
        trial,
        growth_iterations: iterations,
        cycles,
        clusters: partition.nontrivial_clusters().len(),
        annihilated,
        logical_failure,
    })
}

/// Convenience: build a record for hand-constructed flipped-edge sets.
pub fn line_from_flips(graph: &DecodingGraph, trial: u64, flipped: Vec<u32>) -> TrialLine {
    let mut flipped = flipped;
    flipped.sort_unstable();
    flipped.dedup();
    let pattern = ErrorPattern {
        flipped: flipped.clone(),
        probs: None,
    };
    let syndrome = syndrome_from_errors(graph, &pattern);
    TrialLine {
        trial,
        defects: syndrome.defects.iter().map(|d: &VertexId| d.0).collect(),
        flipped,
    }
}
