//! Phenomenological noise sampled directly on decoding-graph edges.
//!
//! A data-qubit error flips the two adjacent stabilizer measurements of its
//! round and a measurement error flips the same stabilizer in consecutive
//! rounds, so sampling i.i.d. flips per edge reproduces the defect
//! statistics exactly: spatial and boundary edges model data-qubit errors,
//! temporal edges model measurement errors (which exist only between
//! rounds, never before the first or after the last).
//!
//! Reproducibility contract: every trial draws from its own counter-based
//! stream of a ChaCha generator, derived from `(master_seed, trial_index)`,
//! so results are independent of batch size and worker count.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::graph::{DecodingGraph, EdgeIndex, VertexId};

/// Set of flipped edges for one shot. In weighted mode the per-edge
/// probability table used to draw the pattern rides along.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorPattern {
    /// Ascending edge indices.
    pub flipped: Vec<EdgeIndex>,
    pub probs: Option<Arc<[f64]>>,
}

impl ErrorPattern {
    pub fn empty() -> Self {
        ErrorPattern {
            flipped: Vec::new(),
            probs: None,
        }
    }
}

/// Defect vertices of one decoding shot, ascending by id. Only real
/// vertices can be defects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Syndrome {
    pub defects: Vec<VertexId>,
}

impl Syndrome {
    pub fn new(mut defects: Vec<VertexId>) -> Self {
        defects.sort_unstable();
        defects.dedup();
        Syndrome { defects }
    }

    pub fn is_empty(&self) -> bool {
        self.defects.is_empty()
    }
}

/// RNG stream for one trial. Stream 0 is reserved for batch-level draws
/// (per-edge probabilities in weighted mode); trial `k` uses stream `k + 1`.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial + 1);
    rng
}

/// RNG stream for batch-level sampling shared by all trials of a run.
pub fn batch_rng(master_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(0);
    rng
}

/// Flip every edge of the graph i.i.d. with probability `p`.
///
/// Uses geometric gap sampling, so the cost is proportional to the number
/// of flips rather than the number of edges; the marginal distribution per
/// edge is exactly Bernoulli(p).
pub fn sample_errors(graph: &DecodingGraph, p: f64, rng: &mut impl Rng) -> ErrorPattern {
    let m = graph.edge_count();
    let mut flipped = Vec::new();
    if p <= 0.0 || m == 0 {
        return ErrorPattern::empty();
    }
    if p >= 1.0 {
        return ErrorPattern {
            flipped: (0..m as EdgeIndex).collect(),
            probs: None,
        };
    }
    let log_q = (1.0 - p).ln();
    let mut pos = 0usize;
    loop {
        let u: f64 = rng.gen();
        // Number of non-flips before the next flip.
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (m - pos) as f64 {
            break;
        }
        pos += skip as usize;
        flipped.push(pos as EdgeIndex);
        pos += 1;
        if pos >= m {
            break;
        }
    }
    ErrorPattern {
        flipped,
        probs: None,
    }
}

/// Flip edge `i` i.i.d. with its own probability `probs[i]`.
pub fn sample_errors_weighted(
    graph: &DecodingGraph,
    probs: &Arc<[f64]>,
    rng: &mut impl Rng,
) -> ErrorPattern {
    debug_assert_eq!(probs.len(), graph.edge_count());
    let flipped = (0..graph.edge_count() as EdgeIndex)
        .filter(|&e| rng.gen::<f64>() < probs[e as usize])
        .collect();
    ErrorPattern {
        flipped,
        probs: Some(Arc::clone(probs)),
    }
}

/// Defects are the real vertices with an odd number of flipped incident
/// edges; boundary vertices absorb parity silently.
pub fn syndrome_from_errors(graph: &DecodingGraph, errors: &ErrorPattern) -> Syndrome {
    let mut parity = vec![false; graph.real_count()];
    for &e in &errors.flipped {
        let (u, v) = graph.endpoint_indices(e as usize);
        if !graph.is_boundary_index(u) {
            parity[u] ^= true;
        }
        if !graph.is_boundary_index(v) {
            parity[v] ^= true;
        }
    }
    Syndrome {
        defects: parity
            .iter()
            .enumerate()
            .filter(|(_, &d)| d)
            .map(|(i, _)| VertexId::from_index(i))
            .collect(),
    }
}

/// Draw one error probability per edge from `Normal(mean, stddev)`,
/// resampling until the draw lands in (0, 0.5).
pub fn sample_edge_probabilities(
    graph: &DecodingGraph,
    mean: f64,
    stddev: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, Error> {
    if mean <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mean error probability must be positive, got {mean}"
        )));
    }
    if stddev < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "stddev must be nonnegative, got {stddev}"
        )));
    }
    if stddev == 0.0 {
        if mean >= 0.5 {
            return Err(Error::InvalidParameter(format!(
                "mean {mean} cannot be truncated into (0, 0.5) with stddev 0"
            )));
        }
        return Ok(vec![mean; graph.edge_count()]);
    }
    let normal = Normal::new(mean, stddev)
        .map_err(|e| Error::InvalidParameter(format!("bad normal parameters: {e}")))?;
    Ok((0..graph.edge_count())
        .map(|_| loop {
            let p = normal.sample(rng);
            if p > 0.0 && p < 0.5 {
                break p;
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeKind, GraphConfig};

    fn g(d: u32, rounds: u32) -> DecodingGraph {
        DecodingGraph::build(GraphConfig::unweighted(d, rounds)).unwrap()
    }

    #[test]
    fn zero_probability_is_empty() {
        let graph = g(3, 1);
        let mut rng = trial_rng(1, 0);
        assert!(sample_errors(&graph, 0.0, &mut rng).flipped.is_empty());
    }

    #[test]
    fn certainty_flips_everything() {
        let graph = g(3, 1);
        let mut rng = trial_rng(1, 0);
        let e = sample_errors(&graph, 1.0, &mut rng);
        assert_eq!(e.flipped.len(), 9);
        assert_eq!(e.flipped, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_pattern() {
        let graph = g(5, 5);
        let a = sample_errors(&graph, 0.05, &mut trial_rng(42, 7));
        let b = sample_errors(&graph, 0.05, &mut trial_rng(42, 7));
        assert_eq!(a, b);
        // A different trial of the same master seed is a different stream.
        let c = sample_errors(&graph, 0.05, &mut trial_rng(42, 8));
        assert_ne!(a, c);
    }

    #[test]
    fn single_spatial_edge_flips_its_endpoints() {
        let graph = g(3, 1);
        // Edge 1 is the spatial edge (1, 2) in the d=3 layout.
        let s = syndrome_from_errors(
            &graph,
            &ErrorPattern {
                flipped: vec![1],
                probs: None,
            },
        );
        assert_eq!(s.defects, vec![VertexId(1), VertexId(2)]);
    }

    #[test]
    fn chain_of_two_flips_only_its_ends() {
        // Edges 1 = (1,2) and 4 = (2,3) share vertex 2; the middle vertex
        // sees even parity and stays clean.
        let graph = g(3, 1);
        let s = syndrome_from_errors(
            &graph,
            &ErrorPattern {
                flipped: vec![1, 4],
                probs: None,
            },
        );
        assert_eq!(s.defects, vec![VertexId(1), VertexId(3)]);
    }

    #[test]
    fn boundary_edge_flips_one_real_vertex() {
        let graph = g(3, 1);
        let s = syndrome_from_errors(
            &graph,
            &ErrorPattern {
                flipped: vec![0],
                probs: None,
            },
        );
        assert_eq!(s.defects, vec![VertexId(2)]);
    }

    #[test]
    fn empty_pattern_empty_syndrome() {
        let graph = g(3, 3);
        assert!(syndrome_from_errors(&graph, &ErrorPattern::empty()).is_empty());
    }

    #[test]
    fn defect_parity_matches_boundary_flips() {
        // Each edge flips 0 or 2 recorded endpoints except boundary edges,
        // which flip 1; total defect parity therefore equals the parity of
        // flipped boundary edges.
        let graph = g(5, 3);
        for trial in 0..200 {
            let e = sample_errors(&graph, 0.08, &mut trial_rng(3, trial));
            let s = syndrome_from_errors(&graph, &e);
            let boundary_flips = e
                .flipped
                .iter()
                .filter(|&&i| graph.edges()[i as usize].kind == EdgeKind::Boundary)
                .count();
            assert_eq!(s.defects.len() % 2, boundary_flips % 2);
        }
    }

    #[test]
    fn mean_flip_count_converges() {
        // Binomial mean over many shots at the default operating point.
        let graph = g(13, 13);
        let p = 0.001;
        let shots = 1_000_000u64;
        let mut total = 0u64;
        for trial in 0..shots {
            total += sample_errors(&graph, p, &mut trial_rng(11, trial))
                .flipped
                .len() as u64;
        }
        let expected = p * graph.edge_count() as f64;
        let observed = total as f64 / shots as f64;
        assert!(
            (observed - expected).abs() / expected < 0.05,
            "observed {observed}, expected {expected}"
        );
    }

    #[test]
    fn per_edge_frequency_converges() {
        let graph = g(3, 1);
        let p = 0.3;
        let shots = 200_000u64;
        let mut counts = vec![0u64; graph.edge_count()];
        for trial in 0..shots {
            for e in sample_errors(&graph, p, &mut trial_rng(5, trial)).flipped {
                counts[e as usize] += 1;
            }
        }
        for c in counts {
            let freq = c as f64 / shots as f64;
            assert!((freq - p).abs() < 0.01, "freq {freq}");
        }
    }

    #[test]
    fn weighted_probabilities_degenerate() {
        let graph = g(3, 1);
        let probs = sample_edge_probabilities(&graph, 0.001, 0.0, &mut batch_rng(1)).unwrap();
        assert!(probs.iter().all(|&p| p == 0.001));
        let w = crate::graph::quantized_weights(&probs, 16).unwrap();
        assert!(w.iter().all(|&x| x == 2));
    }

    #[test]
    fn weighted_probabilities_spread() {
        let graph = g(13, 13);
        let probs = sample_edge_probabilities(&graph, 0.001, 0.0005, &mut batch_rng(9)).unwrap();
        assert!(probs.iter().all(|&p| p > 0.0 && p < 0.5));
        let w = crate::graph::quantized_weights(&probs, 16).unwrap();
        let mut distinct: Vec<u32> = w.clone();
        distinct.sort_unstable();
        distinct.dedup();
        assert!(distinct.len() >= 4, "weights should span several values");
        assert!(w.iter().all(|&x| (2..=16).contains(&x)));
        // w_max = 2 collapses the same batch to uniform weights.
        let w2 = crate::graph::quantized_weights(&probs, 2).unwrap();
        assert!(w2.iter().all(|&x| x == 2));
    }

    #[test]
    fn invalid_noise_parameters() {
        let graph = g(3, 1);
        assert!(sample_edge_probabilities(&graph, 0.0, 0.1, &mut batch_rng(0)).is_err());
        assert!(sample_edge_probabilities(&graph, 0.6, 0.0, &mut batch_rng(0)).is_err());
    }
}
