use thiserror::Error;

/// Errors produced by graph construction, decoding and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("code distance must be an odd integer >= 3, got {0}")]
    InvalidDistance(u32),
    #[error("rounds must be >= 1, got {0}")]
    InvalidRounds(u32),
    #[error("w_max must be >= 2, got {0}")]
    InvalidWeightMax(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown vertex id {0}")]
    UnknownVertex(u32),
    #[error("unknown edge index {0}")]
    UnknownEdge(u32),
    #[error("vertex {vertex} is not an endpoint of edge {edge}")]
    NotAnEndpoint { vertex: u32, edge: u32 },
    #[error("syndrome defect {0} is not a real vertex of the graph")]
    InvalidDefect(u32),
    #[error("weight table has {got} entries, the graph has {expected} edges")]
    WeightLength { got: usize, expected: usize },
    #[error("edge weight {w} outside [2, {w_max}]")]
    WeightRange { w: u32, w_max: u32 },
    #[error("per-edge weights require a weighted graph config")]
    NotWeightedMode,
    #[error("simulation has not terminated")]
    NotTerminated,
    #[error("cycle budget of {budget} exceeded; decoder failed to make progress")]
    CycleBudgetExceeded { budget: u64 },
    #[error("cluster rooted at vertex {root} holds an odd defect count and no boundary vertex")]
    OddClusterCorrection { root: u32 },
    #[error("parent {parent} of vertex {vertex} is not an adjacent vertex")]
    InvalidForest { vertex: u32, parent: u32 },
    #[error("correction does not annihilate the syndrome")]
    NotAnnihilated,
    #[error("trial {trial} (seed {seed}) failed: {kind}")]
    Trial {
        trial: u64,
        seed: u64,
        kind: TrialFailure,
    },
    #[error("record line {line}: {msg}")]
    Record { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-trial invariant violations surfaced by the harness. Any of these
/// aborts the run; the trial index plus the master seed replays the shot.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrialFailure {
    #[error("correction failed to annihilate the syndrome")]
    Annihilation,
    #[error("decoder modes disagree: {0}")]
    Mismatch(String),
    #[error("decode error: {0}")]
    Decode(String),
}
