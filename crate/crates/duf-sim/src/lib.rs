//! Union-find decoding for rotated surface codes, serial and distributed.
//!
//! The crate builds 3-D decoding graphs, samples phenomenological noise on
//! them, and decodes syndromes three ways:
//!
//! * [`serial`]: the classic iterative union-find decoder, used as the
//!   reference for everything else;
//! * [`distributed::staged`]: a per-vertex processing-element simulation
//!   coordinated through growing / merging / checking stages;
//! * [`distributed::sync`]: a cycle-accurate two-phase register simulation
//!   of the synchronous hardware-style redesign, which is what the cycle
//!   counts and latency figures come from.
//!
//! [`correction`] turns cluster spanning forests into corrections by
//! peeling and scores logical failures; [`experiment`] runs seeded trial
//! batches (data-parallel over trials with the `parallel` feature) and
//! [`record`] serializes trials as JSON lines for replay.

pub mod correction;
pub mod distributed;
mod error;
pub mod experiment;
pub mod graph;
pub mod noise;
pub mod partition;
pub mod record;
pub mod serial;

pub use error::{Error, TrialFailure};
pub use graph::{DecodingGraph, Edge, EdgeIndex, EdgeKind, GraphConfig, VertexId, WeightMode};
pub use noise::{ErrorPattern, Syndrome};
pub use partition::Partition;
