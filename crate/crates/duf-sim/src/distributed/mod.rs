//! Distributed union-find decoder simulations.
//!
//! Every real vertex owns a processing element (PE) holding its cluster id,
//! parent pointer, cluster parity and handshake flags; a single controller
//! walks all PEs through growing / merging / checking stages and stops once
//! no PE reports an odd cluster. Two engines share this state model:
//!
//! * [`staged`] executes the stage functions atomically per PE, sweeping in
//!   a seeded schedule until each stage reaches a fixpoint; the reference
//!   for logical behaviour.
//! * [`sync`] is a cycle-accurate two-phase register simulation of the
//!   synchronous redesign, where merging and checking run every clock cycle
//!   and the controller only coordinates re-entry into growing.
//!
//! Boundary vertices are passive endpoints: defect-free, never busy, never
//! growing, pinned to the sentinel cluster id 0 that sits below every real
//! id. A cluster that fully grows an edge into the boundary adopts the
//! sentinel and its parity reports even from then on.

pub mod staged;
pub mod sync;

use crate::error::Error;
use crate::graph::{DecodingGraph, EdgeIndex};
use crate::noise::Syndrome;
use crate::partition::Partition;

pub use staged::{run_staged, run_staged_traced};
pub use sync::{run_synchronous, run_synchronous_traced, SyncSim, DEFAULT_CYCLE_BUDGET};

/// Cluster id of every boundary vertex; real ids start at 1.
pub const BOUNDARY_CLUSTER_ID: u32 = 0;

/// Stage a PE reports to the controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeStage {
    Growing,
    Merging,
    Checking,
}

/// Registers of one processing element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeState {
    /// Defect flag from the syndrome; static during a decode.
    pub defect: bool,
    /// Lowest vertex id of the cluster this PE currently knows of.
    pub cluster_id: u32,
    /// Parity of the cluster as seen from the root, flooded down the tree.
    pub odd: bool,
    /// Controller-visible copy of `odd`.
    pub reported_odd: bool,
    /// Parent vertex id in the intra-cluster spanning tree; self for roots.
    pub parent: u32,
    /// Parity of this vertex and all its tree descendants.
    pub subtree_odd: bool,
    pub stage: PeStage,
    pub busy: bool,
}

/// Fresh PE array for a syndrome: every vertex its own cluster, parity equal
/// to its defect flag; boundary vertices pinned to the sentinel cluster.
pub fn init_pe_states(graph: &DecodingGraph, syndrome: &Syndrome) -> Result<Vec<PeState>, Error> {
    let n = graph.vertex_count();
    let mut pes: Vec<PeState> = (0..n)
        .map(|v| {
            let boundary = graph.is_boundary_index(v);
            PeState {
                defect: false,
                cluster_id: if boundary {
                    BOUNDARY_CLUSTER_ID
                } else {
                    v as u32 + 1
                },
                odd: false,
                reported_odd: false,
                parent: v as u32 + 1,
                subtree_odd: false,
                stage: PeStage::Merging,
                busy: false,
            }
        })
        .collect();
    for d in &syndrome.defects {
        if d.0 == 0 || d.0 as usize > n || graph.is_boundary_index(d.index()) {
            return Err(Error::InvalidDefect(d.0));
        }
        let pe = &mut pes[d.index()];
        pe.defect = true;
        pe.odd = true;
        pe.reported_odd = true;
        pe.subtree_odd = true;
    }
    Ok(pes)
}

/// Stage occupancy of a finished run: clock cycles per controller stage in
/// synchronous mode, sweep counts in staged mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StageCounts {
    pub growing: u64,
    pub merging: u64,
    pub checking: u64,
}

/// Output common to both distributed engines.
#[derive(Clone, Debug)]
pub struct DistDecodeResult {
    pub partition: Partition,
    /// Parent vertex id per dense vertex index (self for roots). The parent
    /// forest spans each cluster and is what the peeler consumes.
    pub parents: Vec<u32>,
    /// Ascending indices of edges that reached their weight.
    pub fully_grown: Vec<EdgeIndex>,
    pub growth_iterations: u32,
    /// Clock cycles until terminate; `None` for the staged engine.
    pub cycles: Option<u64>,
    pub stage_counts: StageCounts,
}

/// One register change, for `--trace` output and golden tests. `vertex` 0
/// stands for the controller; growth changes carry their edge index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    /// Clock cycle (synchronous) or stage ordinal (staged).
    pub cycle: u64,
    pub vertex: u32,
    pub field: &'static str,
    pub edge: Option<EdgeIndex>,
    pub old: u64,
    pub new: u64,
}

pub(crate) fn fully_grown_list(graph: &DecodingGraph, growth: &[u32]) -> Vec<EdgeIndex> {
    growth
        .iter()
        .enumerate()
        .filter(|&(e, &g)| g == graph.edge_weight(e))
        .map(|(e, _)| e as EdgeIndex)
        .collect()
}

/// Group real vertices by final cluster id. Clusters that absorbed the
/// boundary all share the sentinel id, so those are split back into
/// connected components of the fully grown subgraph.
pub(crate) fn partition_from_cluster_ids(
    graph: &DecodingGraph,
    cluster_ids: &[u32],
    growth: &[u32],
) -> Partition {
    let n_real = graph.real_count();
    let mut labels = vec![0u32; n_real];
    let mut boundary_clusters = false;
    for v in 0..n_real {
        if cluster_ids[v] == BOUNDARY_CLUSTER_ID {
            boundary_clusters = true;
        } else {
            labels[v] = cluster_ids[v];
        }
    }
    if boundary_clusters {
        let grown = fully_grown_list(graph, growth);
        let components = Partition::from_edge_subgraph(graph, grown);
        for v in 0..n_real {
            if cluster_ids[v] == BOUNDARY_CLUSTER_ID {
                labels[v] = components.labels()[v];
            }
        }
    }
    Partition::from_labels(labels)
}
