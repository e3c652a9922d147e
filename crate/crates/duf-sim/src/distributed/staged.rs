//! Staged simulation of the distributed decoder.
//!
//! Each stage function is executed atomically per PE against live shared
//! state, exactly as the per-vertex algorithm prescribes: growing raises
//! incident edges of odd PEs, merging adopts the lowest neighboring cluster
//! id / recomputes subtree parity / refreshes `odd`, checking raises `busy`
//! while any local inconsistency remains. PEs are visited in a schedule
//! derived from `schedule_seed`, reshuffled every sweep; a stage ends when a
//! full sweep changes nothing. The final state must not depend on the
//! schedule, which the tests exercise with many seeds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::graph::DecodingGraph;
use crate::noise::Syndrome;

use super::{
    fully_grown_list, init_pe_states, partition_from_cluster_ids, DistDecodeResult, PeStage,
    PeState, StageCounts, TraceEvent,
};

struct StagedSim<'g> {
    graph: &'g DecodingGraph,
    pes: Vec<PeState>,
    growth: Vec<u32>,
    /// Real vertices in schedule order; reshuffled per sweep.
    order: Vec<u32>,
    rng: ChaCha8Rng,
    iterations: u32,
    counts: StageCounts,
    stage_ordinal: u64,
}

impl<'g> StagedSim<'g> {
    fn new(
        graph: &'g DecodingGraph,
        syndrome: &Syndrome,
        schedule_seed: u64,
    ) -> Result<Self, Error> {
        Ok(StagedSim {
            graph,
            pes: init_pe_states(graph, syndrome)?,
            growth: vec![0; graph.edge_count()],
            order: (0..graph.real_count() as u32).collect(),
            rng: ChaCha8Rng::seed_from_u64(schedule_seed),
            iterations: 0,
            counts: StageCounts::default(),
            stage_ordinal: 0,
        })
    }

    fn fully_grown(&self, e: usize) -> bool {
        self.growth[e] == self.graph.edge_weight(e)
    }

    /// Growing: an odd PE raises every incident edge whose far side belongs
    /// to a different cluster, one unit, respecting the weight cap.
    fn grow_pe(&mut self, v: usize) {
        self.pes[v].stage = PeStage::Growing;
        if !self.pes[v].odd {
            return;
        }
        let my_cid = self.pes[v].cluster_id;
        for i in 0..self.graph.incident_index(v).len() {
            let e = self.graph.incident_index(v)[i] as usize;
            let far = self.graph.other_endpoint_index(e, v);
            if self.pes[far].cluster_id != my_cid && self.growth[e] < self.graph.edge_weight(e) {
                self.growth[e] += 1;
            }
        }
    }

    /// Merging: adopt the lowest cluster id among fully grown neighbors
    /// (ties to the lowest vertex id), recompute subtree parity from the
    /// current children, then refresh `odd` from the (possibly new) parent.
    /// Returns whether any register changed.
    fn merge_pe(&mut self, v: usize) -> bool {
        self.pes[v].stage = PeStage::Merging;
        let vid = v as u32 + 1;
        let mut best_cid = self.pes[v].cluster_id;
        let mut best_id = u32::MAX;
        for i in 0..self.graph.incident_index(v).len() {
            let e = self.graph.incident_index(v)[i] as usize;
            if !self.fully_grown(e) {
                continue;
            }
            let far = self.graph.other_endpoint_index(e, v);
            let c = self.pes[far].cluster_id;
            let fid = far as u32 + 1;
            if c < best_cid || (c == best_cid && best_id != u32::MAX && fid < best_id) {
                best_cid = c;
                best_id = fid;
            }
        }
        let mut changed = false;
        if best_cid < self.pes[v].cluster_id {
            self.pes[v].cluster_id = best_cid;
            self.pes[v].parent = best_id;
            changed = true;
        }
        let st = self.subtree_parity(v);
        if st != self.pes[v].subtree_odd {
            self.pes[v].subtree_odd = st;
            changed = true;
        }
        let parent = self.pes[v].parent;
        let odd = if parent == vid {
            self.pes[v].subtree_odd
        } else {
            self.pes[(parent - 1) as usize].odd
        };
        if odd != self.pes[v].odd {
            self.pes[v].odd = odd;
            changed = true;
        }
        if self.pes[v].reported_odd != odd {
            self.pes[v].reported_odd = odd;
            changed = true;
        }
        changed
    }

    /// Checking: busy unless every fully grown neighbor agrees on cluster id
    /// and parity, the stored subtree parity is consistent, and a root's odd
    /// flag equals its subtree parity.
    fn check_pe(&mut self, v: usize) {
        self.pes[v].stage = PeStage::Checking;
        let vid = v as u32 + 1;
        let pe = &self.pes[v];
        let mut ok = true;
        for &e in self.graph.incident_index(v) {
            let e = e as usize;
            if !self.fully_grown(e) {
                continue;
            }
            let far = &self.pes[self.graph.other_endpoint_index(e, v)];
            if far.cluster_id != pe.cluster_id || far.odd != pe.odd {
                ok = false;
                break;
            }
        }
        ok = ok && pe.subtree_odd == self.subtree_parity(v);
        ok = ok && (pe.parent != vid || pe.odd == pe.subtree_odd);
        self.pes[v].busy = !ok;
        self.pes[v].reported_odd = self.pes[v].odd;
    }

    fn subtree_parity(&self, v: usize) -> bool {
        let vid = v as u32 + 1;
        let mut parity = self.pes[v].defect;
        for &e in self.graph.incident_index(v) {
            let far = self.graph.other_endpoint_index(e as usize, v);
            if far != v && self.pes[far].parent == vid {
                parity ^= self.pes[far].subtree_odd;
            }
        }
        parity
    }

    fn any_reported_odd(&self) -> bool {
        self.pes[..self.graph.real_count()]
            .iter()
            .any(|p| p.reported_odd)
    }

    fn any_busy(&self) -> bool {
        self.pes[..self.graph.real_count()].iter().any(|p| p.busy)
    }

    fn reshuffle(&mut self) {
        self.order.shuffle(&mut self.rng);
    }

    fn run(&mut self, mut sink: Option<&mut dyn FnMut(TraceEvent)>) -> Result<(), Error> {
        // Safety valve; the decoder provably terminates long before this.
        let sweep_guard = 64 * (self.graph.vertex_count() as u64 + 16);
        while self.any_reported_odd() {
            self.iterations += 1;
            if self.iterations as u64 > sweep_guard {
                return Err(Error::CycleBudgetExceeded {
                    budget: sweep_guard,
                });
            }
            // Growing: exactly one visit per PE.
            self.counts.growing += 1;
            self.reshuffle();
            let snapshot = sink.is_some().then(|| self.snapshot());
            for i in 0..self.order.len() {
                self.grow_pe(self.order[i] as usize);
            }
            if let (Some(sink), Some(snap)) = (sink.as_deref_mut(), snapshot) {
                self.emit_diff(&snap, sink);
            }

            // Merging and checking repeat until nothing is busy.
            loop {
                let mut merge_sweeps = 0u64;
                loop {
                    self.counts.merging += 1;
                    merge_sweeps += 1;
                    if merge_sweeps > sweep_guard {
                        return Err(Error::CycleBudgetExceeded {
                            budget: sweep_guard,
                        });
                    }
                    self.reshuffle();
                    let snapshot = sink.is_some().then(|| self.snapshot());
                    let mut changed = false;
                    for i in 0..self.order.len() {
                        changed |= self.merge_pe(self.order[i] as usize);
                    }
                    if let (Some(sink), Some(snap)) = (sink.as_deref_mut(), snapshot) {
                        self.emit_diff(&snap, sink);
                    }
                    if !changed {
                        break;
                    }
                }
                self.counts.checking += 1;
                self.reshuffle();
                let snapshot = sink.is_some().then(|| self.snapshot());
                for i in 0..self.order.len() {
                    self.check_pe(self.order[i] as usize);
                }
                if let (Some(sink), Some(snap)) = (sink.as_deref_mut(), snapshot) {
                    self.emit_diff(&snap, sink);
                }
                if !self.any_busy() {
                    break;
                }
            }
        }
        Ok(())
    }

    fn snapshot(&self) -> (Vec<PeState>, Vec<u32>) {
        (self.pes.clone(), self.growth.clone())
    }

    fn emit_diff(&mut self, before: &(Vec<PeState>, Vec<u32>), sink: &mut dyn FnMut(TraceEvent)) {
        self.stage_ordinal += 1;
        let cycle = self.stage_ordinal;
        for (v, (old, new)) in before.0.iter().zip(&self.pes).enumerate() {
            let vid = v as u32 + 1;
            let mut field = |name: &'static str, o: u64, n: u64| {
                if o != n {
                    sink(TraceEvent {
                        cycle,
                        vertex: vid,
                        field: name,
                        edge: None,
                        old: o,
                        new: n,
                    });
                }
            };
            field("cid", old.cluster_id as u64, new.cluster_id as u64);
            field("parent", old.parent as u64, new.parent as u64);
            field("odd", old.odd as u64, new.odd as u64);
            field("st_odd", old.subtree_odd as u64, new.subtree_odd as u64);
            field("codd", old.reported_odd as u64, new.reported_odd as u64);
            field("busy", old.busy as u64, new.busy as u64);
        }
        for (e, (&o, &n)) in before.1.iter().zip(&self.growth).enumerate() {
            if o != n {
                let (u, _) = self.graph.endpoint_indices(e);
                sink(TraceEvent {
                    cycle,
                    vertex: u as u32 + 1,
                    field: "growth",
                    edge: Some(e as u32),
                    old: o as u64,
                    new: n as u64,
                });
            }
        }
    }

    fn into_result(self) -> DistDecodeResult {
        debug_assert!(!self.any_reported_odd());
        let partition = partition_from_cluster_ids(
            self.graph,
            &self.pes.iter().map(|p| p.cluster_id).collect::<Vec<_>>(),
            &self.growth,
        );
        DistDecodeResult {
            partition,
            parents: self.pes.iter().map(|p| p.parent).collect(),
            fully_grown: fully_grown_list(self.graph, &self.growth),
            growth_iterations: self.iterations,
            cycles: None,
            stage_counts: self.counts,
        }
    }
}

/// Run the staged engine to quiescence.
pub fn run_staged(
    graph: &DecodingGraph,
    syndrome: &Syndrome,
    schedule_seed: u64,
) -> Result<DistDecodeResult, Error> {
    let mut sim = StagedSim::new(graph, syndrome, schedule_seed)?;
    sim.run(None)?;
    Ok(sim.into_result())
}

/// As [`run_staged`], emitting one batch of register diffs per stage.
pub fn run_staged_traced(
    graph: &DecodingGraph,
    syndrome: &Syndrome,
    schedule_seed: u64,
    sink: &mut dyn FnMut(TraceEvent),
) -> Result<DistDecodeResult, Error> {
    let mut sim = StagedSim::new(graph, syndrome, schedule_seed)?;
    sim.run(Some(sink))?;
    Ok(sim.into_result())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeKind, GraphConfig, VertexId};

    fn syndrome(ids: &[u32]) -> Syndrome {
        Syndrome::new(ids.iter().map(|&i| VertexId(i)).collect())
    }

    #[test]
    fn empty_syndrome_terminates_without_growing() {
        let g = DecodingGraph::build(GraphConfig::unweighted(3, 3)).unwrap();
        let r = run_staged(&g, &syndrome(&[]), 1).unwrap();
        assert_eq!(r.growth_iterations, 0);
        assert_eq!(r.stage_counts.growing, 0);
        assert!(r.fully_grown.is_empty());
    }

    #[test]
    fn adjacent_defects_merge_under_the_lower_id() {
        let g = DecodingGraph::build(GraphConfig::unweighted(3, 1)).unwrap();
        let r = run_staged(&g, &syndrome(&[2, 3]), 7).unwrap();
        assert_eq!(r.growth_iterations, 1);
        // Higher-id defect adopted the lower id as cluster and parent.
        assert_eq!(r.parents[2], 2);
        assert_eq!(r.partition.labels()[1], 2);
        assert_eq!(r.partition.labels()[2], 2);
    }

    #[test]
    fn three_vertex_chain_takes_two_iterations() {
        // defect - clean - defect on an isolated path: both edges need two
        // passes (one unit per pass from their single odd side).
        let g = DecodingGraph::custom(
            3,
            0,
            vec![(1, 2, EdgeKind::Spatial, 2), (2, 3, EdgeKind::Spatial, 2)],
        );
        let r = run_staged(&g, &syndrome(&[1, 3]), 3).unwrap();
        assert_eq!(r.growth_iterations, 2);
        assert_eq!(r.partition.labels(), &[1, 1, 1]);
        assert_eq!(r.parents[0], 1);
        // Root's subtree parity went even, so the run terminated.
        assert_eq!(r.fully_grown, vec![0, 1]);
    }

    #[test]
    fn boundary_absorbs_a_lone_defect() {
        let g = DecodingGraph::build(GraphConfig::unweighted(3, 1)).unwrap();
        let r = run_staged(&g, &syndrome(&[4]), 11).unwrap();
        assert_eq!(r.growth_iterations, 2);
        // Vertex 4 ends in the sentinel cluster; the partition still labels
        // it by its own component.
        let labels = r.partition.labels();
        assert_eq!(labels[3], labels[2]);
    }

    #[test]
    fn schedule_does_not_change_results() {
        let g = DecodingGraph::build(GraphConfig::unweighted(5, 2)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let pattern = crate::noise::sample_errors(&g, 0.06, &mut rng);
            let syn = crate::noise::syndrome_from_errors(&g, &pattern);
            let reference = run_staged(&g, &syn, 0).unwrap();
            for seed in 1..=50 {
                let r = run_staged(&g, &syn, seed).unwrap();
                assert_eq!(r.partition, reference.partition);
                assert_eq!(r.growth_iterations, reference.growth_iterations);
                assert_eq!(r.fully_grown, reference.fully_grown);
            }
        }
    }
}
