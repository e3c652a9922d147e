//! Cycle-accurate two-phase simulation of the synchronous decoder.
//!
//! All state lives in registers: every block reads the values committed at
//! the end of the previous cycle and commits its own values at the end of
//! the current one, exactly like single-clock-domain hardware. Per cycle:
//!
//! * stage transition: PEs enter growing when the controller broadcasts it
//!   and fall back to merging one cycle later, with no completion handshake;
//! * growing logic (edge owner, one cycle): an edge whose endpoints lie in
//!   different clusters gains two units when both endpoints are odd, one
//!   when exactly one is, capped at its weight;
//! * merging logic, every cycle regardless of stage: adopt the lowest
//!   cluster id over fully grown neighbors, register the subtree parity of
//!   the current children, register `odd` from the parent (roots copy their
//!   own subtree parity); these are three independent registers;
//! * checking logic, every cycle: `busy` while any fully grown neighbor
//!   disagrees on cluster id or parity, the stored subtree parity is stale,
//!   or a root's parity copy is stale;
//! * `codd` registers `odd` with one cycle of delay;
//! * controller: after broadcasting growing it waits two cycles, then waits
//!   for all PEs to report not busy and either re-enters growing (another
//!   growth iteration) or terminates when no PE reports odd.
//!
//! Growth per edge and the negated cluster id per vertex are monotone over
//! a run; quiescence of `busy` implies the registers reached a fixpoint, so
//! the controller can never terminate early or re-grow spuriously.

use crate::error::Error;
use crate::graph::DecodingGraph;
use crate::noise::Syndrome;

use super::{
    fully_grown_list, init_pe_states, partition_from_cluster_ids, DistDecodeResult, PeStage,
    StageCounts, TraceEvent,
};

/// Cycles after which a run is declared stuck (a liveness bug, not a slow
/// syndrome; realistic shots finish within tens of cycles).
pub const DEFAULT_CYCLE_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlobalStage {
    Growing,
    Merging,
    Terminate,
}

/// One copy of every register in the design.
#[derive(Clone)]
struct Regs {
    cluster_id: Vec<u32>,
    parent: Vec<u32>,
    odd: Vec<bool>,
    subtree_odd: Vec<bool>,
    reported_odd: Vec<bool>,
    busy: Vec<bool>,
    growth: Vec<u32>,
    /// All real PEs transition in lockstep, so one register suffices.
    pe_stage: PeStage,
    global: GlobalStage,
    wait: u8,
}

pub struct SyncSim<'g> {
    graph: &'g DecodingGraph,
    defect: Vec<bool>,
    cur: Regs,
    next: Regs,
    cycle: u64,
    growth_iterations: u32,
    counts: StageCounts,
}

impl<'g> SyncSim<'g> {
    pub fn new(graph: &'g DecodingGraph, syndrome: &Syndrome) -> Result<Self, Error> {
        let pes = init_pe_states(graph, syndrome)?;
        let regs = Regs {
            cluster_id: pes.iter().map(|p| p.cluster_id).collect(),
            parent: pes.iter().map(|p| p.parent).collect(),
            odd: pes.iter().map(|p| p.odd).collect(),
            subtree_odd: pes.iter().map(|p| p.subtree_odd).collect(),
            reported_odd: pes.iter().map(|p| p.reported_odd).collect(),
            busy: pes.iter().map(|p| p.busy).collect(),
            growth: vec![0; graph.edge_count()],
            pe_stage: PeStage::Merging,
            global: GlobalStage::Growing,
            wait: 0,
        };
        let defect: Vec<bool> = pes.iter().map(|p| p.defect).collect();
        // The initial growing broadcast counts as an iteration only when
        // some PE actually reports an odd cluster.
        let growth_iterations = defect.iter().any(|&d| d) as u32;
        Ok(SyncSim {
            graph,
            defect,
            next: regs.clone(),
            cur: regs,
            cycle: 0,
            growth_iterations,
            counts: StageCounts::default(),
        })
    }

    pub fn is_terminated(&self) -> bool {
        self.cur.global == GlobalStage::Terminate
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn growth_iterations(&self) -> u32 {
        self.growth_iterations
    }

    pub fn global_stage(&self) -> GlobalStage {
        self.cur.global
    }

    pub fn growth(&self) -> &[u32] {
        &self.cur.growth
    }

    pub fn cluster_ids(&self) -> &[u32] {
        &self.cur.cluster_id
    }

    pub fn parents(&self) -> &[u32] {
        &self.cur.parent
    }

    pub fn odd_flags(&self) -> &[bool] {
        &self.cur.odd
    }

    pub fn busy_flags(&self) -> &[bool] {
        &self.cur.busy
    }

    /// Advance one clock cycle. Returns false once terminated.
    pub fn step(&mut self) -> bool {
        self.step_inner(None)
    }

    pub fn step_traced(&mut self, sink: &mut dyn FnMut(TraceEvent)) -> bool {
        self.step_inner(Some(sink))
    }

    fn step_inner(&mut self, sink: Option<&mut dyn FnMut(TraceEvent)>) -> bool {
        if self.is_terminated() {
            return false;
        }
        let graph = self.graph;
        let n_real = graph.real_count();
        let cur = &self.cur;
        let next = &mut self.next;

        // Controller.
        let mut re_entered_growing = false;
        next.global = cur.global;
        next.wait = cur.wait;
        match cur.global {
            GlobalStage::Growing => {
                next.global = GlobalStage::Merging;
                next.wait = 2;
            }
            GlobalStage::Merging => {
                if cur.wait > 0 {
                    next.wait = cur.wait - 1;
                } else if cur.busy[..n_real].iter().all(|&b| !b) {
                    if cur.reported_odd[..n_real].iter().all(|&o| !o) {
                        next.global = GlobalStage::Terminate;
                    } else {
                        next.global = GlobalStage::Growing;
                        re_entered_growing = true;
                    }
                }
            }
            GlobalStage::Terminate => unreachable!(),
        }

        // Stage transition: growing is broadcast, merging follows one cycle
        // later without coordination.
        next.pe_stage = if cur.global == GlobalStage::Growing {
            PeStage::Growing
        } else if cur.pe_stage == PeStage::Growing {
            PeStage::Merging
        } else {
            cur.pe_stage
        };

        // Growing logic (edge owners fire for exactly one cycle).
        if cur.pe_stage == PeStage::Growing {
            for (e, edge) in graph.edges().iter().enumerate() {
                let g = cur.growth[e];
                let w = edge.w;
                let (u, v) = (edge.u.index(), edge.v.index());
                next.growth[e] = if g < w && cur.cluster_id[u] != cur.cluster_id[v] {
                    let inc = cur.odd[u] as u32 + cur.odd[v] as u32;
                    (g + inc).min(w)
                } else {
                    g
                };
            }
        } else {
            next.growth.copy_from_slice(&cur.growth);
        }

        // Merging and checking logic, every cycle, every real PE.
        for v in 0..n_real {
            let vid = v as u32 + 1;
            let my_cid = cur.cluster_id[v];
            let my_odd = cur.odd[v];
            let mut best_cid = my_cid;
            let mut best_id = u32::MAX;
            let mut disagree = false;
            let mut subtree = self.defect[v];
            for &e in graph.incident_index(v) {
                let e = e as usize;
                let far = graph.other_endpoint_index(e, v);
                if cur.parent[far] == vid {
                    subtree ^= cur.subtree_odd[far];
                }
                if cur.growth[e] == graph.edge_weight(e) {
                    let c = cur.cluster_id[far];
                    if c != my_cid || cur.odd[far] != my_odd {
                        disagree = true;
                    }
                    let fid = far as u32 + 1;
                    if c < best_cid || (c == best_cid && best_id != u32::MAX && fid < best_id) {
                        best_cid = c;
                        best_id = fid;
                    }
                }
            }
            if best_cid < my_cid {
                next.cluster_id[v] = best_cid;
                next.parent[v] = best_id;
            } else {
                next.cluster_id[v] = my_cid;
                next.parent[v] = cur.parent[v];
            }
            next.subtree_odd[v] = subtree;
            next.odd[v] = if cur.parent[v] == vid {
                cur.subtree_odd[v]
            } else {
                cur.odd[(cur.parent[v] - 1) as usize]
            };
            next.busy[v] = disagree
                || cur.subtree_odd[v] != subtree
                || (cur.parent[v] == vid && cur.odd[v] != cur.subtree_odd[v]);
            next.reported_odd[v] = cur.odd[v];
        }

        match cur.global {
            GlobalStage::Growing => self.counts.growing += 1,
            GlobalStage::Merging => self.counts.merging += 1,
            GlobalStage::Terminate => {}
        }
        if re_entered_growing {
            self.growth_iterations += 1;
        }
        self.cycle += 1;

        if let Some(sink) = sink {
            self.emit_diff(sink);
        }
        std::mem::swap(&mut self.cur, &mut self.next);
        true
    }

    fn emit_diff(&self, sink: &mut dyn FnMut(TraceEvent)) {
        let cycle = self.cycle;
        let (cur, next) = (&self.cur, &self.next);
        if cur.global != next.global {
            sink(TraceEvent {
                cycle,
                vertex: 0,
                field: "global_stage",
                edge: None,
                old: cur.global as u64,
                new: next.global as u64,
            });
        }
        if cur.pe_stage != next.pe_stage {
            sink(TraceEvent {
                cycle,
                vertex: 0,
                field: "stage",
                edge: None,
                old: cur.pe_stage as u64,
                new: next.pe_stage as u64,
            });
        }
        for v in 0..self.graph.real_count() {
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
            field("cid", cur.cluster_id[v] as u64, next.cluster_id[v] as u64);
            field("parent", cur.parent[v] as u64, next.parent[v] as u64);
            field("odd", cur.odd[v] as u64, next.odd[v] as u64);
            field(
                "st_odd",
                cur.subtree_odd[v] as u64,
                next.subtree_odd[v] as u64,
            );
            field(
                "codd",
                cur.reported_odd[v] as u64,
                next.reported_odd[v] as u64,
            );
            field("busy", cur.busy[v] as u64, next.busy[v] as u64);
        }
        for e in 0..self.graph.edge_count() {
            if cur.growth[e] != next.growth[e] {
                let (u, v) = self.graph.endpoint_indices(e);
                sink(TraceEvent {
                    cycle,
                    vertex: u.min(v) as u32 + 1,
                    field: "growth",
                    edge: Some(e as u32),
                    old: cur.growth[e] as u64,
                    new: next.growth[e] as u64,
                });
            }
        }
    }

    /// Step until terminate or until `budget` cycles have elapsed.
    pub fn run(&mut self, budget: u64) -> Result<(), Error> {
        self.run_inner(budget, None)
    }

    fn run_inner(
        &mut self,
        budget: u64,
        mut sink: Option<&mut dyn FnMut(TraceEvent)>,
    ) -> Result<(), Error> {
        while !self.is_terminated() {
            if self.cycle >= budget {
                return Err(Error::CycleBudgetExceeded { budget });
            }
            match sink.as_deref_mut() {
                Some(s) => self.step_traced(s),
                None => self.step(),
            };
        }
        Ok(())
    }

    /// Final cluster partition; errors before termination.
    pub fn partition(&self) -> Result<crate::partition::Partition, Error> {
        if !self.is_terminated() {
            return Err(Error::NotTerminated);
        }
        Ok(partition_from_cluster_ids(
            self.graph,
            &self.cur.cluster_id,
            &self.cur.growth,
        ))
    }

    pub fn into_result(self) -> Result<DistDecodeResult, Error> {
        let partition = self.partition()?;
        Ok(DistDecodeResult {
            partition,
            parents: self.cur.parent.clone(),
            fully_grown: fully_grown_list(self.graph, &self.cur.growth),
            growth_iterations: self.growth_iterations,
            cycles: Some(self.cycle),
            stage_counts: self.counts,
        })
    }
}

/// Run the synchronous engine with the default cycle budget.
pub fn run_synchronous(
    graph: &DecodingGraph,
    syndrome: &Syndrome,
) -> Result<DistDecodeResult, Error> {
    let mut sim = SyncSim::new(graph, syndrome)?;
    sim.run(DEFAULT_CYCLE_BUDGET)?;
    sim.into_result()
}

/// As [`run_synchronous`] with register-change tracing.
pub fn run_synchronous_traced(
    graph: &DecodingGraph,
    syndrome: &Syndrome,
    budget: u64,
    sink: &mut dyn FnMut(TraceEvent),
) -> Result<DistDecodeResult, Error> {
    let mut sim = SyncSim::new(graph, syndrome)?;
    sim.run_inner(budget, Some(sink))?;
    sim.into_result()
}
