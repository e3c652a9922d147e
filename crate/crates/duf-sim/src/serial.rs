//! Serial union-find decoder: the reference the distributed simulations are
//! checked against.
//!
//! The decoder alternates two stages until no odd cluster remains. Growing:
//! every odd cluster raises the growth of each edge leaving it by one, so an
//! edge between two distinct odd clusters gains two units per pass. Merging:
//! clusters joined by newly fully grown edges are unioned. A cluster is odd
//! when it holds an odd number of defects and no boundary vertex.
//!
//! The union-find representative is always the lowest vertex id of the
//! cluster, which is exactly the cluster id the distributed decoder
//! converges to; path compression does not disturb that choice.

use crate::correction;
use crate::error::Error;
use crate::graph::{DecodingGraph, EdgeIndex};
use crate::noise::Syndrome;
use crate::partition::Partition;

/// Disjoint sets over the graph vertices with per-root defect parity,
/// boundary-touch flag and member list. Union keeps the lowest dense index
/// (lowest id) as root.
pub struct DisjointSets {
    parent: Vec<u32>,
    parity: Vec<bool>,
    boundary: Vec<bool>,
    members: Vec<Vec<u32>>,
}

impl DisjointSets {
    pub fn new(graph: &DecodingGraph, syndrome: &Syndrome) -> Result<Self, Error> {
        let n = graph.vertex_count();
        let mut parity = vec![false; n];
        for d in &syndrome.defects {
            if d.0 == 0 || d.0 as usize > n || graph.is_boundary_index(d.index()) {
                return Err(Error::InvalidDefect(d.0));
            }
            parity[d.index()] = true;
        }
        let boundary = (0..n).map(|v| graph.is_boundary_index(v)).collect();
        Ok(DisjointSets {
            parent: (0..n as u32).collect(),
            parity,
            boundary,
            members: (0..n as u32).map(|v| vec![v]).collect(),
        })
    }

    pub fn find(&mut self, v: u32) -> u32 {
        let mut root = v;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = v;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Union by minimum id; returns the surviving root. Merged parity is the
    /// XOR of the parities, merged boundary flag the OR.
    pub fn union(&mut self, a: u32, b: u32) -> u32 {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return ra;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        let p = self.parity[hi as usize];
        self.parity[lo as usize] ^= p;
        self.boundary[lo as usize] |= self.boundary[hi as usize];
        let moved = std::mem::take(&mut self.members[hi as usize]);
        self.members[lo as usize].extend(moved);
        lo
    }

    /// Only valid for roots.
    pub fn is_odd_root(&self, root: u32) -> bool {
        self.parity[root as usize] && !self.boundary[root as usize]
    }

    pub fn members(&self, root: u32) -> &[u32] {
        &self.members[root as usize]
    }
}

#[derive(Clone, Debug)]
pub struct SerialDecodeResult {
    pub partition: Partition,
    /// Ascending indices of every edge that reached its weight.
    pub fully_grown: Vec<EdgeIndex>,
    /// Number of growing passes executed.
    pub growth_iterations: u32,
    /// Peeled correction; flips exactly the defect set.
    pub correction: Vec<EdgeIndex>,
}

/// Stepwise decoder, exposed so tests can inspect state between passes.
pub struct SerialDecoder<'g> {
    graph: &'g DecodingGraph,
    syndrome: Syndrome,
    sets: DisjointSets,
    growth: Vec<u32>,
    fully_grown: Vec<EdgeIndex>,
    iterations: u32,
}

impl<'g> SerialDecoder<'g> {
    pub fn new(graph: &'g DecodingGraph, syndrome: &Syndrome) -> Result<Self, Error> {
        Ok(SerialDecoder {
            graph,
            syndrome: syndrome.clone(),
            sets: DisjointSets::new(graph, syndrome)?,
            growth: vec![0; graph.edge_count()],
            fully_grown: Vec::new(),
            iterations: 0,
        })
    }

    /// Roots of the current odd clusters, ascending.
    pub fn odd_roots(&mut self) -> Vec<u32> {
        let mut roots = Vec::new();
        for i in 0..self.syndrome.defects.len() {
            let v = self.syndrome.defects[i].index() as u32;
            let r = self.sets.find(v);
            if self.sets.is_odd_root(r) {
                roots.push(r);
            }
        }
        roots.sort_unstable();
        roots.dedup();
        roots
    }

    /// One growing-plus-merging pass. Returns false (and does nothing) once
    /// no odd cluster remains.
    pub fn step(&mut self) -> bool {
        let odd = self.odd_roots();
        if odd.is_empty() {
            return false;
        }
        self.step_with_order(&odd);
        true
    }

    /// Same pass with an explicit odd-cluster order; the outcome must not
    /// depend on it (growth increments are additive within a pass).
    pub fn step_with_order(&mut self, odd_roots: &[u32]) {
        self.iterations += 1;
        let mut newly = Vec::new();
        for &root in odd_roots {
            debug_assert!(self.sets.is_odd_root(root));
            let count = self.sets.members(root).len();
            for mi in 0..count {
                let v = self.sets.members(root)[mi] as usize;
                for ei in 0..self.graph.incident_index(v).len() {
                    let e = self.graph.incident_index(v)[ei];
                    let far = self.graph.other_endpoint_index(e as usize, v) as u32;
                    if self.sets.find(far) == root {
                        continue;
                    }
                    let w = self.graph.edge_weight(e as usize);
                    let g = &mut self.growth[e as usize];
                    if *g < w {
                        *g += 1;
                        if *g == w {
                            newly.push(e);
                        }
                    }
                }
            }
        }
        for &e in &newly {
            let (u, v) = self.graph.endpoint_indices(e as usize);
            self.sets.union(u as u32, v as u32);
        }
        self.fully_grown.extend_from_slice(&newly);
    }

    pub fn growth(&self) -> &[u32] {
        &self.growth
    }

    pub fn growth_iterations(&self) -> u32 {
        self.iterations
    }

    pub fn sets_mut(&mut self) -> &mut DisjointSets {
        &mut self.sets
    }

    /// Partition labels, spanning-tree construction and peeling.
    pub fn into_result(mut self) -> Result<SerialDecodeResult, Error> {
        debug_assert!(self.odd_roots().is_empty());
        let n_real = self.graph.real_count();
        let mut labels = vec![0u32; n_real];
        for (v, label) in labels.iter_mut().enumerate() {
            // Boundary ids sit above all real ids, so the min-id root of any
            // cluster containing a real vertex is itself real.
            *label = self.sets.find(v as u32) + 1;
        }
        let partition = Partition::from_labels(labels);
        let mut fully_grown = self.fully_grown;
        fully_grown.sort_unstable();
        let forest = correction::forest_from_grown(self.graph, &fully_grown);
        let corr = correction::peel(self.graph, &forest, &self.syndrome)?;
        Ok(SerialDecodeResult {
            partition,
            fully_grown,
            growth_iterations: self.iterations,
            correction: corr.edges,
        })
    }
}

/// Decode one syndrome with the serial union-find algorithm.
pub fn decode_serial(
    graph: &DecodingGraph,
    syndrome: &Syndrome,
) -> Result<SerialDecodeResult, Error> {
    let mut dec = SerialDecoder::new(graph, syndrome)?;
    // Growth is bounded by the total weight, so more passes than that means
    // an odd cluster that can never resolve (possible only on graphs whose
    // components lack boundary vertices).
    let budget: u64 = graph.edges().iter().map(|e| e.w as u64).sum::<u64>() + 1;
    while dec.step() {
        if dec.growth_iterations() as u64 > budget {
            return Err(Error::CycleBudgetExceeded { budget });
        }
    }
    dec.into_result()
}
