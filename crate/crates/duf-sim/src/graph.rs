//! Decoding graphs for the rotated surface code (Z-ancilla side).
//!
//! Vertices are ancilla measurement outcomes, one layer per measurement
//! round. Every data qubit contributes one *spatial* edge inside a round:
//! between the two Z ancillas that check it, or out to a virtual *boundary*
//! vertex when only one does. Measurement errors contribute *temporal* edges
//! between the same ancilla in consecutive rounds.
//!
//! Real vertices are numbered `1..=n` in row-major order per round starting
//! at the bottom-left ancilla; boundary vertices occupy the id range above
//! `n` and are flagged. The geometry places data qubits on the integer grid
//! `(r, c)` with `0 <= r, c < d` and Z ancillas on the checkerboard
//! positions `(row, col)` with `-1 <= row <= d-1`, `0 <= col <= d-2` and
//! `row + col` even, which yields `(d+1)(d-1)/2` ancillas per round with the
//! weight-2 boundary stabilizers on the top and bottom rows.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Identifier of a decoding-graph vertex. Real vertices use `1..=n`,
/// boundary vertices the range above `n`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    /// Dense storage index of this vertex (ids are 1-based).
    #[inline]
    pub fn index(self) -> usize {
        debug_assert!(self.0 >= 1);
        (self.0 - 1) as usize
    }

    #[inline]
    pub(crate) fn from_index(index: usize) -> Self {
        VertexId(index as u32 + 1)
    }
}

impl std::fmt::Debug for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense edge index into [`DecodingGraph::edges`].
pub type EdgeIndex = u32;

/// Weight every edge carries when the graph is unweighted. An edge grows by
/// one unit from each incident odd cluster per iteration, so weight 2 makes
/// an edge between two odd clusters fully grown in a single iteration.
pub const UNWEIGHTED_EDGE_WEIGHT: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    /// Data-qubit error inside one round.
    Spatial,
    /// Measurement error linking the same ancilla in consecutive rounds.
    Temporal,
    /// Data-qubit error checked by a single ancilla; the far endpoint is a
    /// virtual boundary vertex.
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Unweighted,
    Weighted { w_max: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Code distance; odd, at least 3.
    pub d: u32,
    /// Number of measurement rounds, at least 1.
    pub rounds: u32,
    pub weight_mode: WeightMode,
}

impl GraphConfig {
    /// Unweighted graph with the conventional `rounds = d`.
    pub fn unweighted(d: u32, rounds: u32) -> Self {
        GraphConfig {
            d,
            rounds,
            weight_mode: WeightMode::Unweighted,
        }
    }

    pub fn weighted(d: u32, rounds: u32, w_max: u32) -> Self {
        GraphConfig {
            d,
            rounds,
            weight_mode: WeightMode::Weighted { w_max },
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.d < 3 || self.d.is_multiple_of(2) {
            return Err(Error::InvalidDistance(self.d));
        }
        if self.rounds < 1 {
            return Err(Error::InvalidRounds(self.rounds));
        }
        if let WeightMode::Weighted { w_max } = self.weight_mode {
            if w_max < 2 {
                return Err(Error::InvalidWeightMax(w_max));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexInfo {
    pub id: VertexId,
    pub round: u32,
    /// Ancilla row for real vertices; data-qubit row for boundary vertices.
    pub row: i32,
    pub col: i32,
    pub is_boundary: bool,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub kind: EdgeKind,
    pub w: u32,
}

impl Edge {
    /// The endpoint other than `v`, assuming `v` is an endpoint.
    #[inline]
    pub fn other(&self, v: VertexId) -> VertexId {
        if self.u == v {
            self.v
        } else {
            self.u
        }
    }
}

/// Immutable after construction; shared read-only by any number of decoders.
#[derive(Clone, Debug)]
pub struct DecodingGraph {
    config: GraphConfig,
    n_real: u32,
    vertices: Vec<VertexInfo>,
    edges: Vec<Edge>,
    incident: Vec<Vec<EdgeIndex>>,
    logical_cut: Vec<EdgeIndex>,
}

impl DecodingGraph {
    /// Build the decoding graph for `config`. Deterministic: the same config
    /// always produces identical ids, edge indices and serialization.
    pub fn build(config: GraphConfig) -> Result<Self, Error> {
        config.validate()?;
        let d = config.d as i32;
        let rounds = config.rounds as usize;
        let per_round = ((config.d + 1) * (config.d - 1) / 2) as usize;

        // Ancilla positions of one layer, row-major from the bottom-left.
        let mut layer: Vec<(i32, i32)> = Vec::with_capacity(per_round);
        for row in -1..d {
            for col in 0..d - 1 {
                if (row + col).rem_euclid(2) == 0 {
                    layer.push((row, col));
                }
            }
        }
        debug_assert_eq!(layer.len(), per_round);

        // (row, col) -> slot within the layer.
        let slot_index = |row: i32, col: i32| ((row + 1) * (d - 1) + col) as usize;
        let mut slot = vec![u32::MAX; ((d + 1) * (d - 1)) as usize];
        for (i, &(row, col)) in layer.iter().enumerate() {
            slot[slot_index(row, col)] = i as u32;
        }

        let n_real = (per_round * rounds) as u32;
        let mut vertices: Vec<VertexInfo> = Vec::with_capacity(n_real as usize);
        for round in 0..rounds {
            for &(row, col) in &layer {
                vertices.push(VertexInfo {
                    id: VertexId::from_index(vertices.len()),
                    round: round as u32,
                    row,
                    col,
                    is_boundary: false,
                });
            }
        }

        let ancilla_id = |round: usize, row: i32, col: i32| -> Option<u32> {
            if !(0..=d - 2).contains(&col) {
                return None;
            }
            let s = slot[slot_index(row, col)];
            debug_assert_ne!(s, u32::MAX, "checkerboard slot must exist");
            Some((round * per_round) as u32 + s + 1)
        };

        let mut edges: Vec<Edge> = Vec::new();
        let mut logical_cut: Vec<EdgeIndex> = Vec::new();

        // One spatial or boundary edge per data qubit per round.
        for round in 0..rounds {
            for r in 0..d {
                for c in 0..d {
                    // The two checkerboard candidates that check qubit (r, c).
                    let (p, q) = if (r + c) % 2 == 0 {
                        ((r - 1, c - 1), (r, c))
                    } else {
                        ((r - 1, c), (r, c - 1))
                    };
                    let a = ancilla_id(round, p.0, p.1);
                    let b = ancilla_id(round, q.0, q.1);
                    match (a, b) {
                        (Some(x), Some(y)) => {
                            edges.push(Edge {
                                u: VertexId(x.min(y)),
                                v: VertexId(x.max(y)),
                                kind: EdgeKind::Spatial,
                                w: UNWEIGHTED_EDGE_WEIGHT,
                            });
                        }
                        (Some(x), None) | (None, Some(x)) => {
                            let bid = VertexId::from_index(vertices.len());
                            vertices.push(VertexInfo {
                                id: bid,
                                round: round as u32,
                                row: r,
                                col: c,
                                is_boundary: true,
                            });
                            if c == 0 {
                                logical_cut.push(edges.len() as EdgeIndex);
                            }
                            edges.push(Edge {
                                u: VertexId(x),
                                v: bid,
                                kind: EdgeKind::Boundary,
                                w: UNWEIGHTED_EDGE_WEIGHT,
                            });
                        }
                        (None, None) => unreachable!("every data qubit touches a Z ancilla"),
                    }
                }
            }
        }

        // Temporal edges between consecutive rounds, ancilla by ancilla.
        for round in 0..rounds.saturating_sub(1) {
            for i in 0..per_round {
                let u = (round * per_round + i) as u32 + 1;
                edges.push(Edge {
                    u: VertexId(u),
                    v: VertexId(u + per_round as u32),
                    kind: EdgeKind::Temporal,
                    w: UNWEIGHTED_EDGE_WEIGHT,
                });
            }
        }

        let mut incident: Vec<Vec<EdgeIndex>> = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            incident[e.u.index()].push(i as EdgeIndex);
            incident[e.v.index()].push(i as EdgeIndex);
        }

        let graph = DecodingGraph {
            config,
            n_real,
            vertices,
            edges,
            incident,
            logical_cut,
        };
        graph.debug_check_counts();
        Ok(graph)
    }

    fn debug_check_counts(&self) {
        #[cfg(debug_assertions)]
        {
            let d = self.config.d as usize;
            let rounds = self.config.rounds as usize;
            let spatial = self
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Spatial)
                .count();
            let boundary = self
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Boundary)
                .count();
            let temporal = self
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Temporal)
                .count();
            assert_eq!(spatial, rounds * d * (d - 2));
            assert_eq!(boundary, rounds * 2 * d);
            assert_eq!(temporal, (d * d - 1) / 2 * (rounds - 1));
            assert_eq!(self.logical_cut.len(), rounds * d);
        }
    }

    /// Arbitrary graph for decoder tests; not a surface-code layout.
    #[doc(hidden)]
    pub fn custom(n_real: u32, n_boundary: u32, edges: Vec<(u32, u32, EdgeKind, u32)>) -> Self {
        let total = (n_real + n_boundary) as usize;
        let vertices = (0..total)
            .map(|i| VertexInfo {
                id: VertexId::from_index(i),
                round: 0,
                row: i as i32,
                col: 0,
                is_boundary: i >= n_real as usize,
            })
            .collect();
        let edges: Vec<Edge> = edges
            .into_iter()
            .map(|(u, v, kind, w)| Edge {
                u: VertexId(u),
                v: VertexId(v),
                kind,
                w,
            })
            .collect();
        let mut incident: Vec<Vec<EdgeIndex>> = vec![Vec::new(); total];
        for (i, e) in edges.iter().enumerate() {
            incident[e.u.index()].push(i as EdgeIndex);
            incident[e.v.index()].push(i as EdgeIndex);
        }
        DecodingGraph {
            config: GraphConfig::unweighted(3, 1),
            n_real,
            vertices,
            edges,
            incident,
            logical_cut: Vec::new(),
        }
    }

    pub fn config(&self) -> &GraphConfig {
        &self.config
    }

    /// Number of real (ancilla-measurement) vertices.
    pub fn real_count(&self) -> usize {
        self.n_real as usize
    }

    pub fn boundary_count(&self) -> usize {
        self.vertices.len() - self.n_real as usize
    }

    /// Real plus boundary vertices.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[VertexInfo] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, v: VertexId) -> Result<&VertexInfo, Error> {
        self.vertices
            .get(self.check_vertex(v)?)
            .ok_or(Error::UnknownVertex(v.0))
    }

    pub fn edge(&self, e: EdgeIndex) -> Result<&Edge, Error> {
        self.edges.get(e as usize).ok_or(Error::UnknownEdge(e))
    }

    pub fn is_boundary(&self, v: VertexId) -> Result<bool, Error> {
        Ok(self.check_vertex(v)? >= self.n_real as usize)
    }

    /// Edges incident to `v`, ascending by edge index.
    pub fn incident_edges(&self, v: VertexId) -> Result<&[EdgeIndex], Error> {
        Ok(&self.incident[self.check_vertex(v)?])
    }

    /// Vertices adjacent to `v` (the far endpoint of each incident edge).
    pub fn adjacent_vertices(&self, v: VertexId) -> Result<Vec<VertexId>, Error> {
        let idx = self.check_vertex(v)?;
        Ok(self.incident[idx]
            .iter()
            .map(|&e| self.edges[e as usize].other(v))
            .collect())
    }

    pub fn other_endpoint(&self, e: EdgeIndex, v: VertexId) -> Result<VertexId, Error> {
        let edge = self.edge(e)?;
        self.check_vertex(v)?;
        if edge.u != v && edge.v != v {
            return Err(Error::NotAnEndpoint {
                vertex: v.0,
                edge: e,
            });
        }
        Ok(edge.other(v))
    }

    /// Boundary edges attached to the left side of the lattice, every round.
    /// A residual error with odd parity on this set flips the logical state.
    pub fn logical_cut(&self) -> &[EdgeIndex] {
        &self.logical_cut
    }

    /// Assign per-edge weights (weighted mode only). `weights[i]` applies to
    /// edge `i` and must lie in `[2, w_max]`.
    pub fn set_weights(&mut self, weights: &[u32]) -> Result<(), Error> {
        let w_max = match self.config.weight_mode {
            WeightMode::Weighted { w_max } => w_max,
            WeightMode::Unweighted => return Err(Error::NotWeightedMode),
        };
        if weights.len() != self.edges.len() {
            return Err(Error::WeightLength {
                got: weights.len(),
                expected: self.edges.len(),
            });
        }
        for &w in weights {
            if w < 2 || w > w_max {
                return Err(Error::WeightRange { w, w_max });
            }
        }
        for (e, &w) in self.edges.iter_mut().zip(weights) {
            e.w = w;
        }
        Ok(())
    }

    /// Serializable view of the whole graph.
    pub fn dump(&self) -> GraphDump<'_> {
        GraphDump {
            config: &self.config,
            vertices: &self.vertices,
            edges: self
                .edges
                .iter()
                .enumerate()
                .map(|(i, e)| EdgeDump {
                    index: i as EdgeIndex,
                    u: e.u,
                    v: e.v,
                    kind: e.kind,
                    w: e.w,
                })
                .collect(),
        }
    }

    #[inline]
    fn check_vertex(&self, v: VertexId) -> Result<usize, Error> {
        if v.0 >= 1 && (v.0 as usize) <= self.vertices.len() {
            Ok(v.index())
        } else {
            Err(Error::UnknownVertex(v.0))
        }
    }

    // Unchecked fast paths for the decoders (dense indices).

    #[inline]
    pub(crate) fn incident_index(&self, idx: usize) -> &[EdgeIndex] {
        &self.incident[idx]
    }

    #[inline]
    pub(crate) fn endpoint_indices(&self, e: usize) -> (usize, usize) {
        let edge = &self.edges[e];
        (edge.u.index(), edge.v.index())
    }

    #[inline]
    pub(crate) fn other_endpoint_index(&self, e: usize, idx: usize) -> usize {
        let (u, v) = self.endpoint_indices(e);
        if u == idx {
            v
        } else {
            debug_assert_eq!(v, idx);
            u
        }
    }

    #[inline]
    pub(crate) fn edge_weight(&self, e: usize) -> u32 {
        self.edges[e].w
    }

    #[inline]
    pub(crate) fn is_boundary_index(&self, idx: usize) -> bool {
        idx >= self.n_real as usize
    }
}

#[derive(Serialize)]
pub struct GraphDump<'a> {
    pub config: &'a GraphConfig,
    pub vertices: &'a [VertexInfo],
    pub edges: Vec<EdgeDump>,
}

#[derive(Serialize)]
pub struct EdgeDump {
    pub index: EdgeIndex,
    pub u: VertexId,
    pub v: VertexId,
    pub kind: EdgeKind,
    pub w: u32,
}

/// Quantize per-edge error probabilities into integer weights in
/// `[2, w_max]`, proportional to `-log(p)` over the observed range of the
/// batch: the most likely edge maps to 2, the least likely to `w_max`.
/// A batch with a single distinct probability maps entirely to 2.
pub fn quantized_weights(probs: &[f64], w_max: u32) -> Result<Vec<u32>, Error> {
    if w_max < 2 {
        return Err(Error::InvalidWeightMax(w_max));
    }
    if probs.iter().any(|&p| p <= 0.0 || p >= 1.0) {
        return Err(Error::InvalidParameter(
            "edge probabilities must lie in (0, 1)".into(),
        ));
    }
    let p_min = probs.iter().cloned().fold(f64::INFINITY, f64::min);
    let p_max = probs.iter().cloned().fold(0.0f64, f64::max);
    if p_min == p_max {
        return Ok(vec![2; probs.len()]);
    }
    let span = p_max.ln() - p_min.ln();
    Ok(probs
        .iter()
        .map(|&p| {
            let t = (p_max.ln() - p.ln()) / span;
            let w = 2.0 + (w_max - 2) as f64 * t;
            (w.round() as u32).clamp(2, w_max)
        })
        .collect())
}
