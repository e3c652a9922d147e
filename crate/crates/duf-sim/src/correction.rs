//! Correction extraction by peeling cluster spanning trees, plus the
//! scoring checks used by the harness.
//!
//! The distributed decoder leaves a parent forest behind; the serial
//! decoder builds one spanning tree per cluster first. Peeling processes
//! leaves before their parents, always taking the highest-id current leaf,
//! and pushes each pending defect flag across its parent edge. The output
//! flips exactly the defect set, so any leftover parity at a real root is a
//! decoder bug.

use std::collections::BinaryHeap;

use crate::error::Error;
use crate::graph::{DecodingGraph, EdgeIndex};
use crate::noise::{ErrorPattern, Syndrome};

/// Edges to flip back. Always a subset of the fully grown edges of the
/// decode result it was peeled from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrectionPattern {
    /// Ascending edge indices.
    pub edges: Vec<EdgeIndex>,
}

/// Rooted spanning forest over the decoding graph: for every vertex either
/// `None` (a root, or untouched by any cluster) or the parent vertex plus
/// the edge leading to it.
#[derive(Clone, Debug)]
pub struct SpanningForest {
    /// Indexed by dense vertex index; entries are (parent dense index, edge).
    pub parent: Vec<Option<(u32, EdgeIndex)>>,
}

/// Resolve a distributed decoder's parent pointers (vertex ids, self for
/// roots) into a forest, looking the connecting edges up in the graph.
pub fn forest_from_parents(
    graph: &DecodingGraph,
    parents: &[u32],
) -> Result<SpanningForest, Error> {
    debug_assert_eq!(parents.len(), graph.vertex_count());
    let mut forest = vec![None; graph.vertex_count()];
    for (v, &pid) in parents.iter().enumerate() {
        let vid = v as u32 + 1;
        if pid == vid {
            continue;
        }
        if pid == 0 || pid as usize > graph.vertex_count() {
            return Err(Error::InvalidForest {
                vertex: vid,
                parent: pid,
            });
        }
        let p = (pid - 1) as usize;
        let edge = graph
            .incident_index(v)
            .iter()
            .copied()
            .find(|&e| graph.other_endpoint_index(e as usize, v) == p)
            .ok_or(Error::InvalidForest {
                vertex: vid,
                parent: pid,
            })?;
        forest[v] = Some((pid - 1, edge));
    }
    Ok(SpanningForest { parent: forest })
}

/// Build a spanning tree per connected component of the fully grown edges,
/// breadth-first, expanding each vertex's incident grown edges in ascending
/// edge-index order. Roots sit at the lowest-id boundary member when the
/// component touches the boundary, else at the lowest-id member.
pub fn forest_from_grown(graph: &DecodingGraph, fully_grown: &[EdgeIndex]) -> SpanningForest {
    let n = graph.vertex_count();
    let mut adj: Vec<Vec<(u32, EdgeIndex)>> = vec![Vec::new(); n];
    let mut sorted = fully_grown.to_vec();
    sorted.sort_unstable();
    for &e in &sorted {
        let (u, v) = graph.endpoint_indices(e as usize);
        adj[u].push((v as u32, e));
        adj[v].push((u as u32, e));
    }

    let mut parent: Vec<Option<(u32, EdgeIndex)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut in_tree = vec![false; n];
    for start in 0..n {
        if seen[start] || adj[start].is_empty() {
            continue;
        }
        // Gather the component, then pick its root.
        let mut members = vec![start as u32];
        seen[start] = true;
        let mut i = 0;
        while i < members.len() {
            let v = members[i] as usize;
            i += 1;
            for &(far, _) in &adj[v] {
                if !seen[far as usize] {
                    seen[far as usize] = true;
                    members.push(far);
                }
            }
        }
        let root = members
            .iter()
            .copied()
            .filter(|&v| graph.is_boundary_index(v as usize))
            .min()
            .unwrap_or(start as u32) as usize;

        in_tree[root] = true;
        let mut queue = vec![root];
        let mut qi = 0;
        while qi < queue.len() {
            let v = queue[qi];
            qi += 1;
            for &(far, e) in &adj[v] {
                let far = far as usize;
                if !in_tree[far] {
                    in_tree[far] = true;
                    parent[far] = Some((v as u32, e));
                    queue.push(far);
                }
            }
        }
    }
    SpanningForest { parent }
}

/// Peel the forest leaves-first (highest current leaf id first): a leaf
/// carrying a pending defect flag contributes its parent edge and hands the
/// flag to its parent. Boundary roots absorb whatever reaches them; a real
/// root left holding a flag means the cluster had odd defect parity and no
/// boundary, which the decoders never produce.
pub fn peel(
    graph: &DecodingGraph,
    forest: &SpanningForest,
    syndrome: &Syndrome,
) -> Result<CorrectionPattern, Error> {
    let n = graph.vertex_count();
    debug_assert_eq!(forest.parent.len(), n);
    let mut pending = vec![false; n];
    for d in &syndrome.defects {
        pending[d.index()] = true;
    }

    let mut child_count = vec![0u32; n];
    for entry in forest.parent.iter().flatten() {
        child_count[entry.0 as usize] += 1;
    }

    let mut leaves: BinaryHeap<u32> = (0..n as u32)
        .filter(|&v| child_count[v as usize] == 0)
        .collect();
    let mut edges = Vec::new();
    while let Some(v) = leaves.pop() {
        let v = v as usize;
        match forest.parent[v] {
            Some((p, e)) => {
                if pending[v] {
                    edges.push(e);
                    pending[v] = false;
                    pending[p as usize] ^= true;
                }
                child_count[p as usize] -= 1;
                if child_count[p as usize] == 0 {
                    leaves.push(p);
                }
            }
            None => {
                if pending[v] && !graph.is_boundary_index(v) {
                    return Err(Error::OddClusterCorrection { root: v as u32 + 1 });
                }
                pending[v] = false;
            }
        }
    }
    edges.sort_unstable();
    Ok(CorrectionPattern { edges })
}

/// Symmetric difference of two ascending edge lists.
pub fn residual(error: &[EdgeIndex], correction: &[EdgeIndex]) -> Vec<EdgeIndex> {
    let mut out = Vec::with_capacity(error.len() + correction.len());
    let (mut i, mut j) = (0, 0);
    while i < error.len() || j < correction.len() {
        match (error.get(i), correction.get(j)) {
            (Some(&a), Some(&b)) if a == b => {
                i += 1;
                j += 1;
            }
            (Some(&a), Some(&b)) if a < b => {
                out.push(a);
                i += 1;
            }
            (Some(_), Some(&b)) => {
                out.push(b);
                j += 1;
            }
            (Some(&a), None) => {
                out.push(a);
                i += 1;
            }
            (None, Some(&b)) => {
                out.push(b);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// True iff `error XOR correction` has even incidence at every real vertex.
pub fn check_annihilation(
    graph: &DecodingGraph,
    error: &[EdgeIndex],
    correction: &[EdgeIndex],
) -> bool {
    let res = residual(error, correction);
    let mut parity = vec![false; graph.real_count()];
    for &e in &res {
        let (u, v) = graph.endpoint_indices(e as usize);
        if !graph.is_boundary_index(u) {
            parity[u] ^= true;
        }
        if !graph.is_boundary_index(v) {
            parity[v] ^= true;
        }
    }
    parity.iter().all(|&p| !p)
}

/// True iff the residual crosses the logical cut an odd number of times.
/// Errors unless the correction annihilates the syndrome first.
pub fn check_logical_failure(
    graph: &DecodingGraph,
    error: &[EdgeIndex],
    correction: &[EdgeIndex],
) -> Result<bool, Error> {
    if !check_annihilation(graph, error, correction) {
        return Err(Error::NotAnnihilated);
    }
    let res = residual(error, correction);
    let cut = graph.logical_cut();
    let crossings = res.iter().filter(|e| cut.binary_search(e).is_ok()).count();
    Ok(crossings % 2 == 1)
}

/// Scoring summary for one shot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotOutcome {
    pub annihilated: bool,
    pub logical_failure: bool,
    pub residual: Vec<EdgeIndex>,
}

pub fn evaluate_shot(
    graph: &DecodingGraph,
    error: &ErrorPattern,
    correction: &CorrectionPattern,
) -> ShotOutcome {
    let res = residual(&error.flipped, &correction.edges);
    let annihilated = check_annihilation(graph, &error.flipped, &correction.edges);
    let logical_failure = if annihilated {
        let cut = graph.logical_cut();
        res.iter().filter(|e| cut.binary_search(e).is_ok()).count() % 2 == 1
    } else {
        false
    };
    ShotOutcome {
        annihilated,
        logical_failure,
        residual: res,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeKind, GraphConfig, VertexId};

    fn g3() -> DecodingGraph {
        DecodingGraph::build(GraphConfig::unweighted(3, 1)).unwrap()
    }

    fn syndrome(ids: &[u32]) -> Syndrome {
        Syndrome::new(ids.iter().map(|&i| VertexId(i)).collect())
    }

    #[test]
    fn two_defects_one_edge() {
        let g = g3();
        // Grown edge 4 joins vertices 2 and 3; its spanning tree is itself.
        let forest = forest_from_grown(&g, &[4]);
        let corr = peel(&g, &forest, &syndrome(&[2, 3])).unwrap();
        assert_eq!(corr.edges, vec![4]);
    }

    #[test]
    fn defect_clean_defect_chain() {
        let g = g3();
        // Edges 1 = (1,2) and 4 = (2,3); defects at the chain ends.
        let forest = forest_from_grown(&g, &[1, 4]);
        let corr = peel(&g, &forest, &syndrome(&[1, 3])).unwrap();
        assert_eq!(corr.edges, vec![1, 4]);
    }

    #[test]
    fn boundary_rooted_peel() {
        let g = g3();
        // Edge 6 joins vertex 4 to a boundary vertex; the tree roots there.
        let forest = forest_from_grown(&g, &[6]);
        let corr = peel(&g, &forest, &syndrome(&[4])).unwrap();
        assert_eq!(corr.edges, vec![6]);
    }

    #[test]
    fn odd_real_cluster_is_an_error() {
        let g = g3();
        let forest = forest_from_grown(&g, &[4]);
        let err = peel(&g, &forest, &syndrome(&[2])).unwrap_err();
        assert!(matches!(err, Error::OddClusterCorrection { root: 2 }));
    }

    #[test]
    fn annihilation_trivia() {
        let g = g3();
        assert!(check_annihilation(&g, &[1, 4], &[1, 4]));
        assert!(!check_annihilation(&g, &[1], &[]));
        assert!(check_annihilation(&g, &[], &[]));
    }

    #[test]
    fn logical_failure_cases() {
        let g = g3();
        // Empty residual: no failure.
        assert!(!check_logical_failure(&g, &[], &[]).unwrap());
        // Full left-to-right chain: boundary(2) + (2,3) + boundary(3), i.e.
        // edges 0, 4, 8. Crosses the left cut once.
        assert!(check_logical_failure(&g, &[0, 4, 8], &[]).unwrap());
        // Checking a non-annihilated residual is an error.
        assert!(matches!(
            check_logical_failure(&g, &[1], &[]),
            Err(Error::NotAnnihilated)
        ));
    }

    #[test]
    fn closed_loop_is_invisible() {
        // A spatio-temporal square: the same spatial edge in two rounds plus
        // the two temporal edges joining its endpoints.
        let g = DecodingGraph::build(GraphConfig::unweighted(3, 2)).unwrap();
        let e0 = 1u32; // (1,2) round 0
        let edge = &g.edges()[e0 as usize];
        let (u, v) = (edge.u, edge.v);
        let e1 = g
            .edges()
            .iter()
            .position(|e| e.kind == EdgeKind::Spatial && e.u.0 == u.0 + 4 && e.v.0 == v.0 + 4)
            .unwrap() as u32;
        let tu = g
            .edges()
            .iter()
            .position(|e| e.kind == EdgeKind::Temporal && e.u == u)
            .unwrap() as u32;
        let tv = g
            .edges()
            .iter()
            .position(|e| e.kind == EdgeKind::Temporal && e.u == v)
            .unwrap() as u32;
        let mut loop_edges = vec![e0, e1, tu, tv];
        loop_edges.sort_unstable();
        assert!(check_annihilation(&g, &loop_edges, &[]));
        assert!(!check_logical_failure(&g, &loop_edges, &[]).unwrap());
        // Adding the loop to a failing residual does not change the verdict.
        let chain = vec![0, 4, 8];
        let combined = residual(&chain, &loop_edges);
        assert_eq!(
            check_logical_failure(&g, &chain, &[]).unwrap(),
            check_logical_failure(&g, &combined, &[]).unwrap()
        );
    }

    #[test]
    fn forest_from_parents_resolves_edges() {
        let g = g3();
        // Vertex 3 parented to 2 (edge 4), others roots.
        let mut parents: Vec<u32> = (1..=g.vertex_count() as u32).collect();
        parents[2] = 2;
        let forest = forest_from_parents(&g, &parents).unwrap();
        assert_eq!(forest.parent[2], Some((1, 4)));
        assert_eq!(forest.parent[1], None);
        // Non-adjacent parent is rejected.
        let mut bad: Vec<u32> = (1..=g.vertex_count() as u32).collect();
        bad[0] = 4; // vertices 1 and 4 share no edge
        assert!(matches!(
            forest_from_parents(&g, &bad),
            Err(Error::InvalidForest {
                vertex: 1,
                parent: 4
            })
        ));
    }
}
