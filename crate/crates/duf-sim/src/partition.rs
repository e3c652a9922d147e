//! Canonical cluster partitions over the real vertices, used to compare
//! decoder outputs across implementations.

use serde::Serialize;

use crate::graph::{DecodingGraph, EdgeIndex, VertexId};

/// Partition of the real vertices into clusters. `labels[i]` is the lowest
/// real vertex id inside the cluster of the vertex with dense index `i`;
/// vertices never touched by any fully grown edge label themselves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    labels: Vec<u32>,
}

impl Partition {
    pub fn from_labels(labels: Vec<u32>) -> Self {
        Partition { labels }
    }

    /// Connected components of the subgraph spanned by `edges`, restricted
    /// to real vertices. Boundary vertices may appear inside a component but
    /// never contribute to its label.
    pub fn from_edge_subgraph<I>(graph: &DecodingGraph, edges: I) -> Self
    where
        I: IntoIterator<Item = EdgeIndex>,
    {
        let n = graph.vertex_count();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for e in edges {
            let (u, v) = graph.endpoint_indices(e as usize);
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        let n_real = graph.real_count();
        let mut labels: Vec<u32> = (1..=n_real as u32).collect();
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        for start in 0..n_real {
            if seen[start] || adj[start].is_empty() {
                continue;
            }
            seen[start] = true;
            stack.push(start as u32);
            let mut members = Vec::new();
            while let Some(v) = stack.pop() {
                members.push(v);
                for &far in &adj[v as usize] {
                    if !seen[far as usize] {
                        seen[far as usize] = true;
                        stack.push(far);
                    }
                }
            }
            // Ascending scan: `start` is the lowest real index in the component.
            let label = start as u32 + 1;
            for v in members {
                if (v as usize) < n_real {
                    labels[v as usize] = label;
                }
            }
        }
        Partition { labels }
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Clusters holding at least two vertices, each sorted, ordered by label.
    pub fn nontrivial_clusters(&self) -> Vec<Vec<VertexId>> {
        let mut by_label = std::collections::BTreeMap::<u32, Vec<VertexId>>::new();
        for (i, &l) in self.labels.iter().enumerate() {
            by_label.entry(l).or_default().push(VertexId::from_index(i));
        }
        by_label.into_values().filter(|c| c.len() > 1).collect()
    }
}
