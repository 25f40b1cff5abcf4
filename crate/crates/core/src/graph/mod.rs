//! Attributed undirected graphs: data model, persistence, preprocessing and statistics.

mod io;
mod ops;
mod stats;

pub use io::{load_graph, load_split, save_graph, save_split};
pub use ops::{largest_connected_component, random_split, sbm_generate, sparsify, SbmParams};
pub use stats::{
    characteristic_path_length, degree_entropy, gini_coefficient, graph_statistics,
    power_law_exponent, triangle_count, GraphStats,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Undirected, unweighted graph with a dense feature row and a label per node.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    features: DenseMatrix,
    labels: Vec<usize>,
    num_labels: usize,
}

impl Graph {
    /// Validates and canonicalizes. Symmetric duplicates collapse to one edge;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn new(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: DenseMatrix,
        labels: Vec<usize>,
        num_labels: usize,
    ) -> Result<Self> {
        let mut canon = Vec::new();
        for (u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) has an endpoint outside 0..{num_nodes}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        canon.dedup();
        if features.rows() != num_nodes {
            return Err(Error::InvalidGraph(format!(
                "feature matrix has {} rows for {num_nodes} nodes",
                features.rows()
            )));
        }
        if labels.len() != num_nodes {
            return Err(Error::InvalidGraph(format!(
                "{} labels for {num_nodes} nodes",
                labels.len()
            )));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= num_labels) {
            return Err(Error::InvalidGraph(format!(
                "label {l} of node {i} is not below num_labels {num_labels}"
            )));
        }
        Ok(Self {
            num_nodes,
            edges: canon,
            features,
            labels,
            num_labels,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn feat_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_nodes];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn average_degree(&self) -> f64 {
        if self.num_nodes == 0 {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / self.num_nodes as f64
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Same nodes, features and labels with a different edge set.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        Graph::new(
            self.num_nodes,
            edges,
            self.features.clone(),
            self.labels.clone(),
            self.num_labels,
        )
    }

    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Graph> {
        Graph::new(
            self.num_nodes,
            self.edges.iter().copied(),
            self.features.clone(),
            labels,
            self.num_labels,
        )
    }

    /// Induced subgraph on `nodes`, reindexed in the given order.
    pub fn induced(&self, nodes: &[usize]) -> Graph {
        let mut map = vec![usize::MAX; self.num_nodes];
        for (new, &old) in nodes.iter().enumerate() {
            map[old] = new;
        }
        let edges = self.edges.iter().filter_map(|&(u, v)| {
            let (a, b) = (map[u], map[v]);
            (a != usize::MAX && b != usize::MAX).then_some((a, b))
        });
        Graph::new(
            nodes.len(),
            edges,
            self.features.select_rows(nodes),
            nodes.iter().map(|&i| self.labels[i]).collect(),
            self.num_labels,
        )
        .expect("induced subgraph of a valid graph is valid")
    }
}

/// Train/validation/test partition of node indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    /// Number of nodes the split covers.
    pub fn num_nodes(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    /// Checks that the three sets partition `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.validation).chain(&self.test) {
            if i >= n || seen[i] {
                return Err(Error::InvalidGraph(format!(
                    "split is not a partition of 0..{n} (node {i})"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidGraph(format!("split does not cover 0..{n}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feats(n: usize) -> DenseMatrix {
        DenseMatrix::zeros(n, 1)
    }

    #[test]
    fn symmetric_pair_dedups() {
        let g = Graph::new(3, [(0, 1), (1, 0)], feats(3), vec![0; 3], 1).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.degrees(), vec![1, 1, 0]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::new(3, [(0, 5)], feats(3), vec![0; 3], 1).is_err());
        assert!(Graph::new(3, [(1, 1)], feats(3), vec![0; 3], 1).is_err());
        assert!(Graph::new(3, [], feats(3), vec![0, 0, 2], 2).is_err());
        assert!(Graph::new(3, [], feats(2), vec![0; 3], 1).is_err());
    }

    #[test]
    fn split_validation() {
        let s = SplitSpec {
            seed: 0,
            train: vec![0],
            validation: vec![1],
            test: vec![2],
        };
        assert!(s.validate(3).is_ok());
        assert!(s.validate(4).is_err());
        let dup = SplitSpec {
            test: vec![1, 2],
            ..s
        };
        assert!(dup.validate(3).is_err());
    }
}
