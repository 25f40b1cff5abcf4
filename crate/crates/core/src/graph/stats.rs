//! Degree- and path-based statistics used to audit poisoned graphs.
//!
//! Definitions:
//! - Gini: `Σᵢⱼ|dᵢ−dⱼ| / (2·n²·mean(d))` over all node degrees.
//! - Distribution entropy: `−Σ (dᵢ/2|E|)·ln(dᵢ/2|E|) / ln(n)`.
//! - Power-law exponent: continuous MLE `1 + n' / Σ ln(dᵢ/d_min)` with `d_min = 1`
//!   over the `n'` non-isolated nodes; `None` when every degree equals 1.
//! - Characteristic path length: mean BFS distance over ordered connected pairs.
//! - Triangle count: each triangle once.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Graph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub gini: f64,
    pub char_path_length: f64,
    pub dist_entropy: f64,
    pub power_law_exp: Option<f64>,
    pub triangle_count: u64,
}

pub fn graph_statistics(g: &Graph) -> Result<GraphStats> {
    if g.num_edges() == 0 {
        return Err(Error::NoEdges);
    }
    let degrees = g.degrees();
    let adj = g.adjacency();
    Ok(GraphStats {
        gini: gini_coefficient(&degrees)?,
        char_path_length: characteristic_path_length(&adj),
        dist_entropy: degree_entropy(&degrees),
        power_law_exp: power_law_exponent(&degrees),
        triangle_count: triangle_count(&adj),
    })
}

pub fn gini_coefficient(degrees: &[usize]) -> Result<f64> {
    let total: u128 = degrees.iter().map(|&d| d as u128).sum();
    if total == 0 {
        return Err(Error::InvalidGraph("gini of an all-zero degree sequence".into()));
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as i128;
    // Σᵢⱼ|dᵢ−dⱼ| = 2·Σᵢ (2i − n + 1)·d₍ᵢ₎ for the ascending order statistics.
    let half_sum: i128 = sorted
        .iter()
        .enumerate()
        .map(|(i, &d)| (2 * i as i128 - n + 1) * d as i128)
        .sum();
    Ok(half_sum as f64 / (n as f64 * total as f64))
}

pub fn degree_entropy(degrees: &[usize]) -> f64 {
    let total: f64 = degrees.iter().map(|&d| d as f64).sum();
    let h: f64 = degrees
        .iter()
        .filter(|&&d| d > 0)
        .map(|&d| {
            let p = d as f64 / total;
            -p * p.ln()
        })
        .sum();
    h / (degrees.len() as f64).ln()
}

pub fn power_law_exponent(degrees: &[usize]) -> Option<f64> {
    let (count, log_sum) = degrees
        .iter()
        .filter(|&&d| d >= 1)
        .fold((0usize, 0.0f64), |(c, s), &d| (c + 1, s + (d as f64).ln()));
    (log_sum > 0.0).then(|| 1.0 + count as f64 / log_sum)
}

/// Mean shortest-path length over ordered pairs `(i, j)`, `i ≠ j`, that are connected.
pub fn characteristic_path_length(adj: &[Vec<usize>]) -> f64 {
    let n = adj.len();
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    let mut total: u64 = 0;
    let mut pairs: u64 = 0;
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = u32::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let du = dist[u];
            for &v in &adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = du + 1;
                    total += u64::from(du + 1);
                    pairs += 1;
                    queue.push_back(v);
                }
            }
        }
    }
    if pairs == 0 {
        return 0.0;
    }
    total as f64 / pairs as f64
}

/// Requires sorted neighbor lists.
pub fn triangle_count(adj: &[Vec<usize>]) -> u64 {
    let mut count = 0;
    for (u, nu) in adj.iter().enumerate() {
        for &v in nu.iter().filter(|&&v| v > u) {
            // common neighbours w > v
            let (mut i, mut j) = (0, 0);
            let nv = &adj[v];
            while i < nu.len() && j < nv.len() {
                match nu[i].cmp(&nv[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        if nu[i] > v {
                            count += 1;
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;

    fn plain(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Graph {
        Graph::new(n, edges, DenseMatrix::zeros(n, 1), vec![0; n], 1).unwrap()
    }

    fn complete(n: usize) -> Graph {
        plain(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    #[test]
    fn ring_is_uniform() {
        let g = plain(8, (0..8).map(|i| (i, (i + 1) % 8)));
        let s = graph_statistics(&g).unwrap();
        assert_eq!(s.gini, 0.0);
        assert!((s.dist_entropy - 1.0).abs() < 1e-12);
        assert_eq!(s.triangle_count, 0);
        // ring of 8: distances 1,1,2,2,3,3,4 from every node
        assert!((s.char_path_length - 16.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_triangles() {
        assert_eq!(triangle_count(&complete(4).adjacency()), 4);
        assert_eq!(triangle_count(&complete(3).adjacency()), 1);
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini_coefficient(&[2, 2, 2, 2]).unwrap(), 0.0);
        assert_eq!(gini_coefficient(&[1, 3]).unwrap(), 0.25);
        assert!(gini_coefficient(&[0, 0]).is_err());
    }

    #[test]
    fn power_law_degenerate_and_regular() {
        assert_eq!(power_law_exponent(&[1, 1, 0]), None);
        let a = power_law_exponent(&[2, 2]).unwrap();
        assert!((a - (1.0 + 1.0 / 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn no_edges_is_error() {
        assert!(matches!(graph_statistics(&plain(3, [])), Err(Error::NoEdges)));
    }
}
