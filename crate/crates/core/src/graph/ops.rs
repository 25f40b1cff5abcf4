use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::rng::seeded;

use super::{Graph, SplitSpec};

/// Induced subgraph on the largest connected component, nodes compacted in
/// ascending original order. Among equal-sized components the one containing
/// the smallest node index wins.
pub fn largest_connected_component(g: &Graph) -> Graph {
    let adj = g.adjacency();
    let mut comp = vec![usize::MAX; g.num_nodes()];
    let mut best: Vec<usize> = Vec::new();
    for start in 0..g.num_nodes() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        comp[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = start;
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    best.sort_unstable();
    g.induced(&best)
}

/// 20% of nodes labeled (train gets the ceiling half, validation the rest),
/// 80% test. Each set is sorted ascending.
pub fn random_split(g: &Graph, seed: u64) -> Result<SplitSpec> {
    let n = g.num_nodes();
    if n < 10 {
        return Err(Error::Config(format!("random_split needs at least 10 nodes, got {n}")));
    }
    let labeled = (0.2 * n as f64).round() as usize;
    let n_train = labeled.div_ceil(2);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let mut train = order[..n_train].to_vec();
    let mut validation = order[n_train..labeled].to_vec();
    let mut test = order[labeled..].to_vec();
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(SplitSpec {
        seed,
        train,
        validation,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub blocks: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feat_dim: usize,
    /// Added to the coordinates `j` with `j % blocks == block`.
    pub feat_signal: f64,
}

impl Default for SbmParams {
    fn default() -> Self {
        Self {
            blocks: 2,
            nodes_per_block: 100,
            p_in: 0.1,
            p_out: 0.01,
            feat_dim: 8,
            feat_signal: 1.0,
        }
    }
}

/// Stochastic block model with block-id labels and noisy block-mean features.
pub fn sbm_generate(p: &SbmParams, seed: u64) -> Result<Graph> {
    if p.blocks < 2 {
        return Err(Error::Config(format!("sbm needs at least 2 blocks, got {}", p.blocks)));
    }
    for (name, v) in [("p_in", p.p_in), ("p_out", p.p_out)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Config(format!("{name} = {v} is not a probability")));
        }
    }
    let n = p.blocks * p.nodes_per_block;
    let block = |i: usize| i / p.nodes_per_block;
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let prob = if block(i) == block(j) { p.p_in } else { p.p_out };
            if rng.random::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }
    let mut features = DenseMatrix::zeros(n, p.feat_dim);
    for i in 0..n {
        let b = block(i);
        for (j, x) in features.row_mut(i).iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            *x = noise + if j % p.blocks == b { p.feat_signal } else { 0.0 };
        }
    }
    let labels = (0..n).map(block).collect();
    Graph::new(n, edges, features, labels, p.blocks)
}

/// Removes `round(fraction·|E|)` uniformly chosen edges.
pub fn sparsify(g: &Graph, fraction: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("sparsity fraction {fraction} outside [0,1]")));
    }
    let m = g.num_edges();
    let remove = ((fraction * m as f64).round() as usize).min(m);
    let mut drop = vec![false; m];
    for i in sample(&mut seeded(seed), m, remove) {
        drop[i] = true;
    }
    g.with_edges(
        g.edges()
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(&e, _)| e),
    )
}
