//! Comparison attackers at equal budget: Erdős–Rényi wiring, preferential
//! attachment, and a gradient-guided edge-flip attack started from the
//! preferential result.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::Rng;

use crate::agent::{train_attack_with, AgentConfig, AttackOutcome, LabelMode};
use crate::env::{random_labels, synth_features, AttackConfig, AttackEnv, PoisonState};
use crate::error::{Error, Result};
use crate::gcn::{self, backward, forward_from_ax, TrainConfig};
use crate::graph::{Graph, SplitSpec};
use crate::numerics::{cross_entropy, dot, DenseMatrix, ParamSet, SparseRows};
use crate::rng::{derive_seed, seeded};

/// Fresh state for `g` under `cfg` with labels drawn from `rng`.
fn fresh_state<R: Rng + ?Sized>(g: &Arc<Graph>, cfg: &AttackConfig, rng: &mut R) -> Result<PoisonState> {
    cfg.validate()?;
    let m = cfg.num_injected(g);
    let x = Arc::new(synth_features(g, m, cfg.feature_noise_seed));
    let labels = random_labels(m, g.num_labels(), rng);
    PoisonState::new(g.clone(), x, labels, cfg.budget(g))
}

/// Erdős–Rényi edge probability `2|E|/|V|²` of the clean graph.
pub fn er_probability(g: &Graph) -> f64 {
    let n = g.num_nodes() as f64;
    2.0 * g.num_edges() as f64 / (n * n)
}

pub fn random_attack(g: &Arc<Graph>, cfg: &AttackConfig, seed: u64) -> Result<PoisonState> {
    let mut rng = seeded(seed);
    let mut state = fresh_state(g, cfg, &mut rng)?;
    let budget = state.budget();
    let (n, m) = (state.num_clean(), state.num_injected());
    let p = er_probability(g);
    let mut inner = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if rng.random::<f64>() < p {
                inner.push((i, n + j));
            }
        }
    }
    if inner.len() > budget {
        let mut keep = sample(&mut rng, inner.len(), budget).into_vec();
        keep.sort_unstable();
        inner = keep.into_iter().map(|k| inner[k]).collect();
    }
    for (a1, a2) in inner {
        state.add_edge(a1, a2)?;
    }
    let free = m * n;
    if budget - state.steps_taken() > free {
        return Err(Error::SamplingStuck(format!(
            "budget {budget} exceeds the {free} injected-clean pairs available"
        )));
    }
    while state.steps_taken() < budget {
        let a1 = rng.random_range(0..m);
        let a2 = rng.random_range(0..n);
        if !state.has_adv_edge(n + a1, a2) {
            state.add_edge(a1, a2)?;
        }
    }
    Ok(state)
}

pub fn preferential_attack(g: &Arc<Graph>, cfg: &AttackConfig, seed: u64) -> Result<PoisonState> {
    let mut rng = seeded(seed);
    let mut state = fresh_state(g, cfg, &mut rng)?;
    let n = state.num_clean();
    let mut degree: Vec<usize> = g.degrees();
    degree.resize(state.num_total(), 0);
    while state.steps_taken() < state.budget() {
        let open = state.level1_mask();
        let candidates: Vec<usize> = (0..open.len()).filter(|&i| open[i]).collect();
        if candidates.is_empty() {
            return Err(Error::SamplingStuck("every injected node is saturated".into()));
        }
        let a1 = candidates[rng.random_range(0..candidates.len())];
        let mask = state.level2_mask(a1);
        let weights: Vec<f64> = degree
            .iter()
            .zip(&mask)
            .map(|(&d, &ok)| if ok { d as f64 + 1.0 } else { 0.0 })
            .collect();
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::SamplingStuck(format!("no partner for injected node {a1}: {e}")))?;
        let a2 = dist.sample(&mut rng);
        state.add_edge(a1, a2)?;
        degree[n + a1] += 1;
        degree[a2] += 1;
    }
    Ok(state)
}

/// `D̂^(-1/2)(A+I)D̂^(-1/2)` for a symmetric weighted adjacency given as
/// `(i, j, w)` with `i ≠ j`, each pair once.
pub fn normalize_weighted(n: usize, edges: &[(usize, usize, f64)]) -> SparseRows {
    let mut deg = vec![1.0; n];
    for &(i, j, w) in edges {
        deg[i] += w;
        deg[j] += w;
    }
    let s: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, s[i] * s[i])).collect();
    for &(i, j, w) in edges {
        trip.push((i, j, w * s[i] * s[j]));
        trip.push((j, i, w * s[i] * s[j]));
    }
    SparseRows::from_triplets(n, n, trip)
}

/// Unregularized cross-entropy of a GCN with weights `params` on the weighted graph.
pub fn weighted_loss(
    params: &ParamSet,
    n: usize,
    edges: &[(usize, usize, f64)],
    features: &DenseMatrix,
    targets: &[usize],
    labeled: &[usize],
) -> Result<f64> {
    let adj = normalize_weighted(n, edges);
    let ax = adj.spmm(features)?;
    let act = forward_from_ax(params, &adj, &ax)?;
    Ok(cross_entropy(&act.z2, targets, labeled)?.0)
}

/// Gradient of [`weighted_loss`] with respect to the symmetric entry `A_ij = A_ji`
/// for every pair in `pairs`, evaluated at the weighted graph `edges`.
pub fn adjacency_gradient(
    params: &ParamSet,
    n: usize,
    edges: &[(usize, usize, f64)],
    features: &DenseMatrix,
    targets: &[usize],
    labeled: &[usize],
    pairs: &[(usize, usize)],
) -> Result<Vec<f64>> {
    let adj = normalize_weighted(n, edges);
    let ax = adj.spmm(features)?;
    let act = forward_from_ax(params, &adj, &ax)?;
    let (_, dz2) = cross_entropy(&act.z2, targets, labeled)?;
    let (_, _, dz1) = backward(params, &adj, &ax, &act, &dz2)?;
    let xw = features.matmul(params.get(gcn::W0))?;
    // ∂L/∂Â_ij = dZ2_i·(HW1)_j + dZ1_i·(XW0)_j
    let g_entry = |i: usize, j: usize| dot(dz2.row(i), act.hw.row(j)) + dot(dz1.row(i), xw.row(j));
    let mut deg = vec![1.0; n];
    for &(i, j, w) in edges {
        deg[i] += w;
        deg[j] += w;
    }
    let s: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    // R_i = Σ_l G_il Â_il + Σ_k G_ki Â_ki
    let mut r = vec![0.0; n];
    for (i, j, a) in adj.iter() {
        let gij = g_entry(i, j) * a;
        r[i] += gij;
        r[j] += gij;
    }
    Ok(pairs
        .iter()
        .map(|&(i, j)| {
            (g_entry(i, j) + g_entry(j, i)) * s[i] * s[j] - r[i] / (2.0 * deg[i]) - r[j] / (2.0 * deg[j])
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FgaCounts {
    pub modifications: usize,
    pub adds: usize,
    pub removes: usize,
    pub no_ops: usize,
}

/// Gradient-guided flips on top of [`preferential_attack`]: `20·Δ` single-edge
/// modifications, each chosen from a freshly trained surrogate.
pub fn fga_attack(
    g: &Arc<Graph>,
    cfg: &AttackConfig,
    split: &SplitSpec,
    surrogate_cfg: &TrainConfig,
    seed: u64,
) -> Result<(PoisonState, FgaCounts)> {
    let mut state = preferential_attack(g, cfg, seed)?;
    let budget = state.budget();
    let total = 20 * budget;
    let n = state.num_clean();
    let nt = state.num_total();
    let mut counts = FgaCounts::default();
    while counts.modifications < total {
        let pg = state.poisoned_graph()?;
        let model = gcn::train(&pg, None, split, surrogate_cfg)?;
        let labeled = gcn::labeled_rows(&pg, split);
        let weighted: Vec<(usize, usize, f64)> = pg.edges().iter().map(|&(u, v)| (u, v, 1.0)).collect();
        let pairs: Vec<(usize, usize)> = (n..nt).flat_map(|i| (0..nt).filter(move |&j| j != i).map(move |j| (i, j))).collect();
        let grads = adjacency_gradient(&model.params, nt, &weighted, pg.features(), pg.labels(), &labeled, &pairs)?;
        let mut best_add: Option<(f64, usize)> = None;
        let mut best_remove: Option<(f64, usize)> = None;
        for (k, (&(i, j), &gr)) in pairs.iter().zip(&grads).enumerate() {
            if i > j && j >= n {
                continue; // injected-injected pair already seen as (j, i)
            }
            if state.has_adv_edge(i, j) {
                if best_remove.is_none_or(|(b, _)| gr < b) {
                    best_remove = Some((gr, k));
                }
            } else if gr > 0.0 && best_add.is_none_or(|(b, _)| gr > b) {
                best_add = Some((gr, k));
            }
        }
        let remove_gain = best_remove.filter(|&(gr, _)| gr < 0.0).map(|(gr, _)| -gr);
        let add_gain = best_add.map(|(gr, _)| gr);
        let left = total - counts.modifications;
        match (add_gain, remove_gain) {
            (Some(a), r) if r.is_none_or(|r| a >= r) => {
                let (i, j) = pairs[best_add.expect("present").1];
                if state.steps_taken() >= budget {
                    let Some((_, rk)) = best_remove else {
                        counts.no_ops += 1;
                        counts.modifications += 1;
                        continue;
                    };
                    if left < 2 {
                        counts.no_ops += 1;
                        counts.modifications += 1;
                        continue;
                    }
                    let (ri, rj) = pairs[rk];
                    state.remove_edge(ri, rj)?;
                    counts.removes += 1;
                    counts.modifications += 1;
                }
                state.add_edge(i - n, j)?;
                counts.adds += 1;
                counts.modifications += 1;
            }
            (_, Some(_)) => {
                let (ri, rj) = pairs[best_remove.expect("present").1];
                state.remove_edge(ri, rj)?;
                counts.removes += 1;
                counts.modifications += 1;
            }
            _ => {
                counts.no_ops += 1;
                counts.modifications += 1;
            }
        }
    }
    Ok((state, counts))
}

/// The hierarchical attacker with labels frozen at their reset values.
pub fn nipa_without_labels(env: &AttackEnv, acfg: &AgentConfig, seed: u64) -> Result<AttackOutcome> {
    train_attack_with(env, acfg, seed, LabelMode::Frozen)
}

/// Seed stream used for baseline attack `k` of run `seed`.
pub fn attack_seed(seed: u64, k: u64) -> u64 {
    derive_seed(seed, 0x6261_7365 + k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_probability_citeseer_size() {
        let n = 2110usize;
        let f = DenseMatrix::zeros(n, 1);
        let mut edges = Vec::new();
        'outer: for i in 0..n {
            for j in i + 1..n {
                if edges.len() == 3757 {
                    break 'outer;
                }
                edges.push((i, j));
            }
        }
        let g = Graph::new(n, edges, f, vec![0; n], 1).unwrap();
        assert!((er_probability(&g) - 1.688e-3).abs() < 1e-6);
    }

    #[test]
    fn weighted_normalization_matches_unweighted() {
        let a = normalize_weighted(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let b = gcn::normalize_edges(3, [(0, 1), (1, 2)].into_iter());
        for (x, y) in a.to_dense().data().iter().zip(b.to_dense().data()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
