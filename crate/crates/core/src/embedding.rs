//! State representation: message-passing node embeddings over the poisoned
//! graph, mean-pooled graph embedding, and a two-layer label encoder.
//!
//! Node embeddings follow `μ⁰ = 0`, `μᵏ⁺¹(v) = ReLU(x_v·W_lift + (Σ_{u∈N(v)} μᵏ(u))·W_agg)`
//! (row-vector convention). Because `μ⁰ = 0`, the first round never depends on
//! the edge set, and for two rounds the result differs from the clean-graph
//! embedding only on endpoints of adversarial edges. [`EncoderCache`] exploits
//! this to embed and backpropagate many states of one graph cheaply.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{axpy, glorot_init_with, vec_mat, DenseMatrix, ParamSet, SparseRows};

pub const LIFT: &str = "embed.lift";
pub const AGG: &str = "embed.agg";
pub const LABEL_HIDDEN: &str = "label.hidden";
pub const LABEL_OUT: &str = "label.out";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub label_hidden: usize,
    pub rounds: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            label_hidden: 32,
            rounds: 2,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.label_hidden == 0 || self.rounds == 0 {
            return Err(Error::Config("embedding dim, label_hidden and rounds must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Adds Glorot-initialized embedding weights to `params`.
pub fn init_embedding<R: Rng + ?Sized>(
    params: &mut ParamSet,
    feat_dim: usize,
    num_labels: usize,
    cfg: &EmbeddingConfig,
    rng: &mut R,
) {
    params.insert(LIFT, glorot_init_with(feat_dim, cfg.dim, rng));
    params.insert(AGG, glorot_init_with(cfg.dim, cfg.dim, rng));
    params.insert(LABEL_HIDDEN, glorot_init_with(num_labels, cfg.label_hidden, rng));
    params.insert(LABEL_OUT, glorot_init_with(cfg.label_hidden, cfg.dim, rng));
}

/// Borrowed view of the embedding weights inside a [`ParamSet`].
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingParams<'a> {
    pub lift: &'a DenseMatrix,
    pub agg: &'a DenseMatrix,
    pub label_hidden: &'a DenseMatrix,
    pub label_out: &'a DenseMatrix,
    pub rounds: usize,
}

impl<'a> EmbeddingParams<'a> {
    pub fn from_params(params: &'a ParamSet, rounds: usize) -> Self {
        Self {
            lift: params.get(LIFT),
            agg: params.get(AGG),
            label_hidden: params.get(LABEL_HIDDEN),
            label_out: params.get(LABEL_OUT),
            rounds,
        }
    }

    pub fn dim(&self) -> usize {
        self.lift.cols()
    }

    pub fn num_labels(&self) -> usize {
        self.label_hidden.rows()
    }
}

/// A poisoned graph as seen by the encoder: stacked features, the clean edges
/// as a 0/1 adjacency over all nodes, and the adversarial edge list.
#[derive(Debug, Clone, Copy)]
pub struct PoisonedView<'a> {
    pub features: &'a DenseMatrix,
    pub clean_adjacency: &'a SparseRows,
    pub adv_edges: &'a [(usize, usize)],
}

/// 0/1 symmetric adjacency of `edges` over `n` nodes, without self-loops.
pub fn unit_adjacency(n: usize, edges: &[(usize, usize)]) -> SparseRows {
    let mut trip = Vec::with_capacity(2 * edges.len());
    for &(u, v) in edges {
        trip.push((u, v, 1.0));
        trip.push((v, u, 1.0));
    }
    SparseRows::from_triplets(n, n, trip)
}

/// `A·M` for the poisoned adjacency `A` = clean + adversarial.
fn neighbor_sum(view: &PoisonedView<'_>, m: &DenseMatrix) -> Result<DenseMatrix> {
    let mut out = view.clean_adjacency.spmm(m)?;
    add_adv_neighbor_sum(view.adv_edges, m, &mut out);
    Ok(out)
}

fn add_adv_neighbor_sum(adv_edges: &[(usize, usize)], m: &DenseMatrix, out: &mut DenseMatrix) {
    for &(a, b) in adv_edges {
        axpy(out.row_mut(a), 1.0, m.row(b));
        axpy(out.row_mut(b), 1.0, m.row(a));
    }
}

fn relu_in_place(m: &mut DenseMatrix) {
    m.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Node embeddings after `rounds` message-passing rounds.
pub fn embed_nodes(view: &PoisonedView<'_>, params: &EmbeddingParams<'_>) -> Result<DenseMatrix> {
    let lifted = view.features.matmul(params.lift)?;
    let mut mu = lifted.clone();
    relu_in_place(&mut mu);
    for _ in 1..params.rounds {
        let mut pre = neighbor_sum(view, &mu)?.matmul(params.agg)?;
        pre.add_assign(&lifted)?;
        relu_in_place(&mut pre);
        mu = pre;
    }
    Ok(mu)
}

/// Mean of the rows.
pub fn embed_graph(node_vectors: &DenseMatrix) -> Result<Vec<f64>> {
    if node_vectors.rows() == 0 {
        return Err(Error::EmptySet("embed_graph node set"));
    }
    Ok(node_vectors.column_means())
}

/// Normalized label histogram over the injected nodes.
pub fn label_histogram(labels: &[usize], num_labels: usize) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(Error::EmptySet("injected label set"));
    }
    let mut hist = vec![0.0; num_labels];
    for &l in labels {
        if l >= num_labels {
            return Err(Error::Config(format!("label {l} out of range 0..{num_labels}")));
        }
        hist[l] += 1.0;
    }
    let inv = 1.0 / labels.len() as f64;
    hist.iter_mut().for_each(|h| *h *= inv);
    Ok(hist)
}

/// Hidden pre-activation and output of the label encoder for input `x`.
fn encode_label_input(x: &[f64], params: &EmbeddingParams<'_>) -> (Vec<f64>, Vec<f64>) {
    let mut pre = vec![0.0; params.label_hidden.cols()];
    vec_mat(x, params.label_hidden, &mut pre);
    let hidden: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
    let mut out = vec![0.0; params.label_out.cols()];
    vec_mat(&hidden, params.label_out, &mut out);
    (pre, out)
}

/// Encoding of the injected nodes' labels: `ReLU(hist·L1)·L2`.
pub fn embed_labels(adv_labels: &[usize], params: &EmbeddingParams<'_>) -> Result<Vec<f64>> {
    let hist = label_histogram(adv_labels, params.num_labels())?;
    Ok(encode_label_input(&hist, params).1)
}

/// Encoding of a single label through the same encoder.
pub fn embed_single_label(label: usize, params: &EmbeddingParams<'_>) -> Result<Vec<f64>> {
    embed_labels(&[label], params)
}

/// Backpropagates `grad_out` through the label encoder at input `x`.
pub(crate) fn label_encoder_backward(
    x: &[f64],
    grad_out: &[f64],
    params: &EmbeddingParams<'_>,
    d_hidden_w: &mut DenseMatrix,
    d_out_w: &mut DenseMatrix,
) {
    let (pre, _) = encode_label_input(x, params);
    let dh = params.label_out.cols();
    let mut d_pre = vec![0.0; pre.len()];
    for (j, p) in pre.iter().enumerate() {
        let h = p.max(0.0);
        if h != 0.0 {
            axpy(&mut d_out_w.data_mut()[j * dh..(j + 1) * dh], h, grad_out);
        }
        if *p > 0.0 {
            d_pre[j] = crate::numerics::dot(params.label_out.row(j), grad_out);
        }
    }
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            axpy(d_hidden_w.row_mut(i), xi, &d_pre);
        }
    }
}

/// Label-encoder output for every single label, `[num_labels × d]`.
pub(crate) fn all_single_labels(params: &EmbeddingParams<'_>) -> DenseMatrix {
    let l = params.num_labels();
    let mut out = DenseMatrix::zeros(l, params.dim());
    let mut onehot = vec![0.0; l];
    for k in 0..l {
        onehot[k] = 1.0;
        let (_, e) = encode_label_input(&onehot, params);
        out.row_mut(k).copy_from_slice(&e);
        onehot[k] = 0.0;
    }
    out
}

/// Per-parameter-version precomputation shared by every state of one graph.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    rounds: usize,
    n: usize,
    /// `X·W_lift`
    lifted: DenseMatrix,
    /// `ReLU(lifted)`, the first-round embedding.
    first: DenseMatrix,
    /// `first·W_agg` (rounds ≥ 2)
    first_agg: Option<DenseMatrix>,
    /// Pre-activation of round two on the clean edges only (rounds == 2).
    base_pre: Option<DenseMatrix>,
    /// Final embedding when no adversarial edge exists (rounds ≤ 2).
    base_emb: DenseMatrix,
    base_sum: Vec<f64>,
}

/// Final node embeddings of one state.
#[derive(Debug, Clone)]
pub struct StateNodes {
    /// Sorted rows whose embedding differs from the cache's base (rounds == 2).
    changed: Vec<usize>,
    changed_pre: DenseMatrix,
    changed_emb: DenseMatrix,
    /// Full per-round trace (rounds ≥ 3): `(pre_k, μ_k)` for k = 2..=rounds.
    full: Option<Vec<(DenseMatrix, DenseMatrix)>>,
    pub graph_vec: Vec<f64>,
}

impl EncoderCache {
    pub fn new(view_features: &DenseMatrix, clean_adjacency: &SparseRows, params: &EmbeddingParams<'_>) -> Result<Self> {
        let n = view_features.rows();
        let lifted = view_features.matmul(params.lift)?;
        let mut first = lifted.clone();
        relu_in_place(&mut first);
        let (first_agg, base_pre, base_emb) = match params.rounds {
            1 => (None, None, first.clone()),
            r => {
                let fa = first.matmul(params.agg)?;
                let mut pre = clean_adjacency.spmm(&fa)?;
                pre.add_assign(&lifted)?;
                let mut emb = pre.clone();
                relu_in_place(&mut emb);
                if r == 2 {
                    (Some(fa), Some(pre), emb)
                } else {
                    (Some(fa), None, emb)
                }
            }
        };
        let mut base_sum = vec![0.0; base_emb.cols()];
        for r in 0..n {
            axpy(&mut base_sum, 1.0, base_emb.row(r));
        }
        Ok(Self {
            rounds: params.rounds,
            n,
            lifted,
            first,
            first_agg,
            base_pre,
            base_emb,
            base_sum,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.lifted.cols()
    }

    /// Embeds the state with adversarial edges `adv_edges`.
    pub fn encode(
        &self,
        clean_adjacency: &SparseRows,
        adv_edges: &[(usize, usize)],
        params: &EmbeddingParams<'_>,
    ) -> Result<StateNodes> {
        let d = self.dim();
        let inv_n = 1.0 / self.n as f64;
        match self.rounds {
            1 => Ok(StateNodes {
                changed: Vec::new(),
                changed_pre: DenseMatrix::zeros(0, d),
                changed_emb: DenseMatrix::zeros(0, d),
                full: None,
                graph_vec: self.base_sum.iter().map(|v| v * inv_n).collect(),
            }),
            2 => {
                let base_pre = self.base_pre.as_ref().expect("two-round cache");
                let first_agg = self.first_agg.as_ref().expect("two-round cache");
                let mut changed: Vec<usize> = adv_edges.iter().flat_map(|&(a, b)| [a, b]).collect();
                changed.sort_unstable();
                changed.dedup();
                let mut changed_pre = base_pre.select_rows(&changed);
                for &(a, b) in adv_edges {
                    let ia = changed.binary_search(&a).expect("endpoint recorded");
                    let ib = changed.binary_search(&b).expect("endpoint recorded");
                    axpy(changed_pre.row_mut(ia), 1.0, first_agg.row(b));
                    axpy(changed_pre.row_mut(ib), 1.0, first_agg.row(a));
                }
                let mut changed_emb = changed_pre.clone();
                relu_in_place(&mut changed_emb);
                let mut sum = self.base_sum.clone();
                for (i, &r) in changed.iter().enumerate() {
                    axpy(&mut sum, -1.0, self.base_emb.row(r));
                    axpy(&mut sum, 1.0, changed_emb.row(i));
                }
                Ok(StateNodes {
                    changed,
                    changed_pre,
                    changed_emb,
                    full: None,
                    graph_vec: sum.iter().map(|v| v * inv_n).collect(),
                })
            }
            rounds => {
                let view = PoisonedView {
                    features: &self.lifted, // unused by neighbor_sum
                    clean_adjacency,
                    adv_edges,
                };
                let mut trace = Vec::with_capacity(rounds - 1);
                let mut mu = self.first.clone();
                for _ in 1..rounds {
                    let mut pre = neighbor_sum(&view, &mu)?.matmul(params.agg)?;
                    pre.add_assign(&self.lifted)?;
                    let mut next = pre.clone();
                    relu_in_place(&mut next);
                    trace.push((pre, next.clone()));
                    mu = next;
                }
                let graph_vec = mu.column_means();
                Ok(StateNodes {
                    changed: Vec::new(),
                    changed_pre: DenseMatrix::zeros(0, d),
                    changed_emb: DenseMatrix::zeros(0, d),
                    full: Some(trace),
                    graph_vec,
                })
            }
        }
    }

    /// Final embeddings when no adversarial edge exists.
    pub fn base_embeddings(&self) -> &DenseMatrix {
        &self.base_emb
    }

    /// Whether row `v` of `state` equals the base embedding.
    pub fn is_base_row(&self, state: &StateNodes, v: usize) -> bool {
        state.full.is_none() && state.changed.binary_search(&v).is_err()
    }

    /// Embedding of node `v` in `state`.
    pub fn node<'s>(&'s self, state: &'s StateNodes, v: usize) -> &'s [f64] {
        if let Some(trace) = &state.full {
            return trace.last().expect("rounds ≥ 3").1.row(v);
        }
        match state.changed.binary_search(&v) {
            Ok(i) => state.changed_emb.row(i),
            Err(_) => self.base_emb.row(v),
        }
    }

    /// All node embeddings of `state` as a dense matrix.
    pub fn node_matrix(&self, state: &StateNodes) -> DenseMatrix {
        if let Some(trace) = &state.full {
            return trace.last().expect("rounds ≥ 3").1.clone();
        }
        let mut m = self.base_emb.clone();
        for (i, &r) in state.changed.iter().enumerate() {
            m.row_mut(r).copy_from_slice(state.changed_emb.row(i));
        }
        m
    }
}

/// Gradient accumulator for node-embedding weights across many states encoded
/// from one [`EncoderCache`].
#[derive(Debug, Clone)]
pub struct EncoderGrads {
    /// Σ over states of the gradient on the graph vector, pre-divided by n.
    pooled: Vec<f64>,
    /// Gradient on the round-two clean pre-activation (rounds == 2), or on the
    /// final embedding (rounds == 1), excluding the pooled broadcast term.
    d_base: DenseMatrix,
    /// Gradient on `first_agg` from adversarial edges (rounds == 2).
    d_first_agg: DenseMatrix,
    /// Direct gradients for rounds ≥ 3.
    d_lifted: DenseMatrix,
    d_agg: DenseMatrix,
}

impl EncoderGrads {
    pub fn new(cache: &EncoderCache) -> Self {
        let (n, d) = (cache.n, cache.dim());
        Self {
            pooled: vec![0.0; d],
            d_base: DenseMatrix::zeros(n, d),
            d_first_agg: DenseMatrix::zeros(n, d),
            d_lifted: DenseMatrix::zeros(n, d),
            d_agg: DenseMatrix::zeros(d, d),
        }
    }

    /// Accumulates the gradient of one state's loss given the gradient on its
    /// graph vector and on individual node embeddings (`row_grads`, may repeat rows).
    pub fn backprop_state(
        &mut self,
        cache: &EncoderCache,
        clean_adjacency: &SparseRows,
        state: &StateNodes,
        adv_edges: &[(usize, usize)],
        graph_grad: &[f64],
        row_grads: &[(usize, &[f64])],
        params: &EmbeddingParams<'_>,
    ) -> Result<()> {
        let inv_n = 1.0 / cache.n as f64;
        let d = cache.dim();
        match cache.rounds {
            1 => {
                axpy(&mut self.pooled, inv_n, graph_grad);
                for &(r, g) in row_grads {
                    axpy(self.d_base.row_mut(r), 1.0, g);
                }
                Ok(())
            }
            2 => {
                let base_pre = cache.base_pre.as_ref().expect("two-round cache");
                axpy(&mut self.pooled, inv_n, graph_grad);
                // Changed rows: full gradient on their state-specific pre-activation,
                // minus the pooled term the shared pass will add with the base mask.
                let mut d_changed = DenseMatrix::zeros(state.changed.len(), d);
                for (i, &r) in state.changed.iter().enumerate() {
                    let dst = d_changed.row_mut(i);
                    let pre = state.changed_pre.row(i);
                    let bpre = base_pre.row(r);
                    for k in 0..d {
                        if pre[k] > 0.0 {
                            dst[k] = graph_grad[k] * inv_n;
                        }
                        if bpre[k] > 0.0 {
                            self.d_base.row_mut(r)[k] -= graph_grad[k] * inv_n;
                        }
                    }
                }
                for &(r, g) in row_grads {
                    match state.changed.binary_search(&r) {
                        Ok(i) => {
                            let pre = state.changed_pre.row(i);
                            let dst = d_changed.row_mut(i);
                            for k in 0..d {
                                if pre[k] > 0.0 {
                                    dst[k] += g[k];
                                }
                            }
                        }
                        Err(_) => {
                            let bpre = base_pre.row(r);
                            let dst = self.d_base.row_mut(r);
                            for k in 0..d {
                                if bpre[k] > 0.0 {
                                    dst[k] += g[k];
                                }
                            }
                        }
                    }
                }
                for (i, &r) in state.changed.iter().enumerate() {
                    axpy(self.d_base.row_mut(r), 1.0, d_changed.row(i));
                }
                for &(a, b) in adv_edges {
                    let ia = state.changed.binary_search(&a).expect("endpoint recorded");
                    let ib = state.changed.binary_search(&b).expect("endpoint recorded");
                    axpy(self.d_first_agg.row_mut(b), 1.0, d_changed.row(ia));
                    axpy(self.d_first_agg.row_mut(a), 1.0, d_changed.row(ib));
                }
                Ok(())
            }
            _ => {
                let trace = state.full.as_ref().expect("full trace for rounds ≥ 3");
                let mut d_mu = DenseMatrix::zeros(cache.n, d);
                for r in 0..cache.n {
                    axpy(d_mu.row_mut(r), inv_n, graph_grad);
                }
                for &(r, g) in row_grads {
                    axpy(d_mu.row_mut(r), 1.0, g);
                }
                let view = PoisonedView {
                    features: &cache.lifted,
                    clean_adjacency,
                    adv_edges,
                };
                for k in (0..trace.len()).rev() {
                    let (pre, _) = &trace[k];
                    let mut d_pre = d_mu;
                    for (g, &p) in d_pre.data_mut().iter_mut().zip(pre.data()) {
                        if p <= 0.0 {
                            *g = 0.0;
                        }
                    }
                    self.d_lifted.add_assign(&d_pre)?;
                    let prev_mu = if k == 0 { &cache.first } else { &trace[k - 1].1 };
                    let summed = neighbor_sum(&view, prev_mu)?;
                    self.d_agg.add_assign(&summed.matmul_tn(&d_pre)?)?;
                    let d_summed = d_pre.matmul_nt(params.agg)?;
                    d_mu = neighbor_sum(&view, &d_summed)?;
                }
                // d_mu is now the gradient on the first-round embedding.
                for ((g, &p), dst) in d_mu
                    .data()
                    .iter()
                    .zip(cache.lifted.data())
                    .zip(self.d_lifted.data_mut())
                {
                    if p > 0.0 {
                        *dst += g;
                    }
                }
                Ok(())
            }
        }
    }

    /// Finishes the shared part of backpropagation; returns `(dW_lift, dW_agg)`.
    pub fn finish(
        mut self,
        cache: &EncoderCache,
        features: &DenseMatrix,
        clean_adjacency: &SparseRows,
        params: &EmbeddingParams<'_>,
    ) -> Result<(DenseMatrix, DenseMatrix)> {
        let d = cache.dim();
        match cache.rounds {
            1 => {
                let mut d_lifted = self.d_base;
                for r in 0..cache.n {
                    let src = cache.lifted.row(r);
                    let dst = d_lifted.row_mut(r);
                    for k in 0..d {
                        dst[k] += self.pooled[k];
                        if src[k] <= 0.0 {
                            dst[k] = 0.0;
                        }
                    }
                }
                Ok((features.matmul_tn(&d_lifted)?, DenseMatrix::zeros(d, d)))
            }
            2 => {
                let base_pre = cache.base_pre.as_ref().expect("two-round cache");
                for r in 0..cache.n {
                    let bpre = base_pre.row(r);
                    let dst = self.d_base.row_mut(r);
                    for k in 0..d {
                        if bpre[k] > 0.0 {
                            dst[k] += self.pooled[k];
                        }
                    }
                }
                // base_pre = lifted + A_clean·first_agg, first_agg = first·W_agg
                let mut d_first_agg = self.d_first_agg;
                d_first_agg.add_assign(&clean_adjacency.spmm_t(&self.d_base)?)?;
                let d_agg = cache.first.matmul_tn(&d_first_agg)?;
                let d_first = d_first_agg.matmul_nt(params.agg)?;
                let mut d_lifted = self.d_base;
                for ((dst, &g), &p) in d_lifted
                    .data_mut()
                    .iter_mut()
                    .zip(d_first.data())
                    .zip(cache.lifted.data())
                {
                    if p > 0.0 {
                        *dst += g;
                    }
                }
                Ok((features.matmul_tn(&d_lifted)?, d_agg))
            }
            _ => Ok((features.matmul_tn(&self.d_lifted)?, self.d_agg)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::glorot_init;
    use crate::rng::seeded;

    fn params_for(feat_dim: usize, labels: usize, cfg: &EmbeddingConfig, seed: u64) -> ParamSet {
        let mut p = ParamSet::new();
        init_embedding(&mut p, feat_dim, labels, cfg, &mut seeded(seed));
        p
    }

    #[test]
    fn isolated_node_single_round() {
        let cfg = EmbeddingConfig { dim: 4, label_hidden: 3, rounds: 1 };
        let p = params_for(3, 2, &cfg, 1);
        let x = glorot_init(1, 3, 5);
        let adj = unit_adjacency(1, &[]);
        let view = PoisonedView { features: &x, clean_adjacency: &adj, adv_edges: &[] };
        let e = embed_nodes(&view, &EmbeddingParams::from_params(&p, 1)).unwrap();
        let mut expect = x.matmul(p.get(LIFT)).unwrap();
        relu_in_place(&mut expect);
        assert_eq!(e, expect);
    }

    #[test]
    fn zero_weights_zero_embeddings() {
        let cfg = EmbeddingConfig { dim: 4, label_hidden: 3, rounds: 2 };
        let mut p = params_for(3, 3, &cfg, 1);
        for name in [LIFT, AGG, LABEL_HIDDEN, LABEL_OUT] {
            p.get_mut(name).fill(0.0);
        }
        let x = glorot_init(5, 3, 5);
        let adj = unit_adjacency(5, &[(0, 1), (1, 2)]);
        let view = PoisonedView { features: &x, clean_adjacency: &adj, adv_edges: &[(3, 4)] };
        let ep = EmbeddingParams::from_params(&p, 2);
        assert!(embed_nodes(&view, &ep).unwrap().data().iter().all(|&v| v == 0.0));
        assert!(embed_labels(&[0, 2], &ep).unwrap().iter().all(|&v| v == 0.0));
        assert!(embed_single_label(1, &ep).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn graph_embedding_cases() {
        let single = DenseMatrix::row_vector(&[1.0, -2.0]);
        assert_eq!(embed_graph(&single).unwrap(), vec![1.0, -2.0]);
        let opposite = DenseMatrix::from_rows(&[vec![1.0, -3.0], vec![-1.0, 3.0]]);
        assert_eq!(embed_graph(&opposite).unwrap(), vec![0.0, 0.0]);
        assert!(embed_graph(&DenseMatrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn label_histogram_cases() {
        assert_eq!(label_histogram(&[2, 2], 3).unwrap(), vec![0.0, 0.0, 1.0]);
        let h = label_histogram(&[0, 0, 1], 3).unwrap();
        assert!((h[0] - 2.0 / 3.0).abs() < 1e-15 && (h[1] - 1.0 / 3.0).abs() < 1e-15 && h[2] == 0.0);
        assert!(label_histogram(&[], 3).is_err());
        assert!(label_histogram(&[3], 3).is_err());
    }

    #[test]
    fn single_label_consistency_and_distinctness() {
        let cfg = EmbeddingConfig { dim: 6, label_hidden: 5, rounds: 2 };
        let p = params_for(2, 3, &cfg, 9);
        let ep = EmbeddingParams::from_params(&p, 2);
        assert_eq!(embed_labels(&[1], &ep).unwrap(), embed_single_label(1, &ep).unwrap());
        assert_ne!(embed_single_label(0, &ep).unwrap(), embed_single_label(2, &ep).unwrap());
        assert!(embed_single_label(3, &ep).is_err());
        let all = all_single_labels(&ep);
        assert_eq!(all.row(2), embed_single_label(2, &ep).unwrap().as_slice());
    }
}
