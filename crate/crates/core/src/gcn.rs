//! Two-layer GCN node classifier: `softmax(Â·ReLU(Â·X·W0)·W1)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, SplitSpec};
use crate::numerics::{
    axpy, cross_entropy, glorot_init_with, relu_backward, relu_forward, softmax_in_place, softmax_rows,
    AdamConfig, DenseMatrix, ParamSet, SparseRows,
};
use crate::rng::seeded;

pub const W0: &str = "w0";
pub const W1: &str = "w1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub hidden_dim: usize,
    /// L2 penalty `weight_decay/2·‖W0‖²` (W1 is not decayed).
    pub weight_decay: f64,
    /// Early-stopping patience on validation loss.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 0.01,
            hidden_dim: 16,
            weight_decay: 5e-4,
            patience: 30,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("epochs and hidden_dim must be at least 1".into()));
        }
        Ok(())
    }
}

/// `D̂^(-1/2)·(A+I)·D̂^(-1/2)` where `D̂` counts the self-loop.
pub fn normalize_adjacency(g: &Graph) -> SparseRows {
    normalize_edges(g.num_nodes(), g.edges().iter().copied())
}

/// Same as [`normalize_adjacency`] for an explicit undirected edge list
/// (each pair listed once).
pub fn normalize_edges(n: usize, edges: impl Iterator<Item = (usize, usize)> + Clone) -> SparseRows {
    let mut deg = vec![1.0f64; n];
    for (u, v) in edges.clone() {
        deg[u] += 1.0;
        deg[v] += 1.0;
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut rows: Vec<Vec<(usize, f64)>> = inv_sqrt.iter().enumerate().map(|(i, &s)| vec![(i, s * s)]).collect();
    for (u, v) in edges {
        let w = inv_sqrt[u] * inv_sqrt[v];
        rows[u].push((v, w));
        rows[v].push((u, w));
    }
    SparseRows::from_rows(n, rows)
}

/// Everything needed to fit one GCN: normalized adjacency, features, a full-length
/// target vector, the rows the loss is taken over, and the early-stopping rows.
#[derive(Debug, Clone, Copy)]
pub struct GcnProblem<'a> {
    pub adjacency: &'a SparseRows,
    pub features: &'a DenseMatrix,
    pub targets: &'a [usize],
    pub num_labels: usize,
    pub labeled: &'a [usize],
    pub validation: &'a [usize],
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    /// `Â·X·W0`
    pub z1: DenseMatrix,
    pub h: DenseMatrix,
    /// `ReLU(Â·X·W0)·W1`
    pub hw: DenseMatrix,
    /// logits `Â·H·W1`
    pub z2: DenseMatrix,
}

pub fn init_params(feat_dim: usize, hidden_dim: usize, num_labels: usize, seed: u64) -> ParamSet {
    let mut rng = seeded(seed);
    let mut p = ParamSet::new();
    p.insert(W0, glorot_init_with(feat_dim, hidden_dim, &mut rng));
    p.insert(W1, glorot_init_with(hidden_dim, num_labels, &mut rng));
    p
}

/// Forward pass given a precomputed `Â·X`.
pub fn forward_from_ax(params: &ParamSet, adjacency: &SparseRows, ax: &DenseMatrix) -> Result<Activations> {
    let z1 = ax.matmul(params.get(W0))?;
    let h = relu_forward(&z1);
    let hw = h.matmul(params.get(W1))?;
    let z2 = adjacency.spmm(&hw)?;
    Ok(Activations { z1, h, hw, z2 })
}

/// Backward pass of the mean cross-entropy whose logit gradient is `dz2`.
/// Returns `(dW0, dW1, dZ1)`; weight decay is not included.
pub fn backward(
    params: &ParamSet,
    adjacency: &SparseRows,
    ax: &DenseMatrix,
    act: &Activations,
    dz2: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix)> {
    let dhw = adjacency.spmm_t(dz2)?;
    let dw1 = act.h.matmul_tn(&dhw)?;
    let dh = dhw.matmul_nt(params.get(W1))?;
    let dz1 = relu_backward(&dh, &act.z1)?;
    let dw0 = ax.matmul_tn(&dz1)?;
    Ok((dw0, dw1, dz1))
}

/// Training objective (cross-entropy over `labeled` plus weight decay) and its
/// gradient, written into `params`' gradient buffers.
pub fn loss_and_grad(
    params: &mut ParamSet,
    problem: &GcnProblem<'_>,
    ax: &DenseMatrix,
    weight_decay: f64,
) -> Result<f64> {
    let act = forward_from_ax(params, problem.adjacency, ax)?;
    let (ce, dz2) = cross_entropy(&act.z2, problem.targets, problem.labeled)?;
    let (mut dw0, dw1, _) = backward(params, problem.adjacency, ax, &act, &dz2)?;
    let w0 = params.get(W0);
    let decay = 0.5 * weight_decay * w0.frobenius_sq();
    for (g, w) in dw0.data_mut().iter_mut().zip(w0.data()) {
        *g += weight_decay * w;
    }
    params.accumulate_grad(W0, &dw0)?;
    params.accumulate_grad(W1, &dw1)?;
    Ok(ce + decay)
}

/// Reusable buffers for [`fit`]. Each epoch performs the same floating-point
/// operations, in the same order, as [`forward_from_ax`], [`cross_entropy`] and
/// [`backward`], skipping only rows whose contribution is exactly zero.
struct Scratch {
    z1: DenseMatrix,
    hw: DenseMatrix,
    z2: DenseMatrix,
    dz2: DenseMatrix,
    dhw: DenseMatrix,
    dw0: DenseMatrix,
    dw1t: DenseMatrix,
    h: Vec<f64>,
    dz1: Vec<f64>,
    probs: Vec<f64>,
    labeled_sorted: Vec<usize>,
}

impl Scratch {
    fn new(n: usize, feat_dim: usize, hidden: usize, labels: usize, labeled: &[usize]) -> Self {
        let mut labeled_sorted = labeled.to_vec();
        labeled_sorted.sort_unstable();
        Self {
            z1: DenseMatrix::zeros(n, hidden),
            hw: DenseMatrix::zeros(n, labels),
            z2: DenseMatrix::zeros(n, labels),
            dz2: DenseMatrix::zeros(n, labels),
            dhw: DenseMatrix::zeros(n, labels),
            dw0: DenseMatrix::zeros(feat_dim, hidden),
            dw1t: DenseMatrix::zeros(labels, hidden),
            h: vec![0.0; hidden],
            dz1: vec![0.0; hidden],
            probs: vec![0.0; labels],
            labeled_sorted,
        }
    }

    fn forward(&mut self, params: &ParamSet, adjacency: &SparseRows, ax: &DenseMatrix) {
        let w0 = params.get(W0);
        let w1t = params.get(W1).transpose();
        let l = w1t.rows();
        self.z1.fill(0.0);
        self.z2.fill(0.0);
        for i in 0..ax.rows() {
            let z1 = self.z1.row_mut(i);
            for (k, &a) in ax.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(z1, a, w0.row(k));
                }
            }
            for (k, h) in self.h.iter_mut().zip(z1.iter()) {
                *k = h.max(0.0);
            }
            let hw = self.hw.row_mut(i);
            for (c, o) in hw.iter_mut().enumerate() {
                *o = seq_dot(&self.h, w1t.row(c));
            }
        }
        let hw = self.hw.data();
        let z2 = self.z2.data_mut();
        for i in 0..adjacency.n_rows() {
            let (idx, vals) = adjacency.row(i);
            let out = &mut z2[i * l..(i + 1) * l];
            for (&j, &v) in idx.iter().zip(vals) {
                for (o, &x) in out.iter_mut().zip(&hw[j * l..(j + 1) * l]) {
                    *o += v * x;
                }
            }
        }
    }

    /// Mean cross-entropy over `mask`; with `grad`, also writes the logit gradient rows.
    fn loss(&mut self, targets: &[usize], mask: &[usize], grad: bool) -> f64 {
        let inv = 1.0 / mask.len() as f64;
        let mut loss = 0.0;
        for &r in mask {
            self.probs.copy_from_slice(self.z2.row(r));
            softmax_in_place(&mut self.probs);
            let t = targets[r];
            loss -= self.probs[t].max(f64::MIN_POSITIVE).ln();
            if grad {
                for (j, (g, &p)) in self.dz2.row_mut(r).iter_mut().zip(&self.probs).enumerate() {
                    *g = (p - if j == t { 1.0 } else { 0.0 }) * inv;
                }
            }
        }
        loss * inv
    }

    fn backward(&mut self, params: &ParamSet, adjacency: &SparseRows, ax: &DenseMatrix) {
        let w1t = params.get(W1).transpose();
        let l = w1t.rows();
        self.dhw.fill(0.0);
        self.dw0.fill(0.0);
        self.dw1t.fill(0.0);
        {
            let dz2 = self.dz2.data();
            let dhw = self.dhw.data_mut();
            for &r in &self.labeled_sorted {
                let (idx, vals) = adjacency.row(r);
                let src = &dz2[r * l..(r + 1) * l];
                for (&c, &v) in idx.iter().zip(vals) {
                    for (o, &x) in dhw[c * l..(c + 1) * l].iter_mut().zip(src) {
                        *o += v * x;
                    }
                }
            }
        }
        for k in 0..ax.rows() {
            let dhw = self.dhw.row(k);
            if dhw.iter().all(|&g| g == 0.0) {
                continue;
            }
            let z1 = self.z1.row(k);
            for (h, &z) in self.h.iter_mut().zip(z1) {
                *h = z.max(0.0);
            }
            self.dz1.fill(0.0);
            for (c, &g) in dhw.iter().enumerate() {
                axpy(self.dw1t.row_mut(c), g, &self.h);
                axpy(&mut self.dz1, g, w1t.row(c));
            }
            for (d, &z) in self.dz1.iter_mut().zip(z1) {
                if z <= 0.0 {
                    *d = 0.0;
                }
            }
            for (i, &a) in ax.row(k).iter().enumerate() {
                if a != 0.0 {
                    axpy(self.dw0.row_mut(i), a, &self.dz1);
                }
            }
        }
    }
}

/// `Σ a_k·b_k` accumulated left to right from zero.
#[inline]
fn seq_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Full-batch Adam training with early stopping on validation loss; the
/// best-validation weights are returned.
pub fn fit(problem: &GcnProblem<'_>, feat_dim: usize, cfg: &TrainConfig) -> Result<ParamSet> {
    cfg.validate()?;
    if problem.labeled.is_empty() {
        return Err(Error::EmptySet("training set"));
    }
    if problem.targets.len() != problem.adjacency.n_rows() {
        return Err(Error::Shape {
            op: "gcn fit",
            left: (problem.adjacency.n_rows(), problem.num_labels),
            right: (problem.targets.len(), 1),
        });
    }
    let mut params = init_params(feat_dim, cfg.hidden_dim, problem.num_labels, cfg.seed);
    let adam = AdamConfig::with_lr(cfg.lr);
    let ax = problem.adjacency.spmm(problem.features)?;
    let mut s = Scratch::new(ax.rows(), feat_dim, cfg.hidden_dim, problem.num_labels, problem.labeled);
    let mut best: Option<(f64, DenseMatrix, DenseMatrix)> = None;
    let mut stale = 0usize;
    for epoch in 0..cfg.epochs {
        s.forward(&params, problem.adjacency, &ax);
        let ce = s.loss(problem.targets, problem.labeled, true);
        if !ce.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        if !problem.validation.is_empty() {
            let val = s.loss(problem.targets, problem.validation, false);
            if !val.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            match &best {
                Some((b, _, _)) if val >= *b => {
                    stale += 1;
                    if stale >= cfg.patience {
                        break;
                    }
                }
                _ => {
                    best = Some((val, params.get(W0).clone(), params.get(W1).clone()));
                    stale = 0;
                }
            }
        }
        s.backward(&params, problem.adjacency, &ax);
        for (g, w) in s.dw0.data_mut().iter_mut().zip(params.get(W0).data()) {
            *g += cfg.weight_decay * w;
        }
        params.accumulate_grad(W0, &s.dw0)?;
        params.accumulate_grad(W1, &s.dw1t.transpose())?;
        params.adam_step(&adam).map_err(|e| match e {
            Error::NonFiniteGradient(_) => Error::Diverged { epoch },
            other => other,
        })?;
    }
    if let Some((_, w0, w1)) = best {
        *params.get_mut(W0) = w0;
        *params.get_mut(W1) = w1;
    }
    Ok(params)
}

/// Class probabilities for every node.
pub fn predict_proba(params: &ParamSet, adjacency: &SparseRows, features: &DenseMatrix) -> Result<DenseMatrix> {
    let ax = adjacency.spmm(features)?;
    let act = forward_from_ax(params, adjacency, &ax)?;
    Ok(softmax_rows(&act.z2))
}

/// Row-wise argmax; ties go to the smallest label.
pub fn argmax_rows(probs: &DenseMatrix) -> Vec<usize> {
    (0..probs.rows())
        .map(|r| {
            let row = probs.row(r);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// A trained classifier together with the normalized adjacency of its training graph.
#[derive(Debug, Clone)]
pub struct GcnModel {
    pub params: ParamSet,
    pub hidden_dim: usize,
    pub feat_dim: usize,
    pub num_labels: usize,
    pub seed: u64,
    pub adjacency: SparseRows,
}

/// JSON sidecar written next to a model checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub hidden_dim: usize,
    pub feat_dim: usize,
    pub num_labels: usize,
    pub seed: u64,
}

impl GcnModel {
    pub fn meta(&self) -> ModelMeta {
        ModelMeta {
            hidden_dim: self.hidden_dim,
            feat_dim: self.feat_dim,
            num_labels: self.num_labels,
            seed: self.seed,
        }
    }

    /// Writes `<stem>.params` and `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        self.params.save(&dir.join(format!("{stem}.params")))?;
        let path = dir.join(format!("{stem}.json"));
        let json = serde_json::to_string_pretty(&self.meta()).expect("meta serializes");
        std::fs::write(&path, json).map_err(|e| Error::io(path, e))
    }
}

/// Indices of the labeled training rows for graph `g` under `split`: the split's
/// train nodes plus every injected node (index ≥ the split's node count) that has
/// at least one edge. Isolated injected nodes carry no signal to the original
/// graph and are left out of the loss.
pub fn labeled_rows(g: &Graph, split: &SplitSpec) -> Vec<usize> {
    let n_clean = split.num_nodes();
    let deg = g.degrees();
    let mut rows = split.train.clone();
    rows.extend((n_clean..g.num_nodes()).filter(|&i| deg[i] > 0));
    rows
}

/// Trains on `g` (possibly poisoned). Nodes beyond the split are injected nodes;
/// their labels come from `labels_override` (indexed from the first injected node)
/// when given, otherwise from `g`.
pub fn train(
    g: &Graph,
    labels_override: Option<&[usize]>,
    split: &SplitSpec,
    cfg: &TrainConfig,
) -> Result<GcnModel> {
    let n_clean = split.num_nodes();
    if n_clean > g.num_nodes() {
        return Err(Error::InvalidGraph(format!(
            "split covers {n_clean} nodes but graph has {}",
            g.num_nodes()
        )));
    }
    if split.train.is_empty() {
        return Err(Error::EmptySet("train split"));
    }
    let mut targets = g.labels().to_vec();
    if let Some(over) = labels_override {
        if over.len() != g.num_nodes() - n_clean {
            return Err(Error::Config(format!(
                "{} override labels for {} injected nodes",
                over.len(),
                g.num_nodes() - n_clean
            )));
        }
        if let Some(&bad) = over.iter().find(|&&l| l >= g.num_labels()) {
            return Err(Error::Config(format!("override label {bad} out of range")));
        }
        targets[n_clean..].copy_from_slice(over);
    }
    let adjacency = normalize_adjacency(g);
    let labeled = labeled_rows(g, split);
    let problem = GcnProblem {
        adjacency: &adjacency,
        features: g.features(),
        targets: &targets,
        num_labels: g.num_labels(),
        labeled: &labeled,
        validation: &split.validation,
    };
    let params = fit(&problem, g.feat_dim(), cfg)?;
    Ok(GcnModel {
        params,
        hidden_dim: cfg.hidden_dim,
        feat_dim: g.feat_dim(),
        num_labels: g.num_labels(),
        seed: cfg.seed,
        adjacency,
    })
}

fn check_compatible(model: &GcnModel, g: &Graph) -> Result<()> {
    if g.feat_dim() != model.feat_dim || g.num_labels() != model.num_labels {
        return Err(Error::Shape {
            op: "gcn forward",
            left: (model.feat_dim, model.num_labels),
            right: (g.feat_dim(), g.num_labels()),
        });
    }
    Ok(())
}

/// Class probabilities on `g`.
pub fn forward(model: &GcnModel, g: &Graph) -> Result<DenseMatrix> {
    check_compatible(model, g)?;
    predict_proba(&model.params, &normalize_adjacency(g), g.features())
}

pub fn predict(model: &GcnModel, g: &Graph) -> Result<Vec<usize>> {
    Ok(argmax_rows(&forward(model, g)?))
}

pub fn accuracy(pred: &[usize], truth: &[usize], over: &[usize]) -> Result<f64> {
    if over.is_empty() {
        return Err(Error::EmptySet("accuracy node set"));
    }
    let hits = over.iter().filter(|&&i| pred[i] == truth[i]).count();
    Ok(hits as f64 / over.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{random_split, sbm_generate, SbmParams};

    /// The unfused epoch: forward, cross-entropy, backward, decay, Adam.
    fn fit_reference(problem: &GcnProblem<'_>, feat_dim: usize, cfg: &TrainConfig) -> ParamSet {
        let mut params = init_params(feat_dim, cfg.hidden_dim, problem.num_labels, cfg.seed);
        let adam = AdamConfig::with_lr(cfg.lr);
        let ax = problem.adjacency.spmm(problem.features).unwrap();
        let mut best: Option<(f64, ParamSet)> = None;
        let mut stale = 0;
        for _ in 0..cfg.epochs {
            let act = forward_from_ax(&params, problem.adjacency, &ax).unwrap();
            let (_, dz2) = cross_entropy(&act.z2, problem.targets, problem.labeled).unwrap();
            let (val, _) = cross_entropy(&act.z2, problem.targets, problem.validation).unwrap();
            match &best {
                Some((b, _)) if val >= *b => {
                    stale += 1;
                    if stale >= cfg.patience {
                        break;
                    }
                }
                _ => {
                    best = Some((val, params.clone()));
                    stale = 0;
                }
            }
            let (mut dw0, dw1, _) = backward(&params, problem.adjacency, &ax, &act, &dz2).unwrap();
            for (g, w) in dw0.data_mut().iter_mut().zip(params.get(W0).data()) {
                *g += cfg.weight_decay * w;
            }
            params.accumulate_grad(W0, &dw0).unwrap();
            params.accumulate_grad(W1, &dw1).unwrap();
            params.adam_step(&adam).unwrap();
        }
        best.map_or(params, |(_, p)| p)
    }

    #[test]
    fn fused_fit_is_bit_identical_to_reference() {
        for seed in 0..4 {
            let p = SbmParams { nodes_per_block: 30, ..SbmParams::default() };
            let g = sbm_generate(&p, seed).unwrap();
            let split = random_split(&g, seed).unwrap();
            let adj = normalize_adjacency(&g);
            let problem = GcnProblem {
                adjacency: &adj,
                features: g.features(),
                targets: g.labels(),
                num_labels: g.num_labels(),
                labeled: &split.train,
                validation: &split.validation,
            };
            for epochs in [1, 7, 60] {
                let cfg = TrainConfig { epochs, seed, patience: 5, ..TrainConfig::default() };
                let fused = fit(&problem, g.feat_dim(), &cfg).unwrap();
                let reference = fit_reference(&problem, g.feat_dim(), &cfg);
                for name in [W0, W1] {
                    assert_eq!(fused.get(name), reference.get(name), "seed {seed} epochs {epochs} {name}");
                }
            }
        }
    }

    fn plain(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new(n, edges.iter().copied(), DenseMatrix::zeros(n, 2), vec![0; n], 2).unwrap()
    }

    #[test]
    fn isolated_node_normalizes_to_one() {
        assert_eq!(normalize_adjacency(&plain(1, &[])).to_dense().data(), &[1.0]);
    }

    #[test]
    fn single_edge_is_all_half() {
        let a = normalize_adjacency(&plain(2, &[(0, 1)])).to_dense();
        assert!(a.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn zero_output_weights_give_uniform_rows() {
        let g = plain(4, &[(0, 1), (2, 3)]);
        let mut params = init_params(2, 3, 2, 0);
        params.get_mut(W1).fill(0.0);
        let p = predict_proba(&params, &normalize_adjacency(&g), g.features()).unwrap();
        assert!(p.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert_eq!(argmax_rows(&p), vec![0; 4]);
    }

    #[test]
    fn accuracy_cases() {
        let all = [0, 1, 2, 3];
        assert_eq!(accuracy(&[0, 1, 0, 1], &[0, 1, 0, 1], &all).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0, 1, 0], &[0, 1, 0, 1], &all).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 0, 0, 0], &[0, 1, 0, 1], &all).unwrap(), 0.5);
        assert!(accuracy(&[0], &[0], &[]).is_err());
    }

    #[test]
    fn labeled_rows_skip_isolated_injected() {
        let g = plain(12, &[(0, 1), (10, 3)]);
        let split = SplitSpec {
            seed: 0,
            train: vec![0, 1],
            validation: vec![2],
            test: (3..10).collect(),
        };
        assert_eq!(labeled_rows(&g, &split), vec![0, 1, 10]);
    }
}
