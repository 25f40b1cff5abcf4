//! Hierarchical Q-learning attacker.

mod heads;
mod replay;

use std::cell::OnceCell;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{
    all_single_labels, init_embedding, label_encoder_backward, label_histogram, unit_adjacency,
    EmbeddingConfig, EmbeddingParams, EncoderCache, EncoderGrads, StateNodes, AGG, LABEL_HIDDEN,
    LABEL_OUT, LIFT,
};
use crate::env::{AttackEnv, HierAction, PoisonState};
use crate::error::{Error, Result};
use crate::numerics::{axpy, vec_mat, AdamConfig, DenseMatrix, ParamSet, SparseRows};
use crate::rng::{derive_seed, seeded};

pub use heads::{head_backward, head_score, init_heads, q1_score, q2_score, q3_score, Head};
pub use replay::{ReplayBuffer, Snapshot, Transition};

use heads::{add_segment, finish, head_backward_into};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub episodes: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Linear decay length; half the total number of steps when absent.
    pub epsilon_decay_steps: Option<usize>,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Target networks are refreshed every this many updates.
    pub target_sync: usize,
    pub lr: f64,
    /// Discount; the attack configuration's value when absent.
    pub gamma: Option<f64>,
    pub embedding: EmbeddingConfig,
    pub q_hidden: usize,
    /// Run one ε = 0 episode after training and keep it if it beats every training episode.
    pub greedy_rollout: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            episodes: 200,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: None,
            replay_capacity: 10_000,
            batch_size: 32,
            target_sync: 50,
            lr: 1e-3,
            gamma: None,
            embedding: EmbeddingConfig::default(),
            q_hidden: 32,
            greedy_rollout: true,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.epsilon_end && self.epsilon_end <= self.epsilon_start && self.epsilon_start <= 1.0) {
            return Err(Error::Config(format!(
                "need 0 ≤ epsilon_end ({}) ≤ epsilon_start ({}) ≤ 1",
                self.epsilon_end, self.epsilon_start
            )));
        }
        if self.batch_size == 0 || self.batch_size > self.replay_capacity {
            return Err(Error::Config(format!(
                "batch_size {} must be in 1..={}",
                self.batch_size, self.replay_capacity
            )));
        }
        if self.episodes == 0 || self.target_sync == 0 || self.q_hidden == 0 {
            return Err(Error::Config("episodes, target_sync and q_hidden must be ≥ 1".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Config(format!("gamma = {g} outside (0, 1]")));
            }
        }
        self.embedding.validate()
    }

    pub fn decay_steps(&self, total_steps: usize) -> usize {
        self.epsilon_decay_steps.unwrap_or(total_steps / 2)
    }

    /// Linear schedule from `epsilon_start` to `epsilon_end` over `decay_steps`.
    pub fn epsilon_at(&self, step: usize, decay_steps: usize) -> f64 {
        if decay_steps == 0 || step >= decay_steps {
            return self.epsilon_end;
        }
        let frac = step as f64 / decay_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Online and target parameters: shared embedding weights plus the three heads.
#[derive(Debug, Clone, PartialEq)]
pub struct QHeads {
    pub online: ParamSet,
    pub target: ParamSet,
    pub embedding: EmbeddingConfig,
    pub hidden: usize,
}

impl QHeads {
    pub fn new(feat_dim: usize, num_labels: usize, embedding: EmbeddingConfig, hidden: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let mut online = ParamSet::new();
        init_embedding(&mut online, feat_dim, num_labels, &embedding, &mut rng);
        init_heads(&mut online, embedding.dim, hidden, &mut rng);
        let target = online.clone();
        Self {
            online,
            target,
            embedding,
            hidden,
        }
    }

    pub fn sync_target(&mut self) {
        self.target.copy_values_from(&self.online);
    }

    pub fn dim(&self) -> usize {
        self.embedding.dim
    }
}

/// Graph-level inputs shared by every state of one environment.
#[derive(Debug, Clone)]
pub struct AgentContext {
    pub features: DenseMatrix,
    pub clean_adjacency: SparseRows,
    pub num_clean: usize,
    pub num_labels: usize,
}

impl AgentContext {
    pub fn from_state(state: &PoisonState) -> Self {
        Self {
            features: state.stacked_features(),
            clean_adjacency: unit_adjacency(state.num_total(), state.base().edges()),
            num_clean: state.num_clean(),
            num_labels: state.base().num_labels(),
        }
    }

    pub fn num_total(&self) -> usize {
        self.features.rows()
    }

    pub fn num_injected(&self) -> usize {
        self.num_total() - self.num_clean
    }
}

/// Embedding of one state.
struct Encoded {
    nodes: StateNodes,
    hist: Vec<f64>,
    state_vec: Vec<f64>,
}

/// Scores states under one fixed parameter snapshot.
struct Scorer {
    params: ParamSet,
    rounds: usize,
    cache: EncoderCache,
    labels_all: DenseMatrix,
    q2_proj: OnceCell<DenseMatrix>,
    q3_label_proj: DenseMatrix,
}

fn w2_block(w2: &DenseMatrix, start: usize, len: usize) -> DenseMatrix {
    w2.select_rows(&(start..start + len).collect::<Vec<_>>())
}

impl Scorer {
    fn new(ctx: &AgentContext, params: ParamSet, rounds: usize) -> Result<Self> {
        let emb = EmbeddingParams::from_params(&params, rounds);
        let d = emb.dim();
        let cache = EncoderCache::new(&ctx.features, &ctx.clean_adjacency, &emb)?;
        let labels_all = all_single_labels(&emb);
        let q3_label_proj = labels_all.matmul(&w2_block(params.get(Head::Q3.w2()), 3 * d, d))?;
        Ok(Self {
            params,
            rounds,
            cache,
            labels_all,
            q2_proj: OnceCell::new(),
            q3_label_proj,
        })
    }

    fn emb(&self) -> EmbeddingParams<'_> {
        EmbeddingParams::from_params(&self.params, self.rounds)
    }

    fn dim(&self) -> usize {
        self.cache.dim()
    }

    fn q2_proj(&self) -> &DenseMatrix {
        self.q2_proj.get_or_init(|| {
            let d = self.dim();
            self.cache
                .base_embeddings()
                .matmul(&w2_block(self.params.get(Head::Q2.w2()), 3 * d, d))
                .expect("embedding width matches head input")
        })
    }

    fn encode(&self, ctx: &AgentContext, adv_edges: &[(usize, usize)], labels: &[usize]) -> Result<Encoded> {
        let emb = self.emb();
        let nodes = self.cache.encode(&ctx.clean_adjacency, adv_edges, &emb)?;
        let hist = label_histogram(labels, emb.num_labels())?;
        let mut hidden = vec![0.0; emb.label_hidden.cols()];
        vec_mat(&hist, emb.label_hidden, &mut hidden);
        hidden.iter_mut().for_each(|v| *v = v.max(0.0));
        let mut label_vec = vec![0.0; self.dim()];
        vec_mat(&hidden, emb.label_out, &mut label_vec);
        let mut state_vec = nodes.graph_vec.clone();
        state_vec.extend_from_slice(&label_vec);
        Ok(Encoded { nodes, hist, state_vec })
    }

    fn node<'s>(&'s self, enc: &'s Encoded, v: usize) -> &'s [f64] {
        self.cache.node(&enc.nodes, v)
    }

    /// Pre-activation contribution of `e(s)` and optionally `e(a1)` to `head`.
    fn prefix(&self, head: Head, enc: &Encoded, a1_global: Option<usize>) -> Vec<f64> {
        let w2 = self.params.get(head.w2());
        let mut pre = vec![0.0; w2.cols()];
        add_segment(&mut pre, w2, 0, &enc.state_vec);
        if let Some(v) = a1_global {
            add_segment(&mut pre, w2, 2 * self.dim(), self.node(enc, v));
        }
        pre
    }

    /// Best valid injected node by q1 as `(local index, value)`; ties go to the smallest index.
    fn best_a1(&self, ctx: &AgentContext, enc: &Encoded, mask: &[bool]) -> Option<(usize, f64)> {
        let w2 = self.params.get(Head::Q1.w2());
        let w1 = self.params.get(Head::Q1.w1());
        let base = self.prefix(Head::Q1, enc, None);
        let mut best: Option<(usize, f64)> = None;
        let mut pre = vec![0.0; base.len()];
        for (i, _) in mask.iter().enumerate().filter(|(_, &ok)| ok) {
            pre.copy_from_slice(&base);
            add_segment(&mut pre, w2, 2 * self.dim(), self.node(enc, ctx.num_clean + i));
            let q = finish(&pre, w1);
            if best.is_none_or(|(_, b)| q > b) {
                best = Some((i, q));
            }
        }
        best
    }

    fn best_a2(&self, enc: &Encoded, a1_global: usize, mask: &[bool]) -> Option<(usize, f64)> {
        let d = self.dim();
        let w2 = self.params.get(Head::Q2.w2());
        let w1 = self.params.get(Head::Q2.w1());
        let base = self.prefix(Head::Q2, enc, Some(a1_global));
        let proj = self.q2_proj();
        let mut best: Option<(usize, f64)> = None;
        let mut pre = vec![0.0; base.len()];
        for (u, _) in mask.iter().enumerate().filter(|(_, &ok)| ok) {
            pre.copy_from_slice(&base);
            if self.cache.is_base_row(&enc.nodes, u) {
                axpy(&mut pre, 1.0, proj.row(u));
            } else {
                add_segment(&mut pre, w2, 3 * d, self.node(enc, u));
            }
            let q = finish(&pre, w1);
            if best.is_none_or(|(_, b)| q > b) {
                best = Some((u, q));
            }
        }
        best
    }

    fn best_a3(&self, enc: &Encoded, a1_global: usize) -> (usize, f64) {
        let w1 = self.params.get(Head::Q3.w1());
        let base = self.prefix(Head::Q3, enc, Some(a1_global));
        let mut best = (0, f64::NEG_INFINITY);
        let mut pre = vec![0.0; base.len()];
        for l in 0..self.labels_all.rows() {
            pre.copy_from_slice(&base);
            axpy(&mut pre, 1.0, self.q3_label_proj.row(l));
            let q = finish(&pre, w1);
            if q > best.1 {
                best = (l, q);
            }
        }
        best
    }

    /// Input vector of `head` for `act` in the encoded state.
    fn input(&self, head: Head, ctx: &AgentContext, enc: &Encoded, act: HierAction) -> Vec<f64> {
        let e1 = self.node(enc, ctx.num_clean + act.a1);
        let last: &[f64] = match head {
            Head::Q1 => &[],
            Head::Q2 => self.node(enc, act.a2),
            Head::Q3 => self.labels_all.row(act.a3),
        };
        [&enc.state_vec[..], e1, last].concat()
    }
}

/// Level masks of a state given only its adversarial edges.
fn level1_mask(ctx: &AgentContext, adv_edges: &[(usize, usize)]) -> Vec<bool> {
    let mut deg = vec![0usize; ctx.num_injected()];
    for &(u, v) in adv_edges {
        for x in [u, v] {
            if x >= ctx.num_clean {
                deg[x - ctx.num_clean] += 1;
            }
        }
    }
    let full = ctx.num_total() - 1;
    deg.into_iter().map(|k| k < full).collect()
}

fn level2_mask(ctx: &AgentContext, adv_edges: &[(usize, usize)], a1_global: usize) -> Vec<bool> {
    let mut mask = vec![true; ctx.num_total()];
    mask[a1_global] = false;
    for &(u, v) in adv_edges {
        if u == a1_global {
            mask[v] = false;
        } else if v == a1_global {
            mask[u] = false;
        }
    }
    mask
}

fn uniform_choice<R: Rng + ?Sized>(mask: &[bool], rng: &mut R) -> Option<usize> {
    let count = mask.iter().filter(|&&b| b).count();
    if count == 0 {
        return None;
    }
    let k = rng.random_range(0..count);
    mask.iter().enumerate().filter(|(_, &b)| b).nth(k).map(|(i, _)| i)
}

/// ε-greedy hierarchical selection; each level flips its own ε coin.
fn select_with<R: Rng + ?Sized>(
    scorer: &Scorer,
    ctx: &AgentContext,
    state: &PoisonState,
    enc: &Encoded,
    epsilon: f64,
    rng: &mut R,
) -> Result<HierAction> {
    let m1 = state.level1_mask();
    let a1 = if rng.random::<f64>() < epsilon {
        uniform_choice(&m1, rng)
    } else {
        scorer.best_a1(ctx, enc, &m1).map(|(i, _)| i)
    }
    .ok_or(Error::NoValidAction)?;
    let g1 = ctx.num_clean + a1;
    let m2 = state.level2_mask(a1);
    let a2 = if rng.random::<f64>() < epsilon {
        uniform_choice(&m2, rng)
    } else {
        scorer.best_a2(enc, g1, &m2).map(|(u, _)| u)
    }
    .ok_or(Error::NoValidAction)?;
    let a3 = if rng.random::<f64>() < epsilon {
        rng.random_range(0..ctx.num_labels)
    } else {
        scorer.best_a3(enc, g1).0
    };
    Ok(HierAction { a1, a2, a3 })
}

/// Selects an action for `state` with the online weights of `heads`.
pub fn select_action<R: Rng + ?Sized>(
    ctx: &AgentContext,
    heads: &QHeads,
    state: &PoisonState,
    epsilon: f64,
    rng: &mut R,
) -> Result<HierAction> {
    if state.is_terminal() {
        return Err(Error::NoValidAction);
    }
    let scorer = Scorer::new(ctx, heads.online.clone(), heads.embedding.rounds)?;
    let enc = scorer.encode(ctx, state.adv_edges(), state.adv_labels())?;
    select_with(&scorer, ctx, state, &enc, epsilon, rng)
}

/// `δ` clipped to `[−1, 1]`.
pub fn clip_td(delta: f64) -> f64 {
    delta.clamp(-1.0, 1.0)
}

/// Per-head regression targets for the transitions `indices` of `buffer`,
/// computed with the target weights.
pub fn td_targets(
    ctx: &AgentContext,
    heads: &QHeads,
    buffer: &ReplayBuffer,
    indices: &[usize],
    gamma: f64,
) -> Result<Vec<[f64; 3]>> {
    if indices.is_empty() {
        return Err(Error::EmptySet("td batch"));
    }
    let scorer = Scorer::new(ctx, heads.target.clone(), heads.embedding.rounds)?;
    indices.iter().map(|&i| target_for(&scorer, ctx, buffer, i, gamma)).collect()
}

fn target_for(scorer: &Scorer, ctx: &AgentContext, buffer: &ReplayBuffer, i: usize, gamma: f64) -> Result<[f64; 3]> {
    let tr = buffer.get(i);
    let r = tr.reward;
    if tr.terminal || gamma == 0.0 {
        return Ok([r; 3]);
    }
    let next = buffer.next_state(i);
    let enc = scorer.encode(ctx, next.adv_edges, &next.adv_labels)?;
    let m1 = level1_mask(ctx, next.adv_edges);
    let Some((a1, q1)) = scorer.best_a1(ctx, &enc, &m1) else {
        return Ok([r; 3]);
    };
    let g1 = ctx.num_clean + a1;
    let m2 = level2_mask(ctx, next.adv_edges, g1);
    let q2 = scorer.best_a2(&enc, g1, &m2).map_or(0.0, |(_, q)| q);
    let (_, q3) = scorer.best_a3(&enc, g1);
    Ok([r + gamma * q1, r + gamma * q2, r + gamma * q3])
}

/// Gradient accumulator for one backward sweep over many states.
struct Backprop<'s> {
    scorer: &'s Scorer,
    heads: Vec<(DenseMatrix, DenseMatrix)>,
    label_hidden: DenseMatrix,
    label_out: DenseMatrix,
    encoder: EncoderGrads,
}

impl<'s> Backprop<'s> {
    fn new(scorer: &'s Scorer) -> Self {
        let p = &scorer.params;
        let zeros = |name: &str| {
            let (r, c) = p.get(name).shape();
            DenseMatrix::zeros(r, c)
        };
        Self {
            scorer,
            heads: Head::ALL.iter().map(|h| (zeros(h.w2()), zeros(h.w1()))).collect(),
            label_hidden: zeros(LABEL_HIDDEN),
            label_out: zeros(LABEL_OUT),
            encoder: EncoderGrads::new(&scorer.cache),
        }
    }

    /// Backpropagates `Σ_k dq[k]·q_k(s, act)` for the state with `adv_edges`.
    fn add(
        &mut self,
        ctx: &AgentContext,
        enc: &Encoded,
        adv_edges: &[(usize, usize)],
        act: HierAction,
        dq: [f64; 3],
    ) -> Result<()> {
        let sc = self.scorer;
        let d = sc.dim();
        let emb = sc.emb();
        let g1 = ctx.num_clean + act.a1;
        let mut graph_grad = vec![0.0; d];
        let mut label_grad = vec![0.0; d];
        let mut e1_grad = vec![0.0; d];
        let mut a2_grad: Option<Vec<f64>> = None;
        for head in Head::ALL {
            let k = head as usize;
            if dq[k] == 0.0 {
                continue;
            }
            let input = sc.input(head, ctx, enc, act);
            let (g2, g1w) = &mut self.heads[k];
            let din = head_backward_into(sc.params.get(head.w2()), sc.params.get(head.w1()), &input, dq[k], g2, g1w);
            axpy(&mut graph_grad, 1.0, &din[..d]);
            axpy(&mut label_grad, 1.0, &din[d..2 * d]);
            axpy(&mut e1_grad, 1.0, &din[2 * d..3 * d]);
            match head {
                Head::Q1 => {}
                Head::Q2 => a2_grad = Some(din[3 * d..].to_vec()),
                Head::Q3 => {
                    let mut onehot = vec![0.0; ctx.num_labels];
                    onehot[act.a3] = 1.0;
                    label_encoder_backward(&onehot, &din[3 * d..], &emb, &mut self.label_hidden, &mut self.label_out);
                }
            }
        }
        label_encoder_backward(&enc.hist, &label_grad, &emb, &mut self.label_hidden, &mut self.label_out);
        let mut rows: Vec<(usize, &[f64])> = vec![(g1, &e1_grad)];
        if let Some(g) = &a2_grad {
            rows.push((act.a2, g));
        }
        self.encoder
            .backprop_state(&sc.cache, &ctx.clean_adjacency, &enc.nodes, adv_edges, &graph_grad, &rows, &emb)
    }

    /// Gradients keyed by parameter name.
    fn finish(self, ctx: &AgentContext) -> Result<ParamSet> {
        let emb = self.scorer.emb();
        let (d_lift, d_agg) = self.encoder.finish(&self.scorer.cache, &ctx.features, &ctx.clean_adjacency, &emb)?;
        let mut out = ParamSet::new();
        for (head, (g2, g1)) in Head::ALL.iter().zip(self.heads) {
            out.insert(head.w2(), g2);
            out.insert(head.w1(), g1);
        }
        out.insert(LIFT, d_lift);
        out.insert(AGG, d_agg);
        out.insert(LABEL_HIDDEN, self.label_hidden);
        out.insert(LABEL_OUT, self.label_out);
        Ok(out)
    }
}

fn add_grads(params: &mut ParamSet, grads: &ParamSet) -> Result<()> {
    for name in grads.names() {
        params.accumulate_grad(name, grads.get(name))?;
    }
    Ok(())
}

/// Clipped squared TD loss over `indices` and its gradient. Heads outside
/// `active` contribute neither loss nor gradient.
fn td_loss_grad(
    ctx: &AgentContext,
    online: &Scorer,
    buffer: &ReplayBuffer,
    indices: &[usize],
    targets: &[[f64; 3]],
    active: &[Head],
) -> Result<(f64, ParamSet)> {
    let scale = 1.0 / indices.len() as f64;
    let mut bp = Backprop::new(online);
    let mut loss = 0.0;
    for (&i, y) in indices.iter().zip(targets) {
        let act = buffer.get(i).action;
        let snap = buffer.state(i);
        let enc = online.encode(ctx, snap.adv_edges, &snap.adv_labels)?;
        let mut dq = [0.0; 3];
        for &head in active {
            let k = head as usize;
            let q = head_score(head, &online.input(head, ctx, &enc, act), &online.params)?;
            let delta = clip_td(q - y[k]);
            loss += delta * delta * scale;
            dq[k] = 2.0 * delta * scale;
        }
        bp.add(ctx, &enc, snap.adv_edges, act, dq)?;
    }
    Ok((loss, bp.finish(ctx)?))
}

/// Score of `head` on `(state, act)` with the online weights; the gradient of the
/// score with respect to every online parameter is added to `heads.online`.
pub fn score_gradient(
    ctx: &AgentContext,
    heads: &mut QHeads,
    state: &PoisonState,
    act: HierAction,
    head: Head,
) -> Result<f64> {
    let scorer = Scorer::new(ctx, heads.online.clone(), heads.embedding.rounds)?;
    let enc = scorer.encode(ctx, state.adv_edges(), state.adv_labels())?;
    let q = head_score(head, &scorer.input(head, ctx, &enc, act), &scorer.params)?;
    let mut dq = [0.0; 3];
    dq[head as usize] = 1.0;
    let mut bp = Backprop::new(&scorer);
    bp.add(ctx, &enc, state.adv_edges(), act, dq)?;
    let grads = bp.finish(ctx)?;
    add_grads(&mut heads.online, &grads)?;
    Ok(q)
}

/// Score of `head` on `(state, act)` recomputed from scratch with the plain
/// embedding functions (no caching).
pub fn score_reference(ctx: &AgentContext, params: &ParamSet, rounds: usize, state: &PoisonState, act: HierAction, head: Head) -> Result<f64> {
    let emb = EmbeddingParams::from_params(params, rounds);
    let view = crate::embedding::PoisonedView {
        features: &ctx.features,
        clean_adjacency: &ctx.clean_adjacency,
        adv_edges: state.adv_edges(),
    };
    let nodes = crate::embedding::embed_nodes(&view, &emb)?;
    let mut s = crate::embedding::embed_graph(&nodes)?;
    s.extend(crate::embedding::embed_labels(state.adv_labels(), &emb)?);
    let e1 = nodes.row(ctx.num_clean + act.a1);
    match head {
        Head::Q1 => q1_score(&s, e1, params),
        Head::Q2 => q2_score(&s, e1, nodes.row(act.a2), params),
        Head::Q3 => q3_score(&s, e1, &crate::embedding::embed_single_label(act.a3, &emb)?, params),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    /// The agent chooses labels through head 3.
    Learned,
    /// Labels stay at their reset values; head 3 is not trained.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: usize,
    pub step: usize,
    pub action: HierAction,
    pub reward: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub final_rate: f64,
    pub total_reward: f64,
    pub epsilon_end: f64,
}

#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub best_state: PoisonState,
    pub best_rate: f64,
    /// Winning training episode; `None` when the greedy rollout won.
    pub best_episode: Option<usize>,
    pub greedy_rate: Option<f64>,
    pub episodes: Vec<EpisodeSummary>,
    pub steps: Vec<StepRecord>,
    pub replay_len: usize,
    pub updates: usize,
    pub heads: QHeads,
}

/// Trains the hierarchical attacker on `env` and returns the best poisoned state.
pub fn train_attack(env: &AttackEnv, acfg: &AgentConfig, seed: u64) -> Result<AttackOutcome> {
    train_attack_with(env, acfg, seed, LabelMode::Learned)
}

pub fn train_attack_with(env: &AttackEnv, acfg: &AgentConfig, seed: u64, mode: LabelMode) -> Result<AttackOutcome> {
    acfg.validate()?;
    let budget = env.budget();
    if budget == 0 {
        return Err(Error::Config("train_attack needs a budget of at least one edge".into()));
    }
    let gamma = acfg.gamma.unwrap_or(env.config().gamma);
    let base = env.base();
    let mut heads = QHeads::new(base.feat_dim(), base.num_labels(), acfg.embedding, acfg.q_hidden, derive_seed(seed, 0));
    let mut rng = seeded(derive_seed(seed, 1));
    let label_stream = derive_seed(seed, 2);
    let ctx = AgentContext::from_state(&env.reset(0));
    let adam = AdamConfig::with_lr(acfg.lr);
    let total_steps = acfg.episodes * budget;
    let decay = acfg.decay_steps(total_steps);
    let mut buffer = ReplayBuffer::new(acfg.replay_capacity, ctx.num_clean);
    let rounds = acfg.embedding.rounds;
    let mut target = Scorer::new(&ctx, heads.target.clone(), rounds)?;
    let active: &[Head] = match mode {
        LabelMode::Learned => &Head::ALL,
        LabelMode::Frozen => &Head::ALL[..2],
    };
    let mut steps = Vec::with_capacity(total_steps);
    let mut episodes = Vec::with_capacity(acfg.episodes);
    let mut best: Option<(f64, usize, PoisonState)> = None;
    let mut global_step = 0usize;
    let mut updates = 0usize;

    for ep in 0..acfg.episodes {
        let mut state = env.reset(derive_seed(label_stream, ep as u64));
        let initial = state.adv_labels().to_vec();
        let mut prev_rate = env.clean_rate();
        buffer.begin_episode(ep, initial.clone());
        let mut total_reward = 0.0;
        let mut eps = acfg.epsilon_start;
        for t in 0..budget {
            eps = acfg.epsilon_at(global_step, decay);
            let online = Scorer::new(&ctx, heads.online.clone(), rounds)?;
            let enc = online.encode(&ctx, state.adv_edges(), state.adv_labels())?;
            let mut act = select_with(&online, &ctx, &state, &enc, eps, &mut rng)?;
            if mode == LabelMode::Frozen {
                act.a3 = initial[act.a1];
            }
            let outcome = env.step(&state, act, prev_rate)?;
            buffer.push(act, outcome.reward, outcome.terminal);
            let batch = buffer.sample(acfg.batch_size, &mut rng);
            let targets = batch
                .iter()
                .map(|&i| target_for(&target, &ctx, &buffer, i, gamma))
                .collect::<Result<Vec<_>>>()?;
            let (_, grads) = td_loss_grad(&ctx, &online, &buffer, &batch, &targets, active)?;
            add_grads(&mut heads.online, &grads)?;
            heads.online.adam_step(&adam)?;
            updates += 1;
            if updates.is_multiple_of(acfg.target_sync) {
                heads.sync_target();
                target = Scorer::new(&ctx, heads.target.clone(), rounds)?;
            }
            total_reward += outcome.reward;
            steps.push(StepRecord {
                episode: ep,
                step: t,
                action: act,
                reward: outcome.reward,
                success_rate: outcome.rate,
            });
            prev_rate = outcome.rate;
            state = outcome.next;
            global_step += 1;
        }
        episodes.push(EpisodeSummary {
            episode: ep,
            final_rate: prev_rate,
            total_reward,
            epsilon_end: eps,
        });
        if best.as_ref().is_none_or(|(r, _, _)| prev_rate > *r) {
            best = Some((prev_rate, ep, state));
        }
    }

    let (mut best_rate, best_ep, mut best_state) = best.expect("at least one episode");
    let mut best_episode = Some(best_ep);
    let mut greedy_rate = None;
    if acfg.greedy_rollout {
        let mut state = env.reset(derive_seed(label_stream, acfg.episodes as u64));
        let initial = state.adv_labels().to_vec();
        let mut rate = env.clean_rate();
        while !state.is_terminal() {
            let mut act = select_action(&ctx, &heads, &state, 0.0, &mut rng)?;
            if mode == LabelMode::Frozen {
                act.a3 = initial[act.a1];
            }
            let out = env.step(&state, act, rate)?;
            rate = out.rate;
            state = out.next;
        }
        greedy_rate = Some(rate);
        if rate > best_rate {
            best_rate = rate;
            best_state = state;
            best_episode = None;
        }
    }

    Ok(AttackOutcome {
        best_state,
        best_rate,
        best_episode,
        greedy_rate,
        episodes,
        steps,
        replay_len: buffer.len(),
        updates,
        heads,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointMeta {
    config: AgentConfig,
    rng: ChaCha8Rng,
}

/// Writes `online.params`, `target.params` and `agent.json` into `dir`.
pub fn save_checkpoint(dir: &Path, heads: &QHeads, cfg: &AgentConfig, rng: &ChaCha8Rng) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    heads.online.save(&dir.join("online.params"))?;
    heads.target.save(&dir.join("target.params"))?;
    let meta = CheckpointMeta { config: *cfg, rng: rng.clone() };
    let path = dir.join("agent.json");
    let text = serde_json::to_string_pretty(&meta).expect("checkpoint meta serializes");
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(dir: &Path) -> Result<(QHeads, AgentConfig, ChaCha8Rng)> {
    let online = ParamSet::load(&dir.join("online.params"))?;
    let target = ParamSet::load(&dir.join("target.params"))?;
    let path = dir.join("agent.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    let heads = QHeads {
        online,
        target,
        embedding: meta.config.embedding,
        hidden: meta.config.q_hidden,
    };
    Ok((heads, meta.config, meta.rng))
}
