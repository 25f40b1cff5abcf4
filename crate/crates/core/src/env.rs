//! Node-injection poisoning environment.
//!
//! Injected nodes are appended after the clean nodes: injected node `i` has
//! global index `|V| + i`. Adversarial edges always touch at least one injected
//! node and the clean edge set is never modified.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{self, TrainConfig};
use crate::graph::{load_graph, save_graph, Graph, SplitSpec};
use crate::numerics::DenseMatrix;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// Injection ratio: `|V_A| = round(r·|V|)`.
    pub r: f64,
    /// Average injected degree; the clean average degree when absent.
    pub deg_inject: Option<f64>,
    /// Overrides the derived budget `round(r·|V|·deg_inject)`.
    pub budget: Option<usize>,
    pub gamma: f64,
    pub surrogate_epochs: usize,
    pub surrogate_seed: u64,
    pub feature_noise_seed: u64,
    /// Upper bound accepted for `r`.
    pub max_r: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            r: 0.01,
            deg_inject: None,
            budget: None,
            gamma: 0.9,
            surrogate_epochs: 50,
            surrogate_seed: 0,
            feature_noise_seed: 0,
            max_r: 0.10,
        }
    }
}

/// `round(x)` with halves going up, for non-negative `x`.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r <= self.max_r) {
            return Err(Error::Config(format!(
                "injection ratio r = {} outside (0, {}]",
                self.r, self.max_r
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma = {} outside (0, 1]", self.gamma)));
        }
        if let Some(d) = self.deg_inject {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("deg_inject = {d} must be a non-negative number")));
            }
        }
        if self.surrogate_epochs == 0 {
            return Err(Error::Config("surrogate_epochs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn num_injected(&self, g: &Graph) -> usize {
        round_half_up(self.r * g.num_nodes() as f64)
    }

    pub fn effective_degree(&self, g: &Graph) -> f64 {
        self.deg_inject.unwrap_or_else(|| g.average_degree())
    }

    /// The edge budget Δ.
    pub fn budget(&self, g: &Graph) -> usize {
        self.budget.unwrap_or_else(|| {
            round_half_up(self.r * g.num_nodes() as f64 * self.effective_degree(g))
        })
    }

    pub fn surrogate_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.surrogate_epochs,
            seed: self.surrogate_seed,
            ..TrainConfig::default()
        }
    }
}

/// Column mean of the clean features plus independent `N(0,1)` noise per entry.
pub fn synth_features(g: &Graph, num_injected: usize, seed: u64) -> DenseMatrix {
    let mean = g.features().column_means();
    let mut rng = seeded(seed);
    let mut out = DenseMatrix::zeros(num_injected, g.feat_dim());
    for i in 0..num_injected {
        for (x, m) in out.row_mut(i).iter_mut().zip(&mean) {
            let noise: f64 = rng.sample(StandardNormal);
            *x = m + noise;
        }
    }
    out
}

/// One poisoning move: connect injected node `a1` (local index) to global node
/// `a2`, and set the label of `a1` to `a3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HierAction {
    pub a1: usize,
    pub a2: usize,
    pub a3: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoisonState {
    base: Arc<Graph>,
    injected_features: Arc<DenseMatrix>,
    /// `(global index of a1, a2)` in the order applied.
    adv_edges: Vec<(usize, usize)>,
    adv_labels: Vec<usize>,
    budget: usize,
    /// Sorted adversarial neighbours of each injected node.
    inj_neighbors: Vec<Vec<usize>>,
}

impl PoisonState {
    /// Fresh state with no adversarial edges.
    pub fn new(
        base: Arc<Graph>,
        injected_features: Arc<DenseMatrix>,
        adv_labels: Vec<usize>,
        budget: usize,
    ) -> Result<Self> {
        let m = injected_features.rows();
        if adv_labels.len() != m {
            return Err(Error::Config(format!("{} labels for {m} injected nodes", adv_labels.len())));
        }
        if injected_features.cols() != base.feat_dim() {
            return Err(Error::Shape {
                op: "injected features",
                left: (m, injected_features.cols()),
                right: (base.num_nodes(), base.feat_dim()),
            });
        }
        if let Some(&bad) = adv_labels.iter().find(|&&l| l >= base.num_labels()) {
            return Err(Error::Config(format!("adversarial label {bad} out of range")));
        }
        Ok(Self {
            base,
            injected_features,
            adv_edges: Vec::new(),
            adv_labels,
            budget,
            inj_neighbors: vec![Vec::new(); m],
        })
    }

    /// Rebuilds a state from an edge list and labels, validating every edge.
    pub fn from_parts(
        base: Arc<Graph>,
        injected_features: Arc<DenseMatrix>,
        adv_edges: &[(usize, usize)],
        adv_labels: Vec<usize>,
        budget: usize,
    ) -> Result<Self> {
        let labels = adv_labels.clone();
        let mut s = Self::new(base, injected_features, adv_labels, budget.max(adv_edges.len()))?;
        for &(u, v) in adv_edges {
            let n = s.num_clean();
            let (a1, a2) = match (u >= n, v >= n) {
                (true, _) => (u - n, v),
                (false, true) => (v - n, u),
                (false, false) => {
                    return Err(Error::RejectedAction(format!("edge ({u}, {v}) joins two clean nodes")))
                }
            };
            s.push_edge(a1, a2)?;
        }
        s.adv_labels = labels;
        s.budget = budget;
        Ok(s)
    }

    pub fn base(&self) -> &Arc<Graph> {
        &self.base
    }

    pub fn injected_features(&self) -> &Arc<DenseMatrix> {
        &self.injected_features
    }

    pub fn adv_edges(&self) -> &[(usize, usize)] {
        &self.adv_edges
    }

    pub fn adv_labels(&self) -> &[usize] {
        &self.adv_labels
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn steps_taken(&self) -> usize {
        self.adv_edges.len()
    }

    pub fn num_clean(&self) -> usize {
        self.base.num_nodes()
    }

    pub fn num_injected(&self) -> usize {
        self.adv_labels.len()
    }

    /// `|V′| = |V| + |V_A|`
    pub fn num_total(&self) -> usize {
        self.num_clean() + self.num_injected()
    }

    pub fn is_terminal(&self) -> bool {
        self.adv_edges.len() >= self.budget
    }

    /// Adversarial neighbours (global indices) of injected node `a1`.
    pub fn injected_neighbors(&self, a1: usize) -> &[usize] {
        &self.inj_neighbors[a1]
    }

    pub fn has_adv_edge(&self, u: usize, v: usize) -> bool {
        let n = self.num_clean();
        if u >= n {
            self.inj_neighbors[u - n].binary_search(&v).is_ok()
        } else if v >= n {
            self.inj_neighbors[v - n].binary_search(&u).is_ok()
        } else {
            false
        }
    }

    fn check_edge(&self, a1: usize, a2: usize) -> Result<()> {
        let m = self.num_injected();
        if a1 >= m {
            return Err(Error::RejectedAction(format!("a1 = {a1} is not an injected node (have {m})")));
        }
        if a2 >= self.num_total() {
            return Err(Error::RejectedAction(format!("a2 = {a2} outside V′ of size {}", self.num_total())));
        }
        if a2 == self.num_clean() + a1 {
            return Err(Error::RejectedAction(format!("self-loop on injected node {a1}")));
        }
        if self.inj_neighbors[a1].binary_search(&a2).is_ok() {
            return Err(Error::RejectedAction(format!("duplicate edge ({}, {a2})", self.num_clean() + a1)));
        }
        Ok(())
    }

    fn push_edge(&mut self, a1: usize, a2: usize) -> Result<()> {
        self.check_edge(a1, a2)?;
        let n = self.num_clean();
        let g1 = n + a1;
        let pos = self.inj_neighbors[a1].binary_search(&a2).unwrap_err();
        self.inj_neighbors[a1].insert(pos, a2);
        if a2 >= n {
            let pos = self.inj_neighbors[a2 - n].binary_search(&g1).unwrap_err();
            self.inj_neighbors[a2 - n].insert(pos, g1);
        }
        self.adv_edges.push((g1, a2));
        Ok(())
    }

    /// Removes an adversarial edge given in either orientation.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let idx = self
            .adv_edges
            .iter()
            .position(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u))
            .ok_or_else(|| Error::RejectedAction(format!("no adversarial edge ({u}, {v})")))?;
        let (a, b) = self.adv_edges.remove(idx);
        let n = self.num_clean();
        for (x, y) in [(a, b), (b, a)] {
            if x >= n {
                let list = &mut self.inj_neighbors[x - n];
                let pos = list.binary_search(&y).expect("neighbour lists mirror edges");
                list.remove(pos);
            }
        }
        Ok(())
    }

    /// Adds an adversarial edge without touching labels; the budget is not checked.
    pub fn add_edge(&mut self, a1: usize, a2: usize) -> Result<()> {
        self.push_edge(a1, a2)
    }

    pub fn set_label(&mut self, a1: usize, label: usize) -> Result<()> {
        if label >= self.base.num_labels() {
            return Err(Error::RejectedAction(format!("label {label} out of range")));
        }
        self.adv_labels[a1] = label;
        Ok(())
    }

    /// Level-1 mask over injected nodes: false once every partner is used.
    pub fn level1_mask(&self) -> Vec<bool> {
        let full = self.num_total() - 1;
        self.inj_neighbors.iter().map(|nb| nb.len() < full).collect()
    }

    /// Level-2 mask over V′ for injected node `a1`.
    pub fn level2_mask(&self, a1: usize) -> Vec<bool> {
        let mut mask = vec![true; self.num_total()];
        mask[self.num_clean() + a1] = false;
        for &u in &self.inj_neighbors[a1] {
            mask[u] = false;
        }
        mask
    }

    pub fn level3_mask(&self) -> Vec<bool> {
        vec![true; self.base.num_labels()]
    }

    /// Applies `act`, returning the successor state.
    pub fn apply_action(&self, act: HierAction) -> Result<PoisonState> {
        if self.is_terminal() {
            return Err(Error::RejectedAction(format!("budget {} exhausted", self.budget)));
        }
        if act.a3 >= self.base.num_labels() {
            return Err(Error::RejectedAction(format!("a3 = {} is not a label", act.a3)));
        }
        let mut next = self.clone();
        next.push_edge(act.a1, act.a2)?;
        next.adv_labels[act.a1] = act.a3;
        Ok(next)
    }

    /// Canonical `(min, max)` adversarial edges.
    pub fn canonical_adv_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self.adv_edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        e.sort_unstable();
        e
    }

    /// Features of all `|V′|` nodes, clean rows first.
    pub fn stacked_features(&self) -> DenseMatrix {
        self.base
            .features()
            .vstack(&self.injected_features)
            .expect("feature widths checked at construction")
    }

    /// The poisoned graph `G′`, labels of injected nodes taken from `adv_labels`.
    pub fn poisoned_graph(&self) -> Result<Graph> {
        let mut labels = self.base.labels().to_vec();
        labels.extend_from_slice(&self.adv_labels);
        Graph::new(
            self.num_total(),
            self.base.edges().iter().copied().chain(self.adv_edges.iter().copied()),
            self.stacked_features(),
            labels,
            self.base.num_labels(),
        )
    }
}

/// Fraction of validation nodes the surrogate (trained from scratch on the
/// poisoned graph) misclassifies.
pub fn success_rate(state: &PoisonState, split: &SplitSpec, surrogate_cfg: &TrainConfig) -> Result<f64> {
    if split.validation.is_empty() {
        return Err(Error::EmptySet("validation split"));
    }
    let g = state.poisoned_graph()?;
    let model = gcn::train(&g, None, split, surrogate_cfg)?;
    let pred = gcn::predict(&model, &g)?;
    let truth = state.base().labels();
    let wrong = split.validation.iter().filter(|&&v| pred[v] != truth[v]).count();
    Ok(wrong as f64 / split.validation.len() as f64)
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: PoisonState,
    pub reward: f64,
    pub rate: f64,
    pub terminal: bool,
}

/// `+1` iff `next_rate > prev_rate`, otherwise `−1`.
pub fn guiding_reward(next_rate: f64, prev_rate: f64) -> f64 {
    if next_rate > prev_rate {
        1.0
    } else {
        -1.0
    }
}

pub fn step(
    state: &PoisonState,
    act: HierAction,
    prev_rate: f64,
    split: &SplitSpec,
    surrogate_cfg: &TrainConfig,
) -> Result<StepOutcome> {
    let next = state.apply_action(act)?;
    let rate = success_rate(&next, split, surrogate_cfg)?;
    let terminal = next.is_terminal();
    Ok(StepOutcome {
        next,
        reward: guiding_reward(rate, prev_rate),
        rate,
        terminal,
    })
}

/// Uniformly random labels for `m` injected nodes.
pub fn random_labels<R: Rng + ?Sized>(m: usize, num_labels: usize, rng: &mut R) -> Vec<usize> {
    (0..m).map(|_| rng.random_range(0..num_labels)).collect()
}

/// A configured environment over one clean graph and split.
#[derive(Debug, Clone)]
pub struct AttackEnv {
    base: Arc<Graph>,
    split: SplitSpec,
    cfg: AttackConfig,
    surrogate: TrainConfig,
    injected_features: Arc<DenseMatrix>,
    budget: usize,
    clean_rate: f64,
}

impl AttackEnv {
    pub fn new(base: Arc<Graph>, split: SplitSpec, cfg: AttackConfig) -> Result<Self> {
        cfg.validate()?;
        split.validate(base.num_nodes())?;
        if base.feat_dim() == 0 {
            return Err(Error::Config("feature synthesis needs feat_dim ≥ 1".into()));
        }
        let m = cfg.num_injected(&base);
        if m == 0 {
            return Err(Error::Config(format!("r = {} injects no nodes into {} nodes", cfg.r, base.num_nodes())));
        }
        let injected_features = Arc::new(synth_features(&base, m, cfg.feature_noise_seed));
        let budget = cfg.budget(&base);
        let surrogate = cfg.surrogate_config();
        let mut env = Self {
            base,
            split,
            cfg,
            surrogate,
            injected_features,
            budget,
            clean_rate: 0.0,
        };
        env.clean_rate = success_rate(&env.reset(0), &env.split, &env.surrogate)?;
        Ok(env)
    }

    pub fn base(&self) -> &Arc<Graph> {
        &self.base
    }

    pub fn split(&self) -> &SplitSpec {
        &self.split
    }

    pub fn config(&self) -> &AttackConfig {
        &self.cfg
    }

    pub fn surrogate_config(&self) -> &TrainConfig {
        &self.surrogate
    }

    pub fn injected_features(&self) -> &Arc<DenseMatrix> {
        &self.injected_features
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn num_injected(&self) -> usize {
        self.injected_features.rows()
    }

    /// Surrogate success rate on the clean graph (`A_0`).
    pub fn clean_rate(&self) -> f64 {
        self.clean_rate
    }

    /// Fresh state with labels drawn from `label_seed`.
    pub fn reset(&self, label_seed: u64) -> PoisonState {
        let labels = random_labels(self.num_injected(), self.base.num_labels(), &mut seeded(label_seed));
        self.state_with_labels(labels)
    }

    pub fn state_with_labels(&self, labels: Vec<usize>) -> PoisonState {
        PoisonState::new(self.base.clone(), self.injected_features.clone(), labels, self.budget)
            .expect("environment parts are consistent")
    }

    pub fn success_rate(&self, state: &PoisonState) -> Result<f64> {
        success_rate(state, &self.split, &self.surrogate)
    }

    pub fn step(&self, state: &PoisonState, act: HierAction, prev_rate: f64) -> Result<StepOutcome> {
        step(state, act, prev_rate, &self.split, &self.surrogate)
    }
}

/// Sidecar written next to an exported poisoned graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectedInfo {
    pub num_injected: usize,
    pub adv_labels: Vec<usize>,
    pub adv_edges: Vec<(usize, usize)>,
    pub config: AttackConfig,
    pub seeds: Vec<u64>,
}

/// Writes `G′` in the graph directory format plus `injected.json`.
pub fn export_poisoned(state: &PoisonState, cfg: &AttackConfig, seeds: &[u64], dir: &Path) -> Result<()> {
    save_graph(&state.poisoned_graph()?, dir)?;
    let info = InjectedInfo {
        num_injected: state.num_injected(),
        adv_labels: state.adv_labels().to_vec(),
        adv_edges: state.canonical_adv_edges(),
        config: *cfg,
        seeds: seeds.to_vec(),
    };
    let path = dir.join("injected.json");
    let text = serde_json::to_string_pretty(&info).expect("injected info serializes") + "\n";
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

pub fn load_poisoned(dir: &Path) -> Result<(Graph, InjectedInfo)> {
    let g = load_graph(dir)?;
    let path = dir.join("injected.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let info: InjectedInfo = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    Ok((g, info))
}
