//! End-to-end pipelines: clean baselines, attacks evaluated on exported
//! graphs, degree and sparsity sweeps, and statistics audits.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{train_attack_with, AgentConfig, EpisodeSummary, LabelMode, StepRecord};
use crate::baselines::{fga_attack, preferential_attack, random_attack, FgaCounts};
use crate::env::{export_poisoned, load_poisoned, AttackConfig, AttackEnv, PoisonState};
use crate::error::{Error, Result};
use crate::gcn::{self, TrainConfig};
use crate::graph::{
    graph_statistics, largest_connected_component, load_graph, random_split, sbm_generate, sparsify, Graph,
    GraphStats, SbmParams, SplitSpec,
};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "clean")]
    Clean,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "preferential")]
    Preferential,
    #[serde(rename = "fga")]
    Fga,
    #[serde(rename = "nipa-w/o")]
    NipaWithoutLabels,
    #[serde(rename = "nipa")]
    Nipa,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Clean,
        Method::Random,
        Method::Preferential,
        Method::Fga,
        Method::NipaWithoutLabels,
        Method::Nipa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Clean => "clean",
            Method::Random => "random",
            Method::Preferential => "preferential",
            Method::Fga => "fga",
            Method::NipaWithoutLabels => "nipa-w/o",
            Method::Nipa => "nipa",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nipa-wo" | "nipa_wo" => return Ok(Method::NipaWithoutLabels),
            "pref" => return Ok(Method::Preferential),
            _ => {}
        }
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Where the labels of non-training clean nodes come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSource {
    #[default]
    Truth,
    /// Predictions of a GCN trained on the clean graph.
    Predicted,
}

/// A dataset given either as a graph directory or as a generated SBM.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Dir(PathBuf),
    Sbm { params: SbmParams, seed: u64 },
}

impl FromStr for DatasetSpec {
    type Err = Error;

    /// `sbm` or `sbm:blocks=2,nodes=100,p_in=0.1,p_out=0.01,feat=8,signal=1,seed=0`;
    /// anything else is a directory path.
    fn from_str(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("sbm").filter(|r| r.is_empty() || r.starts_with(':')) else {
            return Ok(DatasetSpec::Dir(PathBuf::from(s)));
        };
        let mut params = SbmParams::default();
        let mut seed = 0;
        for kv in rest.trim_start_matches(':').split(',').filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("sbm option `{kv}` is not key=value")))?;
            let bad = |_| Error::Config(format!("sbm option `{kv}` has an invalid value"));
            match k.trim() {
                "blocks" => params.blocks = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "nodes" => params.nodes_per_block = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "p_in" => params.p_in = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                "p_out" => params.p_out = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                "feat" => params.feat_dim = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "signal" => params.feat_signal = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                "seed" => seed = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                other => return Err(Error::Config(format!("unknown sbm option `{other}`"))),
            }
        }
        Ok(DatasetSpec::Sbm { params, seed })
    }
}

impl DatasetSpec {
    /// Loads the graph; relative directories are resolved against `workdir`.
    pub fn load(&self, workdir: &Path, lcc: bool) -> Result<Graph> {
        let g = match self {
            DatasetSpec::Dir(p) => load_graph(&workdir.join(p))?,
            DatasetSpec::Sbm { params, seed } => sbm_generate(params, *seed)?,
        };
        Ok(if lcc { largest_connected_component(&g) } else { g })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub method: Method,
    pub seeds: Vec<u64>,
    /// Restrict the dataset to its largest connected component.
    pub lcc: bool,
    pub labels: LabelSource,
    /// Fraction of clean edges removed before attacking.
    pub sparsity: f64,
    pub attack: AttackConfig,
    pub agent: AgentConfig,
    pub victim: TrainConfig,
    pub degrees: Vec<f64>,
    pub sparsity_fractions: Vec<f64>,
    /// Compute graph statistics for clean and poisoned graphs.
    pub stats: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: "sbm".into(),
            method: Method::Nipa,
            seeds: (0..5).collect(),
            lcc: true,
            labels: LabelSource::Truth,
            sparsity: 0.0,
            attack: AttackConfig::default(),
            agent: AgentConfig::default(),
            victim: TrainConfig::default(),
            degrees: (3..=10).map(f64::from).collect(),
            sparsity_fractions: (0..10).map(|i| i as f64 / 10.0).collect(),
            stats: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(0.0..1.0).contains(&self.sparsity) {
            return Err(Error::Config(format!("sparsity {} outside [0, 1)", self.sparsity)));
        }
        self.victim.validate()?;
        if self.method != Method::Clean {
            self.attack.validate()?;
        }
        if matches!(self.method, Method::Nipa | Method::NipaWithoutLabels) {
            self.agent.validate()?;
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Execution settings that do not affect results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Base directory for relative dataset paths.
    pub workdir: PathBuf,
    /// Report and export directory; exports go to a scratch directory when absent.
    pub out: Option<PathBuf>,
    /// Seeds processed in parallel.
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub budget: usize,
    pub num_injected: usize,
    pub clean_accuracy: f64,
    pub poisoned_accuracy: Option<f64>,
    pub clean_stats: Option<GraphStats>,
    pub poisoned_stats: Option<GraphStats>,
    /// Best surrogate success rate reached by the learned attacker.
    pub attack_success_rate: Option<f64>,
    pub episodes: Option<Vec<EpisodeSummary>>,
    pub fga: Option<FgaSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FgaSummary {
    pub modifications: usize,
    pub adds: usize,
    pub removes: usize,
    pub no_ops: usize,
}

impl From<FgaCounts> for FgaSummary {
    fn from(c: FgaCounts) -> Self {
        Self {
            modifications: c.modifications,
            adds: c.adds,
            removes: c.removes,
            no_ops: c.no_ops,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub method: Method,
    pub labels: LabelSource,
    pub seeds: Vec<u64>,
    pub r: f64,
    /// Injected degree used for the budget, taken from the first seed's graph.
    pub deg_inject: f64,
    pub sparsity: f64,
    pub per_seed: Vec<SeedReport>,
    pub clean: MeanStd,
    pub poisoned: Option<MeanStd>,
    pub config_hash: String,
    pub wall_clock_secs: f64,
}

impl RunReport {
    /// Mean clean minus mean poisoned accuracy.
    pub fn accuracy_drop(&self) -> Option<f64> {
        self.poisoned.map(|p| self.clean.mean - p.mean)
    }

    /// JSON with the wall-clock field zeroed, for comparing runs.
    pub fn to_json_without_timing(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_secs = 0.0;
        serde_json::to_string_pretty(&r).expect("report serializes")
    }

    /// One row per seed followed by `mean` and `std` rows.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("seed\tclean_accuracy\tpoisoned_accuracy\tbudget\tnum_injected\n");
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
        for p in &self.per_seed {
            let _ = writeln!(
                s,
                "{}\t{:.6}\t{}\t{}\t{}",
                p.seed,
                p.clean_accuracy,
                opt(p.poisoned_accuracy),
                p.budget,
                p.num_injected
            );
        }
        let _ = writeln!(s, "mean\t{:.6}\t{}\t\t", self.clean.mean, opt(self.poisoned.map(|m| m.mean)));
        let _ = writeln!(s, "std\t{:.6}\t{}\t\t", self.clean.std, opt(self.poisoned.map(|m| m.std)));
        s
    }
}

/// Plot data for a sweep: one row per setting.
pub fn sweep_tsv(column: &str, settings: &[f64], reports: &[RunReport]) -> String {
    let mut s = format!("{column}\tbudget\tclean_mean\tclean_std\tpoisoned_mean\tpoisoned_std\tdrop\n");
    for (x, r) in settings.iter().zip(reports) {
        let p = r.poisoned.unwrap_or(r.clean);
        let _ = writeln!(
            s,
            "{x}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            r.per_seed[0].budget,
            r.clean.mean,
            r.clean.std,
            p.mean,
            p.std,
            r.clean.mean - p.mean
        );
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `report.json` and `report.tsv` into `dir`.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    write_file(&dir.join("report.json"), &json)?;
    write_file(&dir.join("report.tsv"), &report.to_tsv())
}

/// Per-seed inputs shared by every method.
struct Prepared {
    graph: Arc<Graph>,
    split: SplitSpec,
    /// Labels accuracy is measured against.
    truth: Vec<usize>,
    clean_accuracy: f64,
}

fn victim_config(cfg: &ExperimentConfig, seed: u64) -> TrainConfig {
    TrainConfig { seed, ..cfg.victim }
}

fn prepare(base: &Graph, cfg: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    let g = if cfg.sparsity > 0.0 {
        sparsify(base, cfg.sparsity, derive_seed(seed, 3))?
    } else {
        base.clone()
    };
    let split = random_split(&g, seed)?;
    let vcfg = victim_config(cfg, seed);
    let clean_model = gcn::train(&g, None, &split, &vcfg)?;
    let pred = gcn::predict(&clean_model, &g)?;
    let g = match cfg.labels {
        LabelSource::Truth => g,
        LabelSource::Predicted => {
            let mut labels = pred.clone();
            for &i in &split.train {
                labels[i] = g.labels()[i];
            }
            g.with_labels(labels)?
        }
    };
    let truth = g.labels().to_vec();
    let clean_accuracy = match cfg.labels {
        LabelSource::Truth => gcn::accuracy(&pred, &truth, &split.test)?,
        LabelSource::Predicted => {
            let model = gcn::train(&g, None, &split, &vcfg)?;
            gcn::accuracy(&gcn::predict(&model, &g)?, &truth, &split.test)?
        }
    };
    Ok(Prepared {
        graph: Arc::new(g),
        split,
        truth,
        clean_accuracy,
    })
}

fn stats_or_none(g: &Graph) -> Option<GraphStats> {
    graph_statistics(g).ok()
}

struct AttackResult {
    state: PoisonState,
    success_rate: Option<f64>,
    episodes: Option<Vec<EpisodeSummary>>,
    steps: Option<Vec<StepRecord>>,
    fga: Option<FgaSummary>,
}

fn attack(prep: &Prepared, cfg: &ExperimentConfig, seed: u64) -> Result<AttackResult> {
    let g = &prep.graph;
    let acfg = &cfg.attack;
    let attack_seed = derive_seed(seed, 7);
    let plain = |state| AttackResult {
        state,
        success_rate: None,
        episodes: None,
        steps: None,
        fga: None,
    };
    Ok(match cfg.method {
        Method::Clean => return Err(Error::Config("the clean method has no attack".into())),
        Method::Random => plain(random_attack(g, acfg, attack_seed)?),
        Method::Preferential => plain(preferential_attack(g, acfg, attack_seed)?),
        Method::Fga => {
            let (state, counts) = fga_attack(g, acfg, &prep.split, &acfg.surrogate_config(), attack_seed)?;
            AttackResult {
                fga: Some(counts.into()),
                ..plain(state)
            }
        }
        Method::Nipa | Method::NipaWithoutLabels => {
            let env = AttackEnv::new(g.clone(), prep.split.clone(), *acfg)?;
            if env.budget() == 0 {
                return Ok(plain(env.reset(attack_seed)));
            }
            let mode = if cfg.method == Method::Nipa {
                LabelMode::Learned
            } else {
                LabelMode::Frozen
            };
            let out = train_attack_with(&env, &cfg.agent, attack_seed, mode)?;
            AttackResult {
                state: out.best_state,
                success_rate: Some(out.best_rate),
                episodes: Some(out.episodes),
                steps: Some(out.steps),
                fga: None,
            }
        }
    })
}

/// Trains the victim from scratch on the exported graph in `dir` and scores the
/// original test nodes.
pub fn evaluate_export(dir: &Path, split: &SplitSpec, truth: &[usize], victim: &TrainConfig) -> Result<(f64, Graph)> {
    let (g, _) = load_poisoned(dir)?;
    let model = gcn::train(&g, None, split, victim)?;
    let pred = gcn::predict(&model, &g)?;
    Ok((gcn::accuracy(&pred, truth, &split.test)?, g))
}

fn scratch_dir(seed: u64) -> PathBuf {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos());
    std::env::temp_dir().join(format!("poisonlab-{}-{seed}-{nanos}", std::process::id()))
}

fn run_seed(base: &Graph, cfg: &ExperimentConfig, seed: u64, out: Option<&Path>) -> Result<SeedReport> {
    let prep = prepare(base, cfg, seed)?;
    let clean_stats = if cfg.stats { stats_or_none(&prep.graph) } else { None };
    let mut report = SeedReport {
        seed,
        budget: 0,
        num_injected: 0,
        clean_accuracy: prep.clean_accuracy,
        poisoned_accuracy: None,
        clean_stats,
        poisoned_stats: None,
        attack_success_rate: None,
        episodes: None,
        fga: None,
    };
    if cfg.method == Method::Clean {
        return Ok(report);
    }
    let result = attack(&prep, cfg, seed)?;
    report.budget = result.state.budget();
    report.num_injected = result.state.num_injected();
    let (dir, scratch) = match out {
        Some(o) => (o.join("poisoned").join(format!("seed-{seed}")), false),
        None => (scratch_dir(seed), true),
    };
    export_poisoned(&result.state, &cfg.attack, &[seed], &dir)?;
    drop(result.state);
    let evaluated = evaluate_export(&dir, &prep.split, &prep.truth, &victim_config(cfg, seed));
    if scratch {
        let _ = fs::remove_dir_all(&dir);
    }
    let (acc, poisoned) = evaluated?;
    report.poisoned_accuracy = Some(acc);
    if cfg.stats {
        report.poisoned_stats = stats_or_none(&poisoned);
    }
    if let (Some(o), Some(steps)) = (out, &result.steps) {
        let mut lines = String::new();
        for s in steps {
            lines.push_str(&serde_json::to_string(s).expect("step serializes"));
            lines.push('\n');
        }
        write_file(&o.join("traces").join(format!("seed-{seed}.jsonl")), &lines)?;
    }
    report.attack_success_rate = result.success_rate;
    report.episodes = result.episodes;
    report.fga = result.fga;
    Ok(report)
}

/// Runs `f` over `items` on up to `jobs` threads, keeping input order.
fn parallel_map<T: Sync, U: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let f = &f;
    let mut slots: Vec<(usize, U)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                scope.spawn(move || {
                    items
                        .iter()
                        .enumerate()
                        .skip(w)
                        .step_by(jobs)
                        .map(|(i, x)| (i, f(x)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    slots.sort_by_key(|(i, _)| *i);
    slots.into_iter().map(|(_, u)| u).collect()
}

fn run(base: &Graph, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    let started = Instant::now();
    let out = opts.out.as_deref();
    let per_seed = parallel_map(&cfg.seeds, opts.jobs, |&s| run_seed(base, cfg, s, out))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let clean: Vec<f64> = per_seed.iter().map(|p| p.clean_accuracy).collect();
    let poisoned: Option<Vec<f64>> = per_seed.iter().map(|p| p.poisoned_accuracy).collect();
    let report = RunReport {
        dataset: cfg.dataset.clone(),
        method: cfg.method,
        labels: cfg.labels,
        seeds: cfg.seeds.clone(),
        r: cfg.attack.r,
        deg_inject: cfg.attack.effective_degree(base),
        sparsity: cfg.sparsity,
        clean: MeanStd::of(&clean),
        poisoned: poisoned.map(|p| MeanStd::of(&p)),
        per_seed,
        config_hash: cfg.hash(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    if let Some(o) = out {
        write_report(&report, o)?;
    }
    Ok(report)
}

fn load(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Graph> {
    cfg.dataset.parse::<DatasetSpec>()?.load(&opts.workdir, cfg.lcc)
}

/// Victim accuracy on the clean graph over all seeds.
pub fn run_clean(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let cfg = ExperimentConfig {
        method: Method::Clean,
        ..cfg.clone()
    };
    run(&load(&cfg, opts)?, &cfg, opts)
}

/// Attack, export, reload and retrain the victim for every seed.
pub fn run_attack(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    run(&load(cfg, opts)?, cfg, opts)
}

fn sweep(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    column: &str,
    settings: &[f64],
    apply: impl Fn(&mut ExperimentConfig, f64),
) -> Result<Vec<RunReport>> {
    if settings.is_empty() {
        return Err(Error::Config(format!("empty {column} sweep")));
    }
    let base = load(cfg, opts)?;
    let mut reports = Vec::with_capacity(settings.len());
    for &x in settings {
        let mut c = cfg.clone();
        apply(&mut c, x);
        let sub = RunOptions {
            out: opts.out.as_ref().map(|o| o.join(format!("{column}-{x}"))),
            ..opts.clone()
        };
        reports.push(run(&base, &c, &sub)?);
    }
    if let Some(o) = &opts.out {
        let json = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
        write_file(&o.join("sweep.json"), &json)?;
        write_file(&o.join("sweep.tsv"), &sweep_tsv(column, settings, &reports))?;
    }
    Ok(reports)
}

/// One attack run per injected degree in `cfg.degrees`.
pub fn sweep_degree(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<RunReport>> {
    sweep(cfg, opts, "deg", &cfg.degrees, |c, d| c.attack.deg_inject = Some(d))
}

/// One attack run per fraction in `cfg.sparsity_fractions`, sparsifying first.
pub fn sweep_sparsity(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<RunReport>> {
    sweep(cfg, opts, "sparsity", &cfg.sparsity_fractions, |c, f| c.sparsity = f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsAudit {
    pub num_clean: usize,
    pub num_injected: usize,
    pub clean: GraphStats,
    pub poisoned: GraphStats,
}

impl StatsAudit {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("graph\tgini\tchar_path_length\tdist_entropy\tpower_law_exp\ttriangle_count\n");
        for (name, st) in [("clean", &self.clean), ("poisoned", &self.poisoned)] {
            let alpha = st.power_law_exp.map_or_else(|| "NA".to_string(), |a| format!("{a:.4}"));
            let _ = writeln!(
                s,
                "{name}\t{:.4}\t{:.4}\t{:.4}\t{alpha}\t{}",
                st.gini, st.char_path_length, st.dist_entropy, st.triangle_count
            );
        }
        s
    }
}

/// Statistics of an exported poisoned graph and of its clean part.
pub fn audit_stats(dir: &Path) -> Result<StatsAudit> {
    let (g, info) = load_poisoned(dir)?;
    let num_clean = g.num_nodes() - info.num_injected;
    let clean: Vec<usize> = (0..num_clean).collect();
    Ok(StatsAudit {
        num_clean,
        num_injected: info.num_injected,
        clean: graph_statistics(&g.induced(&clean))?,
        poisoned: graph_statistics(&g)?,
    })
}
