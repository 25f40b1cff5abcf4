use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use poisonlab::experiment::{
    audit_stats, run_attack, run_clean, sweep_degree, sweep_sparsity, ExperimentConfig, LabelSource, Method,
    RunOptions, RunReport,
};
use poisonlab::graph::{graph_statistics, random_split, save_graph, save_split};
use poisonlab::Error;

#[derive(Parser)]
#[command(name = "poisonlab", version, about = "Node-injection poisoning experiments on GCN classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Victim accuracy on the clean graph.
    Clean(Common),
    /// Poison, export, retrain the victim and report accuracy.
    Attack(Common),
    /// Attack once per injected degree.
    SweepDegree(Common),
    /// Attack once per sparsity fraction.
    SweepSparsity(Common),
    /// Graph statistics of a dataset or of an exported poisoned graph.
    Stats(Common),
    /// Write the prepared dataset and its splits in the graph directory format.
    Export(Common),
}

#[derive(Args)]
struct Common {
    /// Graph directory or `sbm[:key=value,...]`.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    r: Option<f64>,
    /// Run seeds 0..N.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, env = "POISONLAB_OUT")]
    out: Option<PathBuf>,
    /// Average degree of injected nodes.
    #[arg(long)]
    deg: Option<f64>,
    #[arg(long)]
    sparsity: Option<f64>,
    /// Explicit edge budget.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    /// JSON experiment configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    workdir: PathBuf,
    /// Seeds run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Evaluate against a clean model's predictions instead of the true labels.
    #[arg(long)]
    predicted_labels: bool,
    /// Keep the whole graph instead of its largest connected component.
    #[arg(long)]
    no_lcc: bool,
}

impl Common {
    fn resolve(&self, p: &Path) -> PathBuf {
        self.workdir.join(p)
    }

    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(&self.resolve(p))?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = &self.dataset {
            cfg.dataset = d.clone();
        }
        if let Some(m) = &self.method {
            cfg.method = m.parse::<Method>()?;
        }
        if let Some(r) = self.r {
            cfg.attack.r = r;
        }
        if let Some(n) = self.seeds {
            cfg.seeds = (0..n).collect();
        }
        if let Some(d) = self.deg {
            cfg.attack.deg_inject = Some(d);
        }
        if let Some(s) = self.sparsity {
            cfg.sparsity = s;
        }
        if let Some(b) = self.budget {
            cfg.attack.budget = Some(b);
        }
        if let Some(k) = self.episodes {
            cfg.agent.episodes = k;
        }
        if self.predicted_labels {
            cfg.labels = LabelSource::Predicted;
        }
        if self.no_lcc {
            cfg.lcc = false;
        }
        Ok(cfg)
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            workdir: self.workdir.clone(),
            out: self.out.as_deref().map(|o| self.resolve(o)),
            jobs: self.jobs,
        }
    }
}

fn summary(r: &RunReport) -> String {
    let mut s = format!(
        "{} {} r={} clean {:.4} ± {:.4}",
        r.dataset, r.method, r.r, r.clean.mean, r.clean.std
    );
    if let Some(p) = r.poisoned {
        s += &format!(" poisoned {:.4} ± {:.4}", p.mean, p.std);
    }
    s
}

fn emit(reports: &[RunReport], out: Option<&Path>) {
    if out.is_some() {
        for r in reports {
            println!("{}", summary(r));
        }
    } else if let [r] = reports {
        println!("{}", serde_json::to_string_pretty(r).expect("report serializes"));
    } else {
        println!("{}", serde_json::to_string_pretty(reports).expect("reports serialize"));
    }
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Clean(c) => {
            let opts = c.options();
            emit(&[run_clean(&c.config()?, &opts)?], opts.out.as_deref());
        }
        Command::Attack(c) => {
            let opts = c.options();
            let cfg = c.config()?;
            let report = if cfg.method == Method::Clean {
                run_clean(&cfg, &opts)?
            } else {
                run_attack(&cfg, &opts)?
            };
            emit(&[report], opts.out.as_deref());
        }
        Command::SweepDegree(c) => {
            let opts = c.options();
            emit(&sweep_degree(&c.config()?, &opts)?, opts.out.as_deref());
        }
        Command::SweepSparsity(c) => {
            let opts = c.options();
            emit(&sweep_sparsity(&c.config()?, &opts)?, opts.out.as_deref());
        }
        Command::Stats(c) => {
            let cfg = c.config()?;
            let dir = c.resolve(Path::new(&cfg.dataset));
            if dir.join("injected.json").is_file() {
                print!("{}", audit_stats(&dir)?.to_tsv());
            } else {
                let g = cfg.dataset.parse::<poisonlab::experiment::DatasetSpec>()?.load(&c.workdir, cfg.lcc)?;
                println!("{}", serde_json::to_string_pretty(&graph_statistics(&g)?).expect("stats serialize"));
            }
        }
        Command::Export(c) => {
            let cfg = c.config()?;
            let out = c
                .options()
                .out
                .ok_or_else(|| Error::Config("export needs --out".into()))?;
            let g = cfg.dataset.parse::<poisonlab::experiment::DatasetSpec>()?.load(&c.workdir, cfg.lcc)?;
            save_graph(&g, &out)?;
            for &s in &cfg.seeds {
                save_split(&random_split(&g, s)?, &out.join(format!("split-{s}.json")))?;
            }
            println!("wrote {} nodes, {} edges to {}", g.num_nodes(), g.num_edges(), out.display());
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Parse { .. } | Error::InvalidGraph(_) | Error::Json { .. } | Error::NoEdges => 2,
        Error::Diverged { .. } | Error::NonFiniteGradient(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
