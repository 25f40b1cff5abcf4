use poisonlab::env::round_half_up;
use poisonlab::experiment::{
    audit_stats, evaluate_export, run_attack, run_clean, sweep_degree, sweep_sparsity, ExperimentConfig,
    LabelSource, MeanStd, Method, RunOptions,
};
use poisonlab::gcn::TrainConfig;
use poisonlab::graph::{random_split, sbm_generate, SbmParams};

fn config(method: Method) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        method,
        seeds: vec![0, 1, 2],
        stats: false,
        ..ExperimentConfig::default()
    };
    cfg.attack.r = 0.1;
    cfg.agent.episodes = 2;
    cfg.agent.embedding.dim = 8;
    cfg.agent.embedding.label_hidden = 8;
    cfg
}

#[test]
fn zero_budget_leaves_accuracy_bit_identical() {
    for method in [Method::Random, Method::Preferential, Method::Fga, Method::Nipa, Method::NipaWithoutLabels] {
        let mut cfg = config(method);
        cfg.attack.budget = Some(0);
        let report = run_attack(&cfg, &RunOptions::default()).unwrap();
        for s in &report.per_seed {
            assert_eq!(s.poisoned_accuracy.unwrap().to_bits(), s.clean_accuracy.to_bits(), "{method} seed {}", s.seed);
            assert_eq!(s.budget, 0);
            assert_eq!(s.num_injected, 20);
        }
    }
}

#[test]
fn exported_graphs_reproduce_reported_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Method::Preferential);
    let opts = RunOptions { out: Some(dir.path().to_path_buf()), ..RunOptions::default() };
    let report = run_attack(&cfg, &opts).unwrap();
    assert!(dir.path().join("report.json").is_file());
    assert!(dir.path().join("report.tsv").is_file());
    let g = sbm_generate(&SbmParams::default(), 0).unwrap();
    for s in &report.per_seed {
        let split = random_split(&g, s.seed).unwrap();
        let export = dir.path().join("poisoned").join(format!("seed-{}", s.seed));
        let victim = TrainConfig { seed: s.seed, ..TrainConfig::default() };
        let (acc, pg) = evaluate_export(&export, &split, g.labels(), &victim).unwrap();
        assert_eq!(acc.to_bits(), s.poisoned_accuracy.unwrap().to_bits());
        assert_eq!(pg.num_nodes(), g.num_nodes() + s.num_injected);
        let audit = audit_stats(&export).unwrap();
        assert!(audit.poisoned.triangle_count >= audit.clean.triangle_count);
        assert_eq!(audit.num_clean, g.num_nodes());
    }
}

#[test]
fn reports_are_deterministic_and_self_consistent() {
    let cfg = config(Method::Nipa);
    let a = run_attack(&cfg, &RunOptions::default()).unwrap();
    let b = run_attack(&cfg, &RunOptions { jobs: 3, ..RunOptions::default() }).unwrap();
    assert_eq!(a.to_json_without_timing(), b.to_json_without_timing());
    let clean: Vec<f64> = a.per_seed.iter().map(|s| s.clean_accuracy).collect();
    let poisoned: Vec<f64> = a.per_seed.iter().map(|s| s.poisoned_accuracy.unwrap()).collect();
    assert_eq!(MeanStd::of(&clean), a.clean);
    assert_eq!(Some(MeanStd::of(&poisoned)), a.poisoned);
    assert!(a.per_seed.iter().all(|s| s.episodes.as_ref().is_some_and(|e| e.len() == 2)));
    assert_eq!(a.config_hash, cfg.hash());
}

#[test]
fn clean_run_matches_attack_clean_column() {
    let cfg = config(Method::Random);
    let clean = run_clean(&cfg, &RunOptions::default()).unwrap();
    let attacked = run_attack(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(clean.clean, attacked.clean);
    assert!(clean.poisoned.is_none());
    assert_eq!(clean.method, Method::Clean);
}

#[test]
fn cheap_attacks_do_not_help_the_victim() {
    for method in [Method::Random, Method::Preferential] {
        let mut cfg = config(method);
        cfg.seeds = (0..5).collect();
        let r = run_attack(&cfg, &RunOptions::default()).unwrap();
        assert!(r.poisoned.unwrap().mean <= r.clean.mean + 0.01, "{method}: {:?} vs {:?}", r.poisoned, r.clean);
    }
}

#[test]
fn degree_sweep_has_one_row_per_degree_and_linear_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Method::Random);
    let opts = RunOptions { out: Some(dir.path().to_path_buf()), ..RunOptions::default() };
    let reports = sweep_degree(&cfg, &opts).unwrap();
    assert_eq!(reports.len(), 8);
    let n = 200.0;
    for (r, d) in reports.iter().zip(3..=10) {
        assert_eq!(r.deg_inject, f64::from(d));
        for s in &r.per_seed {
            assert_eq!(s.budget, round_half_up(0.1 * n * f64::from(d)));
        }
    }
    let tsv = std::fs::read_to_string(dir.path().join("sweep.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 9);
}

#[test]
fn sparsity_sweep_first_row_matches_plain_attack() {
    let cfg = config(Method::Random);
    let reports = sweep_sparsity(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(reports.len(), 10);
    let plain = run_attack(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(reports[0].per_seed, plain.per_seed);
    assert!(reports[9].per_seed[0].budget < reports[0].per_seed[0].budget);
}

#[test]
fn predicted_label_mode_is_recorded() {
    let mut cfg = config(Method::Random);
    cfg.labels = LabelSource::Predicted;
    let r = run_attack(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(r.labels, LabelSource::Predicted);
    assert_ne!(r.config_hash, config(Method::Random).hash());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = config(Method::Random);
    cfg.attack.r = 0.5;
    assert!(run_attack(&cfg, &RunOptions::default()).is_err());
    let mut cfg = config(Method::Random);
    cfg.seeds.clear();
    assert!(run_attack(&cfg, &RunOptions::default()).is_err());
    let cfg = ExperimentConfig { dataset: "missing-dir".into(), ..config(Method::Random) };
    assert!(matches!(run_attack(&cfg, &RunOptions::default()), Err(poisonlab::Error::Io { .. })));
}

#[test]
fn config_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let cfg = config(Method::Fga);
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(ExperimentConfig::from_file(&path).unwrap(), cfg);
    std::fs::write(&path, r#"{"attack": {"r": 0.05}, "colour": 1}"#).unwrap();
    assert!(ExperimentConfig::from_file(&path).is_err());
}
