use std::sync::Arc;

use poisonlab::agent::{select_action, train_attack, train_attack_with, AgentConfig, AgentContext, Head, LabelMode, QHeads};
use poisonlab::embedding::EmbeddingConfig;
use poisonlab::env::{AttackConfig, AttackEnv, HierAction, PoisonState};
use poisonlab::graph::{random_split, sbm_generate, SbmParams};
use poisonlab::rng::seeded;

fn env(seed: u64) -> AttackEnv {
    let p = SbmParams {
        blocks: 2,
        nodes_per_block: 15,
        p_in: 0.3,
        p_out: 0.03,
        feat_dim: 4,
        feat_signal: 1.0,
    };
    let g = Arc::new(sbm_generate(&p, seed).unwrap());
    let split = random_split(&g, seed).unwrap();
    let cfg = AttackConfig { r: 0.1, surrogate_epochs: 20, ..AttackConfig::default() };
    AttackEnv::new(g, split, cfg).unwrap()
}

fn small_agent(episodes: usize) -> AgentConfig {
    AgentConfig {
        episodes,
        batch_size: 8,
        target_sync: 5,
        embedding: EmbeddingConfig { dim: 6, label_hidden: 4, rounds: 2 },
        q_hidden: 8,
        ..AgentConfig::default()
    }
}

#[test]
fn epsilon_decays_linearly_then_holds() {
    let cfg = AgentConfig::default();
    assert_eq!(cfg.decay_steps(1000), 500);
    assert_eq!(cfg.epsilon_at(0, 500), 1.0);
    assert!((cfg.epsilon_at(250, 500) - 0.525).abs() < 1e-15);
    assert_eq!(cfg.epsilon_at(500, 500), 0.05);
    assert_eq!(cfg.epsilon_at(10_000, 500), 0.05);
    let fixed = AgentConfig { epsilon_decay_steps: Some(10), ..cfg };
    assert_eq!(fixed.decay_steps(1000), 10);
}

#[test]
fn fully_random_policy_is_uniform_over_valid_actions() {
    let e = env(0);
    let fresh = e.reset(0);
    let n = fresh.num_clean();
    // Injected node 0 is joined to every other node, so only nodes 1 and 2 stay open.
    let edges: Vec<(usize, usize)> = (0..fresh.num_total()).filter(|&v| v != n).map(|v| (n, v)).collect();
    let state = PoisonState::from_parts(
        fresh.base().clone(),
        fresh.injected_features().clone(),
        &edges,
        fresh.adv_labels().to_vec(),
        edges.len() + 10,
    )
    .unwrap();
    let open: Vec<usize> = state.level1_mask().iter().enumerate().filter(|(_, &ok)| ok).map(|(i, _)| i).collect();
    let ctx = AgentContext::from_state(&state);
    let heads = QHeads::new(4, 2, EmbeddingConfig { dim: 6, label_hidden: 4, rounds: 2 }, 8, 1);
    let mut rng = seeded(5);
    let trials = 6000;
    let mut counts = vec![0usize; state.num_injected()];
    let mut labels = [0usize; 2];
    for _ in 0..trials {
        let HierAction { a1, a2, a3 } = select_action(&ctx, &heads, &state, 1.0, &mut rng).unwrap();
        assert!(state.level2_mask(a1)[a2]);
        counts[a1] += 1;
        labels[a3] += 1;
    }
    let e = trials as f64 / open.len() as f64;
    let chi2: f64 = open.iter().map(|&i| (counts[i] as f64 - e).powi(2) / e).sum();
    // 99.9% quantile of chi-square with one degree of freedom.
    assert_eq!(open, vec![1, 2]);
    assert!(chi2 < 10.83, "chi-square {chi2}, counts {counts:?}");
    let chi_labels: f64 = labels.iter().map(|&c| (c as f64 - trials as f64 / 2.0).powi(2) / (trials as f64 / 2.0)).sum();
    assert!(chi_labels < 10.83, "label chi-square {chi_labels}");
}

#[test]
fn training_is_reproducible_and_tracks_the_best_episode() {
    let e = env(1);
    let cfg = small_agent(3);
    let a = train_attack(&e, &cfg, 11).unwrap();
    let b = train_attack(&e, &cfg, 11).unwrap();
    assert_eq!(a.steps, b.steps);
    assert_eq!(a.best_state.canonical_adv_edges(), b.best_state.canonical_adv_edges());
    assert_eq!(a.heads.online, b.heads.online);
    assert_eq!(a.steps.len(), 3 * e.budget());
    assert_eq!(a.updates, 3 * e.budget());
    assert!(a.episodes.iter().all(|ep| ep.final_rate <= a.best_rate));
    assert_eq!(a.best_state.adv_edges().len(), e.budget());
    assert_eq!(e.success_rate(&a.best_state).unwrap(), a.best_rate);
}

#[test]
fn frozen_label_mode_never_touches_the_label_head() {
    let e = env(2);
    let cfg = small_agent(2);
    let out = train_attack_with(&e, &cfg, 3, LabelMode::Frozen).unwrap();
    let init = QHeads::new(4, 2, cfg.embedding, cfg.q_hidden, poisonlab::rng::derive_seed(3, 0));
    for name in [Head::Q3.w1(), Head::Q3.w2()] {
        assert_eq!(out.heads.online.get(name), init.online.get(name), "{name}");
    }
    assert_ne!(out.heads.online.get(Head::Q1.w1()), init.online.get(Head::Q1.w1()));
    for ep in 0..2 {
        let reset = e.reset(poisonlab::rng::derive_seed(poisonlab::rng::derive_seed(3, 2), ep));
        let labels: Vec<usize> = out.steps.iter().filter(|s| s.episode == ep as usize).map(|s| s.action.a3).collect();
        let a1s: Vec<usize> = out.steps.iter().filter(|s| s.episode == ep as usize).map(|s| s.action.a1).collect();
        for (a1, l) in a1s.into_iter().zip(labels) {
            assert_eq!(l, reset.adv_labels()[a1]);
        }
    }
}
