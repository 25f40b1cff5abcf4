use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;

use poisonlab::env::{AttackConfig, AttackEnv, HierAction, PoisonState};
use poisonlab::graph::{random_split, sbm_generate, SbmParams};
use poisonlab::rng::seeded;

fn check_invariants(s: &PoisonState, seed: u64) {
    let n = s.num_clean();
    let g = s.poisoned_graph().unwrap();
    let mut seen = HashSet::new();
    for &(u, v) in s.adv_edges() {
        assert!(u >= n || v >= n, "seed {seed}: clean-clean edge ({u}, {v})");
        assert_ne!(u, v, "seed {seed}: self-loop");
        assert!(seen.insert((u.min(v), u.max(v))), "seed {seed}: duplicate ({u}, {v})");
        assert!(!s.base().has_edge(u.min(v), u.max(v)), "seed {seed}: adversarial edge shadows a clean edge");
    }
    assert!(s.adv_edges().len() <= s.budget(), "seed {seed}: budget exceeded");
    assert_eq!(g.num_edges(), s.base().num_edges() + s.adv_edges().len());
    for &(u, v) in g.edges() {
        if u < n && v < n {
            assert!(s.base().has_edge(u, v), "seed {seed}: new clean-clean edge ({u}, {v})");
        }
    }
}

#[test]
fn ten_thousand_random_steps_keep_every_invariant() {
    let params = SbmParams {
        blocks: 2,
        nodes_per_block: 15,
        p_in: 0.3,
        p_out: 0.03,
        feat_dim: 4,
        feat_signal: 1.0,
    };
    let mut steps = 0usize;
    let mut rejected = 0usize;
    for seed in 0..50u64 {
        let g = Arc::new(sbm_generate(&params, seed).unwrap());
        let split = random_split(&g, seed).unwrap();
        let cfg = AttackConfig { r: 0.1, surrogate_epochs: 10, ..AttackConfig::default() };
        let env = AttackEnv::new(g.clone(), split, cfg).unwrap();
        let mut rng = seeded(seed);
        let (m, nt, labels) = (env.num_injected(), g.num_nodes() + env.num_injected(), g.num_labels());
        let mut state = env.reset(seed);
        let mut rate = env.clean_rate();
        while steps < (seed as usize + 1) * 200 {
            if state.is_terminal() {
                assert!(state
                    .apply_action(HierAction { a1: 0, a2: 0, a3: 0 })
                    .is_err());
                state = env.reset(rng.random());
                rate = env.clean_rate();
            }
            // Fully random proposals, including out-of-range and repeated ones.
            let act = HierAction {
                a1: rng.random_range(0..m + 1),
                a2: rng.random_range(0..nt + 1),
                a3: rng.random_range(0..labels + 1),
            };
            let valid = act.a1 < m
                && act.a3 < labels
                && state.level1_mask()[act.a1]
                && act.a2 < nt
                && state.level2_mask(act.a1)[act.a2];
            match env.step(&state, act, rate) {
                Ok(out) => {
                    assert!(valid, "seed {seed}: accepted invalid action {act:?}");
                    assert!(out.reward == 1.0 || out.reward == -1.0);
                    assert_eq!(out.reward == 1.0, out.rate > rate);
                    assert_eq!(out.next.steps_taken(), state.steps_taken() + 1);
                    check_invariants(&out.next, seed);
                    rate = out.rate;
                    state = out.next;
                }
                Err(_) => {
                    assert!(!valid, "seed {seed}: rejected valid action {act:?}");
                    rejected += 1;
                }
            }
            steps += 1;
        }
    }
    assert_eq!(steps, 10_000);
    assert!(rejected > 0);
}
