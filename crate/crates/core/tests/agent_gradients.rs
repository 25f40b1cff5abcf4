use std::sync::Arc;

use poisonlab::agent::{score_gradient, score_reference, AgentContext, Head, QHeads};
use poisonlab::embedding::EmbeddingConfig;
use poisonlab::env::{synth_features, HierAction, PoisonState};
use poisonlab::graph::{sbm_generate, SbmParams};
use poisonlab::numerics::finite_diff_check;

fn fixture(seed: u64, rounds: usize) -> (AgentContext, QHeads, PoisonState) {
    let p = SbmParams {
        blocks: 2,
        nodes_per_block: 8,
        p_in: 0.4,
        p_out: 0.05,
        feat_dim: 3,
        feat_signal: 1.0,
    };
    let g = Arc::new(sbm_generate(&p, seed).unwrap());
    let x = Arc::new(synth_features(&g, 4, seed));
    let mut s = PoisonState::new(g, x, vec![0, 1, 1, 0], 10).unwrap();
    for (a1, a2, a3) in [(0, 3, 1), (1, 18, 0), (2, 5, 1), (0, 19, 0)] {
        s = s.apply_action(HierAction { a1, a2, a3 }).unwrap();
    }
    let ctx = AgentContext::from_state(&s);
    let emb = EmbeddingConfig { dim: 5, label_hidden: 4, rounds };
    (ctx, QHeads::new(3, 2, emb, 6, seed), s)
}

#[test]
fn cached_scores_match_reference_and_gradients_match_finite_differences() {
    for rounds in [1, 2, 3] {
        for seed in 0..10 {
            let (ctx, mut heads, state) = fixture(seed, rounds);
            let act = HierAction { a1: 3, a2: 2, a3: 1 };
            for head in Head::ALL {
                heads.online.zero_grads();
                let q = score_gradient(&ctx, &mut heads, &state, act, head).unwrap();
                let r = score_reference(&ctx, &heads.online, rounds, &state, act, head).unwrap();
                assert!((q - r).abs() <= 1e-10 * r.abs().max(1.0), "rounds {rounds} seed {seed} {head:?}: {q} vs {r}");
                let err = finite_diff_check(
                    |p| score_reference(&ctx, p, rounds, &state, act, head).unwrap(),
                    &heads.online,
                    1e-6,
                );
                assert!(err <= 1e-4, "rounds {rounds} seed {seed} {head:?}: rel err {err}");
            }
        }
    }
}
