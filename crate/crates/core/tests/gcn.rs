use std::sync::Arc;

use proptest::prelude::*;

use poisonlab::env::{synth_features, PoisonState};
use poisonlab::gcn::{self, init_params, loss_and_grad, normalize_adjacency, predict_proba, GcnProblem, TrainConfig};
use poisonlab::graph::{random_split, sbm_generate, Graph, SbmParams};
use poisonlab::numerics::finite_diff_check;

fn sbm(nodes_per_block: usize, feat: usize, seed: u64) -> Graph {
    let p = SbmParams {
        blocks: 2,
        nodes_per_block,
        p_in: 0.3,
        p_out: 0.05,
        feat_dim: feat,
        feat_signal: 1.0,
    };
    sbm_generate(&p, seed).unwrap()
}

#[test]
fn training_loss_gradient_matches_finite_differences() {
    for seed in 0..10 {
        let g = sbm(10, 5, seed);
        let adj = normalize_adjacency(&g);
        let ax = adj.spmm(g.features()).unwrap();
        let labeled: Vec<usize> = (0..20).filter(|i| i % 3 != 0).collect();
        let problem = GcnProblem {
            adjacency: &adj,
            features: g.features(),
            targets: g.labels(),
            num_labels: 2,
            labeled: &labeled,
            validation: &[0, 3],
        };
        let mut params = init_params(5, 6, 2, seed);
        params.zero_grads();
        loss_and_grad(&mut params, &problem, &ax, 5e-4).unwrap();
        let err = finite_diff_check(
            |p| {
                let mut q = p.clone();
                q.zero_grads();
                loss_and_grad(&mut q, &problem, &ax, 5e-4).unwrap()
            },
            &params,
            1e-6,
        );
        assert!(err <= 1e-4, "seed {seed}: rel err {err}");
    }
}

fn permute(g: &Graph, perm: &[usize]) -> Graph {
    // perm[old] = new
    let n = g.num_nodes();
    let mut inv = vec![0; n];
    for (old, &new) in perm.iter().enumerate() {
        inv[new] = old;
    }
    let edges: Vec<_> = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
    let labels: Vec<usize> = inv.iter().map(|&o| g.labels()[o]).collect();
    Graph::new(n, edges, g.features().select_rows(&inv), labels, g.num_labels()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forward_is_permutation_equivariant(seed in 0u64..1000, shift in 1usize..29) {
        let g = sbm(15, 4, seed);
        let n = g.num_nodes();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
        let pg = permute(&g, &perm);
        let params = init_params(4, 8, 2, seed);
        let p = predict_proba(&params, &normalize_adjacency(&g), g.features()).unwrap();
        let q = predict_proba(&params, &normalize_adjacency(&pg), pg.features()).unwrap();
        for i in 0..n {
            for c in 0..2 {
                prop_assert!((p.get(i, c) - q.get(perm[i], c)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn output_ignores_nodes_beyond_two_hops(seed in 0u64..1000, node in 0usize..30) {
        let g = sbm(15, 4, seed);
        let adj = g.adjacency();
        let mut near = vec![false; g.num_nodes()];
        near[node] = true;
        for &u in &adj[node] {
            near[u] = true;
            for &w in &adj[u] {
                near[w] = true;
            }
        }
        let mut x = g.features().clone();
        for v in (0..g.num_nodes()).filter(|&v| !near[v]) {
            x.row_mut(v).iter_mut().for_each(|f| *f += 10.0);
        }
        let moved = Graph::new(g.num_nodes(), g.edges().iter().copied(), x, g.labels().to_vec(), 2).unwrap();
        let params = init_params(4, 8, 2, seed);
        let a = predict_proba(&params, &normalize_adjacency(&g), g.features()).unwrap();
        let b = predict_proba(&params, &normalize_adjacency(&moved), moved.features()).unwrap();
        prop_assert_eq!(a.row(node), b.row(node));
    }
}

#[test]
fn isolated_injected_nodes_leave_victim_predictions_bit_identical() {
    let p = SbmParams::default();
    for seed in 0..3 {
        let g = Arc::new(sbm_generate(&p, seed).unwrap());
        let split = random_split(&g, seed).unwrap();
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        let clean = gcn::train(&g, None, &split, &cfg).unwrap();
        let clean_pred = gcn::forward(&clean, &g).unwrap();
        for m in [1, 20, 57] {
            let x = Arc::new(synth_features(&g, m, seed));
            let state = PoisonState::new(g.clone(), x, vec![1; m], 0).unwrap();
            let pg = state.poisoned_graph().unwrap();
            let model = gcn::train(&pg, None, &split, &cfg).unwrap();
            let probs = gcn::forward(&model, &pg).unwrap();
            let n = g.num_nodes();
            assert_eq!(&probs.data()[..n * 2], clean_pred.data(), "seed {seed} m {m}");
        }
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let g = sbm(30, 6, 4);
    let split = random_split(&g, 4).unwrap();
    let cfg = TrainConfig { seed: 9, ..TrainConfig::default() };
    let a = gcn::train(&g, None, &split, &cfg).unwrap();
    let b = gcn::train(&g, None, &split, &cfg).unwrap();
    assert_eq!(a.params.get(gcn::W0), b.params.get(gcn::W0));
    assert_eq!(a.params.get(gcn::W1), b.params.get(gcn::W1));
    let other = gcn::train(&g, None, &split, &TrainConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.params.get(gcn::W0), other.params.get(gcn::W0));
}

#[test]
fn clean_sbm_fixture_is_learnable() {
    let g = sbm_generate(&SbmParams::default(), 0).unwrap();
    let mut accs = Vec::new();
    for seed in 0..5 {
        let split = random_split(&g, seed).unwrap();
        let m = gcn::train(&g, None, &split, &TrainConfig { seed, ..TrainConfig::default() }).unwrap();
        let pred = gcn::predict(&m, &g).unwrap();
        accs.push(gcn::accuracy(&pred, g.labels(), &split.test).unwrap());
    }
    let mean = accs.iter().sum::<f64>() / 5.0;
    assert!(mean >= 0.9, "mean accuracy {mean}");
}
