use proptest::prelude::*;

use poisonlab::graph::{graph_statistics, largest_connected_component, random_split, sparsify, Graph};
use poisonlab::numerics::DenseMatrix;

fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::new(n, edges.iter().copied(), DenseMatrix::zeros(n, 1), vec![0; n], 1).unwrap()
}

fn dense_adjacency(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.num_nodes();
    let mut a = vec![vec![false; n]; n];
    for &(u, v) in g.edges() {
        a[u][v] = true;
        a[v][u] = true;
    }
    a
}

fn brute_triangles(a: &[Vec<bool>]) -> u64 {
    let n = a.len();
    let mut t = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if a[i][j] && a[j][k] && a[i][k] {
                    t += 1;
                }
            }
        }
    }
    t
}

fn brute_gini(d: &[usize]) -> f64 {
    let n = d.len() as f64;
    let total: f64 = d.iter().map(|&x| x as f64).sum();
    let mut diff = 0.0;
    for &x in d {
        for &y in d {
            diff += (x as f64 - y as f64).abs();
        }
    }
    diff / (2.0 * n * total)
}

fn brute_entropy(d: &[usize]) -> f64 {
    let two_m: f64 = d.iter().map(|&x| x as f64).sum();
    let h: f64 = d
        .iter()
        .filter(|&&x| x > 0)
        .map(|&x| {
            let p = x as f64 / two_m;
            -p * p.ln()
        })
        .sum();
    h / (d.len() as f64).ln()
}

fn brute_path_length(a: &[Vec<bool>]) -> f64 {
    let n = a.len();
    let inf = usize::MAX / 4;
    let mut dist = vec![vec![inf; n]; n];
    for i in 0..n {
        dist[i][i] = 0;
        for j in 0..n {
            if a[i][j] {
                dist[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    let (mut total, mut pairs) = (0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            if i != j && dist[i][j] < inf {
                total += dist[i][j];
                pairs += 1;
            }
        }
    }
    total as f64 / pairs as f64
}

fn arb_graph() -> impl Strategy<Value = Graph> {
    (3usize..=50, 0.02f64..0.6).prop_flat_map(|(n, p)| {
        let pairs = n * (n - 1) / 2;
        proptest::collection::vec(proptest::bool::weighted(p), pairs).prop_map(move |keep| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if keep[k] {
                        edges.push((i, j));
                    }
                    k += 1;
                }
            }
            if edges.is_empty() {
                edges.push((0, 1));
            }
            graph(n, &edges)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn statistics_match_brute_force(g in arb_graph()) {
        let s = graph_statistics(&g).unwrap();
        let a = dense_adjacency(&g);
        let d = g.degrees();
        prop_assert_eq!(s.triangle_count, brute_triangles(&a));
        prop_assert!((s.gini - brute_gini(&d)).abs() <= 1e-12, "gini {} vs {}", s.gini, brute_gini(&d));
        prop_assert!((s.dist_entropy - brute_entropy(&d)).abs() <= 1e-12);
        prop_assert!((s.char_path_length - brute_path_length(&a)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&s.gini));
        prop_assert!(s.dist_entropy <= 1.0 + 1e-12);
        if let Some(alpha) = s.power_law_exp {
            prop_assert!(alpha > 1.0);
        }
    }

    #[test]
    fn lcc_is_idempotent(g in arb_graph()) {
        let once = largest_connected_component(&g);
        let twice = largest_connected_component(&once);
        prop_assert_eq!(once.num_nodes(), twice.num_nodes());
        prop_assert_eq!(once.edges(), twice.edges());
    }

    #[test]
    fn split_partitions_nodes(g in arb_graph(), seed in 0u64..1000) {
        if let Ok(split) = random_split(&g, seed) {
            let mut all: Vec<usize> = split.train.iter().chain(&split.validation).chain(&split.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..g.num_nodes()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn sparsify_removes_rounded_fraction(g in arb_graph(), f in 0.0f64..=1.0, seed in 0u64..1000) {
        let s = sparsify(&g, f, seed).unwrap();
        let m = g.num_edges();
        prop_assert_eq!(s.num_edges(), m - (f * m as f64).round() as usize);
        prop_assert!(s.edges().iter().all(|&(u, v)| g.has_edge(u, v)));
    }

    #[test]
    fn adding_edges_never_loses_triangles(g in arb_graph(), extra in proptest::collection::vec((0usize..50, 0usize..50), 0..20)) {
        let n = g.num_nodes();
        let mut edges = g.edges().to_vec();
        edges.extend(extra.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v));
        let bigger = graph(n, &edges);
        let a = graph_statistics(&g).unwrap();
        let b = graph_statistics(&bigger).unwrap();
        prop_assert!(b.triangle_count >= a.triangle_count);
    }
}

#[test]
fn ring_statistics() {
    let n = 12;
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let s = graph_statistics(&graph(n, &edges)).unwrap();
    assert_eq!(s.gini, 0.0);
    assert!((s.dist_entropy - 1.0).abs() <= 1e-12);
    assert_eq!(s.triangle_count, 0);
}
