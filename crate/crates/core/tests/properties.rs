mod common;

use std::collections::VecDeque;
use std::sync::{Arc, OnceLock};

use augtree::energy::{besov_seminorm, graph_energy, harmonic_extension};
use augtree::hypergraph::AugmentedTree;
use augtree::linalg::WeightedGraph;
use augtree::model::{gasket, rotated_interval, unit_interval};
use augtree::partition::{build_tree, verify_partition};
use augtree::potential::hitting_distribution;
use augtree::resistance::effective_resistance;
use augtree::{ModelSpec, Network};
use proptest::prelude::*;

fn models() -> Vec<ModelSpec> {
    vec![unit_interval(0.5), rotated_interval(1.0 / 3.0), gasket()]
}

fn trees() -> &'static Vec<Arc<AugmentedTree>> {
    static TREES: OnceLock<Vec<Arc<AugmentedTree>>> = OnceLock::new();
    TREES.get_or_init(|| models().iter().map(|m| common::aug(m, 5, 0.25)).collect())
}

fn bfs(t: &AugmentedTree, x: usize) -> Vec<usize> {
    let n = t.tree.vertex_count();
    let mut dist = vec![usize::MAX; n];
    dist[x] = 0;
    let mut q = VecDeque::from([x]);
    while let Some(v) = q.pop_front() {
        let nbrs = t.tree.parent_of(v).into_iter().chain(t.tree.children(v)).chain(t.horizontal[v].iter().copied());
        for u in nbrs {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                q.push_back(u);
            }
        }
    }
    dist
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn walk_is_a_reversible_lambda_walk(model in 0usize..3, lambda in 0.05f64..0.95) {
        let net = Network::build(trees()[model].clone(), lambda).unwrap();
        let t = &net.tree.tree;
        for x in 0..net.vertex_count() {
            let row: f64 = net.graph().neighbors(x).map(|(y, _)| net.transition_prob(x, y)).sum();
            prop_assert!((row - 1.0).abs() <= 1e-12);
            for (y, _) in net.graph().neighbors(x) {
                let lhs = net.total(x) * net.transition_prob(x, y);
                let rhs = net.total(y) * net.transition_prob(y, x);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
                let lin = net.conductance(x, y);
                let log = net.log_conductance(x, y).unwrap().exp();
                prop_assert!((lin - log).abs() <= 1e-12 * lin);
            }
            if x != 0 && t.level[x] < t.depth() {
                prop_assert!((net.return_ratio(x).unwrap() - lambda).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn hitting_law_is_the_measure_for_any_weights(p in 0.05f64..0.95, lambda in 0.05f64..0.95) {
        let spec = rotated_interval(p);
        let net = common::net(&spec, 5, lambda);
        let t = &net.tree.tree;
        prop_assert!(verify_partition(t).is_ok());
        for m in 1..=5 {
            let nu = hitting_distribution(&net, m).unwrap();
            for (x, q) in t.level_range(m).zip(nu) {
                prop_assert!((q - t.measure[x]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn canonical_geodesics_are_shortest(model in 0usize..3, a in 0usize..10_000, b in 0usize..10_000) {
        let t = &trees()[model];
        let n = t.tree.vertex_count();
        let (x, y) = (a % n, b % n);
        let d = bfs(t, x);
        let path = t.canonical_geodesic(x, y);
        prop_assert_eq!(path.len(), d[y]);
        prop_assert_eq!(path.vertices.len(), d[y] + 1);
        prop_assert_eq!(path.vertices[0], x);
        prop_assert_eq!(*path.vertices.last().unwrap(), y);
        for w in path.vertices.windows(2) {
            let adjacent = t.tree.parent_of(w[0]) == Some(w[1])
                || t.tree.parent_of(w[1]) == Some(w[0])
                || t.is_horizontal_edge(w[0], w[1]);
            prop_assert!(adjacent);
        }
        let g = t.gromov_product(x, y);
        prop_assert_eq!(2.0 * g, (t.level(x) + t.level(y)) as f64 - d[y] as f64);
        prop_assert_eq!(t.graph_distance(0, x), t.level(x));
    }

    #[test]
    fn graph_distance_is_a_metric(model in 0usize..3, a in 0usize..10_000, b in 0usize..10_000, c in 0usize..10_000) {
        let t = &trees()[model];
        let n = t.tree.vertex_count();
        let (x, y, z) = (a % n, b % n, c % n);
        prop_assert_eq!(t.graph_distance(x, y), t.graph_distance(y, x));
        prop_assert!(t.graph_distance(x, y) <= t.graph_distance(x, z) + t.graph_distance(z, y));
        prop_assert_eq!(t.p_mu(x, y), t.p_mu(y, x));
    }

    #[test]
    fn resistance_is_a_metric_and_monotone(
        weights in prop::collection::vec(0.1f64..10.0, 12),
        a in 0usize..6, b in 0usize..6, c in 0usize..6, bump in 1.0f64..5.0,
    ) {
        // wheel on six vertices with random conductances
        let mut edges: Vec<(usize, usize, f64)> = (1..6).map(|v| (0, v, weights[v])).collect();
        edges.extend((1..6).map(|v| (v, v % 5 + 1, weights[5 + v])));
        let g = WeightedGraph::from_edges(6, &edges).unwrap();
        let r = |x: usize, y: usize| effective_resistance(&g, &[x], &[y]).unwrap().resistance;
        prop_assert!(r(a, b) <= r(a, c) + r(c, b) + 1e-12);
        prop_assert!((r(a, b) - r(b, a)).abs() <= 1e-12 * r(a, b).max(1e-300));
        // Rayleigh: raising a conductance never raises a resistance
        let mut stronger = edges.clone();
        let k = (a + b + c) % stronger.len();
        stronger[k].2 *= bump;
        let g2 = WeightedGraph::from_edges(6, &stronger).unwrap();
        let r2 = effective_resistance(&g2, &[a], &[b]).unwrap().resistance;
        prop_assert!(r2 <= r(a, b) * (1.0 + 1e-12));
    }

    #[test]
    fn besov_sum_is_a_markovian_quadratic_form(
        u in prop::collection::vec(-2.0f64..2.0, 16), t in -3.0f64..3.0, beta in 0.5f64..3.0,
    ) {
        let tree = build_tree(&unit_interval(0.5), 4).unwrap();
        let s = besov_seminorm(&tree, 4, &u, beta).unwrap();
        let scaled: Vec<f64> = u.iter().map(|v| t * v).collect();
        let st = besov_seminorm(&tree, 4, &scaled, beta).unwrap();
        prop_assert!((st - t * t * s).abs() <= 1e-12 * (t * t * s).max(1e-300));
        let clipped: Vec<f64> = u.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        prop_assert!(besov_seminorm(&tree, 4, &clipped, beta).unwrap() <= s * (1.0 + 1e-12));
    }

    #[test]
    fn harmonic_extension_minimizes_energy(
        data in prop::collection::vec(-1.0f64..1.0, 16),
        noise in prop::collection::vec(-0.5f64..0.5, 15),
        lambda in 0.1f64..0.9,
    ) {
        let net = common::net(&unit_interval(0.5), 4, lambda);
        let ext = harmonic_extension(&net, 4, &data).unwrap();
        let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(ext.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        let g = net.truncated_graph(4);
        let mut other = ext.clone();
        for (v, e) in other.iter_mut().zip(&noise) {
            *v += e;
        }
        prop_assert!(graph_energy(&g, &ext) <= graph_energy(&g, &other) * (1.0 + 1e-12));
    }
}
