mod common;

use augtree::energy::{besov_seminorm, comparability_report, harmonic_extension, trace, TestFunction};
use augtree::hypergraph::build_augmented_tree;
use augtree::model::{distance, gasket, rotated_interval, uniform_grid, unit_interval};
use augtree::network::IsoperimetryFamily;
use augtree::partition::{build_tree, verify_partition, ROOT};
use augtree::potential::{ever_visit, TruncatedKernels};
use augtree::resistance::{
    level_resistance, limit_resistance, variational_minimizer, Classification, ClassifyOptions, SetDescriptor,
};
use augtree::Network;
use common::{aug, band, net, vertex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// partition

#[test]
fn grid_net_tree_partitions_mass() {
    let t = build_tree(&uniform_grid(1025), 2).unwrap();
    let total: f64 = t.level_range(1).map(|v| t.measure[v]).sum();
    assert!((total - 1.0).abs() <= 1e-12);
    let report = verify_partition(&t);
    assert!(report.child_sum_defect <= 1e-12, "{report:?}");
    let r2 = t.r0 * t.r0;
    assert!(t.cell_constant.is_finite() && t.cell_constant > 0.0);
    for v in t.level_range(2) {
        assert!(t.measure[v] > 0.0);
        for q in t.sample_points(v) {
            assert!(distance(q, t.rep_point(v)) <= t.cell_constant * r2 * (1.0 + 1e-12));
        }
    }
}

// hypergraph

#[test]
fn horizontal_geodesics_stay_bounded_at_half_gamma() {
    for (spec, top) in [(unit_interval(0.5), 8), (gasket(), 7)] {
        let t = aug(&spec, top, 0.5);
        let r = t.hyperbolicity_report(top, 200, 1).unwrap();
        let tail = &r.max_horiz_geodesic[3..=top];
        assert!(tail.iter().all(|&l| l == tail[0]), "{:?}", r.max_horiz_geodesic);
    }
}

#[test]
fn boundary_gromov_product_of_the_endpoints_stabilizes() {
    let t = aug(&unit_interval(0.5), 10, 0.25);
    let far: Vec<f64> = (2..=10)
        .map(|n| t.boundary_gromov_product(&[0.0], &[1.0], n).unwrap())
        .collect();
    assert!(far.iter().all(|&g| (0.0..=1.5).contains(&g)), "{far:?}");
    assert_eq!(far[far.len() - 1], far[far.len() - 2]);
    for n in 2..=10 {
        let near = t.boundary_gromov_product(&[0.0], &[0.5], n).unwrap();
        assert!(near >= far[n - 2] - 1.0);
    }
    // ξ = η follows one chain, so the product is the depth itself
    assert_eq!(t.boundary_gromov_product(&[0.3], &[0.3], 7).unwrap(), 7.0);
}

#[test]
fn gromov_metric_is_holder_equivalent_to_the_euclidean_one() {
    let t = aug(&unit_interval(0.5), 12, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = 1.0;
    let mut ratios = Vec::new();
    while ratios.len() < 100 {
        let (xi, eta) = (rng.gen::<f64>(), rng.gen::<f64>());
        let rho = (xi - eta).abs();
        if rho < 1e-3 {
            continue;
        }
        let g = t.boundary_gromov_product(&[xi], &[eta], 12).unwrap();
        ratios.push((-a * g).exp() / rho.powf(-a / t.tree.r0.ln()));
    }
    assert!(band(&ratios) < 20.0, "band {}", band(&ratios));
}

#[test]
fn p_mu_on_the_interval() {
    let t = aug(&unit_interval(0.5), 6, 0.25);
    let (x, y) = (vertex(&t, "11"), vertex(&t, "22"));
    assert_eq!(t.p_mu(x, y), 0.5);
    assert_eq!(t.p_mu(y, x), 0.5);
    for m in 2..=6 {
        // the two cells touching at 1/2
        let left = t.tree.descend(&[0.5 - 1e-9], m).unwrap()[m];
        let right = t.tree.descend(&[0.5 + 1e-9], m).unwrap()[m];
        assert!(t.is_horizontal_edge(left, right));
        assert_eq!(t.p_mu(left, right), 0.5f64.powi(m as i32));
    }
}

#[test]
fn ball_volumes_are_doubling() {
    let t = aug(&unit_interval(0.5), 10, 0.25);
    assert_eq!(t.ball_volume(&[0.3], 1.0, 10).unwrap(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let xi = rng.gen::<f64>();
        for k in 2..7 {
            let r = 0.5f64.powi(k);
            let ratio = t.ball_volume(&[xi], 2.0 * r, 10).unwrap() / t.ball_volume(&[xi], r, 10).unwrap();
            worst = worst.max(ratio);
        }
    }
    assert!(worst <= 4.0, "doubling constant {worst}");
}

// network

#[test]
fn smallest_transition_probability_is_stable_on_the_gasket() {
    let n = net(&gasket(), 8, 0.2);
    let p: Vec<f64> = (3..=8).map(|k| n.min_transition_prob(k)).collect();
    assert!(p.iter().all(|&q| q > 0.0));
    assert!(band(&p) < 2.0, "{p:?}");
}

#[test]
fn isoperimetric_profile_of_gasket_truncations() {
    let maxima: Vec<f64> = [4, 5, 6]
        .iter()
        .map(|&k| {
            let n = net(&gasket(), k, 0.2);
            n.isoperimetry_profile(IsoperimetryFamily::LevelTruncations)
                .into_iter()
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(maxima.iter().all(|m| m.is_finite() && *m > 0.0));
    assert!(band(&maxima) < 1.5, "{maxima:?}");
}

#[test]
fn isoperimetric_profile_grows_with_lambda() {
    let maxima: Vec<f64> = [0.2, 0.5, 0.8]
        .iter()
        .map(|&l| {
            net(&gasket(), 5, l)
                .isoperimetry_profile(IsoperimetryFamily::LevelTruncations)
                .into_iter()
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(maxima[0] < maxima[1] && maxima[1] < maxima[2], "{maxima:?}");
}

// potential

#[test]
fn ever_visit_of_the_root_at_depth_two() {
    let n = net(&unit_interval(0.5), 14, 0.25);
    let x = vertex(&n.tree, "12");
    let f = ever_visit(&n, x, ROOT, 14).unwrap();
    assert!((f.value - 1.0 / 16.0).abs() <= 1e-3);
    assert!(f.convergence_gap < 1e-3);
}

#[test]
fn ever_visit_from_the_root_tracks_the_measure() {
    let n = net(&gasket(), 8, 0.2);
    let k = TruncatedKernels::new(&n, 8).unwrap();
    let t = &n.tree.tree;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ratios: Vec<f64> = (0..50)
        .map(|_| {
            let x = rng.gen_range(1..t.level_start[7]);
            k.ever_visit(ROOT, x).unwrap() / t.measure[x]
        })
        .collect();
    assert!(band(&ratios) < 100.0, "band {}", band(&ratios));
}

#[test]
fn green_function_identities() {
    let n = net(&gasket(), 6, 0.2);
    let k = TruncatedKernels::new(&n, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..30 {
        let x = rng.gen_range(0..n.tree.tree.level_start[6]);
        let y = rng.gen_range(0..n.tree.tree.level_start[6]);
        let (gxy, gyx) = (k.green(x, y).unwrap(), k.green(y, x).unwrap());
        let (mx, my) = (n.graph().total(x), n.graph().total(y));
        assert!(((gxy / my) - (gyx / mx)).abs() <= 1e-10 * (gxy / my));
        let f = k.ever_visit(x, y).unwrap();
        assert!((gxy - f * k.green(y, y).unwrap()).abs() <= 1e-12 * gxy);
    }
}

// resistance

fn endpoints() -> (SetDescriptor, SetDescriptor) {
    (SetDescriptor::point(&[0.0]), SetDescriptor::point(&[1.0]))
}

#[test]
fn first_level_resistance_between_the_endpoints() {
    let n = net(&unit_interval(0.5), 3, 0.25);
    let (a, b) = endpoints();
    assert!((level_resistance(&n, 1, &a, &b).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(level_resistance(&n, 2, &a, &a).unwrap(), 0.0);
    let u = variational_minimizer(&n.truncated_graph(1), &[1], &[2]).unwrap();
    assert!((u[ROOT] - 0.5).abs() < 1e-12);
}

fn classify_interval(lambda: f64, n_max: usize) -> Classification {
    let (a, b) = endpoints();
    let t = aug(&unit_interval(0.5), n_max, 0.25);
    limit_resistance(t, lambda, &a, &b, n_max, ClassifyOptions::default())
        .unwrap()
        .classification
}

#[test]
fn resistance_vanishes_below_the_critical_value() {
    assert_eq!(classify_interval(0.15, 12), Classification::Vanishing);
    assert_eq!(classify_interval(0.01, 12), Classification::Vanishing);
}

#[test]
fn resistance_stays_positive_above_the_critical_value() {
    assert_eq!(classify_interval(0.35, 12), Classification::Positive);
    let (a, b) = endpoints();
    let t = aug(&unit_interval(0.5), 14, 0.25);
    let curve = limit_resistance(t, 0.4, &a, &b, 14, ClassifyOptions::default()).unwrap();
    assert_eq!(curve.classification, Classification::Positive);
    let r: Vec<f64> = curve.values.iter().map(|p| p.resistance).collect();
    let steps: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
    // increments shrink geometrically towards a positive limit
    assert!(steps[8..].windows(2).all(|w| w[1] < w[0]), "{r:?}");
    assert!(r[13] / r[12] < 1.01, "{r:?}");
}

#[test]
fn rotated_interval_resistances_follow_pq() {
    let (a, b) = endpoints();
    let t = aug(&rotated_interval(1.0 / 3.0), 12, 0.25);
    let lo = limit_resistance(t.clone(), 0.18, &a, &b, 12, ClassifyOptions::default()).unwrap();
    let hi = limit_resistance(t, 0.27, &a, &b, 12, ClassifyOptions::default()).unwrap();
    assert_eq!(lo.classification, Classification::Vanishing);
    assert_eq!(hi.classification, Classification::Positive);
}

// energy

#[test]
fn trace_recovers_boundary_data_and_converges() {
    let n = net(&unit_interval(0.5), 8, 0.25);
    let t = &n.tree.tree;
    let mut osc = Vec::new();
    for level in [4, 6, 8] {
        let data = TestFunction::Linear.sample(t, level);
        let ext = harmonic_extension(&n, level, &data).unwrap();
        let xi = [0.3];
        let tr = trace(t, &ext, &xi).unwrap();
        let cell = *t.descend(&xi, level).unwrap().last().unwrap();
        assert_eq!(tr.value, data[cell - t.level_start[level]]);
        osc.push(tr.oscillation);
    }
    assert!(osc[2] < osc[1] && osc[1] < osc[0], "{osc:?}");
}

#[test]
fn indicator_seminorm_is_stable_across_levels() {
    let t = aug(&unit_interval(0.5), 8, 0.25);
    let vals: Vec<f64> = (5..=8)
        .map(|n| {
            let u = TestFunction::Indicator.sample(&t.tree, n);
            besov_seminorm(&t.tree, n, &u, 1.0).unwrap()
        })
        .collect();
    assert!(vals.iter().all(|&v| v > 0.0));
    assert!(band(&vals) <= 2.0, "{vals:?}");
}

#[test]
fn larger_beta_means_smaller_seminorm_on_small_distances() {
    let t = aug(&unit_interval(0.5), 6, 0.25);
    let u = TestFunction::Linear.sample(&t.tree, 6);
    let s1 = besov_seminorm(&t.tree, 6, &u, 1.5).unwrap();
    let s2 = besov_seminorm(&t.tree, 6, &u, 3.0).unwrap();
    // all ρ < 1, so ρ^{−β} grows with β
    assert!(s2 > s1);
}

#[test]
fn constant_data_is_degenerate() {
    let t = aug(&unit_interval(0.5), 5, 0.25);
    let rep = comparability_report(t, 0.125, &TestFunction::Distance(vec![5.0]), &[4, 5]).unwrap();
    // far centre: u is affine on [0,1], still nonconstant
    assert!(rep.iter().all(|r| r.ratio.is_some()));

    let t = aug(&unit_interval(0.5), 5, 0.25);
    let net = Network::build(t, 0.125).unwrap();
    let ext = harmonic_extension(&net, 4, &vec![2.0; 16]).unwrap();
    assert!(ext.iter().all(|&v| (v - 2.0).abs() < 1e-12));
    let tree = &net.tree.tree;
    assert_eq!(besov_seminorm(tree, 4, &vec![2.0; 16], 3.0).unwrap(), 0.0);
}

#[test]
fn pre_augmented_check_accepts_builtins() {
    for spec in [unit_interval(0.5), rotated_interval(1.0 / 3.0), gasket()] {
        let t = build_tree(&spec, 6).unwrap();
        assert!(build_augmented_tree(t, 0.25).is_ok());
    }
}
