use proptest::prelude::*;
use qgraph::control::solve_null_control;
use qgraph::feller::{decide_feller, hautus_obstruction, Rule, Verdict};
use qgraph::spectral::{assemble, eigensolve, interval_analytic, star_analytic};
use qgraph::{Edge, MetricGraph, NoiseModel};

fn prufer_tree(seq: &[usize], lengths: &[f64]) -> MetricGraph {
    let n = seq.len() + 2;
    let mut degree = vec![1; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut pairs = Vec::new();
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        pairs.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    pairs.push((rest[0], rest[1]));
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let edges = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| Edge::new(format!("e{i}"), names[a].clone(), names[b].clone(), lengths[i]))
        .collect();
    MetricGraph::new(names, edges)
}

#[test]
fn full_noise_with_hidden_direction() {
    // Q sees only v1 + v2: the antisymmetric mode f1 - f2 stays invisible
    let star = MetricGraph::star(2, 1.0);
    let eig = star_analytic(2, 1.0, 6);
    let mut q = nalgebra::DMatrix::zeros(3, 3);
    for i in 1..3 {
        for j in 1..3 {
            q[(i, j)] = 1.0;
        }
    }
    q[(0, 0)] = 1.0;
    let noise = NoiseModel::new(q).unwrap();
    let v = decide_feller(&star, &eig, &noise).unwrap();
    assert_eq!(v.verdict, Verdict::NotStrongFeller);
    assert_eq!(v.rule, Rule::Hautus);
}

#[test]
fn zero_noise_is_never_strong_feller() {
    let g = MetricGraph::interval(1.0);
    let eig = interval_analytic(1.0, 5);
    let v = decide_feller(&g, &eig, &NoiseModel::zero(2)).unwrap();
    assert_eq!(v.verdict, Verdict::NotStrongFeller);
}

#[test]
fn control_steers_modes_to_zero() {
    let eig = interval_analytic(1.0, 8);
    let noise = NoiseModel::diagonal(&[1.0, 1.0]).unwrap();
    let r = solve_null_control(&eig, &noise, &[1.0, -0.5, 0.3, 0.2], 0.5, 6, 300).unwrap();
    assert!(r.terminal_norm < 1e-8 * r.uncontrolled_norm.max(1.0));
    assert!(r.unreachable.is_empty());
    assert!(r.control_norm > 0.0);
}

#[test]
fn untrusted_modes_are_refused() {
    let eig = eigensolve(&assemble(&MetricGraph::interval(1.0), 8).unwrap(), 6).unwrap();
    let noise = NoiseModel::identity(2);
    assert!(solve_null_control(&eig, &noise, &[1.0], 1.0, 6, 50).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn tree_rule_agrees_with_hautus(
        seq in prop::collection::vec(0usize..6, 4),
        lengths in prop::collection::vec(0.6..1.6f64, 5),
        quiet in 0usize..6,
    ) {
        let g = prufer_tree(&seq, &lengths);
        let eig = eigensolve(&assemble(&g, 64).unwrap(), 15).unwrap();
        let boundary = g.boundary();
        let q: Vec<f64> = (0..g.vertex_count())
            .map(|v| if boundary.contains(&v) && v != boundary[quiet % boundary.len()] { 1.0 } else { 0.0 })
            .collect();
        let noise = NoiseModel::diagonal(&q).unwrap();
        let v = decide_feller(&g, &eig, &noise).unwrap();
        prop_assert_eq!(v.verdict, Verdict::StrongFeller);
        prop_assert!(hautus_obstruction(&eig, &noise).unwrap().is_none());
    }

    #[test]
    fn verdict_ignores_noise_scale(gamma in 0.01..100.0f64) {
        let star = MetricGraph::star(3, 1.0);
        let eig = star_analytic(3, 1.0, 6);
        for q in [[1.0, 1.0, 0.0, 0.0], [0.0, 1.0, 1.0, 0.0]] {
            let base = NoiseModel::diagonal(&q).unwrap();
            let a = decide_feller(&star, &eig, &base).unwrap();
            let b = decide_feller(&star, &eig, &base.scaled(gamma).unwrap()).unwrap();
            prop_assert_eq!(a.verdict, b.verdict);
        }
    }

    #[test]
    fn control_scales_inversely_with_noise(gamma in 0.1..10.0f64) {
        let eig = interval_analytic(1.0, 6);
        let base = NoiseModel::diagonal(&[0.0, 1.0]).unwrap();
        let z0 = [0.0, 1.0, 0.5];
        let a = solve_null_control(&eig, &base, &z0, 1.0, 4, 100).unwrap();
        let b = solve_null_control(&eig, &base.scaled(gamma).unwrap(), &z0, 1.0, 4, 100).unwrap();
        let ratio = b.control_norm / a.control_norm;
        prop_assert!((ratio * gamma.sqrt() - 1.0).abs() < 1e-8, "ratio {}", ratio);
    }
}
