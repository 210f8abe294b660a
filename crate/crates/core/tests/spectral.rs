use std::f64::consts::PI;

use proptest::prelude::*;
use qgraph::spectral::{adjoint_check, assemble, eigensolve, eigensolve_with, interval_analytic, EigenMethod};
use qgraph::{Coefficient, Edge, MetricGraph};

#[test]
fn interval_matches_closed_form() {
    let op = assemble(&MetricGraph::interval(1.0), 400).unwrap();
    let eig = eigensolve(&op, 8).unwrap();
    let exact = interval_analytic(1.0, 8);
    for (m, e) in eig.modes.iter().zip(&exact.modes) {
        // P1 error is about lambda h^2 / 12 relative
        let tol = e.lambda / (400.0 * 400.0 * 6.0) + 1e-9;
        assert!((m.lambda - e.lambda).abs() <= tol * e.lambda.max(1.0), "{} vs {}", m.lambda, e.lambda);
        // signs are normalised the same way, so traces agree up to discretisation
        for (a, b) in m.traces.iter().zip(&e.traces) {
            assert!((a.abs() - b.abs()).abs() < 1e-3);
        }
    }
}

#[test]
fn second_order_convergence() {
    let g = MetricGraph::star_with_lengths(&[1.0, 0.8, 1.3]);
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&m| {
            let coarse = eigensolve(&assemble(&g, m).unwrap(), 6).unwrap();
            let fine = eigensolve(&assemble(&g, 1024).unwrap(), 6).unwrap();
            (coarse.modes[5].lambda - fine.modes[5].lambda).abs()
        })
        .collect();
    for w in errs.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((rate - 2.0).abs() < 0.3, "rate {rate}");
    }
}

#[test]
fn finite_elements_bound_from_above() {
    // conforming discretisations overestimate every eigenvalue
    let op = assemble(&MetricGraph::star(4, 1.0), 64).unwrap();
    let eig = eigensolve(&op, 12).unwrap();
    let mut exact: Vec<f64> = vec![0.0];
    for k in 0..4 {
        let a = (k as f64 + 0.5).powi(2) * PI * PI;
        exact.extend([a, a, a]);
        exact.push(((k + 1) as f64 * PI).powi(2));
    }
    for (m, e) in eig.modes.iter().zip(&exact) {
        assert!(m.lambda >= e - 1e-9, "{} < {}", m.lambda, e);
    }
}

#[test]
fn potential_shifts_spectrum() {
    let g = MetricGraph::new(
        vec!["a".into(), "b".into()],
        vec![Edge::new("e", "a", "b", 1.0).with_potential(Coefficient::Constant(3.0))],
    );
    let eig = eigensolve(&assemble(&g, 200).unwrap(), 4).unwrap();
    for (k, m) in eig.modes.iter().enumerate() {
        let exact = (k as f64 * PI).powi(2) + 3.0;
        assert!((m.lambda - exact).abs() < 1e-3 * exact);
    }
}

#[test]
fn iterative_and_dense_agree() {
    let g = MetricGraph::star_with_lengths(&[1.0, 0.5, 1.5, 0.7]);
    let op = assemble(&g, 64).unwrap();
    let a = eigensolve_with(&op, 10, EigenMethod::Iterative).unwrap();
    let b = eigensolve_with(&op, 10, EigenMethod::Dense).unwrap();
    for (x, y) in a.modes.iter().zip(&b.modes) {
        assert!((x.lambda - y.lambda).abs() < 1e-8 * y.lambda.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adjoint_identity_holds(alpha in prop::collection::vec(-2.0..2.0f64, 4), seed in 0u64..1000) {
        let op = assemble(&MetricGraph::star(3, 1.0), 64).unwrap();
        let h: Vec<f64> = (0..op.dim()).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f64 / 500.0 - 1.0).collect();
        let r = adjoint_check(&op, &alpha, &h).unwrap();
        prop_assert!(r < 1e-9, "residual {}", r);
    }

    #[test]
    fn lengths_scale_eigenvalues(scale in 0.5..2.0f64) {
        let base = eigensolve(&assemble(&MetricGraph::star_with_lengths(&[1.0, 0.7, 1.2]), 128).unwrap(), 5).unwrap();
        let scaled = eigensolve(&assemble(&MetricGraph::star_with_lengths(&[scale, 0.7 * scale, 1.2 * scale]), 128).unwrap(), 5).unwrap();
        for (a, b) in base.modes.iter().zip(&scaled.modes).skip(1) {
            prop_assert!((a.lambda / (scale * scale) - b.lambda).abs() < 1e-8 * b.lambda);
        }
    }
}
