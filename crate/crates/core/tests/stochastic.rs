use proptest::prelude::*;
use qgraph::spectral::{interval_analytic, star_analytic};
use qgraph::stochastic::{invariant_measure_check, regularity_profile, simulate, Existence, SimConfig};
use qgraph::{Coefficient, Edge, Error, MetricGraph, NoiseModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Euler-Maruyama for `dz_k = -lambda_k z_k dt + <w_k, dW>` with a fine
/// step; an independent check on the exact scheme.
fn euler_maruyama(lambdas: &[f64], w: &[Vec<f64>], z0: &[f64], t: f64, steps: usize, samples: usize) -> Vec<Vec<f64>> {
    let dt = t / steps as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = w[0].len();
    (0..samples)
        .map(|_| {
            let mut z = z0.to_vec();
            for _ in 0..steps {
                let dw: Vec<f64> = (0..d).map(|_| { let g: f64 = StandardNormal.sample(&mut rng); dt.sqrt() * g }).collect();
                for k in 0..z.len() {
                    let noise: f64 = w[k].iter().zip(&dw).map(|(a, b)| a * b).sum();
                    z[k] += -lambdas[k] * z[k] * dt + noise;
                }
            }
            z
        })
        .collect()
}

fn moments(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn exact_scheme_matches_euler_maruyama() {
    let eig = interval_analytic(1.0, 3);
    let q = NoiseModel::diagonal(&[0.0, 1.0]).unwrap();
    let z0 = [0.0, 1.0, 0.0];
    let t = 0.3;
    let w: Vec<Vec<f64>> = eig.modes.iter().map(|m| q.apply_sqrt(&m.traces)).collect();
    let lambdas = eig.values();
    let samples = 20_000;
    let em = euler_maruyama(&lambdas, &w, &z0, t, 600, samples);
    let cfg = SimConfig { t, steps: 3, samples, seed: 3, modes: 3, record_every: 1, threads: None };
    let ens = simulate(&eig, &q, &z0, &cfg).unwrap();
    let last = ens.times.len() - 1;
    for k in 0..3 {
        let (m1, v1) = moments(em.iter().map(|z| z[k]));
        let (m2, v2) = moments((0..samples).map(|s| ens.get(s, last, k)));
        let se_mean = ((v1 + v2) / samples as f64).sqrt();
        assert!((m1 - m2).abs() < 5.0 * se_mean, "mode {k}: mean {m1} vs {m2}");
        // the variance of a sample variance is about 2 v^2 / S for Gaussians
        let se_var = (2.0 * (v1 * v1 + v2 * v2) / samples as f64).sqrt();
        // Euler-Maruyama carries an O(lambda dt) bias
        let bias = lambdas[k] * t / 600.0 * v1;
        assert!((v1 - v2).abs() < 5.0 * se_var + bias, "mode {k}: var {v1} vs {v2}");
    }
}

#[test]
fn recorded_times_are_thinned() {
    let eig = interval_analytic(1.0, 4);
    let q = NoiseModel::identity(2);
    let cfg = SimConfig { t: 1.0, steps: 10, samples: 4, seed: 1, modes: 4, record_every: 4, threads: Some(1) };
    let ens = simulate(&eig, &q, &[], &cfg).unwrap();
    assert_eq!(ens.steps, vec![0, 4, 8, 10]);
    assert!((ens.times[3] - 1.0).abs() < 1e-15);
    // same seed, finer recording: shared time points coincide
    let full = simulate(&eig, &q, &[], &SimConfig { record_every: 1, ..cfg }).unwrap();
    for s in 0..4 {
        for k in 0..4 {
            assert_eq!(ens.get(s, 1, k), full.get(s, 4, k));
            assert_eq!(ens.get(s, 3, k), full.get(s, 10, k));
        }
    }
}

#[test]
fn ambiguous_gap_is_reported() {
    let g = MetricGraph::new(
        vec!["a".into(), "b".into()],
        vec![Edge::new("e", "a", "b", 1.0).with_potential(Coefficient::Constant(1e-14))],
    );
    let eig = interval_analytic(1.0, 4);
    let r = invariant_measure_check(&g, &eig, &NoiseModel::identity(2), 1.0);
    assert!(matches!(r, Err(Error::SpectralGapAmbiguous { .. })));
}

#[test]
fn noise_orthogonal_to_kernel_keeps_invariant_measure() {
    // v1 - v2 on a two-arm star never sees the constant mode
    let g = MetricGraph::star(2, 1.0);
    let eig = star_analytic(2, 1.0, 6);
    let q = nalgebra::DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, -1.0, 1.0]);
    let r = invariant_measure_check(&g, &eig, &NoiseModel::new(q).unwrap(), 2.0).unwrap();
    assert_eq!(r.exists, Existence::Yes);
    assert_eq!(r.rule, "kernel-invisible");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn seeds_reproduce_and_workers_do_not_matter(seed in any::<u64>(), threads in 1usize..6) {
        let eig = star_analytic(3, 1.0, 6);
        let q = NoiseModel::identity(4);
        let cfg = SimConfig { t: 0.5, steps: 6, samples: 40, seed, modes: 6, record_every: 2, threads: Some(1) };
        let a = simulate(&eig, &q, &[1.0], &cfg).unwrap();
        let b = simulate(&eig, &q, &[1.0], &SimConfig { threads: Some(threads), ..cfg }).unwrap();
        prop_assert_eq!(a.coeffs, b.coeffs);
    }

    #[test]
    fn partial_sums_increase(alpha in 0.0..0.6f64) {
        let eig = star_analytic(3, 1.0, 40);
        let prof = regularity_profile(&eig, &NoiseModel::identity(4), 1.0, &[alpha]).unwrap();
        let s = &prof.profiles[0].partial_sums;
        prop_assert!(s.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(prof.profiles[0].convergent, alpha < 0.25);
    }
}
