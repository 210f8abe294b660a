//! Exact Gaussian stepping of the mode coordinates.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{mode_covariance, noise_vectors};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::spectral::EigenSystem;
use crate::tolerances::{JITTER_MAX, JITTER_START};

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub t: f64,
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
    pub modes: usize,
    /// Keep every `record_every`-th step (and the last one).
    pub record_every: usize,
    /// Worker count; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { t: 1.0, steps: 200, samples: 10_000, seed: 42, modes: 50, record_every: 1, threads: None }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    /// Step index of each recorded time.
    pub steps: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub samples: usize,
    pub modes: usize,
    pub seed: u64,
    /// Initial coefficients, padded to `modes`.
    pub z0: Vec<f64>,
    /// `coeffs[(s * times.len() + i) * modes + k]`.
    pub coeffs: Vec<f64>,
    /// Jitter that made the step covariance factorizable.
    pub jitter: f64,
}

impl TrajectoryEnsemble {
    pub fn get(&self, sample: usize, time: usize, mode: usize) -> f64 {
        self.coeffs[(sample * self.times.len() + time) * self.modes + mode]
    }

    /// Sample `s` draws from ChaCha8 keyed by the master seed, on stream `s`.
    pub fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(sample as u64);
        rng
    }

    /// `e^{-lambda_k t} z0_k`.
    pub fn mean(&self, time: usize, mode: usize) -> f64 {
        (-self.lambdas[mode] * self.times[time]).exp() * self.z0[mode]
    }
}

/// Lower factor of the covariance restricted to `active`, with diagonal
/// jitter escalated from `JITTER_START` to `JITTER_MAX` relative to its
/// largest diagonal entry.
fn factor_step_covariance(c: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let scale = c.diagonal().max().max(f64::MIN_POSITIVE);
    if let Some(ch) = Cholesky::new(c.clone()) {
        return Ok((ch.l(), 0.0));
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let shifted = c + DMatrix::identity(c.nrows(), c.ncols()) * (jitter * scale);
        if let Some(ch) = Cholesky::new(shifted) {
            return Ok((ch.l(), jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::CovarianceNotPsd { jitter: JITTER_MAX })
}

/// Monte-Carlo ensemble of `<w(t), f_k>`. The output depends only on the
/// inputs and the seed, never on the worker count.
pub fn simulate(eig: &EigenSystem, noise: &NoiseModel, z0: &[f64], cfg: &SimConfig) -> Result<TrajectoryEnsemble> {
    let k = cfg.modes;
    if cfg.steps == 0 || cfg.samples == 0 || k == 0 || !(cfg.t > 0.0) || cfg.record_every == 0 {
        return Err(Error::Invalid("need T > 0 and positive steps, samples, modes and stride".into()));
    }
    if z0.len() > k {
        return Err(Error::Invalid(format!("{} initial coefficients for {k} modes", z0.len())));
    }
    let w = noise_vectors(eig, noise, k)?;
    let lambdas: Vec<f64> = eig.modes[..k].iter().map(|m| m.lambda).collect();
    let dt = cfg.t / cfg.steps as f64;
    let decay: Vec<f64> = lambdas.iter().map(|l| (-l * dt).exp()).collect();

    // modes with w_k = 0 receive no noise at all; factor the rest
    let active: Vec<usize> = (0..k).filter(|&i| w[i].iter().any(|&x| x != 0.0)).collect();
    let c = DMatrix::from_fn(active.len(), active.len(), |a, b| {
        mode_covariance(&lambdas, &w, active[a], active[b], dt)
    });
    let (l, jitter) = if active.is_empty() { (DMatrix::zeros(0, 0), 0.0) } else { factor_step_covariance(&c)? };

    let steps: Vec<usize> = (0..=cfg.steps).filter(|&i| i % cfg.record_every == 0 || i == cfg.steps).collect();
    let times: Vec<f64> = steps.iter().map(|&i| i as f64 * dt).collect();
    let mut start = z0.to_vec();
    start.resize(k, 0.0);

    let run = |s: usize| -> Vec<f64> {
        let mut rng = TrajectoryEnsemble::sample_rng(cfg.seed, s);
        let mut a = start.clone();
        let mut out = Vec::with_capacity(steps.len() * k);
        out.extend_from_slice(&a);
        let mut g = DVector::zeros(active.len());
        for step in 1..=cfg.steps {
            for x in g.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
            let xi = &l * &g;
            for (ai, d) in a.iter_mut().zip(&decay) {
                *ai *= d;
            }
            for (slot, &i) in active.iter().enumerate() {
                a[i] += xi[slot];
            }
            if step % cfg.record_every == 0 || step == cfg.steps {
                out.extend_from_slice(&a);
            }
        }
        out
    };
    let per_sample: Vec<Vec<f64>> = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?
            .install(|| (0..cfg.samples).into_par_iter().map(run).collect()),
        None => (0..cfg.samples).into_par_iter().map(run).collect(),
    };
    Ok(TrajectoryEnsemble {
        times,
        steps,
        lambdas,
        samples: cfg.samples,
        modes: k,
        seed: cfg.seed,
        z0: start,
        coeffs: per_sample.concat(),
        jitter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::interval_analytic;

    #[test]
    fn zero_noise_is_deterministic_decay() {
        let eig = interval_analytic(1.0, 4);
        let q = NoiseModel::zero(2);
        let cfg = SimConfig { steps: 10, samples: 3, modes: 4, ..Default::default() };
        let ens = simulate(&eig, &q, &[1.0, 1.0, 0.5], &cfg).unwrap();
        let last = ens.times.len() - 1;
        for s in 0..3 {
            for k in 0..4 {
                let want = ens.mean(last, k);
                assert!((ens.get(s, last, k) - want).abs() <= 1e-12 * want.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let eig = interval_analytic(1.0, 5);
        let q = NoiseModel::diagonal(&[0.0, 1.0]).unwrap();
        let base = SimConfig { steps: 5, samples: 64, modes: 5, ..Default::default() };
        let one = simulate(&eig, &q, &[], &SimConfig { threads: Some(1), ..base.clone() }).unwrap();
        let four = simulate(&eig, &q, &[], &SimConfig { threads: Some(4), ..base }).unwrap();
        assert_eq!(one.coeffs, four.coeffs);
    }
}
