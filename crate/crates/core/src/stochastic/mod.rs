//! Kirchhoff-noise stochastic heat equation in spectral coordinates.
//!
//! With `w_k = Q^{1/2} L f_k`, the coordinate `<K(t), f_k>` of the
//! stochastic convolution is an Ornstein-Uhlenbeck process driven by
//! `w_k . dbeta`, so every mode pair has the closed-form covariance
//! `(w_k . w_l) (1 - e^{-(lambda_k + lambda_l) t}) / (lambda_k + lambda_l)`.

pub mod covariance;
pub mod invariant;
pub mod regularity;
pub mod simulate;

pub use covariance::{verify_covariance, CovarianceReport};
pub use invariant::{invariant_measure_check, Existence, InvariantMeasureReport};
pub use regularity::{regularity_profile, AlphaProfile, RegularityProfile};
pub use simulate::{simulate, SimConfig, TrajectoryEnsemble};

use crate::control::decay_integral;
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::spectral::EigenSystem;

/// `w_k = Q^{1/2} L f_k` for the first `k` modes.
pub fn noise_vectors(eig: &EigenSystem, noise: &NoiseModel, k: usize) -> Result<Vec<Vec<f64>>> {
    if noise.dim() != eig.vertex_count {
        return Err(Error::Invalid("noise dimension differs from the vertex count".into()));
    }
    if k > eig.len() {
        return Err(Error::Invalid(format!("{k} modes requested, {} available", eig.len())));
    }
    Ok(eig.modes[..k].iter().map(|m| noise.apply_sqrt(&m.traces)).collect())
}

/// Closed-form `Cov(<K(t), f_k>, <K(t), f_l>)`.
pub fn mode_covariance(lambdas: &[f64], w: &[Vec<f64>], k: usize, l: usize, t: f64) -> f64 {
    let ww: f64 = w[k].iter().zip(&w[l]).map(|(a, b)| a * b).sum();
    ww * decay_integral(lambdas[k] + lambdas[l], t)
}
