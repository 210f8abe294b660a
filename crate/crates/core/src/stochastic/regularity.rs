//! Summability of `sum_k (1 + lambda_k)^{2 alpha} Var <K(T), f_k>`.

use serde::Serialize;

use super::{mode_covariance, noise_vectors};
use crate::error::Result;
use crate::noise::NoiseModel;
use crate::spectral::EigenSystem;

#[derive(Debug, Clone, Serialize)]
pub struct AlphaProfile {
    pub alpha: f64,
    /// `S_alpha(K')` for `K' = 1..=K`.
    pub partial_sums: Vec<f64>,
    /// Least-squares slope of `log increment` against `log k` over the tail.
    pub slope: f64,
    pub convergent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityProfile {
    pub t: f64,
    pub modes: usize,
    pub profiles: Vec<AlphaProfile>,
}

/// Slope of the log-log least-squares line through `(k, inc[k])` for
/// `k` in `[K/4, K)`, skipping zero increments.
pub fn tail_slope(increments: &[f64]) -> f64 {
    let n = increments.len();
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, &v) in increments.iter().enumerate().skip((n / 4).max(1)) {
        if v <= 0.0 {
            continue;
        }
        let (x, y) = ((k as f64).ln(), v.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        m += 1.0;
    }
    if m < 2.0 {
        return f64::NEG_INFINITY;
    }
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

pub fn regularity_profile(eig: &EigenSystem, noise: &NoiseModel, t: f64, alphas: &[f64]) -> Result<RegularityProfile> {
    let k = eig.len();
    let w = noise_vectors(eig, noise, k)?;
    let lambdas = eig.values();
    let var: Vec<f64> = (0..k).map(|i| mode_covariance(&lambdas, &w, i, i, t)).collect();
    let profiles = alphas
        .iter()
        .map(|&alpha| {
            let inc: Vec<f64> = (0..k).map(|i| (1.0 + lambdas[i]).powf(2.0 * alpha) * var[i]).collect();
            let partial_sums = inc
                .iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect();
            let slope = tail_slope(&inc);
            AlphaProfile { alpha, partial_sums, slope, convergent: slope < -1.0 }
        })
        .collect();
    Ok(RegularityProfile { t, modes: k, profiles })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let inc: Vec<f64> = (0..400).map(|k| if k == 0 { 0.0 } else { (k as f64).powf(-1.3) }).collect();
        assert!((tail_slope(&inc) + 1.3).abs() < 1e-12);
    }
}
