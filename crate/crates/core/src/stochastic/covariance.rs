//! Empirical mode covariances against their closed forms.

use serde::Serialize;

use super::simulate::TrajectoryEnsemble;
use super::{mode_covariance, noise_vectors};
use crate::error::Result;
use crate::noise::NoiseModel;
use crate::spectral::EigenSystem;

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceEntry {
    pub time: f64,
    pub k: usize,
    pub l: usize,
    pub empirical: f64,
    pub analytic: f64,
    pub standard_error: f64,
    /// `|empirical - analytic| / standard_error`; zero when both sides are
    /// exactly zero, infinite when only the standard error is.
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub entries: Vec<CovarianceEntry>,
    pub max_deviation: f64,
    /// Largest `|mean - e^{-lambda t} z0| / sqrt(var / S)`.
    pub max_mean_deviation: f64,
}

impl CovarianceReport {
    pub fn worst(&self) -> Option<&CovarianceEntry> {
        self.entries.iter().max_by(|a, b| a.deviation.total_cmp(&b.deviation))
    }
}

fn standardized(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff.abs() / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Covariances about the known mean, at every recorded time after 0. The
/// standard error of the product estimator for a Gaussian pair is
/// `sqrt((s_kk s_ll + s_kl^2) / S)`.
pub fn verify_covariance(ens: &TrajectoryEnsemble, eig: &EigenSystem, noise: &NoiseModel) -> Result<CovarianceReport> {
    verify_covariance_at(ens, eig, noise, &(1..ens.times.len()).collect::<Vec<_>>())
}

/// As [`verify_covariance`], restricted to the given recorded time indices.
pub fn verify_covariance_at(
    ens: &TrajectoryEnsemble,
    eig: &EigenSystem,
    noise: &NoiseModel,
    time_indices: &[usize],
) -> Result<CovarianceReport> {
    let k = ens.modes;
    let w = noise_vectors(eig, noise, k)?;
    let s = ens.samples as f64;
    let mut entries = Vec::new();
    let mut max_mean_deviation = 0.0_f64;
    for &ti in time_indices {
        let t = ens.times[ti];
        let means: Vec<f64> = (0..k).map(|m| ens.mean(ti, m)).collect();
        let mut sum = vec![0.0; k * k];
        let mut first = vec![0.0; k];
        let mut centered = vec![0.0; k];
        for sample in 0..ens.samples {
            for m in 0..k {
                centered[m] = ens.get(sample, ti, m) - means[m];
                first[m] += centered[m];
            }
            for a in 0..k {
                for b in a..k {
                    sum[a * k + b] += centered[a] * centered[b];
                }
            }
        }
        for a in 0..k {
            let var = mode_covariance(&ens.lambdas, &w, a, a, t);
            max_mean_deviation = max_mean_deviation.max(standardized(first[a] / s, (var / s).sqrt()));
            for b in a..k {
                let analytic = mode_covariance(&ens.lambdas, &w, a, b, t);
                let vb = mode_covariance(&ens.lambdas, &w, b, b, t);
                let se = ((var * vb + analytic * analytic) / s).sqrt();
                let empirical = sum[a * k + b] / s;
                entries.push(CovarianceEntry {
                    time: t,
                    k: a,
                    l: b,
                    empirical,
                    analytic,
                    standard_error: se,
                    deviation: standardized(empirical - analytic, se),
                });
            }
        }
    }
    let max_deviation = entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    Ok(CovarianceReport { entries, max_deviation, max_mean_deviation })
}
