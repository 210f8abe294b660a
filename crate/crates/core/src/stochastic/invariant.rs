//! Existence of an invariant measure: exponential stability, or noise that
//! cannot see the kernel of the generator.

use serde::Serialize;

use super::{mode_covariance, noise_vectors};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::noise::NoiseModel;
use crate::spectral::EigenSystem;
use crate::tolerances::{EPS_GAP, EPS_TRACE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Existence {
    Yes,
    No,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantMeasureReport {
    pub exists: Existence,
    /// `spectral-gap`, `kernel-invisible` or `kernel-visible`.
    pub rule: String,
    pub lambda0: f64,
    pub t: f64,
    /// Running sums of `(1 - e^{-2 lambda_k T}) / (2 lambda_k) |Q^{1/2} L f_k|^2`.
    pub hs_partial_sums: Vec<f64>,
    /// Contribution of the modes with `lambda <= EPS_GAP`; equals
    /// `T |Q^{1/2} L f_0|^2` when the kernel is one-dimensional.
    pub kernel_term: f64,
}

pub fn invariant_measure_check(
    graph: &MetricGraph,
    eig: &EigenSystem,
    noise: &NoiseModel,
    t: f64,
) -> Result<InvariantMeasureReport> {
    if eig.is_empty() {
        return Err(Error::SpectrumTooCoarse);
    }
    if !(t > 0.0) {
        return Err(Error::Invalid("T must be positive".into()));
    }
    let k = eig.len();
    let w = noise_vectors(eig, noise, k)?;
    let lambdas = eig.values();
    let terms: Vec<f64> = (0..k).map(|i| mode_covariance(&lambdas, &w, i, i, t)).collect();
    let hs_partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let kernel: Vec<usize> = (0..k).filter(|&i| lambdas[i] <= EPS_GAP).collect();
    let kernel_term = kernel.iter().map(|&i| terms[i]).sum();
    let lambda0 = lambdas[0];

    let (exists, rule) = if lambda0 > EPS_GAP {
        (Existence::Yes, "spectral-gap")
    } else if !graph.zero_potential() {
        return Err(Error::SpectralGapAmbiguous { lambda0 });
    } else {
        let visible = kernel.iter().any(|&i| w[i].iter().map(|x| x * x).sum::<f64>().sqrt() > EPS_TRACE);
        if visible {
            (Existence::No, "kernel-visible")
        } else {
            (Existence::Yes, "kernel-invisible")
        }
    };
    Ok(InvariantMeasureReport { exists, rule: rule.to_string(), lambda0, t, hs_partial_sums, kernel_term })
}
