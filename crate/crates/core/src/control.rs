//! Minimal-norm null controls for the first `K` modes.
//!
//! Controls are piecewise constant on a uniform grid of `[0, T]`. With
//! `w_k = Q^{1/2} L f_k` the terminal coefficient of mode `k` is
//!
//! ```text
//! <z(T), f_k> = e^{-lambda_k T} c_k - sum_{j,i} w_kj E_ki u_j(i)
//! ```
//!
//! where `E_ki` integrates `e^{-lambda_k (T - s)}` over interval `i`. Each
//! cluster is first rotated to the singular basis of `Q^{1/2} M`, so that
//! directions the noise cannot see get an identically zero row.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feller::trace_threshold;
use crate::noise::NoiseModel;
use crate::spectral::EigenSystem;
use crate::tolerances::{CONTROL_RESIDUAL, GRAM_TRUNCATION};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnreachableDirection {
    pub cluster: usize,
    pub eigenvalue: f64,
    /// Unit combination of the cluster basis.
    pub coeffs: Vec<f64>,
    /// Terminal coefficient along this direction, equal to its free decay.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlReport {
    /// `M + 1` grid points; `controls[v][i]` acts on `[times[i], times[i+1])`.
    pub times: Vec<f64>,
    pub controls: Vec<Vec<f64>>,
    /// Terminal coefficients `<z(T), f_k>` in the eigen-system basis.
    pub moment_residual: Vec<f64>,
    /// `e^{-lambda_k T} c_k`.
    pub uncontrolled: Vec<f64>,
    pub terminal_norm: f64,
    pub uncontrolled_norm: f64,
    pub control_norm: f64,
    /// Largest terminal coefficient among the reachable directions.
    pub reachable_residual: f64,
    pub unreachable: Vec<UnreachableDirection>,
    /// Gram eigenvalues kept and dropped by the truncation.
    pub rank: usize,
    pub dropped: usize,
}

/// `(1 - e^{-x dt}) / x`, with the limit `dt` at `x = 0`.
pub fn decay_integral(x: f64, dt: f64) -> f64 {
    if x == 0.0 {
        dt
    } else {
        -(-x * dt).exp_m1() / x
    }
}

pub fn solve_null_control(
    eig: &EigenSystem,
    noise: &NoiseModel,
    z0: &[f64],
    t: f64,
    k: usize,
    time_grid: usize,
) -> Result<ControlReport> {
    solve_null_control_with(eig, noise, z0, t, k, time_grid, CONTROL_RESIDUAL)
}

/// Fails with [`Error::IllConditioned`] when a reachable direction keeps a
/// terminal coefficient above `residual_tol`.
pub fn solve_null_control_with(
    eig: &EigenSystem,
    noise: &NoiseModel,
    z0: &[f64],
    t: f64,
    k: usize,
    time_grid: usize,
    residual_tol: f64,
) -> Result<ControlReport> {
    if !(t > 0.0) || time_grid == 0 || k == 0 {
        return Err(Error::Invalid("need T > 0, at least one time step and one mode".into()));
    }
    if z0.len() > k {
        return Err(Error::Invalid(format!("{} initial coefficients for {k} modes", z0.len())));
    }
    if noise.dim() != eig.vertex_count {
        return Err(Error::Invalid("noise dimension differs from the vertex count".into()));
    }
    if k > eig.len() || eig.modes[..k].iter().any(|m| !m.trusted) {
        return Err(Error::SpectrumTooCoarse);
    }
    let sys = eig.truncate(k);
    let n = sys.vertex_count;
    let m = time_grid;
    let dt = t / m as f64;
    let mut c = z0.to_vec();
    c.resize(k, 0.0);

    // rotated rows: per direction its decay rate, noise vector, target
    let mut lambdas = vec![0.0; k];
    let mut w: Vec<Vec<f64>> = vec![vec![0.0; n]; k];
    let mut target = vec![0.0; k];
    let mut reachable = vec![true; k];
    let mut rotations: Vec<(Vec<usize>, DMatrix<f64>)> = Vec::new();
    let mut unreachable = Vec::new();
    for (ci, cl) in sys.clusters.iter().enumerate() {
        let tm = sys.trace_matrix(ci);
        let a = &noise.q_sqrt * &tm;
        let d = cl.members.len();
        let padded = if d > n { a.clone().resize_vertically(d, 0.0) } else { a.clone() };
        let svd = padded.svd(false, true);
        let v = svd.v_t.expect("requested V^T").transpose();
        let thr = trace_threshold(&tm);
        let lambda = if d == 1 { sys.modes[cl.members[0]].lambda } else { cl.value };
        let c_cluster = DVector::from_iterator(d, cl.members.iter().map(|&i| c[i]));
        let c_rot = v.transpose() * &c_cluster;
        for (slot, &row) in cl.members.iter().enumerate() {
            lambdas[row] = lambda;
            target[row] = (-lambda * t).exp() * c_rot[slot];
            if svd.singular_values[slot] <= thr {
                reachable[row] = false;
                unreachable.push(UnreachableDirection {
                    cluster: ci,
                    eigenvalue: lambda,
                    coeffs: v.column(slot).iter().copied().collect(),
                    residual: target[row],
                });
            } else {
                w[row] = (&a * v.column(slot)).as_slice().to_vec();
            }
        }
        rotations.push((cl.members.clone(), v));
    }

    // A[r, (j, i)] = w_rj E_ri
    let e: Vec<Vec<f64>> = lambdas
        .iter()
        .map(|&l| {
            let phi = decay_integral(l, dt);
            (0..m).map(|i| (-l * (t - (i + 1) as f64 * dt)).exp() * phi).collect()
        })
        .collect();
    let rows: Vec<usize> = (0..k).filter(|&r| reachable[r]).collect();
    let mut gram = DMatrix::zeros(rows.len(), rows.len());
    for (a, &r) in rows.iter().enumerate() {
        for (b, &s) in rows.iter().enumerate().skip(a) {
            let ws: f64 = w[r].iter().zip(&w[s]).map(|(x, y)| x * y).sum();
            let es: f64 = e[r].iter().zip(&e[s]).map(|(x, y)| x * y).sum();
            gram[(a, b)] = ws * es / dt;
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let scale: Vec<f64> = (0..rows.len()).map(|a| 1.0 / gram[(a, a)].sqrt()).collect();
    let mut y = vec![0.0; rows.len()];
    let (mut rank, mut dropped) = (0, 0);
    if !rows.is_empty() {
        let eq = DMatrix::from_fn(rows.len(), rows.len(), |a, b| scale[a] * gram[(a, b)] * scale[b]);
        let se = SymmetricEigen::new(eq);
        let top = se.eigenvalues.max();
        let sb = DVector::from_iterator(rows.len(), rows.iter().zip(&scale).map(|(&r, s)| s * target[r]));
        let mut yh = DVector::zeros(rows.len());
        for (i, &mu) in se.eigenvalues.iter().enumerate() {
            if mu > GRAM_TRUNCATION * top {
                let v = se.eigenvectors.column(i);
                yh += v * (v.dot(&sb) / mu);
                rank += 1;
            } else {
                dropped += 1;
            }
        }
        for a in 0..rows.len() {
            y[a] = scale[a] * yh[a];
        }
    }

    let mut controls = vec![vec![0.0; m]; n];
    for (a, &r) in rows.iter().enumerate() {
        for j in 0..n {
            if w[r][j] == 0.0 {
                continue;
            }
            for i in 0..m {
                controls[j][i] += y[a] * w[r][j] * e[r][i] / dt;
            }
        }
    }

    let mut rot_residual = vec![0.0; k];
    for r in 0..k {
        let mut au = 0.0;
        if reachable[r] {
            for j in 0..n {
                au += w[r][j] * e[r].iter().zip(&controls[j]).map(|(x, u)| x * u).sum::<f64>();
            }
        }
        rot_residual[r] = target[r] - au;
    }
    let reachable_residual = (0..k).filter(|&r| reachable[r]).map(|r| rot_residual[r].abs()).fold(0.0, f64::max);

    let mut moment_residual = vec![0.0; k];
    for (members, v) in &rotations {
        let rr = DVector::from_iterator(members.len(), members.iter().map(|&i| rot_residual[i]));
        let back = v * rr;
        for (slot, &i) in members.iter().enumerate() {
            moment_residual[i] = back[slot];
        }
    }
    let uncontrolled: Vec<f64> = (0..k).map(|i| (-sys.modes[i].lambda * t).exp() * c[i]).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let control_norm = (dt * controls.iter().flatten().map(|u| u * u).sum::<f64>()).sqrt();
    let report = ControlReport {
        times: (0..=m).map(|i| i as f64 * dt).collect(),
        terminal_norm: norm(&moment_residual),
        uncontrolled_norm: norm(&uncontrolled),
        controls,
        moment_residual,
        uncontrolled,
        control_norm,
        reachable_residual,
        unreachable,
        rank,
        dropped,
    };
    if reachable_residual > residual_tol {
        return Err(Error::IllConditioned { residual: reachable_residual, tolerance: residual_tol });
    }
    Ok(report)
}
