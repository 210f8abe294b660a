//! Spectrum of `z -> -(c z')' + p z` with continuity and Kirchhoff
//! conditions: finite-element assembly, eigensolves, an exact backend for
//! equilateral stars and the discrete adjoint identity for the trace map.

pub mod adjoint;
pub mod analytic;
pub mod assembly;
pub mod solver;

use nalgebra::DMatrix;

pub use adjoint::{adjoint_check, dirichlet_lift};
pub use analytic::{antisymmetric_family, interval_analytic, rational_star_mode, star_analytic};
pub use assembly::{assemble, DiscreteOperator, DofMap, GraphMatrix};
pub use solver::{generalized_eigen, EigenMethod, GraphFactor};

use crate::error::Result;
use crate::tolerances::{EPS_CLUSTER, TRUST_LAMBDA_H2};

/// Converged pairs beyond the requested count, used to complete a cluster
/// that the request would cut in half.
pub const GUARD_MODES: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub enum ModeShape {
    /// Values on the dofs of a [`DofMap`].
    Nodal(Vec<f64>),
    /// `amps[e] * cos(freq * x)` on edge `e`, with `x` measured from the tail.
    Cosine { freq: f64, amps: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub lambda: f64,
    /// `f(v)` for every vertex, in graph order.
    pub traces: Vec<f64>,
    pub shape: ModeShape,
    pub trusted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub value: f64,
    pub members: Vec<usize>,
    pub trusted: bool,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub modes: Vec<Mode>,
    pub clusters: Vec<Cluster>,
    pub vertex_count: usize,
    /// Present for finite-element spectra.
    pub dofs: Option<DofMap>,
}

/// Groups ascending values; neighbours closer than `eps * max(|lambda|, 1)`
/// share a cluster.
pub fn cluster_indices(values: &[f64], eps: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(c) if (v - values[*c.last().unwrap()]).abs() <= eps * v.abs().max(1.0) => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

fn normalize_sign(v: &mut [f64]) {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best * (1.0 + 1e-9) {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// First `num_modes` eigenpairs, extended to the end of the last cluster.
pub fn eigensolve(op: &DiscreteOperator, num_modes: usize) -> Result<EigenSystem> {
    eigensolve_with(op, num_modes, EigenMethod::Auto)
}

pub fn eigensolve_with(op: &DiscreteOperator, num_modes: usize, method: EigenMethod) -> Result<EigenSystem> {
    let dim = op.dim();
    let computed = (num_modes + GUARD_MODES).min(dim);
    let raw = generalized_eigen(op, computed, method)?;
    let h = op.dofs.max_spacing();
    let n = op.dofs.vertex_count;
    let mut modes: Vec<Mode> = raw
        .values
        .into_iter()
        .zip(raw.vectors)
        .map(|(lambda, mut v)| {
            normalize_sign(&mut v);
            Mode {
                lambda,
                traces: v[..n].to_vec(),
                shape: ModeShape::Nodal(v),
                trusted: lambda * h * h <= TRUST_LAMBDA_H2,
            }
        })
        .collect();
    let values: Vec<f64> = modes.iter().map(|m| m.lambda).collect();
    let mut groups = cluster_indices(&values, EPS_CLUSTER);
    groups.retain(|g| g[0] < num_modes);
    let mut clusters = Vec::with_capacity(groups.len());
    let mut kept = 0;
    for g in groups {
        let cut = *g.last().unwrap() + 1 == computed && computed < dim;
        let trusted = !cut && g.iter().all(|&i| modes[i].trusted);
        let value = g.iter().map(|&i| values[i]).sum::<f64>() / g.len() as f64;
        kept = g.last().unwrap() + 1;
        clusters.push(Cluster { value, members: g, trusted });
    }
    modes.truncate(kept);
    for c in &clusters {
        for &i in &c.members {
            modes[i].trusted = c.trusted;
        }
    }
    Ok(EigenSystem { modes, clusters, vertex_count: n, dofs: Some(op.dofs.clone()) })
}

impl EigenSystem {
    /// Builds clusters for modes already in ascending order.
    pub fn from_modes(modes: Vec<Mode>, vertex_count: usize, dofs: Option<DofMap>) -> Self {
        let values: Vec<f64> = modes.iter().map(|m| m.lambda).collect();
        let clusters = cluster_indices(&values, EPS_CLUSTER)
            .into_iter()
            .map(|g| Cluster {
                value: g.iter().map(|&i| values[i]).sum::<f64>() / g.len() as f64,
                trusted: g.iter().all(|&i| modes[i].trusted),
                members: g,
            })
            .collect();
        Self { modes, clusters, vertex_count, dofs }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn trusted_count(&self) -> usize {
        self.modes.iter().take_while(|m| m.trusted).count()
    }

    /// Sub-system of the given modes, re-clustered.
    pub fn select(&self, indices: &[usize]) -> Self {
        let modes = indices.iter().map(|&i| self.modes[i].clone()).collect();
        Self::from_modes(modes, self.vertex_count, self.dofs.clone())
    }

    /// The first `k` modes.
    pub fn truncate(&self, k: usize) -> Self {
        let idx: Vec<usize> = (0..k.min(self.len())).collect();
        self.select(&idx)
    }

    /// Cluster of mode `k`.
    pub fn cluster_of(&self, k: usize) -> usize {
        self.clusters
            .iter()
            .position(|c| c.members.contains(&k))
            .expect("every mode belongs to a cluster")
    }

    /// `n x d` matrix whose columns are the vertex traces of the cluster.
    pub fn trace_matrix(&self, cluster: usize) -> DMatrix<f64> {
        let c = &self.clusters[cluster];
        DMatrix::from_fn(self.vertex_count, c.members.len(), |v, j| self.modes[c.members[j]].traces[v])
    }

    /// Value of mode `k` at local coordinate `x` on edge `e`.
    pub fn value_at(&self, k: usize, e: usize, x: f64) -> f64 {
        match &self.modes[k].shape {
            ModeShape::Cosine { freq, amps } => amps[e] * (freq * x).cos(),
            ModeShape::Nodal(v) => {
                let map = self.dofs.as_ref().expect("nodal modes carry their dof map");
                let h = map.spacing(e);
                let k_el = map.elements[e];
                let s = (x / h).clamp(0.0, k_el as f64);
                let j = (s.floor() as usize).min(k_el - 1);
                let t = s - j as f64;
                (1.0 - t) * v[map.node(e, j)] + t * v[map.node(e, j + 1)]
            }
        }
    }

    /// Largest eigen-residual in the `M^{-1}` norm, relative to `1 + lambda`,
    /// and the largest mass-orthonormality defect.
    pub fn check(&self, op: &DiscreteOperator) -> Result<(f64, f64)> {
        let mass_factor = GraphFactor::new(&op.mass)?;
        let vecs: Vec<&Vec<f64>> = self
            .modes
            .iter()
            .map(|m| match &m.shape {
                ModeShape::Nodal(v) => v,
                ModeShape::Cosine { .. } => panic!("check needs finite-element modes"),
            })
            .collect();
        let mut residual = 0.0_f64;
        for (m, v) in self.modes.iter().zip(&vecs) {
            let kx = op.stiffness.apply(v);
            let mx = op.mass.apply(v);
            let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - m.lambda * b).collect();
            let norm = assembly::dot(&r, &mass_factor.solve(&r)).max(0.0).sqrt();
            residual = residual.max(norm / (1.0 + m.lambda.abs()));
        }
        let mut orth = 0.0_f64;
        let mv: Vec<Vec<f64>> = vecs.iter().map(|v| op.mass.apply(v)).collect();
        for i in 0..vecs.len() {
            for j in i..vecs.len() {
                let g = assembly::dot(vecs[i], &mv[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                orth = orth.max((g - target).abs());
            }
        }
        Ok((residual, orth))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MetricGraph;
    use std::f64::consts::PI;

    #[test]
    fn clusters_merge_close_values() {
        let c = cluster_indices(&[0.0, 2.0, 2.0 + 1e-9, 5.0, 5.0 + 1e-3], 1e-6);
        assert_eq!(c, vec![vec![0], vec![1, 2], vec![3], vec![4]]);
    }

    #[test]
    fn interval_spectrum() {
        let op = assemble(&MetricGraph::interval(1.0), 200).unwrap();
        let eig = eigensolve(&op, 5).unwrap();
        assert!(eig.modes[0].lambda.abs() < 1e-9);
        for k in 1..5 {
            let exact = (k as f64 * PI).powi(2);
            assert!((eig.modes[k].lambda - exact).abs() / exact < 1e-3);
            // f_k(0) = +-sqrt(2)
            assert!((eig.modes[k].traces[0].abs() - 2f64.sqrt()).abs() < 1e-3);
        }
        let (res, orth) = eig.check(&op).unwrap();
        assert!(res < 1e-8 && orth < 1e-8, "{res} {orth}");
    }

    #[test]
    fn equilateral_star_has_double_antisymmetric_clusters() {
        let op = assemble(&MetricGraph::star(3, 1.0), 64).unwrap();
        let eig = eigensolve(&op, 6).unwrap();
        let sizes: Vec<usize> = eig.clusters.iter().map(Cluster::multiplicity).collect();
        assert_eq!(&sizes[..4], &[1, 2, 1, 2]);
        let c = &eig.clusters[1];
        assert!((c.value - PI * PI / 4.0).abs() / c.value < 1e-3);
    }

    #[test]
    fn select_reclusters() {
        let op = assemble(&MetricGraph::star(3, 1.0), 32).unwrap();
        let eig = eigensolve(&op, 4).unwrap();
        let one = eig.select(&[1]);
        assert_eq!(one.len(), 1);
        assert_eq!(one.clusters.len(), 1);
    }
}
