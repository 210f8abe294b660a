//! Discrete Dirichlet lift and the identity `B* = -L` for the vertex trace.

use super::assembly::{dot, DiscreteOperator};
use super::solver::GraphFactor;
use crate::error::{Error, Result};

/// `D_1 alpha`: the solution of `z - (c z')' + p z = 0` whose inward
/// co-normal derivatives sum to `alpha_v` at each vertex. In weak form this
/// is `(K + M) z = -P^T alpha` with `P` the vertex-value map.
pub fn dirichlet_lift(op: &DiscreteOperator, alpha: &[f64]) -> Result<Vec<f64>> {
    let n = op.dofs.vertex_count;
    if alpha.len() != n {
        return Err(Error::Invalid(format!("alpha has {} entries, graph has {n} vertices", alpha.len())));
    }
    let a = op.stiffness.add_scaled(&op.mass, 1.0);
    let factor = GraphFactor::new(&a)?;
    let mut rhs = vec![0.0; op.dim()];
    for (r, &x) in rhs.iter_mut().zip(alpha) {
        *r = -x;
    }
    Ok(factor.solve(&rhs))
}

/// `|<(1 - A) D_1 alpha, h> + <alpha, L h>|` for a conforming `h`.
pub fn adjoint_check(op: &DiscreteOperator, alpha: &[f64], h: &[f64]) -> Result<f64> {
    if h.len() != op.dim() {
        return Err(Error::Invalid(format!("h has {} entries, expected {}", h.len(), op.dim())));
    }
    let z = dirichlet_lift(op, alpha)?;
    let a = op.stiffness.add_scaled(&op.mass, 1.0);
    let pairing = dot(h, &a.apply(&z));
    let trace = dot(alpha, &h[..alpha.len()]);
    Ok((pairing + trace).abs())
}
