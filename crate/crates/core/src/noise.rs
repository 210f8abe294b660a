//! Covariance of the vertex noise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tolerances::{Q_NEGATIVE, Q_SQRT, Q_SYMMETRY};

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub q: DMatrix<f64>,
    pub q_sqrt: DMatrix<f64>,
    /// Per-vertex intensities when `q` is diagonal.
    pub diagonal: Option<Vec<f64>>,
}

impl NoiseModel {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::Invalid(format!("covariance is {}x{}", q.nrows(), q.ncols())));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("covariance has non-finite entries".into()));
        }
        let n = q.nrows();
        let scale = q.amax().max(1.0);
        for i in 0..n {
            for j in i + 1..n {
                if (q[(i, j)] - q[(j, i)]).abs() > Q_SYMMETRY * scale {
                    return Err(Error::AsymmetricMatrix);
                }
            }
        }
        let is_diagonal = (0..n).all(|i| (0..n).all(|j| i == j || q[(i, j)] == 0.0));
        if is_diagonal {
            let d: Vec<f64> = q.diagonal().iter().copied().collect();
            return Self::diagonal(&d);
        }
        let sym = (&q + q.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let min = eig.eigenvalues.min();
        if min < -Q_NEGATIVE * scale {
            return Err(Error::NotPsd(min));
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let q_sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
        let q_sqrt = (&q_sqrt + q_sqrt.transpose()) * 0.5;
        let back = &q_sqrt * &q_sqrt;
        if (&back - &sym).amax() > Q_SQRT * scale {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { q: sym, q_sqrt, diagonal: None })
    }

    pub fn diagonal(q: &[f64]) -> Result<Self> {
        if let Some(&bad) = q.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::NotPsd(bad));
        }
        let d = DVector::from_column_slice(q);
        Ok(Self {
            q: DMatrix::from_diagonal(&d),
            q_sqrt: DMatrix::from_diagonal(&d.map(f64::sqrt)),
            diagonal: Some(q.to_vec()),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n]).expect("identity is psd")
    }

    pub fn zero(n: usize) -> Self {
        Self::diagonal(&vec![0.0; n]).expect("zero is psd")
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.q.iter().all(|&x| x == 0.0)
    }

    /// `gamma Q`.
    pub fn scaled(&self, gamma: f64) -> Result<Self> {
        match &self.diagonal {
            Some(d) => Self::diagonal(&d.iter().map(|x| gamma * x).collect::<Vec<_>>()),
            None => Self::new(&self.q * gamma),
        }
    }

    /// `Q^{1/2} v`.
    pub fn apply_sqrt(&self, v: &[f64]) -> Vec<f64> {
        (&self.q_sqrt * DVector::from_column_slice(v)).as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_indefinite() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, -2.0, 1.0]);
        assert!(matches!(NoiseModel::new(q), Err(Error::NotPsd(_))));
    }

    #[test]
    fn rejects_asymmetric() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        assert!(matches!(NoiseModel::new(q), Err(Error::AsymmetricMatrix)));
    }

    #[test]
    fn full_square_root() {
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let nm = NoiseModel::new(q.clone()).unwrap();
        assert!(nm.diagonal.is_none());
        assert!((&nm.q_sqrt * &nm.q_sqrt - q).amax() < 1e-12);
    }

    #[test]
    fn diagonal_detected() {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 4.0]));
        let nm = NoiseModel::new(q).unwrap();
        assert_eq!(nm.diagonal, Some(vec![0.0, 4.0]));
        assert_eq!(nm.q_sqrt[(1, 1)], 2.0);
    }
}
