//! Hermitian spectra and von Neumann entropy.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Result, WgsError};
use crate::rdm::SubsystemRdm;

/// Most negative eigenvalue accepted as round-off of a PSD matrix.
pub const PSD_TOLERANCE: f64 = 1e-10;
const TRACE_TOLERANCE: f64 = 1e-9;

/// Eigenvalues of a density matrix, sorted non-increasing and clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Validates raw eigenvalues of a unit-trace PSD matrix, clamps
    /// round-off negatives to zero and sorts.
    pub fn from_eigenvalues(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(WgsError::domain("empty spectrum"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(WgsError::Numerical(format!("non-finite eigenvalue {bad}")));
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if min < -PSD_TOLERANCE || max > 1.0 + PSD_TOLERANCE {
            return Err(WgsError::Numerical(format!(
                "eigenvalues outside [-{PSD_TOLERANCE:e}, 1+{PSD_TOLERANCE:e}]: min {min:e}, max {max}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > TRACE_TOLERANCE {
            return Err(WgsError::Numerical(format!("eigenvalues sum to {sum}, not 1")));
        }
        for v in values.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues: values })
    }

    pub fn values(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy(self)
    }
}

/// Real eigenvalues of a Hermitian matrix, unsorted.
///
/// Failure to converge is reported with the dimension, Frobenius norm and
/// Hermiticity defect of the input.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(WgsError::domain(format!("matrix is {}x{}, not square", n, m.ncols())));
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)].re]);
    }
    match SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000) {
        Some(eig) => Ok(eig.eigenvalues.iter().copied().collect()),
        None => {
            let frob = m.norm();
            let defect = (m - m.adjoint()).norm();
            Err(WgsError::Numerical(format!(
                "hermitian eigensolver did not converge: dim {n}, frobenius norm {frob:e}, hermiticity defect {defect:e}"
            )))
        }
    }
}

pub fn spectrum(rdm: &SubsystemRdm) -> Result<Spectrum> {
    Spectrum::from_eigenvalues(hermitian_eigenvalues(rdm.matrix())?)
}

/// Von Neumann entropy in bits, `0 log 0 = 0`.
pub fn entropy(spec: &Spectrum) -> f64 {
    let s: f64 = spec
        .values()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    s.max(0.0)
}
