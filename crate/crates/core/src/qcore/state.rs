use num_complex::Complex64 as C64;

use super::eigen::{eigh, SpectralDecomposition};
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

pub const DENSITY_HERMITIAN_TOL: f64 = 1e-12;
pub const DENSITY_TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue a valid state may carry.
pub const DENSITY_PSD_TOL: f64 = 1e-10;

/// Hermitian, positive semidefinite, unit-trace state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if mat.dim() < 2 {
            return Err(Error::ContractViolation("density matrix needs dim >= 2".into()));
        }
        let herr = mat.hermiticity_error();
        if herr > DENSITY_HERMITIAN_TOL {
            return Err(Error::ContractViolation(format!(
                "density matrix not Hermitian ({herr:.3e})"
            )));
        }
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(Error::ContractViolation(format!("trace is {tr}, expected 1")));
        }
        let d = eigh(&mat)?;
        let min = d.eigenvalues()[d.dim() - 1];
        if min < -DENSITY_PSD_TOL {
            return Err(Error::ContractViolation(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { mat })
    }

    /// `diag(values)`; values must sum to one and be nonnegative.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(values))
    }

    /// `|ψ><ψ|` for a normalized `ψ`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::ContractViolation("state vector not normalized".into()));
        }
        Self::new(ComplexMatrix::outer(psi, psi))
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(n).scale(1.0 / n as f64))
    }

    /// `Σ λ_i v_i v_i†` from a decomposition with nonnegative unit-sum values.
    pub fn from_spectral(d: &SpectralDecomposition) -> Result<Self> {
        Self::new(d.reconstruct())
    }

    pub(crate) fn from_matrix_unchecked(mat: ComplexMatrix) -> Self {
        Self { mat }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// `Tr[M ρ]` (real part; exact for Hermitian `M`).
    pub fn expectation(&self, m: &ComplexMatrix) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (m[(i, j)] * self.mat[(j, i)]).re;
            }
        }
        acc
    }

    /// `Tr[ρ²]`
    pub fn purity(&self) -> f64 {
        self.mat.raw().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn spectral(&self) -> Result<SpectralDecomposition> {
        eigh(&self.mat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(DensityMatrix::diagonal(&[0.5, 0.5]).is_ok());
        assert!(DensityMatrix::diagonal(&[0.6, 0.5]).is_err());
        assert!(DensityMatrix::diagonal(&[1.1, -0.1]).is_err());
        let nh = ComplexMatrix::from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]]).unwrap();
        assert!(DensityMatrix::new(nh).is_err());
    }

    #[test]
    fn purity_of_mixed() {
        let r = DensityMatrix::maximally_mixed(3).unwrap();
        assert!((r.purity() - 1.0 / 3.0).abs() < 1e-15);
    }
}
