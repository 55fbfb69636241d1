use serde::{Deserialize, Serialize};

use super::eigen::eigh;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Eigenvalues of the measured observable, stored in decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpectrum {
    values: Vec<f64>,
}

impl ObservableSpectrum {
    /// Sorts `values` into decreasing order. Fails if the spectrum is constant
    /// (a constant observable extracts no information) or not finite.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::ContractViolation(
                "an observable spectrum needs at least two values".into(),
            ));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::ContractViolation("spectrum values must be finite".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let s = Self { values };
        if !(s.delta_x() > 0.0) {
            return Err(Error::ContractViolation(
                "spectrum must have x_max > x_min".into(),
            ));
        }
        Ok(s)
    }

    /// `n` equally spaced values from `half_gap` down to `-half_gap`.
    pub fn equispaced(n: usize, half_gap: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::ContractViolation("need n >= 2".into()));
        }
        let step = 2.0 * half_gap / (n - 1) as f64;
        Self::new((0..n).map(|i| half_gap - step * i as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x_max(&self) -> f64 {
        self.values[0]
    }

    pub fn x_min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `δx = x_max - x_min`
    pub fn delta_x(&self) -> f64 {
        self.x_max() - self.x_min()
    }

    pub fn shifted(&self, alpha: f64) -> Self {
        Self {
            values: self.values.iter().map(|x| x + alpha).collect(),
        }
    }

    /// Spectrum shifted so that `x_min = -x_max`, with the shift applied.
    /// The measurement dynamics is invariant under `X -> X + αI`.
    pub fn centered(&self) -> (Self, f64) {
        let alpha = -(self.x_max() + self.x_min()) / 2.0;
        (self.shifted(alpha), alpha)
    }

    /// True when the spectrum is symmetric about its midpoint, i.e. `d = 0`
    /// for the N = 4 block form (or `x_2 = 0` for a qutrit after centering).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let (c, _) = self.centered();
        let n = c.values.len();
        (0..n).all(|i| (c.values[i] + c.values[n - 1 - i]).abs() <= tol)
    }
}

/// Hermitian observable together with its (fixed) spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    mat: ComplexMatrix,
    spectrum: ObservableSpectrum,
}

impl Observable {
    /// Checks Hermiticity (1e-12) and that the eigenvalues of `mat` match
    /// `spectrum` (1e-10).
    pub fn new(mat: ComplexMatrix, spectrum: ObservableSpectrum) -> Result<Self> {
        if mat.dim() != spectrum.len() {
            return Err(Error::DimensionMismatch {
                expected: spectrum.len(),
                got: mat.dim(),
            });
        }
        let d = eigh(&mat)?;
        let mismatch = d
            .eigenvalues()
            .iter()
            .zip(spectrum.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if mismatch > 1e-10 {
            return Err(Error::ContractViolation(format!(
                "observable eigenvalues differ from spectrum by {mismatch:.3e}"
            )));
        }
        Ok(Self { mat, spectrum })
    }

    /// `diag(x_1, ..., x_N)` in the standard basis.
    pub fn diagonal(spectrum: ObservableSpectrum) -> Self {
        Self {
            mat: ComplexMatrix::from_real_diagonal(spectrum.values()),
            spectrum,
        }
    }

    /// Skips the spectral check; for matrices built by conjugating a known
    /// diagonal form with a unitary.
    pub(crate) fn from_parts_unchecked(mat: ComplexMatrix, spectrum: ObservableSpectrum) -> Self {
        debug_assert!(mat.hermiticity_error() < 1e-9);
        Self { mat, spectrum }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn spectrum(&self) -> &ObservableSpectrum {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// `X + αI`
    pub fn shifted(&self, alpha: f64) -> Self {
        let mut mat = self.mat.clone();
        for i in 0..mat.dim() {
            mat[(i, i)] += alpha;
        }
        Self {
            mat,
            spectrum: self.spectrum.shifted(alpha),
        }
    }
}
