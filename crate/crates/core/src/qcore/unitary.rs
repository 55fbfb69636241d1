use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use super::matrix::{inner, ComplexMatrix, MAX_DIM};
use super::observable::Observable;
use super::rng::standard_normal;
use crate::error::{Error, Result};

/// Maximum `||U U† - I||_max` for a matrix accepted as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

pub fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    let err = u.unitarity_error();
    if err > UNITARY_TOL {
        return Err(Error::ContractViolation(format!(
            "matrix is not unitary (||UU† - I||_max = {err:.3e})"
        )));
    }
    Ok(())
}

/// `X^u = U X U†`. The spectrum is carried over unchanged.
pub fn conjugate(x: &Observable, u: &ComplexMatrix) -> Result<Observable> {
    if u.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: u.dim(),
        });
    }
    check_unitary(u)?;
    let m = (&(u * x.matrix()) * &u.adjoint()).hermitian_part();
    Ok(Observable::from_parts_unchecked(m, x.spectrum().clone()))
}

/// General 2×2 unitary unbiased with respect to the standard basis:
///
/// ```text
/// e^{iφ}/√2 [  e^{iθ₁}   -e^{iθ₂} ]
///           [  e^{-iθ₂}   e^{-iθ₁} ]
/// ```
pub fn unbiased_2x2(theta1: f64, theta2: f64, phi: f64) -> ComplexMatrix {
    let g = C64::from_polar(FRAC_1_SQRT_2, phi);
    let e = |a: f64| C64::from_polar(1.0, a);
    ComplexMatrix::from_rows(vec![
        vec![g * e(theta1), -g * e(theta2)],
        vec![g * e(-theta2), g * e(-theta1)],
    ])
    .expect("2x2")
}

/// Block-diagonal `a ⊕ b`.
pub fn direct_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (na, nb) = (a.dim(), b.dim());
    if na + nb > MAX_DIM {
        return Err(Error::DimensionTooLarge(na + nb));
    }
    let mut m = ComplexMatrix::zeros(na + nb);
    for i in 0..na {
        for j in 0..na {
            m[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..nb {
        for j in 0..nb {
            m[(na + i, na + j)] = b[(i, j)];
        }
    }
    Ok(m)
}

/// Haar-random unitary: Gram–Schmidt on a complex Ginibre matrix.
pub fn random_unitary<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        let mut degenerate = false;
        for _ in 0..n {
            let mut v: Vec<C64> = (0..n)
                .map(|_| C64::new(standard_normal(rng), standard_normal(rng)))
                .collect();
            for _ in 0..2 {
                for c in &cols {
                    let p = inner(c, &v);
                    for (vi, ci) in v.iter_mut().zip(c) {
                        *vi -= p * ci;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                degenerate = true;
                break;
            }
            for z in v.iter_mut() {
                *z /= norm;
            }
            cols.push(v);
        }
        if !degenerate {
            return ComplexMatrix::from_columns(&cols).expect("square");
        }
    }
}

/// Random Hermitian matrix with independent Gaussian entries.
pub fn random_hermitian<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..n {
        m[(i, i)] = C64::new(standard_normal(rng), 0.0);
        for j in (i + 1)..n {
            let z = C64::new(standard_normal(rng), standard_normal(rng));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}
