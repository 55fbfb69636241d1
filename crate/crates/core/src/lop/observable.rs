use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qcore::unitary::check_unitary;
use crate::qcore::{
    direct_sum, unbiased_2x2, ComplexMatrix, Observable, ObservableSpectrum, SpectralDecomposition,
};

/// The free unitary acting on the `N − 2` smallest eigenvalues of ρ.
#[derive(Debug, Clone, PartialEq)]
pub enum VPolicy {
    Identity,
    /// Unbiased 2×2 block on the two smallest eigenvectors (identity on any
    /// others). Requires `N >= 4`.
    UnbiasedPair,
    Custom(ComplexMatrix),
}

impl VPolicy {
    /// The `m × m` unitary for `m = N − 2`.
    pub fn matrix(&self, m: usize) -> Result<ComplexMatrix> {
        match self {
            VPolicy::Identity => Ok(ComplexMatrix::identity(m)),
            VPolicy::UnbiasedPair => {
                if m < 2 {
                    return Err(Error::Unsupported(
                        "unbiased_pair V-policy needs N >= 4".into(),
                    ));
                }
                let head = ComplexMatrix::identity(m - 2);
                if m == 2 {
                    Ok(unbiased_2x2(0.0, 0.0, 0.0))
                } else {
                    direct_sum(&head, &unbiased_2x2(0.0, 0.0, 0.0))
                }
            }
            VPolicy::Custom(v) => {
                if v.dim() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: v.dim(),
                    });
                }
                check_unitary(v)?;
                Ok(v.clone())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            VPolicy::Identity => "identity",
            VPolicy::UnbiasedPair => "unbiased_pair",
            VPolicy::Custom(_) => "custom",
        }
    }
}

/// Spectrum values in block order: `x_max, x_min`, then the rest descending.
fn block_order(spectrum: &ObservableSpectrum) -> Vec<f64> {
    let v = spectrum.values();
    let n = v.len();
    let mut out = vec![v[0], v[n - 1]];
    out.extend_from_slice(&v[1..n - 1]);
    out
}

/// Permutation taking the descending spectrum to block order, as a unitary
/// `P` with `P diag(x) P† = diag(block order)`.
fn block_permutation(n: usize) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(n);
    // block slot s holds descending index src(s)
    let src = |s: usize| match s {
        0 => 0,
        1 => n - 1,
        s => s - 1,
    };
    for s in 0..n {
        p[(s, src(s))] = C64::new(1.0, 0.0);
    }
    p
}

/// Unitary `U₂ᵘ ⊕ V` with zero phases in the unbiased block.
pub fn block_unitary(n: usize, v: &VPolicy) -> Result<ComplexMatrix> {
    if n < 2 {
        return Err(Error::ContractViolation("need N >= 2".into()));
    }
    let u2 = unbiased_2x2(0.0, 0.0, 0.0);
    if n == 2 {
        return Ok(u2);
    }
    direct_sum(&u2, &v.matrix(n - 2)?)
}

/// Locally optimal observable expressed in an ordered basis: the 2×2 block
/// `[[m, h], [h, m]]` with `m = (x_max + x_min)/2`, `h = (x_max − x_min)/2` on
/// slots 0 and 1, and `V diag(x_2 … x_{N−1}) V†` on the remaining slots.
pub fn lop_block(spectrum: &ObservableSpectrum, v: &VPolicy) -> Result<ComplexMatrix> {
    let n = spectrum.len();
    let u = block_unitary(n, v)?;
    let d = ComplexMatrix::from_real_diagonal(&block_order(spectrum));
    Ok((&(&u * &d) * &u.adjoint()).hermitian_part())
}

/// `W M W†` where the columns of `W` are `basis`.
pub fn observable_in_basis(
    basis: &[Vec<C64>],
    block: &ComplexMatrix,
    spectrum: &ObservableSpectrum,
) -> Observable {
    let n = basis.len();
    let mut m = ComplexMatrix::zeros(n);
    // Σ_ab block_ab |w_a><w_b|
    for a in 0..n {
        for b in 0..n {
            let c = block[(a, b)];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for i in 0..n {
                let wa = basis[a][i] * c;
                for j in 0..n {
                    m[(i, j)] += wa * basis[b][j].conj();
                }
            }
        }
    }
    Observable::from_parts_unchecked(m.hermitian_part(), spectrum.clone())
}

/// Locally optimal observable for the state with decomposition `spec`.
///
/// For `VPolicy::UnbiasedPair` the spectrum is first centered so that
/// `x_min = −x_max`; the returned observable carries the shifted spectrum.
pub fn build_lop_observable(
    spec: &SpectralDecomposition,
    spectrum: &ObservableSpectrum,
    v: &VPolicy,
) -> Result<Observable> {
    if spec.dim() != spectrum.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: spectrum.len(),
        });
    }
    let spectrum = match v {
        VPolicy::UnbiasedPair => spectrum.centered().0,
        _ => spectrum.clone(),
    };
    let block = lop_block(&spectrum, v)?;
    Ok(observable_in_basis(spec.vectors(), &block, &spectrum))
}

/// Lab-frame unitary `U` with `U diag(x) U† = ` [`build_lop_observable`]
/// (without the centering shift).
pub fn lop_unitary(spec: &SpectralDecomposition, v: &VPolicy) -> Result<ComplexMatrix> {
    let n = spec.dim();
    let w = spec.unitary();
    let u = block_unitary(n, v)?;
    Ok(&(&w * &u) * &block_permutation(n))
}

/// `F(U) = Σ_{i≠0} λ_i |<i|U X U†|0>|²` in the eigenbasis of `spec`.
pub fn f_objective(u: &ComplexMatrix, x: &Observable, spec: &SpectralDecomposition) -> Result<f64> {
    if u.dim() != spec.dim() || x.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: u.dim(),
        });
    }
    check_unitary(u)?;
    let xu = &(u * x.matrix()) * &u.adjoint();
    let v0 = spec.vector(0);
    let lam = spec.eigenvalues();
    Ok((1..spec.dim())
        .map(|i| lam[i] * xu.sandwich(spec.vector(i), v0).norm_sqr())
        .sum())
}

/// Unitary exchanging eigenvectors `i` and `j` of `spec`, identity elsewhere.
pub fn flip_operator(spec: &SpectralDecomposition, i: usize, j: usize) -> Result<ComplexMatrix> {
    let n = spec.dim();
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, dim: n });
        }
    }
    if i == j {
        return Err(Error::ContractViolation("flip needs two distinct indices".into()));
    }
    let (vi, vj) = (spec.vector(i), spec.vector(j));
    let mut m = ComplexMatrix::identity(n);
    let terms = [
        (vi, vi, -1.0),
        (vj, vj, -1.0),
        (vi, vj, 1.0),
        (vj, vi, 1.0),
    ];
    for (a, b, s) in terms {
        m.axpy(s, &ComplexMatrix::outer(a, b));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{conjugate, eigh, random_unitary, stream, DensityMatrix};

    fn spectrum(v: &[f64]) -> ObservableSpectrum {
        ObservableSpectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn qubit_lop_is_sigma_x() {
        let spec = DensityMatrix::diagonal(&[0.99, 0.01]).unwrap().spectral().unwrap();
        let x = build_lop_observable(&spec, &spectrum(&[1.0, -1.0]), &VPolicy::Identity).unwrap();
        let sx = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!(x.matrix().max_abs_diff(&sx) < 1e-15);
    }

    #[test]
    fn qutrit_lop_matches_closed_form() {
        let spec = DensityMatrix::diagonal(&[0.97, 0.02, 0.01]).unwrap().spectral().unwrap();
        let x =
            build_lop_observable(&spec, &spectrum(&[1.0, 0.0, -1.0]), &VPolicy::Identity).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[
            &[0.0, 1.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0],
        ])
        .unwrap();
        assert!(x.matrix().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn four_level_unbiased_pair_block_form() {
        let spec = DensityMatrix::diagonal(&[0.965, 0.02, 0.01, 0.005])
            .unwrap()
            .spectral()
            .unwrap();
        let x = build_lop_observable(&spec, &spectrum(&[3.0, 1.0, -1.0, -3.0]), &VPolicy::UnbiasedPair)
            .unwrap();
        let expect = ComplexMatrix::from_real_rows(&[
            &[0.0, 3.0, 0.0, 0.0],
            &[3.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert!(x.matrix().max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn unbiased_pair_centers_spectrum() {
        let spec = DensityMatrix::diagonal(&[0.965, 0.02, 0.01, 0.005])
            .unwrap()
            .spectral()
            .unwrap();
        let x = build_lop_observable(&spec, &spectrum(&[5.0, 3.0, 1.0, -1.0]), &VPolicy::UnbiasedPair)
            .unwrap();
        assert_eq!(x.spectrum().values(), &[3.0, 1.0, -1.0, -3.0]);
        assert!(VPolicy::UnbiasedPair.matrix(1).is_err());
    }

    #[test]
    fn lop_unitary_reproduces_observable() {
        let mut rng = stream(4, 0);
        for n in 2..=6 {
            let w = random_unitary(n, &mut rng);
            let mut lam: Vec<f64> = (0..n).map(|i| 0.01 / (i + 1) as f64).collect();
            lam[0] = 0.0;
            let s: f64 = lam.iter().sum();
            lam[0] = 1.0 - s;
            let rho = (&(&w * &ComplexMatrix::from_real_diagonal(&lam)) * &w.adjoint()).hermitian_part();
            let spec = eigh(&rho).unwrap();
            let sp = ObservableSpectrum::equispaced(n, 1.5).unwrap();
            let u = lop_unitary(&spec, &VPolicy::Identity).unwrap();
            let via_u = conjugate(&Observable::diagonal(sp.clone()), &u).unwrap();
            let direct = build_lop_observable(&spec, &sp, &VPolicy::Identity).unwrap();
            assert!(via_u.matrix().max_abs_diff(direct.matrix()) < 1e-12);
            let f = f_objective(&u, &Observable::diagonal(sp.clone()), &spec).unwrap();
            let bound = spec.eigenvalues()[1] * sp.delta_x().powi(2) / 4.0;
            assert!((f - bound).abs() <= 1e-12, "n={n} f={f} bound={bound}");
        }
    }

    #[test]
    fn pure_state_objective_vanishes() {
        let mut rng = stream(8, 0);
        let spec = DensityMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap().spectral().unwrap();
        let x = Observable::diagonal(spectrum(&[1.0, 0.0, -1.0]));
        for _ in 0..10 {
            let u = random_unitary(3, &mut rng);
            assert_eq!(f_objective(&u, &x, &spec).unwrap(), 0.0);
        }
    }

    #[test]
    fn flip_cases() {
        let spec = SpectralDecomposition::standard_basis(&[0.9, 0.07, 0.03]).unwrap();
        let f = flip_operator(&spec, 0, 1).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[
            &[0.0, 1.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(f.max_abs_diff(&expect) < 1e-15);
        assert!((&f * &f).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        assert!(flip_operator(&spec, 0, 3).is_err());

        // X₂ = O X₁ O† couples the target only to the λ₂ eigenvector.
        let x1 = build_lop_observable(&spec, &spectrum(&[1.0, 0.0, -1.0]), &VPolicy::Identity)
            .unwrap();
        let o = flip_operator(&spec, 1, 2).unwrap();
        let x2 = conjugate(&x1, &o).unwrap();
        assert!((x2.matrix()[(2, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(x2.matrix()[(1, 0)].norm() < 1e-15);
    }
}
