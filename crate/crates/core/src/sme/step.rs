use num_complex::Complex64 as C64;

use super::params::SmeParams;
use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, DensityMatrix, EigenTracker, Observable, SpectralDecomposition};

/// Raw eigenvalues below this are a step-size error rather than round-off.
pub const NEGATIVITY_ERROR: f64 = -1e-6;

/// Upper end of the first-order regime assumed by the Δ expansions.
pub const EXPANSION_LIMIT: f64 = 0.1;

/// `−k[X,[X,ρ]]`
pub fn measurement_drift(rho: &ComplexMatrix, x: &ComplexMatrix, k: f64) -> ComplexMatrix {
    let c = x.commutator(rho);
    x.commutator(&c).scale(-k)
}

/// `√(2k)(Xρ + ρX − 2⟨X⟩ρ)`
pub fn measurement_diffusion(rho: &ComplexMatrix, x: &ComplexMatrix, k: f64) -> ComplexMatrix {
    let mean = expectation(rho, x);
    let mut b = x.anticommutator(rho);
    b.axpy(-2.0 * mean, rho);
    b.scale((2.0 * k).sqrt())
}

fn expectation(rho: &ComplexMatrix, x: &ComplexMatrix) -> f64 {
    let n = rho.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (x[(i, j)] * rho[(j, i)]).re;
        }
    }
    acc
}

/// Symmetrizes, clamps small negative eigenvalues to zero and renormalizes.
///
/// Returns the repaired state together with its decomposition. When a
/// tracker is given, eigenvectors are aligned to its reference (the
/// reference itself is not updated).
pub fn repair(
    raw: &ComplexMatrix,
    tracker: Option<&EigenTracker>,
) -> Result<(DensityMatrix, SpectralDecomposition)> {
    let sym = raw.hermitian_part();
    let d = match tracker {
        Some(t) => t.peek(&sym)?,
        None => crate::qcore::eigh(&sym)?,
    };
    let values = d.eigenvalues();
    let min = values[values.len() - 1];
    if min < NEGATIVITY_ERROR {
        return Err(Error::StepSize { min_eigenvalue: min });
    }
    if min < 0.0 {
        let clamped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        let d = d.with_shifted_values(clamped.iter().map(|v| v / total).collect());
        let m = d.reconstruct().hermitian_part();
        return Ok((DensityMatrix::from_matrix_unchecked(m), d));
    }
    let tr = sym.trace().re;
    let d = d.with_shifted_values(values.iter().map(|v| v / tr).collect());
    Ok((DensityMatrix::from_matrix_unchecked(sym.scale(1.0 / tr)), d))
}

/// Exact measurement update for an observable held fixed over the step:
/// `ρ' ∝ AρA` with `A = exp(√(2k)X dy − 2kX²dt)` and
/// `dy = dW + 2√(2k)⟨X⟩dt`. Rank is preserved, so a zero eigenvalue stays
/// zero and errors in small eigenvalues scale with the eigenvalues.
pub fn kraus_measurement(
    rho: &ComplexMatrix,
    x: &ComplexMatrix,
    k: f64,
    dt: f64,
    dw: f64,
) -> ComplexMatrix {
    let s = (2.0 * k).sqrt();
    let dy = dw + 2.0 * s * expectation(rho, x) * dt;
    let x2 = x * x;
    let mut h = x.scale(s * dy);
    h.axpy(-2.0 * k * dt, &x2);
    let a = expm_small(&h);
    let out = &(&a * rho) * &a;
    let tr = out.trace().re;
    out.scale(1.0 / tr)
}

/// `exp(h)` by Taylor series; `h` is small (norm well below one) here.
fn expm_small(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.dim();
    let mut out = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for m in 1..=40 {
        term = (&term * h).scale(1.0 / m as f64);
        out = &out + &term;
        if term.max_abs() <= 1e-18 * out.max_abs() {
            break;
        }
    }
    out
}

/// One Euler–Maruyama step of the measurement SME followed by repair:
///
/// `ρ' = ρ − k[Xᵘ,[Xᵘ,ρ]]dt + √(2k)(Xᵘρ + ρXᵘ − 2⟨Xᵘ⟩ρ)dW`
pub fn sme_step(
    rho: &DensityMatrix,
    xu: &Observable,
    params: &SmeParams,
    dw: f64,
) -> Result<DensityMatrix> {
    check_dim(rho, xu)?;
    let r = rho.matrix();
    let mut next = r.clone();
    next.axpy(params.dt, &measurement_drift(r, xu.matrix(), params.k));
    next.axpy(dw, &measurement_diffusion(r, xu.matrix(), params.k));
    Ok(repair(&next, None)?.0)
}

/// Deterministic depolarizing sub-step `ρ' = ρ + r(I/N − ρ)dt`,
/// `r = βN/(2(N−1))`.
pub fn isotropic_noise_step(rho: &DensityMatrix, params: &SmeParams) -> DensityMatrix {
    if params.beta == 0.0 {
        return rho.clone();
    }
    let n = rho.dim();
    let s = params.depolarizing_rate(n) * params.dt;
    let mut m = rho.matrix().scale(1.0 - s);
    for i in 0..n {
        m[(i, i)] += C64::new(s / n as f64, 0.0);
    }
    DensityMatrix::from_matrix_unchecked(m)
}

/// The same sub-step acting on a decomposition: eigenvectors are unchanged
/// and every eigenvalue relaxes towards `1/N`.
pub(crate) fn isotropic_noise_spectral(
    d: &SpectralDecomposition,
    params: &SmeParams,
) -> SpectralDecomposition {
    let n = d.dim();
    let s = params.depolarizing_rate(n) * params.dt;
    d.with_shifted_values(
        d.eigenvalues()
            .iter()
            .map(|l| (1.0 - s) * l + s / n as f64)
            .collect(),
    )
}

/// `(1 − λ₀, (1 − Tr ρ²)/2)`
pub fn delta_of(rho: &DensityMatrix) -> (f64, f64) {
    let d = rho.spectral().expect("density matrix is Hermitian");
    (1.0 - d.eigenvalues()[0], (1.0 - rho.purity()) / 2.0)
}

/// Same quantities from a decomposition.
pub fn delta_of_spectrum(lambdas: &[f64]) -> (f64, f64) {
    let purity: f64 = lambdas.iter().map(|l| l * l).sum();
    (1.0 - lambdas[0], (1.0 - purity) / 2.0)
}

/// First-order drift and diffusion coefficients of `Δ`:
///
/// `drift = −8k Σ_{i≠0} λ_i |Xᵘ_{i0}|²`,
/// `diffusion = −√(8k)(Δ Xᵘ₀₀ − Σ_{i≠0} λ_i Xᵘ_{ii})`,
/// with matrix elements taken in ρ's sorted eigenbasis.
pub fn delta_drift_diffusion(rho: &DensityMatrix, xu: &Observable, k: f64) -> Result<(f64, f64)> {
    check_dim(rho, xu)?;
    let d = rho.spectral()?;
    delta_drift_diffusion_in(&d, xu, k)
}

pub fn delta_drift_diffusion_in(
    spec: &SpectralDecomposition,
    xu: &Observable,
    k: f64,
) -> Result<(f64, f64)> {
    let lam = spec.eigenvalues();
    let delta = 1.0 - lam[0];
    if delta > EXPANSION_LIMIT {
        return Err(Error::ContractViolation(format!(
            "Δ = {delta:.4} is outside the first-order regime (<= {EXPANSION_LIMIT})"
        )));
    }
    let xe = spec.to_eigenbasis(xu.matrix());
    let mut drift = 0.0;
    let mut weighted = 0.0;
    for i in 1..lam.len() {
        drift += lam[i] * xe[(i, 0)].norm_sqr();
        weighted += lam[i] * xe[(i, i)].re;
    }
    let drift = -8.0 * k * drift;
    let diffusion = -(8.0 * k).sqrt() * (delta * xe[(0, 0)].re - weighted);
    Ok((drift, diffusion))
}

fn check_dim(rho: &DensityMatrix, xu: &Observable) -> Result<()> {
    if rho.dim() != xu.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: xu.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{random_unitary, stream, ObservableSpectrum};
    use crate::qcore::rng::standard_normal;

    fn qutrit_x() -> Observable {
        let m = ComplexMatrix::from_real_rows(&[
            &[0.0, 1.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0],
        ])
        .unwrap();
        Observable::new(m, ObservableSpectrum::new(vec![1.0, 0.0, -1.0]).unwrap()).unwrap()
    }

    #[test]
    fn eigenprojector_is_fixed() {
        let x = Observable::diagonal(ObservableSpectrum::new(vec![1.0, 0.0, -1.0]).unwrap());
        let rho = DensityMatrix::diagonal(&[0.0, 1.0, 0.0]).unwrap();
        let p = SmeParams::new(1.0, 1e-4, 0.0).unwrap();
        let next = sme_step(&rho, &x, &p, 0.37).unwrap();
        assert_eq!(next.matrix(), rho.matrix());
    }

    #[test]
    fn trace_preserved() {
        let mut rng = stream(1, 0);
        let u = random_unitary(3, &mut rng);
        let x = crate::qcore::conjugate(&qutrit_x(), &u).unwrap();
        let rho = DensityMatrix::diagonal(&[0.95, 0.04, 0.01]).unwrap();
        let p = SmeParams::new(1.0, 1e-4, 0.0).unwrap();
        let next = sme_step(&rho, &x, &p, 0.01).unwrap();
        assert!((next.matrix().trace().re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn large_step_is_an_error() {
        let x = qutrit_x();
        let rho = DensityMatrix::diagonal(&[0.999, 0.001, 0.0]).unwrap();
        let p = SmeParams::new(1.0, 0.1, 0.0).unwrap();
        assert!(matches!(
            sme_step(&rho, &x, &p, -1.0),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn mean_step_matches_drift() {
        let mut rng = stream(11, 0);
        let u = random_unitary(3, &mut rng);
        let x = crate::qcore::conjugate(&qutrit_x(), &u).unwrap();
        let rho = DensityMatrix::diagonal(&[0.9, 0.07, 0.03]).unwrap();
        let p = SmeParams::new(1.0, 1e-4, 0.0).unwrap();
        let m = 100_000;
        let n = 3;
        let mut sum = vec![C64::new(0.0, 0.0); n * n];
        let mut sumsq = vec![(0.0, 0.0); n * n];
        for _ in 0..m {
            let dw = standard_normal(&mut rng) * p.dt.sqrt();
            let next = sme_step(&rho, &x, &p, dw).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let z = next.matrix()[(i, j)];
                    sum[i * n + j] += z;
                    let s = &mut sumsq[i * n + j];
                    s.0 += z.re * z.re;
                    s.1 += z.im * z.im;
                }
            }
        }
        // Oracle: ρ + drift·dt, independently computed here.
        let r = rho.matrix();
        let xm = x.matrix();
        let c = &(xm * r) - &(r * xm);
        let dc = &(xm * &c) - &(&c * xm);
        let mut expect = r.clone();
        expect.axpy(-p.k * p.dt, &dc);
        for i in 0..n {
            for j in 0..n {
                let mean = sum[i * n + j] / m as f64;
                let (sr, si) = sumsq[i * n + j];
                let se_re = ((sr / m as f64 - mean.re * mean.re).max(0.0) / m as f64).sqrt();
                let se_im = ((si / m as f64 - mean.im * mean.im).max(0.0) / m as f64).sqrt();
                let e = expect[(i, j)];
                assert!((mean.re - e.re).abs() <= 3.0 * se_re + 1e-15, "({i},{j}) re");
                assert!((mean.im - e.im).abs() <= 3.0 * se_im + 1e-15, "({i},{j}) im");
            }
        }
    }

    #[test]
    fn noise_step_cases() {
        let rho = DensityMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        let p0 = SmeParams::new(1.0, 1e-4, 0.0).unwrap();
        assert_eq!(isotropic_noise_step(&rho, &p0), rho);

        let mixed = DensityMatrix::maximally_mixed(3).unwrap();
        let p = SmeParams::new(1.0, 1e-4, 0.01).unwrap();
        let out = isotropic_noise_step(&mixed, &p);
        assert!(out.matrix().max_abs_diff(mixed.matrix()) < 1e-16);

        let out = isotropic_noise_step(&rho, &p);
        let (d, _) = delta_of(&out);
        assert!((d - 5e-7).abs() <= 1e-12);
    }

    #[test]
    fn delta_examples() {
        let (e, l) = delta_of(&DensityMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap());
        assert!(e.abs() < 1e-15 && l.abs() < 1e-15);
        let (e, l) = delta_of(&DensityMatrix::maximally_mixed(3).unwrap());
        assert!((e - 2.0 / 3.0).abs() < 1e-12 && (l - 1.0 / 3.0).abs() < 1e-12);
        let (e, l) = delta_of(&DensityMatrix::diagonal(&[0.99, 0.006, 0.004]).unwrap());
        assert!((e - 0.01).abs() < 1e-12);
        let expect = (1.0 - 0.99f64.powi(2) - 0.006f64.powi(2) - 0.004f64.powi(2)) / 2.0;
        assert!((l - expect).abs() < 1e-15);
        assert!((l - 0.00995).abs() < 1e-4);
    }

    #[test]
    fn drift_diffusion_examples() {
        let x = qutrit_x();
        let pure = DensityMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(delta_drift_diffusion(&pure, &x, 1.0).unwrap().0, 0.0);

        let rho = DensityMatrix::diagonal(&[0.97, 0.02, 0.01]).unwrap();
        let (drift, diff) = delta_drift_diffusion(&rho, &x, 1.0).unwrap();
        assert!((drift + 8.0 * 0.02).abs() < 1e-14);
        assert!(diff.abs() < 1e-14);
    }

    #[test]
    fn drift_matches_mean_purity_change() {
        // Δ_lin changes by drift·dt on average to first order in Δ.
        let mut rng = stream(21, 0);
        let u = random_unitary(3, &mut rng);
        let v = random_unitary(3, &mut rng);
        let x = crate::qcore::conjugate(&qutrit_x(), &u).unwrap();
        let diag = ComplexMatrix::from_real_diagonal(&[0.995, 0.003, 0.002]);
        let rho = DensityMatrix::new((&(&v * &diag) * &v.adjoint()).hermitian_part()).unwrap();
        let p = SmeParams::new(1.0, 1e-5, 0.0).unwrap();
        let (drift, _) = delta_drift_diffusion(&rho, &x, p.k).unwrap();
        let (_, l0) = delta_of(&rho);
        let m = 100_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..m {
            let dw = standard_normal(&mut rng) * p.dt.sqrt();
            let (_, l1) = delta_of(&sme_step(&rho, &x, &p, dw).unwrap());
            let rate = (l1 - l0) / p.dt;
            s += rate;
            s2 += rate * rate;
        }
        let mean = s / m as f64;
        let se = ((s2 / m as f64 - mean * mean) / m as f64).sqrt();
        assert!((mean - drift).abs() <= 3.0 * se, "mean {mean} drift {drift} se {se}");
    }

    #[test]
    fn kraus_commuting_case_is_bayes_rule() {
        let (k, dt, dw) = (1.0, 1e-4, 0.013);
        let l = [0.7, 0.2, 0.1];
        let xs = [1.0, 0.0, -1.0];
        let rho = ComplexMatrix::from_real_diagonal(&l);
        let x = ComplexMatrix::from_real_diagonal(&xs);
        let out = kraus_measurement(&rho, &x, k, dt, dw);
        let s = (2.0 * k).sqrt();
        let mean: f64 = l.iter().zip(&xs).map(|(a, b)| a * b).sum();
        let dy = dw + 2.0 * s * mean * dt;
        let w: Vec<f64> = l
            .iter()
            .zip(&xs)
            .map(|(a, x)| a * (2.0 * (s * x * dy - 2.0 * k * x * x * dt)).exp())
            .collect();
        let tot: f64 = w.iter().sum();
        for i in 0..3 {
            assert!((out[(i, i)].re - w[i] / tot).abs() < 1e-15);
        }
    }

    #[test]
    fn kraus_keeps_pure_states_pure() {
        let mut rng = stream(5, 0);
        let u = random_unitary(3, &mut rng);
        let x = &(&u * qutrit_x().matrix()) * &u.adjoint();
        let rho = ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0]);
        let mut m = rho;
        for _ in 0..100 {
            let dw = 1e-2 * standard_normal(&mut rng);
            m = kraus_measurement(&m, &x.hermitian_part(), 1.0, 1e-4, dw);
        }
        let d = DensityMatrix::new(m.hermitian_part()).unwrap();
        assert!((d.purity() - 1.0).abs() < 1e-13);
    }
}
