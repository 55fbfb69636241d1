//! Numerical maximization of the HJB bracket
//! `ζ|X₁₀|² + |X₂₀|² + η|X₂₁|²` over `X = U·diag(q, 0, −q)·U†`.

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simplex::{minimize, SimplexOptions};
use crate::error::{Error, Result};
use crate::qcore::stream;

pub const MIN_RESTARTS: usize = 8;
pub const DEFAULT_RESTARTS: usize = 32;
/// Candidates within this of the best are tied; the lowest index wins.
pub const TIE_TOL: f64 = 1e-12;
pub const PARAMS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxDescription {
    pub x10: f64,
    pub x20: f64,
    pub x21: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjbPoint {
    pub zeta: f64,
    pub eta: f64,
    pub q: f64,
    pub max_value: f64,
    pub argmax_description: ArgmaxDescription,
    /// Best value over the random restarts alone, without the LOP candidate.
    pub search_max: f64,
    /// Index of the winning candidate; 0 is the LOP observable itself.
    pub winner: usize,
}

type M3 = [[C64; 3]; 3];

fn mul(a: &M3, b: &M3) -> M3 {
    let mut c = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for (m, bm) in b.iter().enumerate() {
                c[i][j] += a[i][m] * bm[j];
            }
        }
    }
    c
}

fn rotation(a: usize, b: usize, theta: f64, alpha: f64) -> M3 {
    let mut r = [[C64::new(0.0, 0.0); 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    let (s, c) = theta.sin_cos();
    r[a][a] = C64::new(c, 0.0);
    r[b][b] = C64::new(c, 0.0);
    r[a][b] = -C64::from_polar(s, -alpha);
    r[b][a] = C64::from_polar(s, alpha);
    r
}

/// `R₀₁(θ₁,α₁)·diag(1, e^{iφ₁}, e^{iφ₂})·R₀₂(θ₂,α₂)·R₁₂(θ₃,α₃)` from
/// `p = (θ₁, α₁, φ₁, φ₂, θ₂, α₂, θ₃, α₃)`.
fn unitary(p: &[f64]) -> M3 {
    let mut d = [[C64::new(0.0, 0.0); 3]; 3];
    d[0][0] = C64::new(1.0, 0.0);
    d[1][1] = C64::from_polar(1.0, p[2]);
    d[2][2] = C64::from_polar(1.0, p[3]);
    let u = mul(&rotation(0, 1, p[0], p[1]), &d);
    let u = mul(&u, &rotation(0, 2, p[4], p[5]));
    mul(&u, &rotation(1, 2, p[6], p[7]))
}

/// Off-diagonal moduli `(|X₁₀|, |X₂₀|, |X₂₁|)` of `U·diag(q,0,−q)·U†`.
fn off_diagonals(u: &M3, q: f64) -> ArgmaxDescription {
    let x = |i: usize, j: usize| (u[i][0] * u[j][0].conj() - u[i][2] * u[j][2].conj()) * q;
    ArgmaxDescription {
        x10: x(1, 0).norm(),
        x20: x(2, 0).norm(),
        x21: x(2, 1).norm(),
    }
}

fn bracket(d: &ArgmaxDescription, zeta: f64, eta: f64) -> f64 {
    zeta * d.x10 * d.x10 + d.x20 * d.x20 + eta * d.x21 * d.x21
}

/// Bracket value for an arbitrary 3×3 unitary given as rows.
pub fn hjb_bracket(u: &[[C64; 3]; 3], zeta: f64, eta: f64, q: f64) -> f64 {
    bracket(&off_diagonals(u, q), zeta, eta)
}

fn lop_candidate() -> M3 {
    // Columns (|0⟩+|1⟩)/√2, |2⟩, (|0⟩−|1⟩)/√2: X = q(|1⟩⟨0| + |0⟩⟨1|).
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    [
        [C64::new(h, 0.0), z, C64::new(h, 0.0)],
        [C64::new(h, 0.0), z, C64::new(-h, 0.0)],
        [z, C64::new(1.0, 0.0), z],
    ]
}

fn search(zeta: f64, eta: f64, q: f64, seed: u64, index: u64) -> (f64, ArgmaxDescription) {
    let mut rng = stream(seed, index);
    let x0: Vec<f64> = (0..PARAMS)
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect();
    let objective = |p: &[f64]| -bracket(&off_diagonals(&unitary(p), q), zeta, eta);
    let opts = SimplexOptions::default();
    let mut r = minimize(objective, &x0, &opts);
    // One restart from the converged point shakes off a collapsed simplex.
    let polish = minimize(
        objective,
        &r.x,
        &SimplexOptions {
            initial_step: 0.05,
            ..opts
        },
    );
    if polish.f <= r.f {
        r = polish;
    }
    (-r.f, off_diagonals(&unitary(&r.x), q))
}

/// Seed of the per-restart streams used by [`hjb_rhs_maximize`].
pub const HJB_SEED: u64 = 0x48_4a42;

/// Maximizes the bracket by multistart simplex search.
pub fn hjb_rhs_maximize(zeta: f64, eta: f64, q: f64, restarts: usize) -> Result<HjbPoint> {
    if restarts < MIN_RESTARTS {
        return Err(Error::ContractViolation(format!(
            "hjb search needs >= {MIN_RESTARTS} restarts, got {restarts}"
        )));
    }
    if !(q > 0.0) || !(zeta >= 0.0) || !eta.is_finite() {
        return Err(Error::ContractViolation(format!(
            "need q > 0, zeta >= 0, finite eta; got q = {q}, zeta = {zeta}, eta = {eta}"
        )));
    }
    let lop = off_diagonals(&lop_candidate(), q);
    let mut candidates = vec![(bracket(&lop, zeta, eta), lop)];
    candidates.extend(
        (1..=restarts as u64)
            .into_par_iter()
            .map(|i| search(zeta, eta, q, HJB_SEED, i))
            .collect::<Vec<_>>(),
    );
    let best = candidates
        .iter()
        .map(|c| c.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let winner = candidates
        .iter()
        .position(|c| c.0 >= best - TIE_TOL)
        .unwrap_or(0);
    let search_max = candidates[1..]
        .iter()
        .map(|c| c.0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(HjbPoint {
        zeta,
        eta,
        q,
        max_value: candidates[winner].0,
        argmax_description: candidates[winner].1,
        search_max,
        winner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random_unitary;

    #[test]
    fn parameterization_is_unitary() {
        let u = unitary(&[0.3, 1.1, -0.4, 2.0, 0.7, -1.3, 1.9, 0.2]);
        for i in 0..3 {
            for j in 0..3 {
                let dot: C64 = (0..3).map(|m| u[i][m] * u[j][m].conj()).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn lop_candidate_value() {
        let d = off_diagonals(&lop_candidate(), 0.7);
        assert!((d.x10 - 0.7).abs() < 1e-15 && d.x20 < 1e-15 && d.x21 < 1e-15);
    }

    #[test]
    fn too_few_restarts() {
        assert!(hjb_rhs_maximize(1.0, 0.0, 1.0, 7).is_err());
    }

    #[test]
    fn unit_zeta_zero_eta() {
        let p = hjb_rhs_maximize(1.0, 0.0, 1.0, DEFAULT_RESTARTS).unwrap();
        assert!((p.max_value - 1.0).abs() < 1e-6);
        assert!((p.argmax_description.x10 - 1.0).abs() < 1e-4);
        assert!(p.argmax_description.x20 < 1e-4 && p.argmax_description.x21 < 1e-4);
        assert!(p.search_max <= 1.0 + 1e-9 && p.search_max >= 1.0 - 1e-6);
    }

    #[test]
    fn search_alone_reaches_lop_value() {
        let q = 1.3;
        let p = hjb_rhs_maximize(1.5, 0.5, q, DEFAULT_RESTARTS).unwrap();
        assert!((p.search_max - 1.5 * q * q).abs() < 1e-6, "{p:?}");
        let p = hjb_rhs_maximize(1.0, 1.0, q, MIN_RESTARTS).unwrap();
        assert!(p.max_value >= q * q - 1e-9);
    }

    #[test]
    fn search_beats_lop_outside_region() {
        // η > 1 rewards |X₂₁| as well: the LOP candidate is no longer best.
        let p = hjb_rhs_maximize(1.0, 3.0, 1.0, DEFAULT_RESTARTS).unwrap();
        assert!(p.search_max > 1.0 + 0.1 && p.winner > 0);
    }

    #[test]
    fn random_unitaries_never_exceed_optimizer() {
        let mut rng = stream(99, 0);
        let q = 1.0;
        let cases = [(1.0, 0.0), (1.5, 0.5), (3.0, -1.0)];
        let found: Vec<f64> = cases
            .iter()
            .map(|&(z, e)| hjb_rhs_maximize(z, e, q, DEFAULT_RESTARTS).unwrap().max_value)
            .collect();
        let mut best = [f64::NEG_INFINITY; 3];
        for _ in 0..1_000_000 {
            let m = random_unitary(3, &mut rng);
            let mut u = [[C64::new(0.0, 0.0); 3]; 3];
            for (i, row) in u.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = m[(i, j)];
                }
            }
            let d = off_diagonals(&u, q);
            for (b, &(z, e)) in best.iter_mut().zip(&cases) {
                *b = b.max(bracket(&d, z, e));
            }
        }
        for ((b, f), &(z, _)) in best.iter().zip(&found).zip(&cases) {
            assert!(*b <= f + 1e-12, "sampled {b} beats optimizer {f}");
            // Sampling should get reasonably close to the optimum.
            assert!(*b > 0.9 * z * q * q, "sampled max {b} for zeta {z}");
        }
    }
}
