//! Hermitian eigendecomposition by cyclic Jacobi rotations.
//!
//! Output ordering is deterministic: eigenvalues descend, each eigenvector
//! has its largest-magnitude component real and positive, and eigenvectors of
//! numerically equal eigenvalues are ordered lexicographically (descending).
//! Inside a simulation [`EigenTracker`] replaces the lexicographic tie-break
//! with continuity against the previous step.

use std::cmp::Ordering;

use num_complex::Complex64 as C64;

use super::matrix::{inner, ComplexMatrix};
use crate::error::{Error, Result};

/// Maximum `||M - M†||_max` accepted by [`eigh`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Off-diagonal Frobenius norm (relative to `||M||_F`) at which sweeping stops.
pub const OFF_DIAGONAL_TOL: f64 = 1e-14;
pub const MAX_SWEEPS: usize = 100;
/// Eigenvalues closer than this (relative to the spectral radius) are
/// treated as degenerate when ordering.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Sorted eigendecomposition: `λ_0 >= λ_1 >= ...` with orthonormal
/// eigenvectors, the i-th paired with `λ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    values: Vec<f64>,
    vectors: Vec<Vec<C64>>,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from parts, checking ordering and
    /// orthonormality (Gram matrix within 1e-10 of identity).
    pub fn from_parts(values: Vec<f64>, vectors: Vec<Vec<C64>>) -> Result<Self> {
        let n = values.len();
        if vectors.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: vectors.len(),
            });
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::ContractViolation(
                "eigenvalues must be sorted in decreasing order".into(),
            ));
        }
        let s = Self { values, vectors };
        if s.gram_error() > 1e-10 {
            return Err(Error::ContractViolation(
                "eigenvectors are not orthonormal".into(),
            ));
        }
        Ok(s)
    }

    /// Decomposition of a matrix that is diagonal in the standard basis.
    /// `values` must already be sorted in decreasing order.
    pub fn standard_basis(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let vectors = (0..n)
            .map(|i| {
                let mut v = vec![C64::new(0.0, 0.0); n];
                v[i] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        Self::from_parts(values.to_vec(), vectors)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, i: usize) -> &[C64] {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    /// Matrix whose columns are the eigenvectors.
    pub fn unitary(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.vectors).expect("square by construction")
    }

    /// `Σ λ_i v_i v_i†`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut m = ComplexMatrix::zeros(n);
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += v[i] * v[j].conj() * *lam;
                }
            }
        }
        m
    }

    /// `||V†V - I||_max`
    pub fn gram_error(&self) -> f64 {
        let n = self.dim();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let g = inner(&self.vectors[i], &self.vectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((g - target).norm());
            }
        }
        err
    }

    /// Matrix elements `<v_i|M|v_j>` in this eigenbasis.
    pub fn to_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let u = self.unitary();
        &(&u.adjoint() * m) * &u
    }

    /// Matrix given in this eigenbasis, expressed in the lab frame.
    pub fn from_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let u = self.unitary();
        &(&u * m) * &u.adjoint()
    }

    pub(crate) fn with_shifted_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            vectors: self.vectors.clone(),
        }
    }
}

/// Eigendecomposition of a Hermitian matrix.
pub fn eigh(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let herr = m.hermiticity_error();
    if herr > HERMITIAN_TOL {
        return Err(Error::ContractViolation(format!(
            "eigh requires a Hermitian matrix (||M - M†||_max = {herr:.3e})"
        )));
    }
    let (values, vectors) = jacobi(m);
    Ok(order_canonically(values, vectors))
}

fn jacobi(m: &ComplexMatrix) -> (Vec<f64>, Vec<Vec<C64>>) {
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        let off = (2.0 * off).sqrt();
        if off <= OFF_DIAGONAL_TOL * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let values = (0..n).map(|i| a[(i, i)].re).collect();
    let vectors = (0..n).map(|j| v.column(j)).collect();
    (values, vectors)
}

/// Annihilates `a[p][q]` with a unitary plane rotation `J = D·G`, where `D`
/// removes the phase of `a[p][q]` and `G` is a real Givens rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let n = a.dim();
    let phase = apq / r;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    // A <- A J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // A <- J† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    // V <- V J
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Rotates `v` so its largest-magnitude component (first one, within 1e-12)
/// is real and positive.
fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max - 1e-12)
        .expect("max is attained");
    let ph = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= ph;
    }
}

fn lex_desc(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Groups of consecutive indices (in an already sorted value list) whose
/// values are equal within [`DEGENERACY_TOL`].
fn degenerate_clusters(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    let radius = values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let tol = DEGENERACY_TOL * radius.max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i - 1] - values[i] > tol {
            if i - start > 1 {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

fn order_canonically(values: Vec<f64>, mut vectors: Vec<Vec<C64>>) -> SpectralDecomposition {
    for v in vectors.iter_mut() {
        fix_phase(v);
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let mut values: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let mut vectors: Vec<Vec<C64>> = idx.iter().map(|&i| vectors[i].clone()).collect();
    for range in degenerate_clusters(&values) {
        vectors[range.clone()].sort_by(|a, b| lex_desc(a, b));
        // Degenerate values are interchangeable; keep the list sorted.
        let slice = &mut values[range];
        slice.sort_by(|a, b| b.total_cmp(a));
    }
    SpectralDecomposition { values, vectors }
}

/// Tracks eigenvectors across simulation steps.
///
/// Within degenerate clusters the new eigenvectors are matched to the
/// previous step's by maximal overlap, and every eigenvector's phase is
/// aligned so that its overlap with its predecessor is real and positive.
#[derive(Debug, Clone, Default)]
pub struct EigenTracker {
    previous: Option<Vec<Vec<C64>>>,
}

impl EigenTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }

    /// Decomposes `m` and records the result as the new reference.
    pub fn decompose(&mut self, m: &ComplexMatrix) -> Result<SpectralDecomposition> {
        let d = self.peek(m)?;
        self.previous = Some(d.vectors.clone());
        Ok(d)
    }

    /// Decomposes `m` relative to the stored reference without updating it.
    pub fn peek(&self, m: &ComplexMatrix) -> Result<SpectralDecomposition> {
        let d = eigh(m)?;
        Ok(match &self.previous {
            Some(prev) if prev.len() == d.dim() => align(d, prev),
            _ => d,
        })
    }

    /// Replaces the stored reference with an externally computed one.
    pub fn set_reference(&mut self, d: &SpectralDecomposition) {
        self.previous = Some(d.vectors.clone());
    }
}

fn align(mut d: SpectralDecomposition, prev: &[Vec<C64>]) -> SpectralDecomposition {
    for range in degenerate_clusters(&d.values) {
        let members: Vec<usize> = range.clone().collect();
        let mut free: Vec<usize> = members.clone();
        let mut assigned = vec![usize::MAX; members.len()];
        // Greedy maximum-overlap assignment, best pairs first.
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (slot, &target) in members.iter().enumerate() {
            for &cand in &members {
                pairs.push((inner(&prev[target], &d.vectors[cand]).norm(), slot, cand));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (_, slot, cand) in pairs {
            if assigned[slot] == usize::MAX && free.contains(&cand) {
                assigned[slot] = cand;
                free.retain(|&c| c != cand);
            }
        }
        let reordered: Vec<Vec<C64>> = assigned.iter().map(|&c| d.vectors[c].clone()).collect();
        for (slot, v) in members.iter().zip(reordered) {
            d.vectors[*slot] = v;
        }
    }
    for (v, p) in d.vectors.iter_mut().zip(prev) {
        let z = inner(p, v);
        let r = z.norm();
        if r > 1e-3 {
            let ph = z.conj() / r;
            for c in v.iter_mut() {
                *c *= ph;
            }
        }
    }
    d
}
