//! Brute-force checks of the optimal-observable theorem and HJB optimality of the protocol.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{hjb_rhs_maximize, BoundReport, HjbPoint};
use crate::error::{Error, Result};
use crate::lop::{f_objective, lop_unitary, VPolicy};
use crate::qcore::{random_unitary, stream, Observable, ObservableSpectrum, SpectralDecomposition};

pub const MIN_TRIALS: usize = 100;
pub const THEOREM1_TOL: f64 = 1e-12;
/// Largest random Δ drawn for the near-pure states.
pub const MAX_TRIAL_DELTA: f64 = 0.1;

fn columns(u: &crate::qcore::ComplexMatrix) -> Vec<Vec<num_complex::Complex64>> {
    (0..u.dim()).map(|j| u.column(j)).collect()
}

/// Samples random near-pure states, observable spectra and unitaries.
///
/// Returns three reports: the largest `F(U) − λ₁δx²/4` over random `U`, the
/// largest `|F(U_opt) − λ₁δx²/4|`, and the largest `|F|` on pure states.
pub fn verify_theorem1(n: usize, trials: usize, seed: u64) -> Result<Vec<BoundReport>> {
    if trials < MIN_TRIALS {
        return Err(Error::ContractViolation(format!(
            "need >= {MIN_TRIALS} trials, got {trials}"
        )));
    }
    if n < 2 {
        return Err(Error::ContractViolation("need N >= 2".into()));
    }
    let (mut violation, mut gap, mut pure) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for t in 0..trials as u64 {
        let mut rng = stream(seed, t);
        let delta = MAX_TRIAL_DELTA * (1.0 - rng.random::<f64>());
        let w: Vec<f64> = (1..n).map(|_| rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let mut small: Vec<f64> = w.iter().map(|x| delta * x / total).collect();
        small.sort_by(|a, b| b.total_cmp(a));
        let mut lambdas = vec![1.0 - delta];
        lambdas.extend(&small);

        let basis = columns(&random_unitary(n, &mut rng));
        let spec = SpectralDecomposition::from_parts(lambdas.clone(), basis.clone())?;
        let xs: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let spectrum = ObservableSpectrum::new(xs)?;
        let x = Observable::diagonal(spectrum.clone());
        let dx = spectrum.delta_x();
        let bound = lambdas[1] * dx * dx / 4.0;

        let u = random_unitary(n, &mut rng);
        violation = violation.max(f_objective(&u, &x, &spec)? - bound);
        let u_opt = lop_unitary(&spec, &VPolicy::Identity)?;
        gap = gap.max((f_objective(&u_opt, &x, &spec)? - bound).abs());

        let mut e = vec![0.0; n];
        e[0] = 1.0;
        let pure_spec = SpectralDecomposition::from_parts(e, basis)?;
        pure = pure.max(f_objective(&u, &x, &pure_spec)?.abs());
    }
    Ok(vec![
        BoundReport::upper("theorem1_violation", 0.0, violation, THEOREM1_TOL),
        BoundReport::equality("theorem1_saturation", 0.0, gap, THEOREM1_TOL),
        BoundReport::equality("theorem1_pure", 0.0, pure, 0.0),
    ])
}

pub const HJB_VALUE_TOL: f64 = 1e-6;
pub const HJB_ARGMAX_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjbScan {
    pub points: Vec<HjbPoint>,
    /// Grid nodes with `ζ >= 1 >= η`.
    pub region_nodes: usize,
    /// Region nodes where the LOP value and argmax are attained.
    pub lop_optimal_nodes: usize,
    pub reports: Vec<BoundReport>,
}

/// Maximizes the HJB bracket at every `(ζ, η)` grid node.
pub fn verify_hjb(grid_zeta: &[f64], grid_eta: &[f64], q: f64, restarts: usize) -> Result<HjbScan> {
    if grid_zeta.is_empty() || grid_eta.is_empty() {
        return Err(Error::ContractViolation("grids must be nonempty".into()));
    }
    let nodes: Vec<(f64, f64)> = grid_zeta
        .iter()
        .flat_map(|z| grid_eta.iter().map(move |e| (*z, *e)))
        .collect();
    let points: Vec<HjbPoint> = nodes
        .par_iter()
        .map(|&(z, e)| hjb_rhs_maximize(z, e, q, restarts))
        .collect::<Result<_>>()?;

    let (mut value_dev, mut search_dev, mut arg_dev) = (0.0f64, 0.0f64, 0.0f64);
    let (mut region, mut optimal) = (0, 0);
    for p in points.iter().filter(|p| p.zeta >= 1.0 && p.eta <= 1.0) {
        let lop = p.zeta * q * q;
        let dv = (p.max_value - lop).abs();
        let da = (p.argmax_description.x10 - q).abs();
        value_dev = value_dev.max(dv);
        search_dev = search_dev.max((p.search_max - lop).abs());
        arg_dev = arg_dev.max(da);
        region += 1;
        if dv <= HJB_VALUE_TOL && da <= HJB_ARGMAX_TOL {
            optimal += 1;
        }
    }
    let mut reports = Vec::new();
    if region > 0 {
        reports.push(BoundReport::equality("hjb_max_value", 0.0, value_dev, HJB_VALUE_TOL));
        reports.push(BoundReport::equality("hjb_search_max", 0.0, search_dev, HJB_VALUE_TOL));
        reports.push(BoundReport::equality("hjb_argmax_x10", 0.0, arg_dev, HJB_ARGMAX_TOL));
    }
    Ok(HjbScan {
        points,
        region_nodes: region,
        lop_optimal_nodes: optimal,
        reports,
    })
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
