//! Closed-form predictions evaluated against a finished run.

use super::config::{NoiseKind, ProtocolKind, SimulationConfig};
use super::ensemble::{uses_switching, EnsembleSummary};
use crate::analysis::{
    decay_bound, lop_steady_state, n4_paper_rate, qutrit_lop_cost, qutrit_switch_time,
    universal_steady_state_bound, BoundReport,
};
use crate::error::Result;
use crate::lop::{averaged_fixed_point, ReducedProtocol};

/// Number of horizons in the qutrit cost overlay.
pub const COST_HORIZONS: usize = 10;
const SIGMAS: f64 = 3.0;

/// Linear interpolation of `ys(xs)` at `x`; `None` outside the samples.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let j = xs.partition_point(|t| *t < x);
    if j == xs.len() {
        return None;
    }
    if xs[j] == x || j == 0 {
        return (xs[j] == x).then_some(ys[j]);
    }
    let w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    Some(ys[j - 1] + w * (ys[j] - ys[j - 1]))
}

fn decay_report(cfg: &SimulationConfig, s: &EnsembleSummary, dx: f64) -> Result<BoundReport> {
    let delta0 = s.mean_delta[0];
    let mut worst: Option<(f64, BoundReport)> = None;
    for i in 0..s.times.len() {
        let bound = decay_bound(delta0, cfg.k, dx, cfg.n, s.times[i])?;
        let r = BoundReport::upper(
            "decay_bound",
            bound,
            s.mean_delta[i],
            SIGMAS * s.stderr_delta[i],
        );
        let excess = r.measured - r.predicted - r.tolerance;
        if worst.as_ref().is_none_or(|(w, _)| excess > *w) {
            worst = Some((excess, r));
        }
    }
    Ok(worst.expect("nonempty series").1)
}

fn n4_reports(cfg: &SimulationConfig, s: &EnsembleSummary) -> Result<Vec<BoundReport>> {
    let Ok(ReducedProtocol::FourLevel { x1, c }) =
        ReducedProtocol::from_spectrum(&cfg.observable_spectrum()?, &cfg.v_policy.policy())
    else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let last = s.mean_lambdas.last().expect("nonempty series");
    let ratio = 0.5 * (last[1] + last[2]) / last[3];
    let gamma = s.fitted_gamma_swap;
    if x1 > c {
        let (g, r) = n4_paper_rate(cfg.k, x1, c)?;
        if let Some(m) = gamma {
            out.push(BoundReport::info("n4_gamma_printed", g, m));
        }
        if let Some(r) = r {
            out.push(BoundReport::info("n4_ratio_printed", r, ratio));
        }
    }
    if let Some((g, r)) = averaged_fixed_point(cfg.k, x1, c, cfg.convention) {
        if let Some(m) = gamma {
            out.push(BoundReport::info("n4_gamma_averaged", g, m));
        }
        out.push(BoundReport::info("n4_ratio_averaged", r, ratio));
    }
    Ok(out)
}

fn qutrit_cost_reports(cfg: &SimulationConfig, s: &EnsembleSummary) -> Result<Vec<BoundReport>> {
    let Ok(ReducedProtocol::Qutrit { q }) =
        ReducedProtocol::from_spectrum(&cfg.observable_spectrum()?, &cfg.v_policy.policy())
    else {
        return Ok(Vec::new());
    };
    let small = cfg.small_eigenvalues()?;
    let (l1, l2) = (small[0].max(small[1]), small[0].min(small[1]));
    if !(l2 > 0.0 && l1 > l2 && l1 + l2 <= 0.1) {
        return Ok(Vec::new());
    }
    let tau = qutrit_switch_time(l1, l2, cfg.k, q);
    let mut out = Vec::new();
    for j in 1..=COST_HORIZONS {
        let t = tau * 2.0 * j as f64 / COST_HORIZONS as f64;
        let (Some(m), Some(se)) = (
            interpolate(&s.times, &s.mean_delta, t),
            interpolate(&s.times, &s.stderr_delta, t),
        ) else {
            continue;
        };
        let predicted = qutrit_lop_cost(l1, l2, t, cfg.k, q)?;
        out.push(BoundReport::equality(
            format!("qutrit_cost[T={t:.6}]"),
            predicted,
            m,
            SIGMAS * se,
        ));
    }
    Ok(out)
}

/// Every closed form that applies to `cfg`, checked against `summary`.
pub fn report_bounds(cfg: &SimulationConfig, summary: &EnsembleSummary) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    if summary.times.is_empty() {
        return Ok(out);
    }
    let dx = cfg.delta_x()?;
    let beta = cfg.effective_beta();
    let lop = cfg.protocol == ProtocolKind::Lop;
    if lop && beta == 0.0 {
        out.push(decay_report(cfg, summary, dx)?);
    }
    if cfg.noise == NoiseKind::Isotropic {
        let ss = &summary.steady_state;
        if lop && beta > 0.0 {
            let p = lop_steady_state(beta, cfg.k, dx, cfg.n)?;
            out.push(BoundReport::equality("lop_steady_state", p, ss.mean, 0.1 * p));
        }
        out.push(BoundReport::lower(
            "universal_steady_state_bound",
            universal_steady_state_bound(beta, cfg.k, dx)?,
            ss.mean,
            SIGMAS * ss.stderr,
        ));
    }
    if uses_switching(cfg) && beta == 0.0 {
        match cfg.n {
            3 => out.extend(qutrit_cost_reports(cfg, summary)?),
            4 => out.extend(n4_reports(cfg, summary)?),
            _ => {}
        }
    }
    if let Some(e) = summary.delta_consistency_excess {
        out.push(BoundReport::upper("delta_consistency", 0.0, e, 0.0));
    }
    Ok(out)
}
