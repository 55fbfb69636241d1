//! Seeded trajectory ensembles and their aggregate statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Engine, ProtocolKind, SimulationConfig, VPolicyKind};
use super::report::report_bounds;
use crate::analysis::{fit_exponential_rate, BoundReport};
use crate::error::{Error, Result};
use crate::lop::{
    build_lop_observable, default_swap_interval, integrate_reduced, LopController,
    ProtocolController, ProtocolState, ReducedOptions, ReducedProtocol, ReducedState,
    SwitchingProtocol, DEFAULT_EPSILON_EQUAL,
};
use crate::qcore::{stream, DensityMatrix, Observable};
use crate::sme::{run_trajectory, step_count, TrajectoryOptions, TrajectoryRecord};

/// Largest Δ at which the two error-probability definitions are compared.
pub const CONSISTENCY_MAX_DELTA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SimulationConfig,
    pub seed: u64,
    pub version: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub mean_delta: Vec<f64>,
    pub stderr_delta: Vec<f64>,
    /// `P = 1 − ⟨Δ⟩`
    pub target_probability: Vec<f64>,
    /// Ensemble means of the sorted eigenvalues `λ₀ ≥ λ₁ ≥ …`.
    pub mean_lambdas: Vec<Vec<f64>>,
    /// Spread of each sorted eigenvalue across trajectories (sample
    /// standard deviation; zero for the reduced engine).
    pub std_lambdas: Vec<Vec<f64>>,
    /// Control phase of trajectory 0 at each sample.
    pub phases: Vec<String>,
    /// Rate of the leading small eigenvalue over the reduce phase of a
    /// switching protocol, otherwise the rate of ⟨Δ⟩ over the whole run.
    pub fitted_gamma: Option<f64>,
    /// Rate of ⟨Δ⟩ over the swap phase of a switching protocol.
    pub fitted_gamma_swap: Option<f64>,
    /// Time average of Δ over the final half of the run.
    pub steady_state: SteadyState,
    /// Largest `|Δ_lin − Δ_eig| − 5Δ_eig²` over samples with Δ ≤ 0.05.
    pub delta_consistency_excess: Option<f64>,
    pub bound_reports: Vec<BoundReport>,
    pub manifest: Manifest,
}

impl EnsembleSummary {
    /// Reports that carry a verdict and failed.
    pub fn failures(&self) -> impl Iterator<Item = &BoundReport> {
        self.bound_reports
            .iter()
            .filter(|r| !r.informational && !r.satisfied)
    }
}

fn protocol_state(cfg: &SimulationConfig) -> Result<ProtocolState> {
    let dx = cfg.delta_x()?;
    ProtocolState::new(
        cfg.epsilon_equal.unwrap_or(DEFAULT_EPSILON_EQUAL),
        cfg.swap_interval
            .unwrap_or_else(|| default_swap_interval(cfg.k, dx)),
    )
}

/// Whether `cfg` runs one of the equalize-then-swap protocols.
pub fn uses_switching(cfg: &SimulationConfig) -> bool {
    cfg.protocol == ProtocolKind::Lop
        && cfg.switching
        && (cfg.n == 3 || (cfg.n == 4 && cfg.v_policy == VPolicyKind::UnbiasedPair))
}

/// Controller for one trajectory starting from `rho0`.
pub fn build_controller(cfg: &SimulationConfig, rho0: &DensityMatrix) -> Result<ProtocolController> {
    let spectrum = cfg.observable_spectrum()?;
    let v = cfg.v_policy.policy();
    Ok(match cfg.protocol {
        ProtocolKind::Lop if uses_switching(cfg) => {
            let st = protocol_state(cfg)?;
            ProtocolController::Switching(if cfg.n == 3 {
                SwitchingProtocol::qutrit(&spectrum, st)?
            } else {
                SwitchingProtocol::four_level(&spectrum, st)?
            })
        }
        ProtocolKind::Lop => ProtocolController::Lop(LopController::new(&spectrum, &v)?),
        ProtocolKind::StaticObservable => {
            ProtocolController::Static(build_lop_observable(&rho0.spectral()?, &spectrum, &v)?)
        }
        ProtocolKind::None => ProtocolController::Static(Observable::diagonal(spectrum)),
    })
}

fn record_every(cfg: &SimulationConfig) -> usize {
    (step_count(cfg.horizon, cfg.dt) / cfg.samples).max(1)
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

struct Series {
    times: Vec<f64>,
    mean_delta: Vec<f64>,
    stderr_delta: Vec<f64>,
    mean_lambdas: Vec<Vec<f64>>,
    std_lambdas: Vec<Vec<f64>>,
    phases: Vec<String>,
    steady_state: SteadyState,
    delta_consistency_excess: Option<f64>,
}

fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn aggregate(records: &[TrajectoryRecord]) -> Result<Series> {
    let first = records
        .first()
        .ok_or_else(|| Error::ContractViolation("empty ensemble".into()))?;
    let samples = first.len();
    if records.iter().any(|r| r.len() != samples) {
        return Err(Error::ContractViolation("trajectories sampled unevenly".into()));
    }
    let n = first.eigenvalues[0].len();
    let count = records.len() as f64;
    let sorted: Vec<Vec<Vec<f64>>> = records
        .iter()
        .map(|r| r.eigenvalues.iter().map(|l| sorted_desc(l)).collect())
        .collect();

    let mut mean_delta = Vec::with_capacity(samples);
    let mut stderr_delta = Vec::with_capacity(samples);
    let mut mean_lambdas = Vec::with_capacity(samples);
    let mut std_lambdas = Vec::with_capacity(samples);
    for s in 0..samples {
        let (m, se) = mean_and_stderr(records.iter().map(|r| r.delta_eig[s]));
        mean_delta.push(m);
        stderr_delta.push(se);
        let (means, stds): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|i| {
                let (m, se) = mean_and_stderr(sorted.iter().map(|l| l[s][i]));
                (m, se * count.sqrt())
            })
            .unzip();
        mean_lambdas.push(means);
        std_lambdas.push(stds);
    }
    let tail = samples / 2;
    let (ss_mean, ss_se) = mean_and_stderr(records.iter().map(|r| {
        let d = &r.delta_eig[tail..];
        d.iter().sum::<f64>() / d.len() as f64
    }));
    let excess = records
        .iter()
        .map(|r| r.delta_consistency_excess(CONSISTENCY_MAX_DELTA))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Series {
        times: first.times.clone(),
        mean_delta,
        stderr_delta,
        mean_lambdas,
        std_lambdas,
        phases: first.control_log.clone(),
        steady_state: SteadyState {
            mean: ss_mean,
            stderr: ss_se,
        },
        delta_consistency_excess: excess.is_finite().then_some(excess),
    })
}

fn run_full_sme(cfg: &SimulationConfig) -> Result<Series> {
    let params = cfg.sme_params()?;
    let rho0 = DensityMatrix::diagonal(&cfg.initial_spectrum()?)?;
    let opts = TrajectoryOptions {
        horizon: cfg.horizon,
        record_every: record_every(cfg),
        integrator: cfg.integrator,
    };
    // Slots are filled by index, so completion order cannot leak into results.
    let records: Vec<TrajectoryRecord> = (0..cfg.ensemble as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, i);
            let mut ctl = build_controller(cfg, &rho0)?;
            run_trajectory(&rho0, &mut ctl, &params, &opts, &mut rng)
        })
        .collect::<Result<_>>()?;
    aggregate(&records)
}

fn run_reduced(cfg: &SimulationConfig) -> Result<Series> {
    let protocol = ReducedProtocol::from_spectrum(&cfg.observable_spectrum()?, &cfg.v_policy.policy())?;
    let state = ReducedState::new(cfg.small_eigenvalues()?)?;
    let mut opts = ReducedOptions::new(&protocol, cfg.k, cfg.dt, cfg.horizon);
    opts.swap_mode = cfg.swap_mode;
    opts.convention = cfg.convention;
    let st = protocol_state(cfg)?;
    opts.epsilon_equal = st.epsilon_equal;
    opts.swap_interval = st.swap_interval;
    opts.record_every = record_every(cfg);
    let series = integrate_reduced(&state, &protocol, &opts)?;
    let samples = series.times.len();
    let tail = samples / 2;
    let d = &series.delta[tail..];
    let mean_lambdas: Vec<Vec<f64>> = series
        .lambdas
        .iter()
        .zip(&series.delta)
        .map(|(l, d)| {
            let mut v = vec![1.0 - d];
            v.extend_from_slice(l);
            v
        })
        .collect();
    Ok(Series {
        times: series.times.clone(),
        stderr_delta: vec![0.0; samples],
        std_lambdas: mean_lambdas.iter().map(|l| vec![0.0; l.len()]).collect(),
        mean_lambdas,
        phases: series.phases.clone(),
        steady_state: SteadyState {
            mean: d.iter().sum::<f64>() / d.len() as f64,
            stderr: 0.0,
        },
        delta_consistency_excess: None,
        mean_delta: series.delta,
    })
}

fn fit_where(times: &[f64], values: &[f64], keep: impl Fn(usize) -> bool) -> Option<f64> {
    let (t, v): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, (t, v))| (*t, *v))
        .unzip();
    fit_exponential_rate(&t, &v).ok().map(|(g, _)| g)
}

/// Runs `cfg.ensemble` trajectories (or one reduced integration) and
/// evaluates every applicable closed-form report.
pub fn run_ensemble(cfg: &SimulationConfig) -> Result<EnsembleSummary> {
    let warnings = cfg.validate()?;
    let s = match cfg.engine {
        Engine::FullSme => run_full_sme(cfg)?,
        Engine::ReducedOde => run_reduced(cfg)?,
    };
    let switching = uses_switching(cfg);
    let (fitted_gamma, fitted_gamma_swap) = if switching {
        let lead: Vec<f64> = s.mean_lambdas.iter().map(|l| l[1]).collect();
        (
            fit_where(&s.times, &lead, |i| s.phases[i] == "reduce"),
            fit_where(&s.times, &s.mean_delta, |i| s.phases[i].starts_with("swap")),
        )
    } else {
        (fit_where(&s.times, &s.mean_delta, |_| true), None)
    };
    let mut summary = EnsembleSummary {
        target_probability: s.mean_delta.iter().map(|d| 1.0 - d).collect(),
        times: s.times,
        mean_delta: s.mean_delta,
        stderr_delta: s.stderr_delta,
        mean_lambdas: s.mean_lambdas,
        std_lambdas: s.std_lambdas,
        phases: s.phases,
        fitted_gamma,
        fitted_gamma_swap,
        steady_state: s.steady_state,
        delta_consistency_excess: s.delta_consistency_excess,
        bound_reports: Vec::new(),
        manifest: Manifest {
            config: cfg.clone(),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            warnings,
        },
    };
    summary.bound_reports = report_bounds(cfg, &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::NoiseKind;

    #[test]
    fn static_eigenstate_is_a_fixed_point() {
        let cfg = SimulationConfig {
            protocol: ProtocolKind::None,
            noise: NoiseKind::None,
            delta0: 0.0,
            horizon: 0.01,
            samples: 10,
            ..Default::default()
        };
        let s = run_ensemble(&cfg).unwrap();
        assert!(s.mean_delta.iter().all(|d| *d == 0.0));
        assert!(s.target_probability.iter().all(|p| *p == 1.0));
    }

    #[test]
    fn identical_runs_agree() {
        let cfg = SimulationConfig {
            n: 2,
            ensemble: 4,
            horizon: 0.02,
            samples: 20,
            protocol: ProtocolKind::None,
            ..Default::default()
        };
        assert_eq!(run_ensemble(&cfg).unwrap(), run_ensemble(&cfg).unwrap());
    }

    #[test]
    fn reduced_engine_runs() {
        let cfg = SimulationConfig {
            engine: Engine::ReducedOde,
            initial_lambdas: vec![0.009, 0.001],
            horizon: 0.5,
            dt: 1e-4,
            samples: 200,
            ..Default::default()
        };
        let s = run_ensemble(&cfg).unwrap();
        let g = s.fitted_gamma.unwrap();
        assert!((g - 8.0).abs() < 0.2, "{g}");
        assert!((s.fitted_gamma_swap.unwrap() - 4.0).abs() < 0.1);
    }
}
