use serde::{Deserialize, Serialize};

use super::params::SmeParams;
use super::step::{
    delta_of_spectrum, isotropic_noise_spectral, kraus_measurement, measurement_diffusion,
    measurement_drift, repair,
};
use crate::error::{Error, Result};
use crate::qcore::{
    gaussian_increment, ComplexMatrix, DensityMatrix, EigenTracker, Observable, SeededGenerator,
    SpectralDecomposition,
};

/// Maps the controller's current view of the state to a measured observable.
///
/// A rule is fixed for one step; the integrator may evaluate it at a
/// supporting state as well as at the current state.
pub trait ObservableRule {
    fn observable(&self, spec: &SpectralDecomposition) -> Result<Observable>;
}

impl ObservableRule for Observable {
    fn observable(&self, _spec: &SpectralDecomposition) -> Result<Observable> {
        Ok(self.clone())
    }
}

/// Feedback controller. `decide` is called once per step, in time order.
pub trait Controller {
    type Rule: ObservableRule;
    fn decide(&mut self, t: f64, spec: &SpectralDecomposition) -> Result<Self::Rule>;
    /// Short label for the current control phase, written to the log.
    fn tag(&self) -> String;
}

/// Measures the same observable at every step.
#[derive(Debug, Clone)]
pub struct StaticController(pub Observable);

impl Controller for StaticController {
    type Rule = Observable;
    fn decide(&mut self, _t: f64, _spec: &SpectralDecomposition) -> Result<Observable> {
        Ok(self.0.clone())
    }
    fn tag(&self) -> String {
        "static".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Exact fixed-observable measurement map `ρ ∝ AρA`, plus a Milstein
    /// term for the change of the controller's observable over the step
    /// (re-evaluated at the supporting state). Errors in the small
    /// eigenvalues are relative to them.
    #[default]
    Kraus,
    /// Derivative-free Milstein step with the controller re-evaluated at the
    /// supporting state. Keeps eigenvalue noise that the feedback cancels in
    /// continuous time from leaking in at O(dt), but carries an absolute
    /// O(k²δx⁴dt) bias in Δ per unit time.
    Milstein,
    /// Plain Euler–Maruyama with the observable frozen over the step.
    Euler,
}

#[derive(Debug, Clone)]
pub struct TrajectoryOptions {
    pub horizon: f64,
    /// Record every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
    pub integrator: Integrator,
}

/// Sampled history of one noise realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub delta_eig: Vec<f64>,
    pub delta_lin: Vec<f64>,
    pub eigenvalues: Vec<Vec<f64>>,
    pub control_log: Vec<String>,
}

impl TrajectoryRecord {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            delta_eig: Vec::with_capacity(n),
            delta_lin: Vec::with_capacity(n),
            eigenvalues: Vec::with_capacity(n),
            control_log: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, lambdas: &[f64], tag: String) {
        let (de, dl) = delta_of_spectrum(lambdas);
        self.times.push(t);
        self.delta_eig.push(de);
        self.delta_lin.push(dl);
        self.eigenvalues.push(lambdas.to_vec());
        self.control_log.push(tag);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|delta_lin − delta_eig| − 5·delta_eig²` over samples with
    /// `delta_eig <= max_delta`; nonpositive when the two definitions agree.
    pub fn delta_consistency_excess(&self, max_delta: f64) -> f64 {
        self.delta_eig
            .iter()
            .zip(&self.delta_lin)
            .filter(|(e, _)| **e <= max_delta)
            .map(|(e, l)| (l - e).abs() - 5.0 * e * e)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Number of steps of size `dt` covering `horizon`.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    (horizon / dt).round() as usize
}

/// Integrates one closed-loop trajectory of the measurement SME followed by
/// the isotropic noise sub-step.
pub fn run_trajectory<C: Controller>(
    rho0: &DensityMatrix,
    controller: &mut C,
    params: &SmeParams,
    opts: &TrajectoryOptions,
    rng: &mut SeededGenerator,
) -> Result<TrajectoryRecord> {
    if opts.record_every == 0 {
        return Err(Error::ContractViolation("record_every must be >= 1".into()));
    }
    let steps = step_count(opts.horizon, params.dt);
    let mut record = TrajectoryRecord::with_capacity(steps / opts.record_every + 2);
    let mut tracker = EigenTracker::new();
    let mut rho = rho0.matrix().clone();
    let mut spec = tracker.decompose(&rho)?;
    let sqrt_dt = params.dt.sqrt();

    for step in 0..steps {
        let t = step as f64 * params.dt;
        let rule = controller.decide(t, &spec)?;
        if step % opts.record_every == 0 {
            record.push(t, spec.eigenvalues(), controller.tag());
        }
        let x = rule.observable(&spec)?;
        let a = measurement_drift(&rho, x.matrix(), params.k);
        let b = measurement_diffusion(&rho, x.matrix(), params.k);
        let dw = gaussian_increment(rng, params.dt)?;

        let next = match opts.integrator {
            Integrator::Euler => {
                let mut next = rho.clone();
                next.axpy(params.dt, &a);
                next.axpy(dw, &b);
                next
            }
            Integrator::Milstein | Integrator::Kraus => {
                let mut support = rho.clone();
                support.axpy(params.dt, &a);
                support.axpy(sqrt_dt, &b);
                let support = support.hermitian_part();
                let support_spec = tracker.peek(&support)?;
                let xs = rule.observable(&support_spec)?;
                let c = (dw * dw - params.dt) / (2.0 * sqrt_dt);
                if opts.integrator == Integrator::Milstein {
                    let mut next = rho.clone();
                    next.axpy(params.dt, &a);
                    next.axpy(dw, &b);
                    next.axpy(c, &measurement_diffusion(&support, xs.matrix(), params.k));
                    next.axpy(-c, &b);
                    next
                } else {
                    // The map is exact for a frozen observable; only the
                    // observable's own change needs the Milstein term.
                    let mut next = kraus_measurement(&rho, x.matrix(), params.k, params.dt, dw);
                    let dx = xs.matrix() - x.matrix();
                    next.axpy(c, &measurement_diffusion(&rho, &dx, params.k));
                    next
                }
            }
        };

        let (repaired, d) = repair(&next, Some(&tracker))?;
        let (m, d) = if params.beta > 0.0 {
            let d = isotropic_noise_spectral(&d, params);
            let m = noise_matrix(repaired.matrix(), params);
            (m, d)
        } else {
            (repaired.matrix().clone(), d)
        };
        tracker.set_reference(&d);
        rho = m;
        spec = d;
    }
    let t = steps as f64 * params.dt;
    // Let the controller observe the final state so the logged phase is current.
    controller.decide(t, &spec)?;
    record.push(t, spec.eigenvalues(), controller.tag());
    Ok(record)
}

fn noise_matrix(m: &ComplexMatrix, params: &SmeParams) -> ComplexMatrix {
    let n = m.dim();
    let s = params.depolarizing_rate(n) * params.dt;
    let mut out = m.scale(1.0 - s);
    for i in 0..n {
        out[(i, i)] += s / n as f64;
    }
    out
}
