use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `k·δx²·dt` accepted by [`SmeParams::check_step`].
pub const STABILITY_FACTOR: f64 = 1e-3;

/// Measurement strength `k`, step `dt`, isotropic noise strength `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmeParams {
    pub k: f64,
    pub dt: f64,
    pub beta: f64,
}

impl SmeParams {
    pub fn new(k: f64, dt: f64, beta: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::ContractViolation(format!("k must be > 0, got {k}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::ContractViolation(format!("dt must be > 0, got {dt}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::ContractViolation(format!("beta must be >= 0, got {beta}")));
        }
        Ok(Self { k, dt, beta })
    }

    /// `1e-3 / (k δx²)`
    pub fn max_stable_dt(k: f64, delta_x: f64) -> f64 {
        STABILITY_FACTOR / (k * delta_x * delta_x)
    }

    /// Refuses step sizes above the stability heuristic for this spectrum.
    pub fn check_step(&self, delta_x: f64) -> Result<()> {
        let limit = Self::max_stable_dt(self.k, delta_x);
        // Relative slack so that dt written as exactly the limit is accepted.
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt: self.dt, limit });
        }
        Ok(())
    }

    /// Depolarizing rate `r = βN/(2(N−1))`, chosen so that `dΔ/dt = β/2`
    /// at pure states.
    pub fn depolarizing_rate(&self, n: usize) -> f64 {
        self.beta * n as f64 / (2.0 * (n as f64 - 1.0))
    }
}
