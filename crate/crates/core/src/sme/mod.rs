//! Stochastic master equation under continuous measurement of `Xᵘ`, with an
//! optional isotropic (depolarizing) noise sub-step.

pub mod params;
pub mod step;
pub mod trajectory;

pub use params::SmeParams;
pub use step::{
    delta_drift_diffusion, delta_drift_diffusion_in, delta_of, delta_of_spectrum,
    isotropic_noise_step, kraus_measurement, measurement_diffusion, measurement_drift, repair, sme_step,
};
pub use trajectory::{
    run_trajectory, step_count, Controller, Integrator, ObservableRule, StaticController,
    TrajectoryOptions, TrajectoryRecord,
};
