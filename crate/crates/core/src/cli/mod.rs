//! Batch runner: configuration, seeded ensembles, reports and output.

pub mod app;
pub mod config;
pub mod ensemble;
pub mod output;
pub mod report;
pub mod verify;

pub use config::{Engine, NoiseKind, OutputFormat, ProtocolKind, SimulationConfig, VPolicyKind};
pub use ensemble::{run_ensemble, EnsembleSummary, Manifest, SteadyState};
pub use report::report_bounds;
pub use verify::{linspace, verify_hjb, verify_theorem1, HjbScan};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STABILITY: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::StepTooLarge { .. } | Error::StepSize { .. } | Error::Degeneracy { .. } => {
            EXIT_STABILITY
        }
        Error::Io(_) => EXIT_FAILURE,
        _ => EXIT_CONFIG,
    }
}
