//! Locally optimal observables, the equalize-then-swap protocols for N = 3
//! and N = 4, and the reduced small-eigenvalue equations.

pub mod observable;
pub mod protocol;
pub mod reduced;

pub use observable::{
    block_unitary, build_lop_observable, f_objective, flip_operator, lop_block, lop_unitary,
    observable_in_basis, VPolicy,
};
pub use protocol::{
    default_swap_interval, qutrit_protocol_step, BasisRule, Decision, LopController, Phase,
    ProtocolController, ProtocolState, SwitchingProtocol, DEFAULT_EPSILON_EQUAL,
};
pub use reduced::{
    averaged_fixed_point, integrate_reduced, reduced_drift, AveragingConvention, ReducedOptions,
    ReducedProtocol, ReducedSeries, ReducedState, SwapMode,
};
