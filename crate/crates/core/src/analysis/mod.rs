//! Closed-form bounds and rates, rate fitting and the HJB search.

pub mod bounds;
pub mod fit;
pub mod hjb;
pub mod report;
pub mod simplex;

pub use bounds::{
    decay_bound, hjb_lhs, lop_steady_state, n4_paper_rate, qutrit_gamma, qutrit_lop_cost,
    qutrit_switch_time, universal_steady_state_bound,
};
pub use fit::{fit_exponential_rate, fit_log_linear};
pub use hjb::{hjb_bracket, hjb_rhs_maximize, ArgmaxDescription, HjbPoint, DEFAULT_RESTARTS};
pub use report::BoundReport;
