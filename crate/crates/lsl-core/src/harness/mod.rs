//! Deterministic simulation and numerical verification of the tail bounds.
//!
//! Trials are independent: trial `t` draws every random quantity from
//! streams keyed by `(seed, t)`, so reports are identical under any thread
//! count. Suprema over the parameter box are maxima over an executed
//! search set and therefore certified lower bounds of the true suprema: an
//! empirical violation disproves a bound, a pass is consistency, never
//! proof.

mod search;
mod sim;
mod verify;

pub use search::{empirical_lsl_ratio, EmpiricalProcessSample, ProcessSpec, SearchBudget, Xi1Norm};
pub use sim::{build_context, simulate_trial, DesignKind, NoiseRegime, SimContext, SimSpec, TrialData};
pub use verify::{
    binomial_slack, verify_l2_bound, verify_massart, verify_tail_bounded, verify_tail_gaussian,
    verify_xi1, L2Report, MassartReport, McReport, TrialRow,
};
