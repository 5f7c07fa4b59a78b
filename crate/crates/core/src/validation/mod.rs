//! Post-solve checks of a restoration plan: an exact backward/forward sweep
//! power flow at every step and the resulting voltage and current margins.

mod margins;
mod plan;
mod sweep;

use thiserror::Error;

use crate::netmodel::Violation;

pub use margins::{validate_plan, LimitKind, LimitViolation, MarginReport, StepMargin, CURRENT_TOL_A, VOLTAGE_TOL_PU};
pub use plan::{switching_minutes, Action, Element, Operation, RestorationPlan, PLAN_SCHEMA_VERSION};
pub use sweep::{power_flow, PowerFlowResult, SWEEP_MAX_ITER, SWEEP_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("plan references unknown element {0}")]
    UnknownElement(String),
    #[error("line {0} is not switchable in the off-outage area")]
    NotSwitchable(String),
    #[error("plan configuration is not radial: {0:?}")]
    NonRadial(Violation),
    #[error("power flow topology is not radial: {0}")]
    NonRadialFlow(String),
    #[error("power flow diverged after {iterations} sweeps")]
    Diverged { iterations: usize },
}
