//! Consumption MDPs: states, actions, a stochastic transition function, a
//! per-action resource consumption and a set of reload states that refill the
//! resource to full capacity.

mod model;
mod simulate;
mod strategy;
mod trace;

pub use model::{
    validate_cmdp, ActionId, ActionRow, ConsumptionMdp, ModelDescription, Outcome, StateId, TransitionDescription,
    ValidationReport, Violation, ROW_SUM_TOLERANCE,
};
pub use simulate::{simulate, simulate_policy, SimulationConfig, SimulationStats};
pub use strategy::{CounterStrategy, Policy};
pub use trace::{is_safe, next_level, resource_levels, Path, ResourceLevel, ResourceTrace};
