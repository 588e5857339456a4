use thiserror::Error;

use crate::cmdp::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed model: {0}")]
    InvalidModel(ValidationReport),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid path at step {step}: {reason}")]
    InvalidPath { step: usize, reason: String },

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("strategy has no action for state `{state}` at resource level {level}")]
    StrategyUndefined { state: String, level: u32 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// No finite capacity solves the instance; `from -> to` is a pair that
    /// cannot be traversed safely.
    #[error("instance is infeasible: no safe almost-sure route from `{from}` to `{to}`")]
    Infeasible { from: String, to: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}
