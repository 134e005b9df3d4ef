use thiserror::Error;

use crate::physical_base::Unit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name}: {value} (expected {requirement})")]
    InvalidInput {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("unit mismatch: {left} vs {right}")]
    UnitMismatch { left: Unit, right: Unit },

    #[error("unknown unit `{0}`")]
    UnknownUnit(String),

    #[error("{quantity} outside model validity: {value} (valid range {range})")]
    OutOfModel {
        quantity: &'static str,
        value: f64,
        range: String,
    },

    #[error("time step {given:e} s too coarse; need at most {required:e} s")]
    StepTooCoarse { given: f64, required: f64 },

    #[error("{what} did not converge (best residual {best_residual:e})")]
    NonConvergence {
        what: &'static str,
        best_residual: f64,
    },

    #[error("trajectory not closed: residual displacement {residual:e} m")]
    Unclosed { residual: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("antenna coverage exceeded by pulse {pulse} at z = {position:e} m (coverage {coverage} m)")]
    Coverage {
        pulse: usize,
        position: f64,
        coverage: f64,
    },

    #[error("protocol: {0}")]
    Protocol(#[from] crate::protocol::ProtocolError),

    #[error("gate `{gate}` failed at step {step}: {detail}")]
    GateFailed {
        step: crate::protocol::Step,
        gate: crate::protocol::Gate,
        detail: String,
    },

    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),

    #[error("{0}")]
    Sweep(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn require(
    ok: bool,
    name: &'static str,
    requirement: &'static str,
    value: f64,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput {
            name,
            requirement,
            value,
        })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    require(value > 0.0, name, "> 0", value)
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<()> {
    require(value >= 0.0, name, ">= 0", value)
}
