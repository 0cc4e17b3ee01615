use thiserror::Error;

use crate::dsl::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Partial primitive evaluated outside its domain. `value` is the
    /// offending primal coordinate.
    #[error("domain error in {op}: argument {value}")]
    Domain { op: &'static str, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("incompatible structural map: {0}")]
    IncompatibleShape(String),

    #[error("verticality violated at {point:?}: residual {residual:e}")]
    Verticality { point: Vec<f64>, residual: f64 },

    #[error("step size collapse near t={t_reached:.3}")]
    StepSizeCollapse { t_reached: f64 },

    #[error("maximum step count {steps} exceeded at t={t_reached}")]
    MaxStepsExceeded { t_reached: f64, steps: usize },

    #[error("matrix exponential overflow (1-norm {norm})")]
    Overflow { norm: f64 },

    #[error("map is not linear: residual {max_residual:e} at {witness:?}")]
    Linearity {
        max_residual: f64,
        witness: Vec<f64>,
    },

    #[error("vector fields do not commute: residual {max_residual:e}")]
    NonCommutingFields { max_residual: f64 },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl Error {
    /// Whether the error originates from numerical evaluation or integration
    /// (as opposed to malformed input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Verticality { .. }
                | Error::StepSizeCollapse { .. }
                | Error::MaxStepsExceeded { .. }
                | Error::Overflow { .. }
        )
    }

    pub fn t_reached(&self) -> Option<f64> {
        match self {
            Error::StepSizeCollapse { t_reached } | Error::MaxStepsExceeded { t_reached, .. } => {
                Some(*t_reached)
            }
            _ => None,
        }
    }
}
