use thiserror::Error;

use crate::picard::PicardTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("initial data disagrees with boundary data by {mismatch:e}")]
    TraceIncompatibility { mismatch: f64 },

    #[error("unknown scenario `{0}`")]
    InvalidScenario(String),

    #[error("linear solve did not converge: {iterations} iterations, residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("Neumann problem is incompatible: right-hand side mean {mean:e}")]
    IncompatibleRhs { mean: f64 },

    #[error("step {step}: divergence residual {residual:e} above threshold")]
    DivergenceResidualExceeded { step: usize, residual: f64 },

    #[error("step {step}: field max-norm {value:e} exceeds blow-up threshold")]
    BlowUp { step: usize, value: f64 },

    #[error("Picard iteration did not converge after {} sweeps", .0.sweeps_used)]
    NoConvergence(Box<PicardTrace>),

    #[error("Picard sweep {} failed: {source}", .trace.sweeps_used + 1)]
    PicardAborted {
        trace: Box<PicardTrace>,
        #[source]
        source: Box<Error>,
    },

    #[error("window {window}: {source}")]
    WindowFailed {
        window: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            // already tagged with a more specific step
            e @ (Error::StepFailed { .. }
            | Error::DivergenceResidualExceeded { .. }
            | Error::BlowUp { .. }) => e,
            e => Error::StepFailed {
                step,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error, skipping step and window wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::StepFailed { source, .. }
            | Error::WindowFailed { source, .. }
            | Error::PicardAborted { source, .. } => source.root(),
            e => e,
        }
    }

    /// Picard trace attached to this error, if any.
    pub fn trace(&self) -> Option<&PicardTrace> {
        match self {
            Error::NoConvergence(t) | Error::PicardAborted { trace: t, .. } => Some(t),
            Error::WindowFailed { source, .. } | Error::StepFailed { source, .. } => source.trace(),
            _ => None,
        }
    }

    /// True for outcomes where the mathematics failed (non-convergence or
    /// blow-up), as opposed to bad input or I/O.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self.root(),
            Error::NonConvergence { .. }
                | Error::NoConvergence(_)
                | Error::BlowUp { .. }
                | Error::DivergenceResidualExceeded { .. }
                | Error::IncompatibleRhs { .. }
        )
    }
}
