use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the strategic-classification core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The scorer has an all-zero weight vector, so there is no decision boundary.
    #[error("degenerate model: weight vector is zero")]
    DegenerateModel,

    /// The response solve produced a non-finite iterate or the subproblem
    /// solver gave up. `trace` holds the smoothed payoff at each iterate reached.
    #[error("response solver failed at iteration {iteration}: {reason}")]
    SolverFailure {
        iteration: usize,
        reason: String,
        trace: Vec<f64>,
    },

    #[error("degenerate jacobian: response hessian condition number {condition:e}")]
    DegenerateJacobian { condition: f64 },

    #[error("non-finite gradient entry at parameter {index}")]
    NonFiniteGradient { index: usize },

    #[error("unsupported cost kind for {0}")]
    UnsupportedCost(&'static str),

    /// A per-example failure inside a batch computation.
    #[error("example {index}: {source}")]
    Example {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("training aborted in epoch {epoch}: {failed} of {total} response solves failed")]
    TooManyFailures { epoch: usize, failed: usize, total: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn at_example(self, index: usize) -> Self {
        Error::Example {
            index,
            source: alloc::boxed::Box::new(self),
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
