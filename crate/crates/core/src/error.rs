use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The kernel matrix stayed indefinite after every jitter level was tried.
    #[error("kernel matrix is not positive definite after jitter levels {jitters:?}")]
    Factorization { jitters: Vec<f64> },

    #[error("negative predictive variance {0:e} beyond roundoff tolerance")]
    NegativeVariance(f64),

    #[error("no feasible lattice point for context {context:?}")]
    InfeasibleContext { context: Vec<f64> },

    #[error("steady-state solver did not converge (residual {residual:e} after {iterations} iterations)")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("steady state left the model domain: mass fraction {value:e} for species {species}")]
    ModelDomain { species: &'static str, value: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep { step, source: Box::new(e) },
        }
    }
}
