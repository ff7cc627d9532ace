use thiserror::Error;

/// Errors surfaced by bound computations.
///
/// `Infeasible` means the data contradicts the stated noise and norm budgets
/// (the certificate radicand went negative for every probed surrogate scale),
/// while `NonConvergence` means an iterative solver exhausted its budget
/// without meeting its tolerance. Callers that map errors to process exit
/// codes should treat those two specially.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e}, scale {scale:.3e})")]
    NotPositiveSemidefinite { min_eig: f64, scale: f64 },

    #[error("matrix is not positive definite in {context}")]
    NotPositiveDefinite { context: &'static str },

    #[error("bound parameter must be positive, got {value}")]
    NonPositiveBound { value: f64 },

    #[error("{context}: value must be strictly positive, got {value}")]
    NonPositiveParameter { context: &'static str, value: f64 },

    #[error("surrogate noise precision is numerically singular (condition estimate {cond:.3e})")]
    SingularSurrogate { cond: f64 },

    #[error("posterior covariance is numerically singular at the query point")]
    SingularPosterior,

    #[error(
        "problem is infeasible under the stated budgets (certificate radicand {radicand:.6e})"
    )]
    Infeasible { radicand: f64 },

    #[error("gradient undefined at the feasibility boundary (beta = {beta:.3e})")]
    GradientUndefined { beta: f64 },

    #[error(
        "surrogate scales too small for stable evaluation \
         (conditioning {severity:.3e}); increase sigma"
    )]
    IllConditionedScales { severity: f64 },

    #[error("{solver} failed to converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("feasible-set sampler exhausted: {reason}")]
    SamplerExhausted { reason: &'static str },

    #[error("invalid problem: {reason}")]
    InvalidProblem { reason: String },

    #[error("prior bound does not exceed the reference value; suboptimality undefined")]
    DegeneratePrior,

    #[error("{method} requires a uniform pointwise noise model")]
    RequiresPointwiseNoise { method: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error indicates data/budget infeasibility rather than a
    /// numerical or usage failure.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. })
    }

    /// True when an iterative solver ran out of budget.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}
