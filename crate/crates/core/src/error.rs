use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the function or type.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimated relative error {rel_error:.3e})")]
    NonConvergence { subdivisions: usize, rel_error: f64 },

    #[error("sampler diagnostics failed: {0}")]
    Diagnostics(String),

    #[error("every term of the estimator underflowed to zero")]
    Underflow,

    #[error("posterior draws are degenerate (zero standard deviation)")]
    DegenerateDraws,

    #[error("importance weights are degenerate: effective sample size {ess:.1} of {n_draws} draws")]
    WeightDegeneracy { ess: f64, n_draws: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
