//! Flat-prior posteriors of the original study's effect size.
//!
//! The posterior over f squared (F-tests) or delta (t-tests) after the
//! original study becomes the prior of the proponent's model for the
//! replication. It is known up to a constant, sampled with Metropolis-Hastings
//! and normalized by quadrature when a proper density is needed.

mod sampler;
mod study;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use sampler::{sample_posterior, split_rhat, PosteriorDraws, SamplerConfig, ACCEPTANCE_BAND, MAX_RHAT, TARGET_ACCEPTANCE};
pub use study::{FTestStudy, TTestStudy};

use crate::distributions::log_integrate_exp;
use crate::error::{domain, Result};

const NORMALIZER_TOL: f64 = 1e-10;

/// Log posterior density of f squared up to a constant (flat prior on
/// `[0, inf)`).
pub fn log_unnormalized_posterior_f2(f2: f64, study: &FTestStudy) -> Result<f64> {
    if !(f2 >= 0.0) {
        return domain(format!("f squared must be nonnegative, got {f2}"));
    }
    Ok(study.ln_likelihood(f2))
}

/// Log posterior density of delta up to a constant (flat prior on the real
/// line).
pub fn log_unnormalized_posterior_delta(delta: f64, study: &TTestStudy) -> Result<f64> {
    if delta.is_nan() {
        return domain("delta is NaN");
    }
    Ok(study.ln_likelihood(delta))
}

/// Log of the integral of `exp(log_target)` over `[support_lower, inf)`.
pub fn log_normalizing_constant<F: Fn(f64) -> f64>(log_target: F, support_lower: f64) -> Result<f64> {
    log_normalizing_constant_near(log_target, support_lower, None)
}

/// As [`log_normalizing_constant`], with a `(center, scale)` guess of where
/// the mass lies. Narrow posteriors far from the origin need it.
pub fn log_normalizing_constant_near<F: Fn(f64) -> f64>(
    log_target: F,
    support_lower: f64,
    hint: Option<(f64, f64)>,
) -> Result<f64> {
    Ok(log_integrate_exp(log_target, support_lower, f64::INFINITY, hint, NORMALIZER_TOL)?.log_value)
}

/// Independent draws from the normal approximation of the delta posterior,
/// matched to its exact mean and standard deviation.
pub fn sample_normal_approximation(study: &TTestStudy, n_draws: usize, seed: u64) -> Result<PosteriorDraws> {
    let (mean, sd) = study.posterior_moments();
    let normal = Normal::new(mean, sd).map_err(|e| crate::Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = (0..n_draws).map(|_| normal.sample(&mut rng)).collect();
    Ok(PosteriorDraws::from_independent(draws, seed))
}

/// Samples the f squared posterior, starting the chains near its bulk.
pub fn sample_f2_posterior(study: &FTestStudy, config: &SamplerConfig) -> Result<PosteriorDraws> {
    let (center, scale) = study.posterior_hint();
    let config = SamplerConfig {
        init: center,
        step_scale: 2.4 * scale,
        ..*config
    };
    sample_posterior(|f2| study.ln_likelihood(f2), 0.0, &config)
}

/// Samples the delta posterior, starting the chains near its bulk.
pub fn sample_delta_posterior(study: &TTestStudy, config: &SamplerConfig) -> Result<PosteriorDraws> {
    let (mean, sd) = study.posterior_moments();
    let config = SamplerConfig {
        init: mean,
        step_scale: 2.4 * sd,
        ..*config
    };
    sample_posterior(|d| study.ln_likelihood(d), f64::NEG_INFINITY, &config)
}
