//! Marginal likelihood of the replication under the proponent's model.
//!
//! Three estimators of `log int p(y_rep | theta) p(theta | y_orig) d theta`:
//! plain Monte Carlo over posterior draws, importance sampling from a
//! truncated normal fitted to those draws, and adaptive quadrature, which is
//! deterministic and serves as the reference for the other two.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::distributions::log_integrate_exp;
use crate::distributions::special::ln_normal_sf;
use crate::error::{domain, Error, Result};
use crate::posterior::PosteriorDraws;

/// Importance draws use their own generator stream so they never coincide
/// with a sampler chain seeded from the same value.
const IMPORTANCE_STREAM: u64 = 1 << 32;
pub const MIN_ESS_FRACTION: f64 = 0.01;
const QUADRATURE_TOL: f64 = 1e-10;
/// ln 0.05: below this mass above the bound, sample by exponential rejection.
const DEEP_TRUNCATION: f64 = -2.995_732_273_553_991;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    MonteCarlo,
    Importance,
    Quadrature,
}

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::MonteCarlo => "monte_carlo",
            Estimator::Importance => "importance",
            Estimator::Quadrature => "quadrature",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monte_carlo" | "mc" => Ok(Estimator::MonteCarlo),
            "importance" | "is" => Ok(Estimator::Importance),
            "quadrature" => Ok(Estimator::Quadrature),
            _ => domain(format!("unknown estimator '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalEstimate {
    pub log_value: f64,
    pub method: Estimator,
    /// Standard error of `log_value`; zero for quadrature.
    pub mc_se_log: f64,
    pub n_draws: usize,
    /// Effective sample size of the importance weights.
    pub ess: Option<f64>,
}

/// Normal density truncated to `[lower_bound, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceDensity {
    pub location: f64,
    pub scale: f64,
    pub lower_bound: f64,
    /// Log of the probability mass above `lower_bound` before truncation.
    pub log_norm: f64,
}

impl ImportanceDensity {
    pub fn new(location: f64, scale: f64, lower_bound: f64) -> Result<Self> {
        if !location.is_finite() {
            return domain(format!("importance location must be finite, got {location}"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return domain(format!("importance scale must be positive, got {scale}"));
        }
        if lower_bound.is_nan() || lower_bound == f64::INFINITY {
            return domain(format!("invalid lower bound {lower_bound}"));
        }
        let log_norm = if lower_bound == f64::NEG_INFINITY {
            0.0
        } else {
            ln_normal_sf((lower_bound - location) / scale)
        };
        if !log_norm.is_finite() {
            return domain("importance density has no mass above its lower bound");
        }
        Ok(ImportanceDensity {
            location,
            scale,
            lower_bound,
            log_norm,
        })
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        if x < self.lower_bound {
            return f64::NEG_INFINITY;
        }
        let z = (x - self.location) / self.scale;
        -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln() - self.scale.ln() - self.log_norm
    }

    /// One draw from the truncated normal. Plain rejection from the normal
    /// while at least 5% of it lies above the bound, otherwise rejection from
    /// a shifted exponential with the optimal rate (Robert, 1995).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.log_norm > DEEP_TRUNCATION {
            loop {
                let z: f64 = rng.sample(StandardNormal);
                let x = self.location + self.scale * z;
                if x >= self.lower_bound {
                    return x;
                }
            }
        }
        let a = (self.lower_bound - self.location) / self.scale;
        let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let e: f64 = rng.sample(Exp1);
            let z = a + e / alpha;
            let u: f64 = rng.random();
            if u.ln() <= -0.5 * (z - alpha) * (z - alpha) {
                return self.location + self.scale * z;
            }
        }
    }
}

/// Normal importance density from the sample mean and the sample sd
/// multiplied by `inflation`, truncated at `lower_bound`.
pub fn fit_importance_density(draws: &PosteriorDraws, lower_bound: f64, inflation: f64) -> Result<ImportanceDensity> {
    if draws.is_empty() {
        return domain("no posterior draws");
    }
    if !(inflation >= 1.0 && inflation.is_finite()) {
        return domain(format!("inflation must be at least 1, got {inflation}"));
    }
    let sd = draws.sd();
    // rounding leaves a residue of order 1e-17 when every draw is equal
    if !(sd > 1e-12 * draws.mean().abs()) {
        return Err(Error::DegenerateDraws);
    }
    ImportanceDensity::new(draws.mean(), sd * inflation, lower_bound)
}

/// `log mean exp` of `terms` with the mean of the scaled weights and their
/// maximum, so callers can form standard errors.
fn log_mean_exp(terms: &[f64]) -> Result<(f64, Vec<f64>)> {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Underflow);
    }
    if !max.is_finite() {
        return domain("estimator term is not finite");
    }
    let weights: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    Ok((max + mean.ln(), weights))
}

/// Standard error of the mean of autocorrelated chains by batch means,
/// with batches of about `sqrt(len)` draws inside each chain.
fn batch_means_se(weights: &[f64], n_chains: usize) -> f64 {
    let n_chains = n_chains.max(1);
    let chain_len = weights.len() / n_chains;
    let batch = ((chain_len as f64).sqrt().floor() as usize).max(1);
    let per_chain = chain_len / batch;
    if per_chain < 2 {
        return iid_se(weights);
    }
    let mut means = Vec::with_capacity(per_chain * n_chains);
    for chain in weights.chunks(chain_len).take(n_chains) {
        for b in chain.chunks_exact(batch).take(per_chain) {
            means.push(b.iter().sum::<f64>() / batch as f64);
        }
    }
    iid_se(&means)
}

fn iid_se(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Plain Monte Carlo: the average replication likelihood over posterior
/// draws.
///
/// The standard error accounts for autocorrelation within chains through
/// batch means and is carried to the log scale by the delta method.
pub fn estimate_mc<F>(rep_loglik: F, draws: &PosteriorDraws) -> Result<MarginalEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    if draws.is_empty() {
        return domain("no posterior draws");
    }
    let terms: Vec<f64> = draws.draws.par_iter().map(|&x| nan_to_zero_mass(rep_loglik(x))).collect();
    let (log_value, weights) = log_mean_exp(&terms)?;
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    let se = batch_means_se(&weights, draws.n_chains);
    Ok(MarginalEstimate {
        log_value,
        method: Estimator::MonteCarlo,
        mc_se_log: se / mean,
        n_draws: draws.len(),
        ess: None,
    })
}

fn nan_to_zero_mass(y: f64) -> f64 {
    if y.is_nan() {
        f64::NEG_INFINITY
    } else {
        y
    }
}

/// Importance sampling with draws from `g` and weights
/// `p(y_rep | x) p(x | y_orig) / g(x)`.
///
/// `log_posterior_normalized` must be a proper log density. Fails with
/// [`Error::WeightDegeneracy`] when the effective sample size of the weights
/// is below 1% of `n_draws`.
pub fn estimate_importance<F, P>(
    rep_loglik: F,
    log_posterior_normalized: P,
    g: &ImportanceDensity,
    n_draws: usize,
    seed: u64,
) -> Result<MarginalEstimate>
where
    F: Fn(f64) -> f64 + Sync,
    P: Fn(f64) -> f64 + Sync,
{
    estimate_importance_with(rep_loglik, log_posterior_normalized, g, n_draws, seed, MIN_ESS_FRACTION)
}

/// As [`estimate_importance`] with a custom effective-sample-size floor
/// (as a fraction of `n_draws`; zero disables the check).
pub fn estimate_importance_with<F, P>(
    rep_loglik: F,
    log_posterior_normalized: P,
    g: &ImportanceDensity,
    n_draws: usize,
    seed: u64,
    min_ess_fraction: f64,
) -> Result<MarginalEstimate>
where
    F: Fn(f64) -> f64 + Sync,
    P: Fn(f64) -> f64 + Sync,
{
    if n_draws < 2 {
        return domain("importance sampling needs at least two draws");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(IMPORTANCE_STREAM);
    let xs: Vec<f64> = (0..n_draws).map(|_| g.sample(&mut rng)).collect();
    let terms: Vec<f64> = xs
        .par_iter()
        .map(|&x| nan_to_zero_mass(rep_loglik(x) + log_posterior_normalized(x) - g.ln_density(x)))
        .collect();
    let (log_value, weights) = log_mean_exp(&terms)?;
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let ess = sum * sum / sum_sq;
    if ess < min_ess_fraction * n_draws as f64 {
        return Err(Error::WeightDegeneracy { ess, n_draws });
    }
    let mean = sum / n_draws as f64;
    Ok(MarginalEstimate {
        log_value,
        method: Estimator::Importance,
        mc_se_log: iid_se(&weights) / mean,
        n_draws,
        ess: Some(ess),
    })
}

/// Ratio of `int exp(rep_loglik + log_unnorm_posterior)` to
/// `int exp(log_unnorm_posterior)` over `[lower_bound, inf)`.
pub fn estimate_quadrature<F, P>(rep_loglik: F, log_unnorm_posterior: P, lower_bound: f64) -> Result<MarginalEstimate>
where
    F: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    estimate_quadrature_near(rep_loglik, log_unnorm_posterior, lower_bound, None, None)
}

/// As [`estimate_quadrature`], with `(center, scale)` guesses for the
/// posterior and for the product of posterior and replication likelihood.
pub fn estimate_quadrature_near<F, P>(
    rep_loglik: F,
    log_unnorm_posterior: P,
    lower_bound: f64,
    posterior_hint: Option<(f64, f64)>,
    product_hint: Option<(f64, f64)>,
) -> Result<MarginalEstimate>
where
    F: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let hi = f64::INFINITY;
    let den = log_integrate_exp(&log_unnorm_posterior, lower_bound, hi, posterior_hint, QUADRATURE_TOL)?;
    let num = log_integrate_exp(
        |x| rep_loglik(x) + log_unnorm_posterior(x),
        lower_bound,
        hi,
        product_hint.or(posterior_hint),
        QUADRATURE_TOL,
    )?;
    Ok(MarginalEstimate {
        log_value: num.log_value - den.log_value,
        method: Estimator::Quadrature,
        mc_se_log: 0.0,
        n_draws: 0,
        ess: None,
    })
}
