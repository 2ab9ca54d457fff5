//! Central and noncentral F densities in log space.

use super::special::{ln_beta, ln_gamma};
use crate::error::{domain, Result};

/// Relative size of the neglected series tail.
const SERIES_TOL: f64 = 1e-17;
const MAX_TERMS: usize = 50_000_000;

/// Parameters of a (possibly noncentral) F distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FDensityParams {
    df_effect: f64,
    df_error: f64,
    lambda: f64,
}

impl FDensityParams {
    pub fn new(df_effect: f64, df_error: f64, lambda: f64) -> Result<Self> {
        if !(df_effect > 0.0 && df_effect.is_finite()) {
            return domain(format!("df_effect must be positive and finite, got {df_effect}"));
        }
        if !(df_error > 0.0 && df_error.is_finite()) {
            return domain(format!("df_error must be positive and finite, got {df_error}"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return domain(format!("noncentrality must be nonnegative and finite, got {lambda}"));
        }
        Ok(FDensityParams {
            df_effect,
            df_error,
            lambda,
        })
    }

    pub fn central(df_effect: f64, df_error: f64) -> Result<Self> {
        Self::new(df_effect, df_error, 0.0)
    }

    pub fn df_effect(&self) -> f64 {
        self.df_effect
    }

    pub fn df_error(&self) -> f64 {
        self.df_error
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Log density at `x`; `-inf` outside the support.
    ///
    /// At `x = 0` the density is infinite for `df_effect < 2`, equals
    /// `exp(-lambda / 2)` for `df_effect = 2` and is zero above that.
    pub fn ln_density(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x < 0.0 || x == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        if self.lambda == 0.0 {
            central_ln_pdf(x, self.df_effect, self.df_error)
        } else {
            noncentral_ln_pdf(x, self.df_effect, self.df_error, self.lambda, SERIES_TOL)
        }
    }
}

fn density_at_zero(d1: f64, shift: f64) -> f64 {
    if d1 < 2.0 {
        f64::INFINITY
    } else if d1 == 2.0 {
        shift
    } else {
        f64::NEG_INFINITY
    }
}

fn central_ln_pdf(x: f64, d1: f64, d2: f64) -> f64 {
    if x == 0.0 {
        return density_at_zero(d1, 0.0);
    }
    let y = d1 * x / d2;
    0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * x.ln()
        - 0.5 * (d1 + d2) * y.ln_1p()
        - ln_beta(0.5 * d1, 0.5 * d2)
}

/// Poisson(lambda/2) mixture of scaled central F terms, summed outward from
/// the largest term. Term k is
/// `P(k) * (d1/d2) * y^(a-1) * (1+y)^(-a-b) / B(a, b)` with `a = d1/2 + k`,
/// `b = d2/2` and `y = d1 x / d2`.
pub(crate) fn noncentral_ln_pdf(x: f64, d1: f64, d2: f64, lambda: f64, tol: f64) -> f64 {
    let half_lambda = 0.5 * lambda;
    if x == 0.0 {
        return density_at_zero(d1, -half_lambda);
    }
    let a0 = 0.5 * d1;
    let b = 0.5 * d2;
    let y = d1 * x / d2;
    let ln1p_y = y.ln_1p();
    let ln_q = y.ln() - ln1p_y;
    let c = half_lambda * ln_q.exp();
    let ln_c = half_lambda.ln() + ln_q;

    // term ratio t(k+1)/t(k)
    let ratio = |k: f64| c * (a0 + k + b) / ((a0 + k) * (k + 1.0));

    // the terms are log-concave in k; start at the largest one
    let p = 1.0 + a0 - c;
    let disc = p * p - 4.0 * (a0 - c * (a0 + b));
    let root = if disc > 0.0 { 0.5 * (-p + disc.sqrt()) } else { 0.0 };
    let k0 = if root > 0.0 { root.ceil() } else { 0.0 };

    let ln_peak = -half_lambda + (d1 / d2).ln() - (b + 1.0) * ln1p_y + (a0 - 1.0) * ln_q + k0 * ln_c
        - ln_gamma(k0 + 1.0)
        - ln_beta(a0 + k0, b);

    let mut sum = 1.0;
    // upward
    let mut term = 1.0;
    let mut k = k0;
    for _ in 0..MAX_TERMS {
        term *= ratio(k);
        k += 1.0;
        sum += term;
        let next = ratio(k);
        if term == 0.0 || (next < 1.0 && term * next / (1.0 - next) <= tol * sum) {
            break;
        }
    }
    // downward
    let mut term = 1.0;
    let mut k = k0;
    while k > 0.0 {
        term /= ratio(k - 1.0);
        k -= 1.0;
        sum += term;
        if k == 0.0 || term == 0.0 {
            break;
        }
        let next = 1.0 / ratio(k - 1.0);
        if next < 1.0 && term * next / (1.0 - next) <= tol * sum {
            break;
        }
    }
    ln_peak + sum.ln()
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return domain(format!("F density evaluated at invalid point {x}"));
    }
    Ok(())
}

/// Log density of the central F distribution.
pub fn log_central_f_pdf(x: f64, df_effect: f64, df_error: f64) -> Result<f64> {
    check_x(x)?;
    let params = FDensityParams::central(df_effect, df_error)?;
    Ok(params.ln_density(x))
}

/// Log density of the noncentral F distribution.
///
/// `lambda = 0` takes the central code path.
pub fn log_noncentral_f_pdf(x: f64, params: &FDensityParams) -> Result<f64> {
    check_x(x)?;
    Ok(params.ln_density(x))
}
