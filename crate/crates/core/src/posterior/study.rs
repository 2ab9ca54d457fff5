use serde::{Deserialize, Serialize};

use crate::distributions::special::ln_gamma;
use crate::distributions::{FDensityParams, TDensityParams};
use crate::error::{domain, Result};

/// A reported t-test: statistic, degrees of freedom and group sizes.
///
/// `n2 = 0` denotes a one-sample (or paired) design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestStudy {
    pub t_value: f64,
    pub df: f64,
    pub n1: u64,
    pub n2: u64,
}

impl TTestStudy {
    pub fn new(t_value: f64, df: f64, n1: u64, n2: u64) -> Result<Self> {
        let study = TTestStudy { t_value, df, n1, n2 };
        study.validate()?;
        Ok(study)
    }

    pub fn one_sample(t_value: f64, df: f64, n: u64) -> Result<Self> {
        Self::new(t_value, df, n, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t_value.is_finite() {
            return domain(format!("t value must be finite, got {}", self.t_value));
        }
        if !(self.df > 0.0 && self.df.is_finite()) {
            return domain(format!("df must be positive, got {}", self.df));
        }
        if self.n1 < 2 {
            return domain(format!("group 1 size must be at least 2, got {}", self.n1));
        }
        if self.n2 == 1 {
            return domain("group 2 size must be 0 (one-sample) or at least 2, got 1");
        }
        Ok(())
    }

    pub fn is_two_sample(&self) -> bool {
        self.n2 > 0
    }

    /// Effective sample size linking d to the noncentrality,
    /// `ncp = d * sqrt(n_eff)`: `n1 n2 / (n1 + n2)` for two samples, `n1`
    /// otherwise.
    pub fn n_eff(&self) -> f64 {
        if self.is_two_sample() {
            let (a, b) = (self.n1 as f64, self.n2 as f64);
            a * b / (a + b)
        } else {
            self.n1 as f64
        }
    }

    /// Observed standardized effect, `t / sqrt(n_eff)`.
    pub fn observed_d(&self) -> f64 {
        self.t_value / self.n_eff().sqrt()
    }

    /// Log likelihood of the observed t value at effect size `delta`.
    pub fn ln_likelihood(&self, delta: f64) -> f64 {
        let ncp = delta * self.n_eff().sqrt();
        match TDensityParams::new(self.df, ncp) {
            Ok(p) => p.ln_density(self.t_value),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Mean and standard deviation of the flat-prior posterior of delta.
    ///
    /// Given t, the noncentrality is distributed as `Z + t S / sqrt(df)` with
    /// `Z ~ N(0, 1)` and `S ~ chi(df + 1)` independent, which gives the
    /// moments in closed form.
    pub fn posterior_moments(&self) -> (f64, f64) {
        let nu = self.df;
        let chi_mean = std::f64::consts::SQRT_2 * (ln_gamma(0.5 * (nu + 2.0)) - ln_gamma(0.5 * (nu + 1.0))).exp();
        let t = self.t_value;
        let mean = t * chi_mean / nu.sqrt();
        let var = 1.0 + t * t * (nu + 1.0 - chi_mean * chi_mean) / nu;
        let root_n = self.n_eff().sqrt();
        (mean / root_n, var.sqrt() / root_n)
    }
}

/// A reported fixed-effect ANOVA F-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTestStudy {
    pub f_value: f64,
    pub df_effect: f64,
    pub df_error: f64,
    pub n_total: u64,
}

impl FTestStudy {
    pub fn new(f_value: f64, df_effect: f64, df_error: f64, n_total: u64) -> Result<Self> {
        let study = FTestStudy {
            f_value,
            df_effect,
            df_error,
            n_total,
        };
        study.validate()?;
        Ok(study)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_value >= 0.0 && self.f_value.is_finite()) {
            return domain(format!("F value must be nonnegative, got {}", self.f_value));
        }
        if !(self.df_effect >= 1.0 && self.df_effect.is_finite()) {
            return domain(format!("df_effect must be at least 1, got {}", self.df_effect));
        }
        if !(self.df_error >= 1.0 && self.df_error.is_finite()) {
            return domain(format!("df_error must be at least 1, got {}", self.df_error));
        }
        if (self.n_total as f64) < self.df_effect + 2.0 {
            return domain(format!(
                "total N must be at least df_effect + 2, got {} with df_effect {}",
                self.n_total, self.df_effect
            ));
        }
        Ok(())
    }

    /// Observed Cohen's f squared, `F df_effect / df_error`.
    pub fn observed_f2(&self) -> f64 {
        self.f_value * self.df_effect / self.df_error
    }

    /// Log likelihood of the observed F value at effect size `f2`, with
    /// noncentrality `f2 * N`.
    ///
    /// An observed F of exactly zero has a degenerate density (infinite for
    /// `df_effect < 2`, zero for `df_effect > 2`). There the limit of the
    /// likelihood ratio as F tends to zero, `-lambda / 2`, is used; it differs
    /// from the density by a factor that does not depend on `f2`.
    pub fn ln_likelihood(&self, f2: f64) -> f64 {
        if f2.is_nan() {
            return f64::NAN;
        }
        if f2 < 0.0 {
            return f64::NEG_INFINITY;
        }
        let lambda = f2 * self.n_total as f64;
        if self.f_value == 0.0 && self.df_effect != 2.0 {
            return -0.5 * lambda;
        }
        match FDensityParams::new(self.df_effect, self.df_error, lambda) {
            Ok(p) => p.ln_density(self.f_value),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Log density of the observed F under zero effect, on the same scale
    /// as [`FTestStudy::ln_likelihood`].
    pub fn ln_null_likelihood(&self) -> f64 {
        self.ln_likelihood(0.0)
    }

    /// Rough location and scale of the flat-prior posterior of f squared.
    pub fn posterior_hint(&self) -> (f64, f64) {
        let n = self.n_total as f64;
        let lambda_hat = (self.df_effect * (self.f_value - 1.0)).max(0.0);
        let scale = (2.0 * (self.df_effect + 2.0 * lambda_hat)).sqrt() / n;
        (lambda_hat / n, scale)
    }
}
