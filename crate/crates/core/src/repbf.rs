//! Replication Bayes factors for t- and F-tests.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::distributions::log_central_t_pdf;
use crate::error::{domain, Error, Result};
use crate::marginal::{
    estimate_importance_with, estimate_mc, estimate_quadrature_near, fit_importance_density, Estimator,
    MarginalEstimate, MIN_ESS_FRACTION,
};
use crate::posterior::{
    log_normalizing_constant_near, sample_delta_posterior, sample_f2_posterior, sample_normal_approximation,
    FTestStudy, PosteriorDraws, SamplerConfig, TTestStudy,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepBfConfig {
    pub estimator: Estimator,
    /// Importance draws, or total posterior draws across chains for the
    /// Monte Carlo estimator.
    pub n_draws: usize,
    pub seed: u64,
    /// Importance density sd as a multiple of the posterior sd.
    pub inflation: f64,
    pub n_chains: usize,
    pub n_burn: usize,
    /// Posterior draws kept per chain for fitting the importance density.
    pub n_keep_fit: usize,
    /// t-tests only: replace the exact delta posterior by a moment-matched
    /// normal.
    pub normal_approximation: bool,
    pub min_ess_fraction: f64,
}

impl Default for RepBfConfig {
    fn default() -> Self {
        RepBfConfig {
            estimator: Estimator::Importance,
            n_draws: 100_000,
            seed: 42,
            inflation: 1.5,
            n_chains: 4,
            n_burn: 1000,
            n_keep_fit: 25_000,
            normal_approximation: false,
            min_ess_fraction: MIN_ESS_FRACTION,
        }
    }
}

impl RepBfConfig {
    pub fn quadrature() -> Self {
        RepBfConfig {
            estimator: Estimator::Quadrature,
            ..Default::default()
        }
    }

    pub fn with_estimator(self, estimator: Estimator) -> Self {
        RepBfConfig { estimator, ..self }
    }

    fn sampler(&self, n_keep: usize) -> SamplerConfig {
        SamplerConfig {
            n_chains: self.n_chains,
            n_burn: self.n_burn,
            n_keep,
            seed: self.seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_draws < 2 {
            return domain(format!("number of draws must be at least 2, got {}", self.n_draws));
        }
        if !(self.inflation >= 1.0 && self.inflation.is_finite()) {
            return domain(format!("inflation must be at least 1, got {}", self.inflation));
        }
        if !(0.0..=1.0).contains(&self.min_ess_fraction) {
            return domain(format!("minimum ESS fraction must lie in [0, 1], got {}", self.min_ess_fraction));
        }
        if self.n_chains == 0 {
            return domain("at least one chain is required");
        }
        Ok(())
    }
}

/// Evidence category, mirrored between the two models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Interpretation {
    #[serde(rename = "decisive_r")]
    DecisiveR,
    #[serde(rename = "strong_r")]
    StrongR,
    #[serde(rename = "substantial_r")]
    SubstantialR,
    #[serde(rename = "anecdotal")]
    Anecdotal,
    #[serde(rename = "substantial_0")]
    Substantial0,
    #[serde(rename = "strong_0")]
    Strong0,
    #[serde(rename = "decisive_0")]
    Decisive0,
}

impl Interpretation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Interpretation::DecisiveR => "decisive_r",
            Interpretation::StrongR => "strong_r",
            Interpretation::SubstantialR => "substantial_r",
            Interpretation::Anecdotal => "anecdotal",
            Interpretation::Substantial0 => "substantial_0",
            Interpretation::Strong0 => "strong_0",
            Interpretation::Decisive0 => "decisive_0",
        }
    }

    /// The same strength of evidence for the other model.
    pub fn mirror(&self) -> Self {
        use Interpretation::*;
        match self {
            DecisiveR => Decisive0,
            StrongR => Strong0,
            SubstantialR => Substantial0,
            Anecdotal => Anecdotal,
            Substantial0 => SubstantialR,
            Strong0 => StrongR,
            Decisive0 => DecisiveR,
        }
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Band of a replication Bayes factor: above 100 decisive, (10, 100] strong,
/// (3, 10] substantial, [1/3, 3] anecdotal, mirrored below 1. A value on a
/// boundary takes the weaker band.
pub fn interpret(br0: f64) -> Interpretation {
    use Interpretation::*;
    let (strength, toward_r) = if br0 >= 1.0 { (br0, true) } else { (1.0 / br0, false) };
    let band = if strength > 100.0 {
        DecisiveR
    } else if strength > 10.0 {
        StrongR
    } else if strength > 3.0 {
        SubstantialR
    } else {
        Anecdotal
    };
    if toward_r {
        band
    } else {
        band.mirror()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepBfResult {
    pub br0: f64,
    pub log10_br0: f64,
    /// Log marginal likelihood of the replication under the proponent's model.
    pub log_numerator: f64,
    /// Log density of the replication statistic under zero effect.
    pub log_denominator: f64,
    pub mc_se_log: f64,
    pub estimator: Estimator,
    pub n_draws: usize,
    pub seed: u64,
    pub interpretation: Interpretation,
    /// Effective sample size of the importance weights.
    #[serde(skip)]
    pub ess: Option<f64>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl RepBfResult {
    fn new(numerator: &MarginalEstimate, log_denominator: f64, seed: u64, warnings: Vec<String>) -> Self {
        let log_br0 = numerator.log_value - log_denominator;
        let br0 = log_br0.exp();
        RepBfResult {
            br0,
            log10_br0: log_br0 / std::f64::consts::LN_10,
            log_numerator: numerator.log_value,
            log_denominator,
            mc_se_log: numerator.mc_se_log,
            estimator: numerator.method,
            n_draws: numerator.n_draws,
            seed,
            interpretation: interpret(br0),
            ess: numerator.ess,
            warnings,
        }
    }

    /// Evidence for the skeptic's model relative to the proponent's.
    pub fn b0r(&self) -> f64 {
        1.0 / self.br0
    }
}

/// What the estimators need to know about an original/replication pair.
trait ReplicationModel: Sync {
    fn lower_bound(&self) -> f64;
    fn orig_loglik(&self, x: f64) -> f64;
    fn rep_loglik(&self, x: f64) -> f64;
    fn log_null(&self) -> Result<f64>;
    fn posterior_hint(&self) -> (f64, f64);
    fn rep_hint(&self) -> (f64, f64);
    fn sample(&self, config: &SamplerConfig) -> Result<PosteriorDraws>;
    fn warnings(&self) -> Vec<String>;
}

struct FReplication<'a> {
    orig: &'a FTestStudy,
    rep: &'a FTestStudy,
}

impl ReplicationModel for FReplication<'_> {
    fn lower_bound(&self) -> f64 {
        0.0
    }

    fn orig_loglik(&self, x: f64) -> f64 {
        self.orig.ln_likelihood(x)
    }

    fn rep_loglik(&self, x: f64) -> f64 {
        self.rep.ln_likelihood(x)
    }

    /// The central F density at the replication statistic (on the ratio
    /// scale of [`FTestStudy::ln_likelihood`] when the statistic is zero).
    fn log_null(&self) -> Result<f64> {
        Ok(self.rep.ln_null_likelihood())
    }

    fn posterior_hint(&self) -> (f64, f64) {
        self.orig.posterior_hint()
    }

    fn rep_hint(&self) -> (f64, f64) {
        self.rep.posterior_hint()
    }

    fn sample(&self, config: &SamplerConfig) -> Result<PosteriorDraws> {
        sample_f2_posterior(self.orig, config)
    }

    fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.orig.df_effect != self.rep.df_effect {
            w.push(format!(
                "effect df differ between original ({}) and replication ({}); f squared is compared across different designs",
                self.orig.df_effect, self.rep.df_effect
            ));
        }
        w
    }
}

struct TReplication<'a> {
    orig: &'a TTestStudy,
    rep: &'a TTestStudy,
    normal_approximation: bool,
}

impl TReplication<'_> {
    fn normal_log_posterior(&self, x: f64) -> f64 {
        let (m, s) = self.orig.posterior_moments();
        let z = (x - m) / s;
        -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln() - s.ln()
    }
}

impl ReplicationModel for TReplication<'_> {
    fn lower_bound(&self) -> f64 {
        f64::NEG_INFINITY
    }

    fn orig_loglik(&self, x: f64) -> f64 {
        if self.normal_approximation {
            self.normal_log_posterior(x)
        } else {
            self.orig.ln_likelihood(x)
        }
    }

    fn rep_loglik(&self, x: f64) -> f64 {
        self.rep.ln_likelihood(x)
    }

    fn log_null(&self) -> Result<f64> {
        log_central_t_pdf(self.rep.t_value, self.rep.df)
    }

    fn posterior_hint(&self) -> (f64, f64) {
        self.orig.posterior_moments()
    }

    fn rep_hint(&self) -> (f64, f64) {
        self.rep.posterior_moments()
    }

    fn sample(&self, config: &SamplerConfig) -> Result<PosteriorDraws> {
        if self.normal_approximation {
            sample_normal_approximation(self.orig, config.n_chains * config.n_keep, config.seed)
        } else {
            sample_delta_posterior(self.orig, config)
        }
    }

    fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        for (name, s) in [("original", self.orig), ("replication", self.rep)] {
            if s.is_two_sample() && s.n1 != s.n2 {
                w.push(format!(
                    "{name} study has unequal group sizes ({} and {}); the result assumes the imbalance carries no information about the effect",
                    s.n1, s.n2
                ));
            }
        }
        w
    }
}

/// Precision-weighted combination of two `(center, scale)` guesses.
fn combine_hints(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (pa, pb) = (1.0 / (a.1 * a.1), 1.0 / (b.1 * b.1));
    ((a.0 * pa + b.0 * pb) / (pa + pb), (pa + pb).sqrt().recip())
}

fn compute<M: ReplicationModel>(
    model: &M,
    config: &RepBfConfig,
    estimators: &[Estimator],
) -> Result<Vec<Result<RepBfResult>>> {
    config.validate()?;
    let log_denominator = model.log_null()?;
    if !log_denominator.is_finite() {
        return domain("replication statistic has zero or infinite density under the null");
    }
    let lower = model.lower_bound();
    let post_hint = model.posterior_hint();
    let product_hint = combine_hints(post_hint, model.rep_hint());
    let orig = |x: f64| model.orig_loglik(x);
    let rep = |x: f64| model.rep_loglik(x);

    let needs_draws = estimators.iter().any(|e| *e != Estimator::Quadrature);
    let draws = if needs_draws {
        let uses_mc = estimators.contains(&Estimator::MonteCarlo);
        let n_keep = if uses_mc {
            config.n_draws.div_ceil(config.n_chains)
        } else {
            config.n_keep_fit
        };
        Some(model.sample(&config.sampler(n_keep)))
    } else {
        None
    };
    let needs_norm = estimators.contains(&Estimator::Importance);
    let log_norm = if needs_norm {
        Some(log_normalizing_constant_near(orig, lower, Some(post_hint)))
    } else {
        None
    };

    let warnings = model.warnings();
    let results = estimators
        .iter()
        .map(|est| {
            let numerator = match est {
                Estimator::Quadrature => {
                    estimate_quadrature_near(rep, orig, lower, Some(post_hint), Some(product_hint))?
                }
                Estimator::MonteCarlo => {
                    let draws = draws.as_ref().expect("draws sampled").as_ref().map_err(Error::clone)?;
                    estimate_mc(rep, draws)?
                }
                Estimator::Importance => {
                    let draws = draws.as_ref().expect("draws sampled").as_ref().map_err(Error::clone)?;
                    let log_norm = *log_norm.as_ref().expect("normalizer computed").as_ref().map_err(Error::clone)?;
                    let g = fit_importance_density(draws, lower, config.inflation)?;
                    estimate_importance_with(
                        rep,
                        |x| orig(x) - log_norm,
                        &g,
                        config.n_draws,
                        config.seed,
                        config.min_ess_fraction,
                    )?
                }
            };
            Ok(RepBfResult::new(&numerator, log_denominator, config.seed, warnings.clone()))
        })
        .collect();
    Ok(results)
}

fn single<M: ReplicationModel>(model: &M, config: &RepBfConfig) -> Result<RepBfResult> {
    compute(model, config, &[config.estimator])?
        .pop()
        .expect("one estimator requested")
}

/// Replication Bayes factor for a fixed-effect ANOVA F-test.
pub fn repbf_f(orig: &FTestStudy, rep: &FTestStudy, config: &RepBfConfig) -> Result<RepBfResult> {
    orig.validate()?;
    rep.validate()?;
    single(&FReplication { orig, rep }, config)
}

/// Replication Bayes factor for a t-test. The sign of both t values matters.
pub fn repbf_t(orig: &TTestStudy, rep: &TTestStudy, config: &RepBfConfig) -> Result<RepBfResult> {
    orig.validate()?;
    rep.validate()?;
    let model = TReplication {
        orig,
        rep,
        normal_approximation: config.normal_approximation,
    };
    single(&model, config)
}

/// Several estimators on one set of posterior draws, in the order given.
/// The outer error covers failures shared by all of them.
pub fn repbf_f_estimators(
    orig: &FTestStudy,
    rep: &FTestStudy,
    config: &RepBfConfig,
    estimators: &[Estimator],
) -> Result<Vec<Result<RepBfResult>>> {
    orig.validate()?;
    rep.validate()?;
    compute(&FReplication { orig, rep }, config, estimators)
}

/// As [`repbf_f_estimators`] for t-tests.
pub fn repbf_t_estimators(
    orig: &TTestStudy,
    rep: &TTestStudy,
    config: &RepBfConfig,
    estimators: &[Estimator],
) -> Result<Vec<Result<RepBfResult>>> {
    orig.validate()?;
    rep.validate()?;
    let model = TReplication {
        orig,
        rep,
        normal_approximation: config.normal_approximation,
    };
    compute(&model, config, estimators)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectSizeKind {
    CohensD,
    CohensF2,
    PartialEta2,
}

impl FromStr for EffectSizeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d" | "cohens_d" => Ok(EffectSizeKind::CohensD),
            "f2" | "cohens_f2" => Ok(EffectSizeKind::CohensF2),
            "eta2" | "partial_eta2" => Ok(EffectSizeKind::PartialEta2),
            _ => domain(format!("unknown effect size kind '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub kind: EffectSizeKind,
    pub value: f64,
}

impl EffectSize {
    pub fn new(kind: EffectSizeKind, value: f64) -> Result<Self> {
        let ok = match kind {
            EffectSizeKind::CohensD => value.is_finite(),
            EffectSizeKind::CohensF2 => value >= 0.0 && value.is_finite(),
            EffectSizeKind::PartialEta2 => (0.0..1.0).contains(&value),
        };
        if !ok {
            return domain(format!("invalid {kind:?} value {value}"));
        }
        Ok(EffectSize { kind, value })
    }

    pub fn cohens_d(value: f64) -> Result<Self> {
        Self::new(EffectSizeKind::CohensD, value)
    }

    pub fn cohens_f2(value: f64) -> Result<Self> {
        Self::new(EffectSizeKind::CohensF2, value)
    }

    pub fn partial_eta2(value: f64) -> Result<Self> {
        Self::new(EffectSizeKind::PartialEta2, value)
    }

    /// `f^2 = F df_effect / df_error`.
    pub fn f2_from_f(f_value: f64, df_effect: f64, df_error: f64) -> Result<Self> {
        if !(df_effect > 0.0 && df_error > 0.0) {
            return domain("degrees of freedom must be positive");
        }
        Self::cohens_f2(f_value * df_effect / df_error)
    }
}

/// Converts between d, f squared and partial eta squared.
///
/// `f^2 = eta^2 / (1 - eta^2)`; d relates to f squared through two equal
/// groups, `f^2 = d^2 / 4`, and the sign of d is lost.
pub fn convert_effect_size(es: EffectSize, target: EffectSizeKind) -> Result<EffectSize> {
    let es = EffectSize::new(es.kind, es.value)?;
    if es.kind == target {
        return Ok(es);
    }
    let f2 = match es.kind {
        EffectSizeKind::CohensF2 => es.value,
        EffectSizeKind::PartialEta2 => es.value / (1.0 - es.value),
        EffectSizeKind::CohensD => 0.25 * es.value * es.value,
    };
    let value = match target {
        EffectSizeKind::CohensF2 => f2,
        EffectSizeKind::PartialEta2 => f2 / (1.0 + f2),
        EffectSizeKind::CohensD => 2.0 * f2.sqrt(),
    };
    EffectSize::new(target, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Interpretation::*;

    #[test]
    fn bands() {
        assert_eq!(interpret(38.261), StrongR);
        assert_eq!(interpret(1.0), Anecdotal);
        assert_eq!(interpret(0.031), Strong0);
        assert_eq!(interpret(1.153), Anecdotal);
        assert_eq!(interpret(0.057), Strong0);
        assert_eq!(interpret(668.15), DecisiveR);
        assert_eq!(interpret(0.0015), Decisive0);
    }

    #[test]
    fn boundaries_take_the_weaker_band() {
        assert_eq!(interpret(3.0), Anecdotal);
        assert_eq!(interpret(10.0), SubstantialR);
        assert_eq!(interpret(100.0), StrongR);
        assert_eq!(interpret(1.0 / 3.0), Anecdotal);
        assert_eq!(interpret(0.1), Substantial0);
        assert_eq!(interpret(0.01), Strong0);
    }

    #[test]
    fn conversions() {
        let f2 = convert_effect_size(EffectSize::partial_eta2(0.087).unwrap(), EffectSizeKind::CohensF2).unwrap();
        assert!((f2.value - 0.0953).abs() < 1e-4);
        let f2 = EffectSize::f2_from_f(4.97, 2.0, 81.0).unwrap();
        assert!((f2.value - 0.1227).abs() < 1e-4);
        let eta = convert_effect_size(EffectSize::cohens_f2(0.0).unwrap(), EffectSizeKind::PartialEta2).unwrap();
        assert_eq!(eta.value, 0.0);
        let d = convert_effect_size(EffectSize::cohens_f2(0.25).unwrap(), EffectSizeKind::CohensD).unwrap();
        assert!((d.value - 1.0).abs() < 1e-15);
        assert!(EffectSize::partial_eta2(1.0).is_err());
        assert!(EffectSize::cohens_f2(-0.1).is_err());
    }

    #[test]
    fn hint_combination() {
        let (c, s) = combine_hints((0.0, 1.0), (2.0, 1.0));
        assert!((c - 1.0).abs() < 1e-15 && (s - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
