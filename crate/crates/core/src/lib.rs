//! Replication Bayes factors computed from reported test statistics.
//!
//! A replication Bayes factor compares how well the replication data are
//! predicted by the original study's posterior over the effect size (the
//! proponent's model) against a point null of zero effect (the skeptic's
//! model). Both two-sample / one-sample t-tests and fixed-effect ANOVA
//! F-tests are supported.
//!
//! ```
//! use repbf_core::{repbf_f, FTestStudy, RepBfConfig};
//!
//! let orig = FTestStudy::new(4.97, 2.0, 81.0, 84).unwrap();
//! let rep = FTestStudy::new(0.24, 2.0, 122.0, 125).unwrap();
//! let result = repbf_f(&orig, &rep, &RepBfConfig::quadrature()).unwrap();
//! assert!((result.br0 - 0.031).abs() < 0.002);
//! ```

pub mod distributions;
pub mod error;
pub mod marginal;
pub mod posterior;
pub mod repbf;
pub mod sim;

pub use error::{Error, Result};
pub use marginal::{Estimator, MarginalEstimate};
pub use posterior::{FTestStudy, PosteriorDraws, SamplerConfig, TTestStudy};
pub use repbf::{
    convert_effect_size, interpret, repbf_f, repbf_t, EffectSize, EffectSizeKind, Interpretation, RepBfConfig,
    RepBfResult,
};


