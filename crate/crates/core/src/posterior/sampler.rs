//! One-dimensional random-walk Metropolis-Hastings with multiple chains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Acceptance rate the step size is tuned toward during burn-in.
pub const TARGET_ACCEPTANCE: f64 = 0.35;
pub const MAX_RHAT: f64 = 1.05;
pub const ACCEPTANCE_BAND: (f64, f64) = (0.10, 0.60);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_chains: usize,
    pub n_burn: usize,
    /// Kept draws per chain.
    pub n_keep: usize,
    /// Initial proposal standard deviation; tuned during burn-in.
    pub step_scale: f64,
    /// Chains start overdispersed around this point.
    pub init: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_chains: 4,
            n_burn: 1000,
            n_keep: 25_000,
            step_scale: 1.0,
            init: 0.0,
            seed: 42,
        }
    }
}

/// Post-burn-in draws of all chains, concatenated in chain order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub draws: Vec<f64>,
    pub n_chains: usize,
    pub acceptance_rate: Vec<f64>,
    /// Split R-hat; `None` for a single chain.
    pub rhat: Option<f64>,
    pub step_sizes: Vec<f64>,
    pub seed: u64,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn chain_len(&self) -> usize {
        self.draws.len() / self.n_chains.max(1)
    }

    pub fn chains(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks(self.chain_len().max(1))
    }

    pub fn mean(&self) -> f64 {
        self.draws.iter().sum::<f64>() / self.draws.len() as f64
    }

    /// Sample standard deviation (n - 1 denominator).
    pub fn sd(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.draws.iter().map(|x| (x - m) * (x - m)).sum();
        (ss / (self.draws.len() as f64 - 1.0)).sqrt()
    }

    /// Wraps independent draws (e.g. from a closed-form approximation).
    pub fn from_independent(draws: Vec<f64>, seed: u64) -> Self {
        PosteriorDraws {
            draws,
            n_chains: 1,
            acceptance_rate: vec![1.0],
            rhat: None,
            step_sizes: vec![],
            seed,
        }
    }
}

/// Split R-hat over chains of equal length.
pub fn split_rhat(chains: &[&[f64]]) -> Option<f64> {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[c.len() - h..]]
        })
        .collect();
    let n = halves.first()?.len();
    let m = halves.len();
    if m < 2 || n < 2 {
        return None;
    }
    let means: Vec<f64> = halves.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    let between = n as f64 / (m as f64 - 1.0) * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let within = halves
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0))
        .sum::<f64>()
        / m as f64;
    if within == 0.0 {
        return if between == 0.0 { Some(1.0) } else { Some(f64::INFINITY) };
    }
    let var_plus = (n as f64 - 1.0) / n as f64 * within + between / n as f64;
    Some((var_plus / within).sqrt())
}

struct ChainOutput {
    draws: Vec<f64>,
    acceptance: f64,
    step: f64,
}

fn run_chain<F: Fn(f64) -> f64>(
    log_target: &F,
    lower: f64,
    config: &SamplerConfig,
    chain: usize,
) -> Result<ChainOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chain as u64);

    let eval = |x: f64| {
        if x < lower {
            f64::NEG_INFINITY
        } else {
            let y = log_target(x);
            if y.is_nan() {
                f64::NEG_INFINITY
            } else {
                y
            }
        }
    };

    // overdispersed start, folded back into the support
    let z: f64 = rng.sample(StandardNormal);
    let mut x = config.init + 2.0 * config.step_scale * z;
    if x < lower {
        x = lower + (lower - x);
    }
    let mut lp = eval(x);
    if !lp.is_finite() {
        x = config.init;
        lp = eval(x);
    }
    if !lp.is_finite() {
        return Err(Error::Diagnostics(format!(
            "log target is not finite at the initial point {}",
            config.init
        )));
    }

    let mut log_step = config.step_scale.ln();
    let mut step = config.step_scale;
    let mut accepted = 0usize;
    let mut draws = Vec::with_capacity(config.n_keep);
    for i in 0..config.n_burn + config.n_keep {
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let proposal = x + step * z;
        let lp_new = eval(proposal);
        let accept = lp_new > f64::NEG_INFINITY && u.ln() < lp_new - lp;
        if accept {
            x = proposal;
            lp = lp_new;
        }
        if i < config.n_burn {
            // Robbins-Monro on the log step size
            let hit = if accept { 1.0 } else { 0.0 };
            let gain = 0.1 / (1.0 + i as f64 / 100.0).sqrt();
            log_step += gain * (hit - TARGET_ACCEPTANCE);
            step = log_step.exp();
        } else {
            if accept {
                accepted += 1;
            }
            draws.push(x);
        }
    }
    Ok(ChainOutput {
        draws,
        acceptance: accepted as f64 / config.n_keep as f64,
        step,
    })
}

/// Samples a one-dimensional target with random-walk Metropolis-Hastings.
///
/// Proposals below `support_lower` are rejected. Each chain draws from its
/// own stream of a ChaCha generator seeded with `config.seed`, so the output
/// depends only on the arguments. Fails when split R-hat exceeds 1.05 or a
/// chain's post-tuning acceptance rate leaves `[0.10, 0.60]`.
pub fn sample_posterior<F>(log_target: F, support_lower: f64, config: &SamplerConfig) -> Result<PosteriorDraws>
where
    F: Fn(f64) -> f64 + Sync,
{
    if config.n_chains == 0 || config.n_keep < 4 {
        return domain("sampler needs at least one chain and four kept draws");
    }
    if !(config.step_scale > 0.0 && config.step_scale.is_finite()) {
        return domain(format!("step scale must be positive, got {}", config.step_scale));
    }
    if support_lower.is_nan() || !config.init.is_finite() || config.init < support_lower {
        return domain(format!(
            "initial point {} must lie in the support [{support_lower}, inf)",
            config.init
        ));
    }

    let outputs: Vec<ChainOutput> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(&log_target, support_lower, config, c))
        .collect::<Result<_>>()?;

    let rhat = if config.n_chains >= 2 {
        let chains: Vec<&[f64]> = outputs.iter().map(|o| o.draws.as_slice()).collect();
        split_rhat(&chains)
    } else {
        None
    };
    let acceptance_rate: Vec<f64> = outputs.iter().map(|o| o.acceptance).collect();
    let step_sizes: Vec<f64> = outputs.iter().map(|o| o.step).collect();
    let draws: Vec<f64> = outputs.into_iter().flat_map(|o| o.draws).collect();

    for (i, &a) in acceptance_rate.iter().enumerate() {
        if !(ACCEPTANCE_BAND.0..=ACCEPTANCE_BAND.1).contains(&a) {
            return Err(Error::Diagnostics(format!(
                "chain {i} acceptance rate {a:.3} outside [{}, {}]",
                ACCEPTANCE_BAND.0, ACCEPTANCE_BAND.1
            )));
        }
    }
    if let Some(r) = rhat {
        if !(r <= MAX_RHAT) {
            return Err(Error::Diagnostics(format!("R-hat {r:.4} exceeds {MAX_RHAT}")));
        }
    }

    Ok(PosteriorDraws {
        draws,
        n_chains: config.n_chains,
        acceptance_rate,
        rhat,
        step_sizes,
        seed: config.seed,
    })
}
