use proptest::prelude::*;
use repbf_core::distributions::integrate_adaptive;
use repbf_core::distributions::special::{ln_beta, ln_gamma};
use repbf_core::posterior::{
    log_normalizing_constant, log_normalizing_constant_near, log_unnormalized_posterior_delta,
    log_unnormalized_posterior_f2, sample_delta_posterior, sample_f2_posterior, sample_normal_approximation,
    FTestStudy, SamplerConfig, TTestStudy,
};

/// Integrating the Poisson weights over lambda gives 2 for every k, so the
/// f squared normalizer is `(2 / N) sum_k g_k(F)` with `g_k` the F mixture
/// components.
fn f2_normalizer_series(s: &FTestStudy) -> f64 {
    let (a0, b) = (0.5 * s.df_effect, 0.5 * s.df_error);
    let y = s.df_effect * s.f_value / s.df_error;
    let mut total = 0.0;
    for k in 0..100_000 {
        let a = a0 + k as f64;
        let ln_g = (s.df_effect / s.df_error).ln() + (a - 1.0) * y.ln() - (a + b) * y.ln_1p() - ln_beta(a, b);
        let g = ln_g.exp();
        total += g;
        if k > 10 && g < 1e-18 * total {
            break;
        }
    }
    (2.0 * total / s.n_total as f64).ln()
}

/// `int f(t; df, delta sqrt(n)) d delta = E[chi_df] / sqrt(df n)`.
fn delta_normalizer_exact(s: &TTestStudy) -> f64 {
    let nu = s.df;
    let chi_mean = std::f64::consts::SQRT_2 * (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)).exp();
    chi_mean.ln() - 0.5 * (nu * s.n_eff()).ln()
}

fn grid_moments(log_f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
    let ls: Vec<f64> = xs.iter().map(|&x| log_f(x)).collect();
    let m = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ws: Vec<f64> = ls.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = ws.iter().sum();
    let mean = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / z;
    let var = xs.iter().zip(&ws).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() / z;
    (mean, var.sqrt())
}

fn example2_original() -> FTestStudy {
    FTestStudy::new(4.97, 2.0, 81.0, 84).unwrap()
}

#[test]
fn example2_posterior_mode() {
    let s = example2_original();
    let grid: Vec<f64> = (0..=4000).map(|i| i as f64 * 1e-4).collect();
    let argmax = grid
        .iter()
        .cloned()
        .max_by(|a, b| {
            let fa = log_unnormalized_posterior_f2(*a, &s).unwrap();
            let fb = log_unnormalized_posterior_f2(*b, &s).unwrap();
            fa.partial_cmp(&fb).unwrap()
        })
        .unwrap();
    assert!((argmax - 0.12).abs() < 0.015, "mode {argmax}");
}

#[test]
fn example2_sampled_mean_matches_grid() {
    let s = example2_original();
    let draws = sample_f2_posterior(&s, &SamplerConfig::default()).unwrap();
    assert!(draws.draws.iter().all(|&x| x >= 0.0));
    let (mean, _) = grid_moments(|f2| s.ln_likelihood(f2), 0.0, 1.5);
    assert!((draws.mean() / mean - 1.0).abs() < 0.02, "{} vs {mean}", draws.mean());
    assert_eq!(draws.n_chains, 4);
    assert_eq!(draws.len(), 100_000);
    assert!(draws.rhat.unwrap() <= 1.05);
}

#[test]
fn sampling_is_reproducible() {
    let s = example2_original();
    let config = SamplerConfig {
        n_keep: 3000,
        seed: 2024,
        ..Default::default()
    };
    let a = sample_f2_posterior(&s, &config).unwrap();
    let b = sample_f2_posterior(&s, &config).unwrap();
    assert_eq!(a, b);
}

#[test]
fn example3_delta_posterior_is_negative() {
    let s = TTestStudy::new(-3.953, 20.809, 15, 15).unwrap();
    let grid: Vec<f64> = (-4000..=4000).map(|i| i as f64 * 1e-3).collect();
    let argmax = grid
        .iter()
        .cloned()
        .max_by(|a, b| {
            let fa = log_unnormalized_posterior_delta(*a, &s).unwrap();
            let fb = log_unnormalized_posterior_delta(*b, &s).unwrap();
            fa.partial_cmp(&fb).unwrap()
        })
        .unwrap();
    assert!(argmax < -0.5, "argmax {argmax}");
}

#[test]
fn positive_t_prefers_positive_delta() {
    let s = TTestStudy::new(2.0, 28.0, 15, 15).unwrap();
    for d in [0.1, 0.5, 1.0, 2.0] {
        let pos = log_unnormalized_posterior_delta(d, &s).unwrap();
        let neg = log_unnormalized_posterior_delta(-d, &s).unwrap();
        assert!(pos > neg, "{d}");
    }
}

#[test]
fn normalizers_match_closed_forms() {
    for s in [
        example2_original(),
        FTestStudy::new(4.36, 2.0, 92.0, 98).unwrap(),
        FTestStudy::new(0.107, 1.0, 99.0, 102).unwrap(),
        FTestStudy::new(22.0, 4.0, 300.0, 305).unwrap(),
    ] {
        let hint = s.posterior_hint();
        let z = log_normalizing_constant_near(|f2| s.ln_likelihood(f2), 0.0, Some(hint)).unwrap();
        let exact = f2_normalizer_series(&s);
        assert!((z - exact).abs() < 1e-8, "{s:?}: {z} vs {exact}");
    }
    for s in [
        TTestStudy::new(2.0, 28.0, 15, 15).unwrap(),
        TTestStudy::new(-3.953, 20.809, 15, 15).unwrap(),
        TTestStudy::one_sample(0.3, 9.0, 10).unwrap(),
        TTestStudy::new(9.0, 198.0, 100, 100).unwrap(),
    ] {
        let z = log_normalizing_constant(|d| s.ln_likelihood(d), f64::NEG_INFINITY).unwrap();
        let exact = delta_normalizer_exact(&s);
        assert!((z - exact).abs() < 1e-8, "{s:?}: {z} vs {exact}");
    }
}

#[test]
fn example1_interaction_posterior_is_proper() {
    let s = FTestStudy::new(4.36, 2.0, 92.0, 98).unwrap();
    let z = log_normalizing_constant(|f2| s.ln_likelihood(f2), 0.0).unwrap();
    let density = |f2: f64| (s.ln_likelihood(f2) - z).exp();
    let mass: f64 = [0.0, 0.05, 0.1, 0.2, 0.5, f64::INFINITY]
        .windows(2)
        .map(|w| integrate_adaptive(density, w[0], w[1], 1e-11).unwrap().value)
        .sum();
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
}

#[test]
fn exact_delta_moments_match_quadrature() {
    for s in [
        TTestStudy::new(2.0, 28.0, 15, 15).unwrap(),
        TTestStudy::new(-3.953, 20.809, 15, 15).unwrap(),
        TTestStudy::one_sample(5.0, 4.0, 5).unwrap(),
    ] {
        let (mean, sd) = s.posterior_moments();
        let (gm, gs) = grid_moments(|d| s.ln_likelihood(d), mean - 25.0 * sd, mean + 25.0 * sd);
        assert!((mean - gm).abs() < 1e-6 * (1.0 + gm.abs()), "{mean} vs {gm}");
        assert!((sd / gs - 1.0).abs() < 1e-6, "{sd} vs {gs}");
    }
}

#[test]
fn normal_approximation_tracks_exact_moments() {
    let s = TTestStudy::new(2.0, 28.0, 15, 15).unwrap();
    let (mean, sd) = s.posterior_moments();
    let d = sample_normal_approximation(&s, 100_000, 9).unwrap();
    assert!((d.mean() - mean).abs() < 0.01 * sd * 2.0);
    assert!((d.sd() / sd - 1.0).abs() < 0.01);
}

/// Boundary-piled f squared posteriors mix slowly enough that the sd of
/// 100k draws wanders by about 1% between seeds; the moment sweeps keep
/// four times as many.
fn sweep_config(seed: u64) -> SamplerConfig {
    SamplerConfig {
        n_keep: 100_000,
        seed,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn f2_posterior_is_proper(f in 0.0f64..30.0, df1 in 1u32..6, n in 10u64..300) {
        let df1 = df1 as f64;
        let n = n.max(df1 as u64 + 3);
        let s = FTestStudy::new(f, df1, n as f64 - df1 - 1.0, n).unwrap();
        let z = log_normalizing_constant_near(|x| s.ln_likelihood(x), 0.0, Some(s.posterior_hint())).unwrap();
        let (c, w) = s.posterior_hint();
        let w = w.max(1.0 / n as f64);
        let cuts = [0.0, (c - 4.0 * w).max(0.0) * 0.5, (c - 4.0 * w).max(0.0), c, c + 4.0 * w, c + 12.0 * w, f64::INFINITY];
        let mass: f64 = cuts.windows(2)
            .filter(|p| p[1] > p[0])
            .map(|p| integrate_adaptive(|x| (s.ln_likelihood(x) - z).exp(), p[0], p[1], 1e-10).unwrap().value)
            .sum();
        prop_assert!((mass - 1.0).abs() < 1e-6, "mass {}", mass);
        prop_assert!((z - f2_normalizer_series(&s)).abs() < 1e-7);
    }

    #[test]
    fn sampled_f2_moments_match_quadrature(f in 0.5f64..15.0, df1 in 1u32..5, n in 30u64..200, seed in any::<u64>()) {
        let df1 = df1 as f64;
        let s = FTestStudy::new(f, df1, n as f64 - df1 - 1.0, n).unwrap();
        let draws = sample_f2_posterior(&s, &sweep_config(seed)).unwrap();
        let (c, w) = s.posterior_hint();
        let (gm, gs) = grid_moments(|x| s.ln_likelihood(x), 0.0, c + 30.0 * w);
        prop_assert!((draws.mean() / gm - 1.0).abs() < 0.02, "mean {} vs {}", draws.mean(), gm);
        prop_assert!((draws.sd() / gs - 1.0).abs() < 0.02, "sd {} vs {}", draws.sd(), gs);
    }

    #[test]
    fn sampled_delta_moments_match_exact(t in -6.0f64..6.0, n1 in 5u64..60, n2 in 5u64..60, seed in any::<u64>()) {
        let s = TTestStudy::new(t, (n1 + n2 - 2) as f64, n1, n2).unwrap();
        let draws = sample_delta_posterior(&s, &sweep_config(seed)).unwrap();
        let (mean, sd) = s.posterior_moments();
        // relative to the posterior sd, since the mean can sit at zero
        prop_assert!((draws.mean() - mean).abs() < 0.02 * sd.max(mean.abs()), "mean {} vs {}", draws.mean(), mean);
        prop_assert!((draws.sd() / sd - 1.0).abs() < 0.02, "sd {} vs {}", draws.sd(), sd);
        if t.abs() > 1.0 {
            prop_assert_eq!(draws.mean().signum(), t.signum());
        }
    }
}
