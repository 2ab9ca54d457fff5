//! Special functions shared by the densities.

pub use statrs::function::gamma::ln_gamma;

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln(sum(exp(xs)))` without overflow. Returns `-inf` for an empty slice or
/// when every element is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln(1 - Phi(z))`, the log of the standard normal upper tail.
pub fn ln_normal_sf(z: f64) -> f64 {
    let q = 0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2);
    if q > 0.0 {
        return q.ln();
    }
    // asymptotic expansion for the far tail
    let z2 = z * z;
    -0.5 * z2 - z.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
        + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
}
