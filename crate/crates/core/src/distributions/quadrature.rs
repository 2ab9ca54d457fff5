//! Adaptive Gauss-Kronrod quadrature on finite and semi-infinite ranges.
//!
//! Infinite limits are mapped onto `[0, 1)` with `x = a + t / (1 - t)` before
//! subdivision, so every integral is evaluated on a bounded interval.

use crate::error::{domain, Error, Result};

/// Upper bound on the number of bisections performed by the adaptive driver.
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 2000;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Estimated absolute error of `value`.
    pub abs_error: f64,
    pub evaluations: usize,
    pub subdivisions: usize,
}

impl Integral {
    /// Achieved relative tolerance.
    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.abs_error == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.abs_error / self.value.abs()
        }
    }
}

/// Stopping rule for [`integrate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance {
            rel,
            abs: 0.0,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
        }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            domain(format!("integrand is not finite at x = {x:e} ({y})"))
        }
    };

    let fc = eval(center)?;
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * abs_sum;
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(roundoff);
    }
    Ok(Segment { a, b, value, error })
}

fn adaptive_finite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    let mut segments = vec![gauss_kronrod(f, a, b)?];
    let mut evaluations = 21;
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(Integral {
                value: total,
                abs_error: error,
                evaluations,
                subdivisions: segments.len() - 1,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| {
                if s.error > acc.1 {
                    (i, s.error)
                } else {
                    acc
                }
            });
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        let stuck = mid <= seg.a || mid >= seg.b;
        if segments.len() > tol.max_subdivisions || stuck {
            let rel_error = if total == 0.0 {
                f64::INFINITY
            } else {
                error / total.abs()
            };
            return Err(Error::NonConvergence {
                subdivisions: segments.len() - 1,
                rel_error,
            });
        }
        let left = gauss_kronrod(f, seg.a, mid)?;
        let right = gauss_kronrod(f, mid, seg.b)?;
        evaluations += 42;
        segments[worst] = left;
        segments.push(right);
    }
}

/// Integrates `f` over `[lo, hi]` to the requested relative tolerance.
///
/// Either limit may be infinite.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<Integral> {
    integrate_with(f, lo, hi, Tolerance::relative(rel_tol))
}

pub fn integrate_with<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<Integral> {
    integrate_ref(&f, lo, hi, tol)
}

fn integrate_ref<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: Tolerance) -> Result<Integral> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return domain(format!("invalid integration range [{lo}, {hi}]"));
    }
    if !(tol.rel > 0.0 || tol.abs > 0.0) {
        return domain("tolerance must be positive");
    }
    if lo == hi {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
            subdivisions: 0,
        });
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive_finite(f, lo, hi, tol),
        (true, false) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                let y = f(lo + t / s);
                if y == 0.0 {
                    0.0
                } else {
                    y / (s * s)
                }
            };
            adaptive_finite(&g, 0.0, 1.0, tol)
        }
        (false, true) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                let y = f(hi - t / s);
                if y == 0.0 {
                    0.0
                } else {
                    y / (s * s)
                }
            };
            adaptive_finite(&g, 0.0, 1.0, tol)
        }
        (false, false) => {
            let left = integrate_ref(f, f64::NEG_INFINITY, 0.0, tol)?;
            let right = integrate_ref(f, 0.0, f64::INFINITY, tol)?;
            Ok(Integral {
                value: left.value + right.value,
                abs_error: left.abs_error + right.abs_error,
                evaluations: left.evaluations + right.evaluations,
                subdivisions: left.subdivisions + right.subdivisions,
            })
        }
    }
}

/// Log of an integral of `exp(log_f)`, with its estimated relative error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    pub log_value: f64,
    pub rel_error: f64,
    /// Location of the integrand's maximum.
    pub mode: f64,
}

const GRID_POINTS: usize = 512;
/// Log-density drop at which the central window ends; the tails beyond it are
/// still integrated, against an absolute tolerance.
const WINDOW_DROP: f64 = 50.0;

fn grid_point(u: f64, lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => lo + u * (hi - lo),
        (true, false) => lo + u / (1.0 - u),
        (false, true) => hi - (1.0 - u) / u,
        // u in (0, 1) mapped onto the real line, symmetric about u = 1/2
        (false, false) => {
            let v = 2.0 * u - 1.0;
            v / (1.0 - v * v)
        }
    }
}

/// Integrates `exp(log_f)` over `[lo, hi]` without overflow or underflow.
///
/// The integrand is assumed unimodal on the scale of `hint` (or of a
/// 512-point grid when no hint is supplied). The result is shifted by the
/// maximum of `log_f`, so integrals of order `exp(-1000)` are representable.
pub fn log_integrate_exp<F: Fn(f64) -> f64>(
    log_f: F,
    lo: f64,
    hi: f64,
    hint: Option<(f64, f64)>,
    rel_tol: f64,
) -> Result<LogIntegral> {
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return domain(format!("invalid integration range [{lo}, {hi}]"));
    }
    let eval = |x: f64| {
        let y = log_f(x);
        if y.is_nan() {
            f64::NEG_INFINITY
        } else {
            y
        }
    };

    // coarse search for the mode
    let mut best_x = f64::NAN;
    let mut best_y = f64::NEG_INFINITY;
    let mut best_i = 0usize;
    let grid: Vec<f64> = (1..=GRID_POINTS)
        .map(|i| grid_point(i as f64 / (GRID_POINTS + 1) as f64, lo, hi))
        .collect();
    for (i, &x) in grid.iter().enumerate() {
        let y = eval(x);
        if y > best_y {
            best_x = x;
            best_y = y;
            best_i = i;
        }
    }
    let mut bracket = (
        if best_i == 0 { lo.max(best_x - (grid[1] - grid[0])) } else { grid[best_i - 1] },
        if best_i + 1 == grid.len() {
            hi.min(best_x + (grid[best_i] - grid[best_i - 1]))
        } else {
            grid[best_i + 1]
        },
    );
    if let Some((center, scale)) = hint {
        let c = center.clamp(lo, hi);
        let y = eval(c);
        if y > best_y && scale > 0.0 {
            best_x = c;
            best_y = y;
            bracket = ((c - scale).max(lo), (c + scale).min(hi));
            // widen until the bracket encloses a local maximum
            for _ in 0..60 {
                let (a, b) = bracket;
                let (ya, yb) = (eval(a), eval(b));
                if ya > best_y && a > lo {
                    bracket.0 = (c - 2.0 * (c - a)).max(lo);
                } else if yb > best_y && b < hi {
                    bracket.1 = (c + 2.0 * (b - c)).min(hi);
                } else {
                    break;
                }
            }
        }
    }
    if best_y == f64::NEG_INFINITY {
        return Err(Error::Underflow);
    }
    if best_y == f64::INFINITY {
        return domain("integrand is infinite");
    }

    // golden-section refinement inside the bracket
    let (mut a, mut b) = bracket;
    if !a.is_finite() {
        a = best_x - 1.0 - best_x.abs();
    }
    if !b.is_finite() {
        b = best_x + 1.0 + best_x.abs();
    }
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut y1 = eval(x1);
    let mut y2 = eval(x2);
    for _ in 0..80 {
        if y1 >= y2 {
            b = x2;
            x2 = x1;
            y2 = y1;
            x1 = b - ratio * (b - a);
            y1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            y1 = y2;
            x2 = a + ratio * (b - a);
            y2 = eval(x2);
        }
        if (b - a).abs() <= 1e-14 * (1.0 + best_x.abs()) {
            break;
        }
    }
    for (x, y) in [(x1, y1), (x2, y2), (a, eval(a)), (b, eval(b))] {
        if y > best_y {
            best_x = x;
            best_y = y;
        }
    }
    let spacing = bracket.1 - bracket.0;
    let mut step = if spacing.is_finite() && spacing > 0.0 { 0.5 * spacing } else { 1.0 };
    if let Some((_, scale)) = hint {
        if scale > 0.0 && scale < step {
            step = scale;
        }
    }
    let (log_value, rel_error) = log_integrate_peak(&eval, lo, hi, best_x, best_y, step, rel_tol, true)?;
    Ok(LogIntegral {
        log_value,
        rel_error,
        mode: best_x,
    })
}

/// Integrates `exp(log_f)` over `[lo, hi]` given the location and value of
/// its maximum.
///
/// The central window extends from the mode until `log_f` has dropped by 50,
/// found by doubling `step`. With `include_tails` the remainder of the range
/// is integrated too; otherwise it is neglected (relative size below
/// `exp(-50)` for log-concave integrands). Returns the log integral and its
/// estimated relative error.
#[allow(clippy::too_many_arguments)]
pub fn log_integrate_peak<F: Fn(f64) -> f64>(
    log_f: F,
    lo: f64,
    hi: f64,
    mode: f64,
    peak: f64,
    step: f64,
    rel_tol: f64,
    include_tails: bool,
) -> Result<(f64, f64)> {
    let step = step.max(1e-12 * (1.0 + mode.abs()));
    let find_edge = |dir: f64, limit: f64| -> f64 {
        let mut h = step;
        for _ in 0..200 {
            let x = mode + dir * h;
            if (dir < 0.0 && x <= limit) || (dir > 0.0 && x >= limit) {
                return limit;
            }
            if log_f(x) < peak - WINDOW_DROP {
                return x;
            }
            h *= 2.0;
        }
        limit
    };
    let left = find_edge(-1.0, lo);
    let right = find_edge(1.0, hi);

    let shifted = |x: f64| {
        let y = log_f(x) - peak;
        if y < -745.0 || y.is_nan() {
            0.0
        } else {
            y.exp()
        }
    };
    let tol = Tolerance::relative(rel_tol);
    let mut value = 0.0;
    let mut error = 0.0;
    for (a, b) in [(left, mode), (mode, right)] {
        if a < b && a.is_finite() && b.is_finite() {
            let part = integrate_with(shifted, a, b, tol)?;
            value += part.value;
            error += part.abs_error;
        }
    }
    if !(value > 0.0) {
        return Err(Error::Underflow);
    }
    if include_tails {
        let tail_tol = Tolerance::relative(rel_tol).with_abs(0.01 * rel_tol * value);
        for (a, b) in [(lo, left), (right, hi)] {
            if a < b {
                let part = integrate_with(shifted, a, b, tail_tol)?;
                value += part.value;
                error += part.abs_error;
            }
        }
    }
    Ok((peak + value.ln(), error / value))
}
