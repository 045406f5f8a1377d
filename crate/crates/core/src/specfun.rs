//! Special functions used by the block-maxima closed forms.
//!
//! Everything here is implemented directly from series, continued fractions
//! and asymptotic expansions so results do not depend on the platform libm
//! beyond `exp`, `ln` and `sqrt`.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Constants that appear in the harmonic-number and variance expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialConstants {
    pub euler_gamma: f64,
    pub pi: f64,
}

impl SpecialConstants {
    pub const STANDARD: SpecialConstants = SpecialConstants {
        euler_gamma: EULER_GAMMA,
        pi: PI,
    };
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Harmonic number switch-over to the asymptotic expansion.
const HARMONIC_EXACT_LIMIT: u64 = 1_000_000;

// ---------------------------------------------------------------------------
// Lambert W
// ---------------------------------------------------------------------------

/// Principal branch W₀ of the Lambert W function, `w·exp(w) = x`, `w ≥ -1`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch - 4.0 * f64::EPSILON {
        return Err(Error::domain(format!("lambert_w0 requires x >= -1/e, got {x}")));
    }
    if x <= branch {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = if x < -0.25 {
        // expansion about the branch point
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x.abs() <= 0.25 {
        x * (1.0 - x * (1.0 - 1.5 * x))
    } else if x <= E {
        x.ln_1p() * (1.0 - 0.5 * x.ln_1p().ln_1p() / (1.0 + x.ln_1p()))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(1e-300) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

// ---------------------------------------------------------------------------
// Error functions
// ---------------------------------------------------------------------------

/// `exp(-x²)` with the square split into an exactly representable head.
fn exp_neg_sq(x: f64) -> f64 {
    let x = x.abs();
    let hi = (x * 16.0).trunc() / 16.0;
    let lo = x - hi;
    (-hi * hi).exp() * (-lo * (x + hi)).exp()
}

/// erf for moderate |x| from the all-positive series
/// `erf(x) = 2/√π · e^{-x²} Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))`.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term.abs() <= sum.abs() * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * exp_neg_sq(x) * sum
}

/// erfc for x ≥ 2 from the Laplace continued fraction, evaluated with
/// the modified Lentz algorithm.
fn erfc_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for j in 1..5000 {
        let a = 0.5 * j as f64;
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    exp_neg_sq(x) / (SQRT_PI * f)
}

const ERF_SERIES_LIMIT: f64 = 2.0;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < ERF_SERIES_LIMIT {
        1.0 - erf_series(x)
    } else if x < 27.5 {
        erfc_cf(x)
    } else {
        0.0
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() < ERF_SERIES_LIMIT {
        erf_series(x)
    } else {
        x.signum() * (1.0 - erfc(x.abs()))
    }
}

/// Inverse complementary error function on (0, 2).
pub fn erfc_inv(y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 2.0) {
        return Err(Error::domain(format!("erfc_inv requires 0 < y < 2, got {y}")));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    if y > 1.0 {
        return Ok(-erfc_inv_upper(2.0 - y));
    }
    Ok(erfc_inv_upper(y))
}

/// erfc⁻¹ for y in (0, 1]: single-precision rational seed, then Halley.
fn erfc_inv_upper(y: f64) -> f64 {
    let z = 1.0 - y;
    let w = -(y * (2.0 - y)).ln();
    let p = if w < 5.0 {
        let w = w - 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        1.501_409_41 + p * w
    } else {
        let w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    let mut x = p * z;
    if w > 30.0 {
        // leading terms of the tail asymptotic erfc(x) ~ e^{-x²}/(x√π)
        let t = -(y * SQRT_PI).ln();
        x = (t - 0.5 * t.ln()).sqrt();
    }
    if y < 0.1 {
        // Newton on ln erfc(x) = ln y; well conditioned deep in the tail
        let ly = y.ln();
        for _ in 0..100 {
            let e = erfc(x);
            let slope = -FRAC_2_SQRT_PI * (-x * x - e.ln()).exp();
            let step = (e.ln() - ly) / slope;
            x -= step;
            if step.abs() <= 2.0 * f64::EPSILON * x.abs() {
                break;
            }
        }
        return x;
    }
    for _ in 0..50 {
        let f = erfc(x) - y;
        let fp = -FRAC_2_SQRT_PI * exp_neg_sq(x);
        let step = f / (fp + x * f);
        x -= step;
        if step.abs() <= 2.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

/// Inverse error function on (-1, 1).
pub fn erf_inv(z: f64) -> Result<f64> {
    if !(z > -1.0 && z < 1.0) {
        return Err(Error::domain(format!("erf_inv requires -1 < z < 1, got {z}")));
    }
    erfc_inv(1.0 - z)
}

// ---------------------------------------------------------------------------
// Gamma family
// ---------------------------------------------------------------------------

/// Stirling correction `lnΓ(x) − [(x−½)ln x − x + ½ln 2π]` for x ≥ 10.
fn ln_gamma_correction(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0
                + r2 * (-1.0 / 1680.0
                    + r2 * (1.0 / 1188.0
                        + r2 * (-691.0 / 360_360.0
                            + r2 * (1.0 / 156.0 + r2 * (-3617.0 / 122_400.0))))))))
}

/// lnΓ(x) for x > 0 (no argument checking).
pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    if x >= 10.0 {
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + ln_gamma_correction(x);
    }
    let mut prod = 1.0;
    let mut y = x;
    while y < 10.0 {
        prod *= y;
        y += 1.0;
    }
    ln_gamma_pos(y) - prod.ln()
}

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires finite x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

/// log B(a, b) for a, b > 0 (no argument checking). Symmetric in its
/// arguments by construction.
pub(crate) fn log_beta_pos(a: f64, b: f64) -> f64 {
    let p = a.min(b);
    let q = a.max(b);
    if p >= 10.0 {
        let corr = ln_gamma_correction(p) + ln_gamma_correction(q) - ln_gamma_correction(p + q);
        -0.5 * q.ln()
            + LN_SQRT_2PI
            + corr
            + (p - 0.5) * (p / (p + q)).ln()
            + q * (-p / (p + q)).ln_1p()
    } else if q >= 10.0 {
        let corr = ln_gamma_correction(q) - ln_gamma_correction(p + q);
        ln_gamma_pos(p) + corr + p - p * (p + q).ln() + (q - 0.5) * (-p / (p + q)).ln_1p()
    } else {
        ln_gamma_pos(p) + ln_gamma_pos(q) - ln_gamma_pos(p + q)
    }
}

/// Natural log of the beta function.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!(
            "log_beta requires finite positive arguments, got ({a}, {b})"
        )));
    }
    Ok(log_beta_pos(a, b))
}

/// log of the binomial coefficient C(m, k) for integers 0 ≤ k ≤ m.
pub(crate) fn log_choose(m: u64, k: u64) -> f64 {
    debug_assert!(k <= m);
    if k == 0 || k == m {
        return 0.0;
    }
    let (m, k) = (m as f64, k as f64);
    -(m + 1.0).ln() - log_beta_pos(m - k + 1.0, k + 1.0)
}

/// Digamma ψ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("digamma requires finite x > 0, got {x}")));
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let r2 = 1.0 / (y * y);
    let series = r2
        * (1.0 / 12.0
            - r2 * (1.0 / 120.0
                - r2 * (1.0 / 252.0
                    - r2 * (1.0 / 240.0
                        - r2 * (1.0 / 132.0 - r2 * (691.0 / 32_760.0 - r2 / 12.0))))));
    Ok(acc + y.ln() - 0.5 / y - series)
}

/// Trigamma ψ⁽¹⁾(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::domain(format!("trigamma requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc += 1.0 / (y * y);
        y += 1.0;
    }
    let r = 1.0 / y;
    let r2 = r * r;
    let tail = r
        + 0.5 * r2
        + r * r2
            * (1.0 / 6.0
                + r2 * (-1.0 / 30.0
                    + r2 * (1.0 / 42.0
                        + r2 * (-1.0 / 30.0
                            + r2 * (5.0 / 66.0 + r2 * (-691.0 / 2730.0 + r2 * (7.0 / 6.0)))))));
    Ok(acc + tail)
}

/// Harmonic number H_n = Σ_{i≤n} 1/i.
///
/// Summed exactly (smallest terms first) up to 10⁶, asymptotic beyond.
pub fn harmonic(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if n <= HARMONIC_EXACT_LIMIT {
        return (1..=n).rev().map(|i| 1.0 / i as f64).sum();
    }
    let nf = n as f64;
    EULER_GAMMA + nf.ln() + 0.5 / nf - 1.0 / (12.0 * nf * nf)
}

/// Harmonic number continued to real arguments, H(x) = ψ(x+1) + γ.
pub fn harmonic_real(x: f64) -> Result<f64> {
    if x.fract() == 0.0 && (0.0..=HARMONIC_EXACT_LIMIT as f64).contains(&x) {
        return Ok(harmonic(x as u64));
    }
    Ok(digamma(x + 1.0)? + EULER_GAMMA)
}
