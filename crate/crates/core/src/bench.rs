//! Classical tail-index estimators used as benchmarks, and the MAPE metric.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::golden_min;
use crate::sample::SortedSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    Hill,
    SchultzeSteinebach,
    MeerschaertScheffler,
    Smith,
}

impl BenchMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchMethod::Hill => "hill",
            BenchMethod::SchultzeSteinebach => "schultze_steinebach",
            BenchMethod::MeerschaertScheffler => "meerschaert_scheffler",
            BenchMethod::Smith => "smith",
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchEstimate {
    pub method: BenchMethod,
    pub xi_hat: f64,
    /// Number of upper order statistics used, where applicable.
    pub k_used: Option<usize>,
}

/// `floor(√N)`.
pub fn default_k(n: usize) -> usize {
    (n as f64).sqrt().floor() as usize
}

fn check_k(sample: &SortedSample, k: usize) -> Result<()> {
    let n = sample.len();
    if k < 2 || k >= n {
        return Err(Error::domain(format!("k = {k} outside [2, {}]", n - 1)));
    }
    Ok(())
}

fn check_positive(sample: &SortedSample) -> Result<()> {
    if sample.min() > 0.0 {
        Ok(())
    } else {
        Err(Error::Support(format!(
            "estimator requires strictly positive values, minimum is {}",
            sample.min()
        )))
    }
}

/// `(1/k) Σ_{i=1..k} ln(x_[N−i+1] / x_[N−k])`.
pub fn hill(sample: &SortedSample, k: usize) -> Result<BenchEstimate> {
    check_k(sample, k)?;
    check_positive(sample)?;
    let xs = sample.values();
    let n = xs.len();
    let base = xs[n - k - 1].ln();
    let xi = xs[n - k..].iter().map(|x| x.ln() - base).sum::<f64>() / k as f64;
    Ok(BenchEstimate {
        method: BenchMethod::Hill,
        xi_hat: xi,
        k_used: Some(k),
    })
}

/// OLS slope of `ln x_[N−i+1]` against `ln((N+1)/i)`, i = 1..k.
pub fn schultze_steinebach(sample: &SortedSample, k: usize) -> Result<BenchEstimate> {
    check_k(sample, k)?;
    check_positive(sample)?;
    let xs = sample.values();
    let n = xs.len();
    let np1 = (n + 1) as f64;
    let pts: Vec<(f64, f64)> = (1..=k)
        .map(|i| ((np1 / i as f64).ln(), xs[n - i].ln()))
        .collect();
    let kf = k as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / kf;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / kf;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    Ok(BenchEstimate {
        method: BenchMethod::SchultzeSteinebach,
        xi_hat: sxy / sxx,
        k_used: Some(k),
    })
}

/// `ln⁺(Σ(x − x̄)²) / (2 ln N)`.
pub fn meerschaert_scheffler(values: &[f64]) -> Result<BenchEstimate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Insufficient("need at least 2 observations".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    if !(ss > 0.0) {
        return Err(Error::Degenerate("constant sample".into()));
    }
    Ok(BenchEstimate {
        method: BenchMethod::MeerschaertScheffler,
        xi_hat: ss.ln().max(0.0) / (2.0 * (n as f64).ln()),
        k_used: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GpdFit {
    pub xi: f64,
    pub sigma: f64,
    pub log_likelihood: f64,
}

/// Maximum-likelihood GPD(σ, ξ) fit to non-negative excesses, restricted to
/// ξ ≥ −1.
///
/// With `τ = ξ/σ` the likelihood profiles to a function of τ alone:
/// `ξ(τ) = mean ln(1 + τy)` and `ℓ(τ) = −k ln(ξ(τ)/τ) − k(1 + ξ(τ))`. That is
/// maximized by a scan over `s = τ·max(y)` followed by golden-section search.
pub fn gpd_fit(excesses: &[f64]) -> Result<GpdFit> {
    let k = excesses.len();
    if k < 2 {
        return Err(Error::Insufficient(format!("GPD fit needs at least 2 excesses, got {k}")));
    }
    if let Some(bad) = excesses.iter().find(|y| !(**y >= 0.0 && y.is_finite())) {
        return Err(Error::domain(format!("excesses must be finite and non-negative, got {bad}")));
    }
    let ymax = excesses.iter().copied().fold(0.0, f64::max);
    if ymax == 0.0 {
        return Err(Error::Degenerate("all excesses are zero".into()));
    }
    let kf = k as f64;
    let ybar = excesses.iter().sum::<f64>() / kf;
    // (ξ, σ) at s = τ·ymax; None outside the admissible region
    let params = |s: f64| -> Option<(f64, f64)> {
        if s <= -1.0 {
            return None;
        }
        if s.abs() < 1e-12 {
            return Some((0.0, ybar));
        }
        let tau = s / ymax;
        let xi = excesses.iter().map(|y| (tau * y).ln_1p()).sum::<f64>() / kf;
        if xi < -1.0 || !xi.is_finite() {
            return None;
        }
        Some((xi, xi / tau))
    };
    let loglik = |s: f64| match params(s) {
        Some((xi, sigma)) if sigma > 0.0 => -kf * sigma.ln() - kf * (1.0 + xi),
        _ => f64::NEG_INFINITY,
    };

    let mut grid: Vec<f64> = Vec::new();
    grid.extend((2..=12).map(|m| -1.0 + 10f64.powi(-m)));
    grid.extend((1..20).map(|j| -(j as f64) / 20.0));
    grid.push(0.0);
    grid.extend((0..=280).map(|j| 10f64.powf(-6.0 + 0.05 * j as f64)));
    grid.sort_by(f64::total_cmp);
    let vals: Vec<f64> = grid.iter().map(|&s| loglik(s)).collect();
    let best = vals
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > vals[b] { i } else { b });
    if vals[best] == f64::NEG_INFINITY {
        return Err(Error::NonConvergence {
            what: "GPD likelihood scan",
            iterations: grid.len(),
        });
    }
    if best == grid.len() - 1 {
        return Err(Error::NonConvergence {
            what: "GPD likelihood (maximum at the search boundary)",
            iterations: grid.len(),
        });
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[best + 1];
    let (s, neg) = golden_min(|s| -loglik(s), lo, hi, 1e-13 * lo.abs().max(hi.abs()).max(1e-6));
    let (s, ll) = if -neg >= vals[best] { (s, -neg) } else { (grid[best], vals[best]) };
    let (xi, sigma) = params(s).ok_or(Error::NonConvergence {
        what: "GPD likelihood refinement",
        iterations: 0,
    })?;
    Ok(GpdFit {
        xi,
        sigma,
        log_likelihood: ll,
    })
}

/// GPD maximum likelihood on the k excesses over `x_[N−k]`.
pub fn smith(sample: &SortedSample, k: usize) -> Result<BenchEstimate> {
    const MIN_EXCESSES: usize = 10;
    if k < MIN_EXCESSES {
        return Err(Error::Insufficient(format!(
            "smith needs at least {MIN_EXCESSES} exceedances, got {k}"
        )));
    }
    check_k(sample, k)?;
    let xs = sample.values();
    let n = xs.len();
    let u = xs[n - k - 1];
    let excesses: Vec<f64> = xs[n - k..].iter().map(|x| x - u).collect();
    let fit = gpd_fit(&excesses)?;
    Ok(BenchEstimate {
        method: BenchMethod::Smith,
        xi_hat: fit.xi,
        k_used: Some(k),
    })
}

/// Mean absolute percentage error `100·mean(|est − truth|/|truth|)`.
pub fn mape(estimates: &[f64], truth: f64) -> Result<f64> {
    if truth == 0.0 || !truth.is_finite() {
        return Err(Error::domain(format!("MAPE needs a finite nonzero truth, got {truth}")));
    }
    if estimates.is_empty() {
        return Err(Error::Insufficient("no estimates".into()));
    }
    let s: f64 = estimates.iter().map(|e| (e - truth).abs() / truth.abs()).sum();
    Ok(100.0 * s / estimates.len() as f64)
}
