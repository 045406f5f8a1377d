//! Parametric tail models, the empirical CDF and marginal fitting.

use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::brent_root;
use crate::sample::SortedSample;
use crate::specfun::{erf, erfc, erfc_inv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    HalfNormal,
    /// Pareto type I written as GPD(1/ξ, 1, ξ): `F(x) = 1 − (ξx)^(−1/ξ)` on `x > 1/ξ`.
    ParetoGpd,
    /// Exponential with mean ξ.
    Exponential,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Gaussian,
        Family::HalfNormal,
        Family::ParetoGpd,
        Family::Exponential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::HalfNormal => "halfnormal",
            Family::ParetoGpd => "pareto",
            Family::Exponential => "exponential",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "halfnormal" | "half_normal" | "half-normal" => Ok(Family::HalfNormal),
            "pareto" | "gpd" | "pareto_gpd" => Ok(Family::ParetoGpd),
            "exponential" | "exp" => Ok(Family::Exponential),
            other => Err(Error::domain(format!("unknown family `{other}`"))),
        }
    }
}

/// A one-parameter tail model: σ for the Gaussian families, ξ otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    family: Family,
    param: f64,
}

impl TailModel {
    pub fn new(family: Family, param: f64) -> Result<Self> {
        if !(param > 0.0 && param.is_finite()) {
            return Err(Error::domain(format!(
                "{family} parameter must be positive and finite, got {param}"
            )));
        }
        Ok(Self { family, param })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(Family::Gaussian, sigma)
    }

    pub fn half_normal(sigma: f64) -> Result<Self> {
        Self::new(Family::HalfNormal, sigma)
    }

    pub fn pareto(xi: f64) -> Result<Self> {
        Self::new(Family::ParetoGpd, xi)
    }

    pub fn exponential(xi: f64) -> Result<Self> {
        Self::new(Family::Exponential, xi)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn param(&self) -> f64 {
        self.param
    }

    /// Lower end of the support (closed for the half-line families).
    pub fn support_min(&self) -> f64 {
        match self.family {
            Family::Gaussian => f64::NEG_INFINITY,
            Family::HalfNormal | Family::Exponential => 0.0,
            Family::ParetoGpd => 1.0 / self.param,
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        x.is_finite() && x >= self.support_min()
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        let p = self.param;
        match self.family {
            Family::Gaussian => -0.5 * (x / p).powi(2) - p.ln() - 0.5 * (2.0 * PI).ln(),
            Family::HalfNormal => -0.5 * (x / p).powi(2) - p.ln() + 0.5 * FRAC_2_PI.ln(),
            Family::ParetoGpd => -(1.0 + 1.0 / p) * (p * x).ln(),
            Family::Exponential => -x / p - p.ln(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x < self.support_min() {
            return 0.0;
        }
        let p = self.param;
        match self.family {
            Family::Gaussian => 0.5 * erfc(-x / (p * SQRT_2)),
            Family::HalfNormal => erf(x / (p * SQRT_2)),
            Family::ParetoGpd => -(-(p * x).ln() / p).exp_m1(),
            Family::Exponential => -(-x / p).exp_m1(),
        }
    }

    /// Survival function `1 − F(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x < self.support_min() {
            return 1.0;
        }
        let p = self.param;
        match self.family {
            Family::Gaussian => 0.5 * erfc(x / (p * SQRT_2)),
            Family::HalfNormal => erfc(x / (p * SQRT_2)),
            Family::ParetoGpd => (-(p * x).ln() / p).exp(),
            Family::Exponential => (-x / p).exp(),
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_open_unit(u)?;
        let p = self.param;
        Ok(match self.family {
            Family::Gaussian => -p * SQRT_2 * erfc_inv(2.0 * u)?,
            Family::HalfNormal => p * SQRT_2 * erfc_inv(1.0 - u)?,
            Family::ParetoGpd => (-p * (-u).ln_1p()).exp() / p,
            Family::Exponential => -p * (-u).ln_1p(),
        })
    }

    /// Inverse survival function: the x with `1 − F(x) = s`.
    pub fn isf(&self, s: f64) -> Result<f64> {
        check_open_unit(s)?;
        let p = self.param;
        Ok(match self.family {
            Family::Gaussian => p * SQRT_2 * erfc_inv(2.0 * s)?,
            Family::HalfNormal => p * SQRT_2 * erfc_inv(s)?,
            Family::ParetoGpd => (-p * s.ln()).exp() / p,
            Family::Exponential => -p * s.ln(),
        })
    }

    /// Score `f'(x)/f(x)` inside the support.
    pub fn score(&self, x: f64) -> f64 {
        let p = self.param;
        match self.family {
            Family::Gaussian | Family::HalfNormal => -x / (p * p),
            Family::ParetoGpd => -(1.0 + p) / (p * x),
            Family::Exponential => -1.0 / p,
        }
    }

    pub fn mode(&self) -> f64 {
        match self.family {
            Family::Gaussian | Family::HalfNormal | Family::Exponential => 0.0,
            Family::ParetoGpd => 1.0 / self.param,
        }
    }

    pub fn mean(&self) -> Result<f64> {
        let p = self.param;
        match self.family {
            Family::Gaussian => Ok(0.0),
            Family::HalfNormal => Ok(p * FRAC_2_PI.sqrt()),
            Family::ParetoGpd if p >= 1.0 => Err(Error::NotExist {
                quantity: "mean",
                xi: p,
            }),
            Family::ParetoGpd => Ok(1.0 / (p * (1.0 - p))),
            Family::Exponential => Ok(p),
        }
    }

    /// Log-likelihood of a sample; `-inf` if any point lies outside the support.
    pub fn log_likelihood(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| self.log_pdf(x)).sum()
    }
}

fn check_open_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability must lie in (0, 1), got {u}")))
    }
}

/// A marginal CDF `F_X` as consumed by the extremal index machinery.
pub trait Marginal: Sync {
    fn cdf(&self, x: f64) -> f64;
}

impl Marginal for TailModel {
    fn cdf(&self, x: f64) -> f64 {
        TailModel::cdf(self, x)
    }
}

/// Step ECDF with Weibull plotting positions `F̂(x_[i]) = i/(N+1)`.
///
/// Ties take the highest rank. Values below the minimum map to `1/(N+1)`, so
/// the result always lies strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(sample: &SortedSample) -> Self {
        Self {
            sorted: sample.values().to_vec(),
        }
    }

    /// Build from unsorted values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Insufficient("empirical CDF of an empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::domain("empirical CDF input contains NaN"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let rank = self.sorted.partition_point(|&v| v <= x).max(1);
        rank as f64 / (self.sorted.len() as f64 + 1.0)
    }
}

impl Marginal for EmpiricalCdf {
    fn cdf(&self, x: f64) -> f64 {
        self.evaluate(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AicEntry {
    pub model: TailModel,
    pub log_likelihood: f64,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalFit {
    pub selected: TailModel,
    /// One row per candidate family that supports the data, in input order.
    pub table: Vec<AicEntry>,
    /// Candidates rejected because some observation lies outside their support.
    pub unsupported: Vec<Family>,
}

/// Maximum-likelihood fit of each candidate family, selected by minimal AIC.
pub fn fit_marginal(sample: &SortedSample, families: &[Family]) -> Result<MarginalFit> {
    const MIN_SIZE: usize = 30;
    if sample.len() < MIN_SIZE {
        return Err(Error::Insufficient(format!(
            "marginal fitting needs at least {MIN_SIZE} observations, got {}",
            sample.len()
        )));
    }
    if families.is_empty() {
        return Err(Error::domain("no candidate families given"));
    }
    if sample.is_constant() {
        return Err(Error::Degenerate(
            "constant sample has a degenerate likelihood".into(),
        ));
    }
    let xs = sample.values();
    let mut table = Vec::new();
    let mut unsupported = Vec::new();
    for &family in families {
        match fit_family(family, xs)? {
            Some(model) => {
                let ll = model.log_likelihood(xs);
                table.push(AicEntry {
                    model,
                    log_likelihood: ll,
                    aic: 2.0 - 2.0 * ll,
                });
            }
            None => unsupported.push(family),
        }
    }
    let selected = table
        .iter()
        .min_by(|a, b| a.aic.total_cmp(&b.aic))
        .map(|e| e.model)
        .ok_or_else(|| {
            Error::Support(format!(
                "sample range [{}, {}] lies outside the support of every candidate family",
                sample.min(),
                sample.max()
            ))
        })?;
    Ok(MarginalFit {
        selected,
        table,
        unsupported,
    })
}

fn fit_family(family: Family, xs: &[f64]) -> Result<Option<TailModel>> {
    let n = xs.len() as f64;
    let min = xs[0];
    let param = match family {
        Family::Gaussian => (xs.iter().map(|x| x * x).sum::<f64>() / n).sqrt(),
        Family::HalfNormal if min < 0.0 => return Ok(None),
        Family::HalfNormal => (xs.iter().map(|x| x * x).sum::<f64>() / n).sqrt(),
        Family::Exponential if min < 0.0 => return Ok(None),
        Family::Exponential => xs.iter().sum::<f64>() / n,
        Family::ParetoGpd if min <= 0.0 => return Ok(None),
        Family::ParetoGpd => pareto_mle(xs)?,
    };
    TailModel::new(family, param).map(Some)
}

/// MLE of ξ for `f(x) = (ξx)^(−1−1/ξ)` subject to `ξ ≥ 1/x_min`.
///
/// With `c = mean(ln x)` the score has the sign of `h(ξ) = ln ξ − ξ + c − 1`,
/// which is concave with its peak at ξ = 1. The likelihood therefore has at
/// most one interior local maximum, the larger root of h.
fn pareto_mle(xs: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let c = xs.iter().map(|x| x.ln()).sum::<f64>() / n;
    let lower = 1.0 / xs[0];
    let loglik = |xi: f64| -(1.0 + 1.0 / xi) * (xi.ln() + c) * n;
    let h = |xi: f64| xi.ln() - xi + c - 1.0;
    if h(1.0) <= 0.0 {
        return Ok(lower);
    }
    let mut hi = 2.0_f64.max(2.0 * c);
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    let root = brent_root(h, 1.0, hi, 1e-14)?;
    if root <= lower {
        return Ok(lower);
    }
    Ok(if loglik(root) >= loglik(lower) { root } else { lower })
}
