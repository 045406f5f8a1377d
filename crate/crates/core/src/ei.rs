//! Extremal index from rolling-window block maxima.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Marginal;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EiVariant {
    /// `Z = n(1 − F(M))`.
    Bb,
    /// `Z = −n ln F(M)`.
    Northrop,
}

impl EiVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            EiVariant::Bb => "bb",
            EiVariant::Northrop => "northrop",
        }
    }
}

impl fmt::Display for EiVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EiVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bb" => Ok(EiVariant::Bb),
            "northrop" => Ok(EiVariant::Northrop),
            other => Err(Error::domain(format!("unknown EI variant `{other}`"))),
        }
    }
}

/// `round(√n)`, at least 1.
pub fn default_step(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(1)
}

/// Maxima of the windows `[t, t+n)` for t = 0, step, 2·step, … with t+n ≤ len.
pub fn rolling_bm(series: &[f64], n: usize, step: usize) -> Result<Vec<f64>> {
    if n == 0 || step == 0 {
        return Err(Error::domain("block size and step must be positive"));
    }
    if series.len() < n {
        return Err(Error::Insufficient(format!(
            "series of length {} is shorter than block size {n}",
            series.len()
        )));
    }
    // sliding-window maximum with a monotone deque of indices
    let mut out = Vec::with_capacity((series.len() - n) / step + 1);
    let mut dq: VecDeque<usize> = VecDeque::new();
    for (i, &x) in series.iter().enumerate() {
        while dq.back().is_some_and(|&j| series[j] <= x) {
            dq.pop_back();
        }
        dq.push_back(i);
        if i + 1 < n {
            continue;
        }
        let start = i + 1 - n;
        while dq.front().is_some_and(|&j| j < start) {
            dq.pop_front();
        }
        if start % step == 0 {
            out.push(series[dq[0]]);
        }
    }
    Ok(out)
}

/// Z statistics of block maxima under the marginal `cdf`.
pub fn z_stats(maxima: &[f64], cdf: &dyn Marginal, n: usize, variant: EiVariant) -> Result<Vec<f64>> {
    let nf = n as f64;
    maxima
        .iter()
        .map(|&m| {
            let u = cdf.cdf(m);
            if !(u > 0.0 && u < 1.0) {
                return Err(Error::domain(format!(
                    "marginal CDF returned {u} at block maximum {m}; it must lie strictly inside (0, 1)"
                )));
            }
            Ok(match variant {
                EiVariant::Bb => nf * (1.0 - u),
                EiVariant::Northrop => -nf * u.ln(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EiPoint {
    pub n: usize,
    pub theta_hat: f64,
    pub z_mean: f64,
    pub z_sd: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EiCurve {
    pub variant: EiVariant,
    pub points: Vec<EiPoint>,
    pub selected_n: usize,
    /// θ̂ at the selected block size, clamped to at most 1.
    pub selected_theta: f64,
    /// Unclamped `1/mean(Z)` at the selected block size.
    pub raw_theta: f64,
    pub clamped: bool,
}

impl EiCurve {
    /// Mean cluster duration `1/θ̂` at the selected block size.
    pub fn sojourn_time(&self) -> f64 {
        1.0 / self.selected_theta
    }
}

/// Geometric grid from 4 to len/4 (32 points by default).
pub fn default_ei_grid(len: usize, grid: &GridSpec) -> Result<Vec<usize>> {
    if len < 16 {
        return Err(Error::Insufficient(format!(
            "extremal index estimation needs at least 16 observations, got {len}"
        )));
    }
    grid.block_sizes(4, len / 4)
}

/// θ̂(n) = 1/mean(Z_n) per block size; the selected n maximizes the sample
/// sd of Z (ties to the smaller n).
pub fn theta_curve(
    series: &[f64],
    marginal: &dyn Marginal,
    block_sizes: &[usize],
    variant: EiVariant,
) -> Result<EiCurve> {
    if block_sizes.is_empty() {
        return Err(Error::domain("empty block-size grid"));
    }
    let cap = series.len() / 4;
    if let Some(&bad) = block_sizes.iter().find(|&&n| n == 0 || n > cap) {
        return Err(Error::domain(format!(
            "block size {bad} outside [1, {cap}] (at most a quarter of the series length)"
        )));
    }
    let points = block_sizes
        .par_iter()
        .map(|&n| {
            let tag = |e: Error| e.at_block_size(n as f64);
            let maxima = rolling_bm(series, n, default_step(n)).map_err(tag)?;
            let z = z_stats(&maxima, marginal, n, variant).map_err(tag)?;
            let k = z.len() as f64;
            let mean = z.iter().sum::<f64>() / k;
            let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            Ok(EiPoint {
                n,
                theta_hat: 1.0 / mean,
                z_mean: mean,
                z_sd: var.sqrt(),
                windows: z.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        let b = &points[best];
        if p.z_sd > b.z_sd || (p.z_sd == b.z_sd && p.n < b.n) {
            best = i;
        }
    }
    if !(points[best].z_sd > 0.0) {
        return Err(Error::Degenerate(
            "Z statistics have zero spread at every block size".into(),
        ));
    }
    let raw = points[best].theta_hat;
    Ok(EiCurve {
        variant,
        selected_n: points[best].n,
        selected_theta: raw.min(1.0),
        raw_theta: raw,
        clamped: raw > 1.0,
        points,
    })
}

/// Mean duration of an extreme cluster, `1/θ`.
pub fn sojourn_time(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::domain(format!("theta must lie in (0, 1], got {theta}")));
    }
    Ok(1.0 / theta)
}
