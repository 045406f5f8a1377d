//! Weighted least-squares extreme value index estimates from a BM curve.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::plateau::{find_plateau, fit_sd_spline, PlateauRange, SdSpline, DEFAULT_DELTA};
use crate::specfun::{harmonic, harmonic_real, trigamma};
use crate::subsample::{bm_curve, BmCurve, BmPoint, SortedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EviMethod {
    /// MPMR against ln n, weights 1/n.
    MpmrWlse,
    /// EMR against H_n, weights ψ'(n+1).
    EmrWlse,
}

impl EviMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EviMethod::MpmrWlse => "mpmr_wlse",
            EviMethod::EmrWlse => "emr_wlse",
        }
    }
}

impl fmt::Display for EviMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EviFit {
    pub method: EviMethod,
    pub xi_hat: f64,
    pub intercept: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub points_used: usize,
    pub weighted_r2: f64,
}

impl BmPoint {
    /// WLSE weight for the MPMR regression.
    pub fn mpmr_weight(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// WLSE weight for the EMR regression, `π²/6 − Σ_{i≤n} 1/i²`.
    pub fn emr_weight(&self) -> f64 {
        trigamma(self.n as f64 + 1.0).unwrap_or(0.0)
    }
}

/// Harmonic number for a (possibly real) block size.
pub fn harmonic_at(n: f64) -> Result<f64> {
    if n >= 1.0 && n.fract() == 0.0 && n < 9.0e15 {
        Ok(harmonic(n as u64))
    } else {
        harmonic_real(n)
    }
}

/// Weighted least squares `y ≈ a + b·x`; returns (b, a, weighted R²).
pub fn weighted_least_squares(x: &[f64], y: &[f64], w: &[f64]) -> Result<(f64, f64, f64)> {
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return Err(Error::Degenerate("weights sum to zero".into()));
    }
    let xbar = x.iter().zip(w).map(|(x, w)| w * x).sum::<f64>() / sw;
    let ybar = y.iter().zip(w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        let dx = xi - xbar;
        let dy = yi - ybar;
        sxx += wi * dx * dx;
        sxy += wi * dx * dy;
        syy += wi * dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("regressor has no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| wi * (yi - intercept - slope * xi).powi(2))
        .sum();
    // a response constant up to rounding is fitted exactly
    let y_scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let flat = syy <= sw * (64.0 * f64::EPSILON * y_scale).powi(2);
    let r2 = if flat { 1.0 } else { 1.0 - ss_res / syy };
    Ok((slope, intercept, r2))
}

fn fit(curve: &BmCurve, range: &PlateauRange, method: EviMethod) -> Result<EviFit> {
    let pts: Vec<&BmPoint> = curve
        .points
        .iter()
        .filter(|p| range.contains(p.n as f64))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Insufficient(format!(
            "{method} needs at least 3 grid points in [{:.6}, {:.6}], found {}",
            range.n_min,
            range.n_max,
            pts.len()
        )));
    }
    let (x, y, w): (Vec<f64>, Vec<f64>, Vec<f64>) = match method {
        EviMethod::MpmrWlse => (
            pts.iter().map(|p| (p.n as f64).ln()).collect(),
            pts.iter().map(|p| p.mpmr).collect(),
            pts.iter().map(|p| p.mpmr_weight()).collect(),
        ),
        EviMethod::EmrWlse => (
            pts.iter()
                .map(|p| harmonic_at(p.n as f64))
                .collect::<Result<_>>()?,
            pts.iter().map(|p| p.emr).collect(),
            pts.iter()
                .map(|p| trigamma(p.n as f64 + 1.0))
                .collect::<Result<_>>()?,
        ),
    };
    let (slope, intercept, r2) = weighted_least_squares(&x, &y, &w)?;
    Ok(EviFit {
        method,
        xi_hat: slope,
        intercept,
        n_min: range.n_min,
        n_max: range.n_max,
        points_used: pts.len(),
        weighted_r2: r2,
    })
}

/// Slope of MPMR against ln n over the plateau range.
pub fn wlse_mpmr(curve: &BmCurve, range: &PlateauRange) -> Result<EviFit> {
    fit(curve, range, EviMethod::MpmrWlse)
}

/// Slope of EMR against the harmonic numbers over the plateau range.
pub fn wlse_emr(curve: &BmCurve, range: &PlateauRange) -> Result<EviFit> {
    fit(curve, range, EviMethod::EmrWlse)
}

/// Full pipeline output: curve, spline, plateau and both fits.
#[derive(Debug, Clone)]
pub struct EviAnalysis {
    pub curve: BmCurve,
    pub spline: SdSpline,
    pub plateau: PlateauRange,
    pub mpmr: Result<EviFit>,
    pub emr: Result<EviFit>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EviOptions {
    pub grid: GridSpec,
    pub delta: f64,
    /// Plateau search floor; √N when `None`.
    pub n0: Option<f64>,
}

impl Default for EviOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            delta: DEFAULT_DELTA,
            n0: None,
        }
    }
}

/// bm_curve → sd spline → plateau → both WLSE fits.
pub fn analyze(sample: &SortedSample, opts: &EviOptions) -> Result<EviAnalysis> {
    let curve = bm_curve(sample, &opts.grid)?;
    let spline = fit_sd_spline(&curve)?;
    let n0 = opts.n0.unwrap_or((sample.len() as f64).sqrt());
    let plateau = find_plateau(&spline, opts.delta, n0)?;
    let mpmr = wlse_mpmr(&curve, &plateau);
    let emr = wlse_emr(&curve, &plateau);
    Ok(EviAnalysis {
        curve,
        spline,
        plateau,
        mpmr,
        emr,
    })
}
