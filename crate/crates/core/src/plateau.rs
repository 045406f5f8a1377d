//! Plateau detection on the BM standard-deviation curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::golden_min;
use crate::subsample::BmCurve;

/// Monotone cubic Hermite (PCHIP) interpolant of sd against `t = ln n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdSpline {
    t: Vec<f64>,
    g: Vec<f64>,
    d: Vec<f64>,
}

impl SdSpline {
    /// Interpolate values `g` at strictly increasing block sizes `ns`.
    pub fn new(ns: &[f64], g: &[f64]) -> Result<Self> {
        if ns.len() != g.len() {
            return Err(Error::domain("block sizes and sd values differ in length"));
        }
        if ns.len() < 4 {
            return Err(Error::Insufficient(format!(
                "sd spline needs at least 4 points, got {}",
                ns.len()
            )));
        }
        if ns.iter().any(|&n| !(n > 0.0)) || ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("block sizes must be positive and strictly increasing"));
        }
        let t: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
        let d = pchip_slopes(&t, g);
        Ok(Self {
            t,
            g: g.to_vec(),
            d,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t[0]
    }

    pub fn t_max(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    pub fn n_min(&self) -> f64 {
        self.t_min().exp()
    }

    pub fn n_max(&self) -> f64 {
        self.t_max().exp()
    }

    fn segment(&self, t: f64) -> usize {
        let k = self.t.partition_point(|&x| x <= t);
        k.clamp(1, self.t.len() - 1) - 1
    }

    /// g at `t = ln n`, clamped to the knot range.
    pub fn value_log(&self, t: f64) -> f64 {
        let t = t.clamp(self.t_min(), self.t_max());
        let k = self.segment(t);
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.g[k]
            + (s3 - 2.0 * s2 + s) * h * self.d[k]
            + (-2.0 * s3 + 3.0 * s2) * self.g[k + 1]
            + (s3 - s2) * h * self.d[k + 1]
    }

    /// dg/d(ln n) at `t = ln n`.
    pub fn deriv_log(&self, t: f64) -> f64 {
        let t = t.clamp(self.t_min(), self.t_max());
        let k = self.segment(t);
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let s2 = s * s;
        (6.0 * s2 - 6.0 * s) / h * self.g[k]
            + (3.0 * s2 - 4.0 * s + 1.0) * self.d[k]
            + (-6.0 * s2 + 6.0 * s) / h * self.g[k + 1]
            + (3.0 * s2 - 2.0 * s) * self.d[k + 1]
    }

    pub fn value(&self, n: f64) -> f64 {
        self.value_log(n.ln())
    }

    pub fn deriv(&self, n: f64) -> f64 {
        self.deriv_log(n.ln())
    }
}

/// Fritsch–Carlson slopes with weighted harmonic means at interior knots and
/// shape-preserving three-point end slopes.
fn pchip_slopes(t: &[f64], g: &[f64]) -> Vec<f64> {
    let m = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..m - 1).map(|k| (g[k + 1] - g[k]) / h[k]).collect();
    let mut d = vec![0.0; m];
    for k in 1..m - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[m - 1] = end_slope(h[m - 2], h[m - 3], delta[m - 2], delta[m - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

/// PCHIP spline through the sd column of a BM curve.
pub fn fit_sd_spline(curve: &BmCurve) -> Result<SdSpline> {
    SdSpline::new(&curve.ns(), &curve.sd())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateauDiagnostic {
    PlateauFound,
    MonotoneNoPlateau,
    ClippedAtBoundary,
}

impl PlateauDiagnostic {
    pub fn as_str(self) -> &'static str {
        match self {
            PlateauDiagnostic::PlateauFound => "plateau_found",
            PlateauDiagnostic::MonotoneNoPlateau => "monotone_no_plateau",
            PlateauDiagnostic::ClippedAtBoundary => "clipped_at_boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateauRange {
    pub n_star: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub delta: f64,
    /// g(n*).
    pub g_star: f64,
    pub diagnostic: PlateauDiagnostic,
}

impl PlateauRange {
    pub fn contains(&self, n: f64) -> bool {
        let slack = 1e-9 * self.n_max;
        n >= self.n_min - slack && n <= self.n_max + slack
    }
}

pub const DEFAULT_DELTA: f64 = 0.1;
const SCAN_POINTS: usize = 1024;
const MONOTONE_RATIO: f64 = 1e-4;

/// Locate n* = argmin over n ≥ n0 of (dg/d ln n)² and the band
/// `|g − g(n*)| ≤ Δ·|g(n*)|` around it.
///
/// The range ends are the nearest points on each side of n* where g leaves
/// the band. When no exit exists on a side the range is clipped to the grid
/// edge and the diagnostic says so. `n0` is clamped into the grid.
pub fn find_plateau(g: &SdSpline, delta: f64, n0: f64) -> Result<PlateauRange> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(n0 > 0.0) {
        return Err(Error::domain(format!("search floor must be positive, got {n0}")));
    }
    let (lo, hi) = (g.t_min(), g.t_max());
    let s0 = n0.ln().clamp(lo, hi);
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let ts: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + step * i as f64).collect();
    let d2: Vec<f64> = ts.iter().map(|&t| g.deriv_log(t).powi(2)).collect();
    let sq = |t: f64| g.deriv_log(t).powi(2);

    // candidates: s0, refined local minima of d² on the fixed scan grid, the right end
    let mut best = (s0, sq(s0));
    let mut consider = |t: f64, v: f64| {
        if t >= s0 && (v < best.1 || (v == best.1 && t < best.0)) {
            best = (t, v);
        }
    };
    for i in 0..SCAN_POINTS {
        let left_ok = i == 0 || d2[i] <= d2[i - 1];
        let right_ok = i == SCAN_POINTS - 1 || d2[i] <= d2[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        if ts[i] >= s0 {
            consider(ts[i], d2[i]);
        }
        if d2[i] > 0.0 && i > 0 && i < SCAN_POINTS - 1 {
            let (t, v) = golden_min(sq, ts[i - 1], ts[i + 1], 1e-10 * step.max(1e-300));
            consider(t, v);
        }
    }
    consider(hi, sq(hi));
    let t_star = best.0;

    let g_star = g.value_log(t_star);
    let band = delta * g_star.abs();
    let outside = |t: f64| (g.value_log(t) - g_star).abs() - band;

    let left = band_exit(&outside, t_star, &ts, Side::Left);
    let right = band_exit(&outside, t_star, &ts, Side::Right);
    let clipped = left.is_none() || right.is_none();
    let t_min = left.unwrap_or(lo);
    let t_max = right.unwrap_or(hi);

    let derivs: Vec<f64> = ts.iter().map(|&t| g.deriv_log(t)).collect();
    let max_d2 = d2.iter().copied().fold(0.0, f64::max);
    let min_d2 = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let monotone = derivs.iter().all(|&d| d < 0.0) && min_d2 > MONOTONE_RATIO * max_d2;

    let diagnostic = if monotone {
        PlateauDiagnostic::MonotoneNoPlateau
    } else if clipped {
        PlateauDiagnostic::ClippedAtBoundary
    } else {
        PlateauDiagnostic::PlateauFound
    };
    Ok(PlateauRange {
        n_star: t_star.exp(),
        n_min: t_min.exp().max(g.n_min()),
        n_max: t_max.exp().min(g.n_max()),
        delta,
        g_star,
        diagnostic,
    })
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

/// Nearest t on one side of `t_star` with `outside(t) > 0`, refined by
/// bisection against the last point inside the band.
fn band_exit(outside: &impl Fn(f64) -> f64, t_star: f64, ts: &[f64], side: Side) -> Option<f64> {
    let mut inside = t_star;
    let path: Box<dyn Iterator<Item = f64>> = match side {
        Side::Left => Box::new(ts.iter().rev().copied().filter(move |&t| t < t_star)),
        Side::Right => Box::new(ts.iter().copied().filter(move |&t| t > t_star)),
    };
    for t in path {
        if outside(t) > 0.0 {
            let (mut a, mut b) = (inside, t);
            for _ in 0..100 {
                let mid = 0.5 * (a + b);
                if outside(mid) > 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
                if (b - a).abs() <= 1e-13 * b.abs().max(1.0) {
                    break;
                }
            }
            return Some(a);
        }
        inside = t;
    }
    None
}
