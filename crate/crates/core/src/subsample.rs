//! Exact sub-sampling block-maxima weights and the weighted EMR, moment and
//! mean-shift MPMR estimators.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::numeric::compensated_sum;
use crate::specfun::log_choose;

pub use crate::sample::{SortedSample, Transform};

/// Probabilities `p_{n,i} = C(i−1, n−1)/C(N, n)` that `x_[i]` is the maximum
/// of a uniformly chosen size-n subsample, stored in log form for i = n..N.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleWeights {
    sample_size: usize,
    n: usize,
    log_p: Vec<f64>,
}

impl SubsampleWeights {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// `log p_{n,i}` for i = n..N, in that order.
    pub fn log_p(&self) -> &[f64] {
        &self.log_p
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_p.iter().map(|l| l.exp()).collect()
    }

    /// Kish effective sample size `1/Σp²`.
    pub fn effective_size(&self) -> f64 {
        1.0 / self.log_p.iter().map(|l| (2.0 * l).exp()).sum::<f64>()
    }
}

/// Sub-sampling weights for block size `n` in a sample of size `big_n`.
///
/// The normalizer is the sum of the binomial terms (equal to `C(N, n)` by the
/// hockey-stick identity), accumulated in the log domain.
pub fn weights(big_n: usize, n: usize) -> Result<SubsampleWeights> {
    if big_n < 2 {
        return Err(Error::domain(format!("sample size must be at least 2, got {big_n}")));
    }
    if n == 0 || n > big_n {
        return Err(Error::domain(format!("block size {n} outside [1, {big_n}]")));
    }
    let mut log_p: Vec<f64> = (n..=big_n)
        .map(|i| log_choose((i - 1) as u64, (n - 1) as u64))
        .collect();
    let top = log_p[log_p.len() - 1];
    let log_sum = compensated_sum(log_p.iter().map(|l| (l - top).exp())).ln();
    for l in &mut log_p {
        *l = (*l - top) - log_sum;
    }
    Ok(SubsampleWeights {
        sample_size: big_n,
        n,
        log_p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub sd: f64,
}

/// One-pass weighted mean and (population) variance, West's update.
fn weighted_moments(xs: &[f64], ps: impl Iterator<Item = f64>) -> Moments {
    let mut total = 0.0;
    let mut mean = 0.0;
    let mut s = 0.0;
    for (&x, p) in xs.iter().zip(ps) {
        if p == 0.0 {
            continue;
        }
        total += p;
        let d = x - mean;
        mean += (p / total) * d;
        s += p * d * (x - mean);
    }
    let variance = (s / total).max(0.0);
    Moments {
        mean,
        variance,
        sd: variance.sqrt(),
    }
}

fn check_size(sample: &SortedSample, n: usize) -> Result<SubsampleWeights> {
    weights(sample.len(), n)
}

/// Mean, variance and standard deviation of the sub-sampled block maximum.
pub fn moments_hat(sample: &SortedSample, n: usize) -> Result<Moments> {
    let w = check_size(sample, n)?;
    let xs = &sample.values()[n - 1..];
    Ok(weighted_moments(xs, w.log_p.iter().map(|l| l.exp())))
}

/// Sub-sampling estimate of the expected maximum risk.
pub fn emr_hat(sample: &SortedSample, n: usize) -> Result<f64> {
    moments_hat(sample, n).map(|m| m.mean)
}

const MEAN_SHIFT_MAX_ITER: usize = 500;
const MEAN_SHIFT_REL_TOL: f64 = 1e-8;
/// Points with weight below `p_max·e^{-50}` are dropped from the kernel sum.
const WEIGHT_FLOOR_LOG: f64 = -50.0;

struct WeightedKde<'a> {
    xs: &'a [f64],
    log_p: &'a [f64],
    h: f64,
}

struct KdeTerms {
    log_density: f64,
    s0: f64,
    s1: f64,
    s2: f64,
}

impl WeightedKde<'_> {
    fn terms(&self, m: f64) -> KdeTerms {
        let inv = 0.5 / (self.h * self.h);
        let arg = |x: f64, lp: f64| lp - (x - m) * (x - m) * inv;
        let top = self
            .xs
            .iter()
            .zip(self.log_p)
            .map(|(&x, &lp)| arg(x, lp))
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (&x, &lp) in self.xs.iter().zip(self.log_p) {
            let w = (arg(x, lp) - top).exp();
            let d = x - m;
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
        }
        KdeTerms {
            log_density: top + s0.ln(),
            s0,
            s1,
            s2,
        }
    }

    fn log_density(&self, m: f64) -> f64 {
        self.terms(m).log_density
    }

    /// Mean-shift ascent from `start`. A Newton step on the density replaces
    /// the mean-shift step when the density is locally concave and the step
    /// increases the density.
    fn climb(&self, start: f64, tol: f64) -> Result<f64> {
        let h2 = self.h * self.h;
        let mut m = start;
        for _ in 0..MEAN_SHIFT_MAX_ITER {
            let t = self.terms(m);
            let mut step = t.s1 / t.s0;
            let curv = t.s0 * h2 - t.s2;
            if curv > 0.0 {
                let newton = t.s1 * h2 / curv;
                if newton.abs() > step.abs() && self.log_density(m + newton) > t.log_density {
                    step = newton;
                }
            }
            m += step;
            if step.abs() <= tol {
                return Ok(m);
            }
        }
        Err(Error::NonConvergence {
            what: "mean-shift",
            iterations: MEAN_SHIFT_MAX_ITER,
        })
    }
}

/// Sub-sampling estimate of the most probable maximum risk: the mode of the
/// `p_{n,i}`-weighted Gaussian KDE with Scott bandwidth `σ_w·N_eff^{-1/5}`.
pub fn mpmr_hat(sample: &SortedSample, n: usize) -> Result<f64> {
    let w = check_size(sample, n)?;
    if sample.is_constant() {
        return Err(Error::Degenerate("mode of a constant sample is undefined".into()));
    }
    if n == sample.len() {
        return Ok(sample.max());
    }
    let xs = &sample.values()[n - 1..];
    let mom = weighted_moments(xs, w.log_p.iter().map(|l| l.exp()));
    let h = mom.sd * w.effective_size().powf(-0.2);
    if h == 0.0 {
        return Ok(mom.mean);
    }
    let lp = w.log_p();
    let floor = lp[lp.len() - 1] + WEIGHT_FLOOR_LOG;
    let first = lp.partition_point(|&l| l < floor);
    let kde = WeightedKde {
        xs: &xs[first..],
        log_p: &lp[first..],
        h,
    };
    let tol = MEAN_SHIFT_REL_TOL * sample.range();
    match kde.climb(mom.mean, tol) {
        Ok(m) => Ok(m),
        Err(Error::NonConvergence { .. }) => {
            let starts = xs.iter().rev().take(3);
            starts
                .filter_map(|&s| kde.climb(s, tol).ok())
                .map(|m| (kde.log_density(m), m))
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, m)| m)
                .ok_or(Error::NonConvergence {
                    what: "mean-shift",
                    iterations: MEAN_SHIFT_MAX_ITER,
                })
        }
        Err(e) => Err(e),
    }
}

/// Sub-sampled BM statistics at one block size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BmPoint {
    pub n: usize,
    pub emr: f64,
    pub mpmr: f64,
    pub sd: f64,
}

/// BM statistics along a grid of block sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmCurve {
    pub sample_size: usize,
    pub points: Vec<BmPoint>,
}

impl BmCurve {
    /// Validates that block sizes are strictly increasing within `[1, N]`.
    pub fn new(sample_size: usize, points: Vec<BmPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Insufficient("empty BM curve".into()));
        }
        if points.windows(2).any(|w| w[0].n >= w[1].n) {
            return Err(Error::domain("BM curve block sizes must be strictly increasing"));
        }
        if points[0].n == 0 || points[points.len() - 1].n > sample_size {
            return Err(Error::domain(format!(
                "BM curve block sizes must lie in [1, {sample_size}]"
            )));
        }
        Ok(Self {
            sample_size,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ns(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.n as f64).collect()
    }

    pub fn emr(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.emr).collect()
    }

    pub fn mpmr(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mpmr).collect()
    }

    pub fn sd(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.sd).collect()
    }
}

/// EMR, MPMR and BM standard deviation over a block-size grid from 2 to N.
pub fn bm_curve(sample: &SortedSample, grid: &GridSpec) -> Result<BmCurve> {
    let sizes = grid.block_sizes(2, sample.len())?;
    let points = sizes
        .par_iter()
        .map(|&n| {
            let mom = moments_hat(sample, n).map_err(|e| e.at_block_size(n as f64))?;
            let mpmr = mpmr_hat(sample, n).map_err(|e| e.at_block_size(n as f64))?;
            Ok(BmPoint {
                n,
                emr: mom.mean,
                mpmr,
                sd: mom.sd,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BmCurve::new(sample.len(), points)
}
