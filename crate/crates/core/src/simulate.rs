//! Reproducible simulation designs and the MAPE benchmark runner.
//!
//! Every stream is a xoshiro256++ generator seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Uniforms are the top 53 bits of
//! each output scaled to [0, 1).

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal, StudentT};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use crate::bench::{default_k, hill, meerschaert_scheffler, mape, schultze_steinebach, smith};
use crate::error::{Error, Result};
use crate::evi::{analyze, EviOptions};
use crate::sample::{SortedSample, Transform};

pub type Prng = Xoshiro256PlusPlus;

pub const BURN_IN: usize = 1000;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for replicate `r`: `splitmix64(base ^ splitmix64(r))`.
pub fn replicate_seed(base_seed: u64, replicate: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(replicate))
}

pub fn rng(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}

fn exp_draw(rng: &mut Prng, mean: f64) -> f64 {
    let u: f64 = rng.random();
    -mean * (-u).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub phi: f64,
    pub xi: f64,
    pub length: usize,
    pub replicates: usize,
    pub base_seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi >= 0.0 && self.phi < 1.0) {
            return Err(Error::domain(format!("phi must lie in [0, 1), got {}", self.phi)));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::domain(format!("xi must be positive, got {}", self.xi)));
        }
        if self.length < 2 {
            return Err(Error::domain("series length must be at least 2"));
        }
        Ok(())
    }
}

/// `Y = exp(X)` with `X_i = φX_{i−1} + ε_i`, `ε ~ Exp(mean ξ)`, started at 0
/// and run through a burn-in before the kept stretch.
pub fn ar1_exp(config: &SimulationConfig, replicate: u64) -> Result<Vec<f64>> {
    config.validate()?;
    let mut r = rng(replicate_seed(config.base_seed, replicate));
    let mut x = 0.0;
    for _ in 0..BURN_IN {
        x = config.phi * x + exp_draw(&mut r, config.xi);
    }
    Ok((0..config.length)
        .map(|_| {
            x = config.phi * x + exp_draw(&mut r, config.xi);
            x.exp()
        })
        .collect())
}

/// iid draws of `|t_ν|`.
pub fn student_t_abs(nu: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let dist = StudentT::new(nu).map_err(|e| Error::domain(format!("student t: {e}")))?;
    let mut r = rng(seed);
    Ok((0..n).map(|_| f64::abs(dist.sample(&mut r))).collect())
}

/// iid draws of `|N(0, σ²)|`.
pub fn half_gaussian(sigma: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    let mut r = rng(seed);
    Ok((0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut r);
            sigma * z.abs()
        })
        .collect())
}

/// iid exponential draws with mean ξ, by inversion.
pub fn exponential_iid(xi: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(xi > 0.0) {
        return Err(Error::domain(format!("xi must be positive, got {xi}")));
    }
    let mut r = rng(seed);
    Ok((0..n).map(|_| exp_draw(&mut r, xi)).collect())
}

/// iid Pareto draws `(1 − U)^(−ξ)/ξ`, supported on `(1/ξ, ∞)`.
pub fn pareto_iid(xi: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(xi > 0.0) {
        return Err(Error::domain(format!("xi must be positive, got {xi}")));
    }
    let mut r = rng(seed);
    Ok((0..n)
        .map(|_| {
            let u: f64 = r.random();
            (-xi * (-u).ln_1p()).exp() / xi
        })
        .collect())
}

/// Exp(1) series of length `len` in which every value appears twice in a
/// row, so extremes come in clusters of size 2 (θ = 1/2).
pub fn duplicated_pairs(len: usize, seed: u64) -> Result<Vec<f64>> {
    let base = exponential_iid(1.0, len.div_ceil(2), seed)?;
    Ok(base.iter().flat_map(|&v| [v, v]).take(len).collect())
}

/// A tail-index estimator applied to one simulated series.
pub trait Estimator: Sync {
    fn name(&self) -> &str;
    fn estimate(&self, series: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlseKind {
    Emr,
    Mpmr,
}

/// EMR or MPMR WLSE on `ln Y`.
#[derive(Debug, Clone, Copy)]
pub struct WlseEstimator {
    pub kind: WlseKind,
    pub opts: EviOptions,
}

impl Estimator for WlseEstimator {
    fn name(&self) -> &str {
        match self.kind {
            WlseKind::Emr => "emr_wlse",
            WlseKind::Mpmr => "mpmr_wlse",
        }
    }

    fn estimate(&self, series: &[f64]) -> Result<f64> {
        let s = SortedSample::from_raw(series, Transform::Log)?;
        let a = analyze(&s, &self.opts)?;
        let fit = match self.kind {
            WlseKind::Emr => a.emr,
            WlseKind::Mpmr => a.mpmr,
        };
        fit.map(|f| f.xi_hat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicKind {
    Hill,
    SchultzeSteinebach,
    MeerschaertScheffler,
    Smith,
}

/// One of the classical estimators on the raw series; `k = floor(√N)` unless set.
#[derive(Debug, Clone, Copy)]
pub struct ClassicEstimator {
    pub kind: ClassicKind,
    pub k: Option<usize>,
}

impl Estimator for ClassicEstimator {
    fn name(&self) -> &str {
        match self.kind {
            ClassicKind::Hill => "hill",
            ClassicKind::SchultzeSteinebach => "schultze_steinebach",
            ClassicKind::MeerschaertScheffler => "meerschaert_scheffler",
            ClassicKind::Smith => "smith",
        }
    }

    fn estimate(&self, series: &[f64]) -> Result<f64> {
        if self.kind == ClassicKind::MeerschaertScheffler {
            return meerschaert_scheffler(series).map(|e| e.xi_hat);
        }
        let s = SortedSample::new(series.to_vec(), Transform::Identity)?;
        let k = self.k.unwrap_or_else(|| default_k(s.len()));
        let est = match self.kind {
            ClassicKind::Hill => hill(&s, k),
            ClassicKind::SchultzeSteinebach => schultze_steinebach(&s, k),
            ClassicKind::Smith => smith(&s, k),
            ClassicKind::MeerschaertScheffler => unreachable!(),
        };
        est.map(|e| e.xi_hat)
    }
}

/// The six estimators of the benchmark, in reporting order.
pub fn default_estimators(opts: EviOptions, k: Option<usize>) -> Vec<Box<dyn Estimator>> {
    let mut v: Vec<Box<dyn Estimator>> = vec![
        Box::new(WlseEstimator { kind: WlseKind::Emr, opts }),
        Box::new(WlseEstimator { kind: WlseKind::Mpmr, opts }),
    ];
    for kind in [
        ClassicKind::Hill,
        ClassicKind::SchultzeSteinebach,
        ClassicKind::MeerschaertScheffler,
        ClassicKind::Smith,
    ] {
        v.push(Box::new(ClassicEstimator { kind, k }));
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkGrid {
    pub phis: Vec<f64>,
    pub xis: Vec<f64>,
    pub length: usize,
    pub replicates: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub phi: f64,
    pub xi: f64,
    pub method: String,
    /// NaN when every replicate failed.
    pub mape: f64,
    pub failures: usize,
    pub replicates: usize,
}

impl BenchmarkRow {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.replicates as f64
    }
}

/// For each (φ, ξ) cell, simulate `replicates` AR(1)-exponential series and
/// score every estimator by MAPE against ξ. Replicate r uses the same stream
/// seed in every cell. Failed estimates are counted and left out of the MAPE.
pub fn run_benchmark(grid: &BenchmarkGrid, estimators: &[Box<dyn Estimator>]) -> Result<Vec<BenchmarkRow>> {
    if grid.replicates == 0 {
        return Err(Error::domain("replicates must be positive"));
    }
    let mut rows = Vec::new();
    for &phi in &grid.phis {
        for &xi in &grid.xis {
            let config = SimulationConfig {
                phi,
                xi,
                length: grid.length,
                replicates: grid.replicates,
                base_seed: grid.base_seed,
            };
            config.validate()?;
            // per replicate: one result per estimator, collected in replicate order
            let results: Vec<Vec<Result<f64>>> = (0..grid.replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let series = ar1_exp(&config, r)?;
                    Ok(estimators.iter().map(|e| e.estimate(&series)).collect())
                })
                .collect::<Result<_>>()?;
            for (j, est) in estimators.iter().enumerate() {
                let ok: Vec<f64> = results
                    .iter()
                    .filter_map(|row| row[j].as_ref().ok().copied())
                    .filter(|v| v.is_finite())
                    .collect();
                let failures = grid.replicates - ok.len();
                let score = if ok.is_empty() { f64::NAN } else { mape(&ok, xi)? };
                rows.push(BenchmarkRow {
                    phi,
                    xi,
                    method: est.name().to_string(),
                    mape: score,
                    failures,
                    replicates: grid.replicates,
                });
            }
        }
    }
    Ok(rows)
}
