//! Exact and asymptotic block-maxima statistics for the parametric tail models.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::distributions::{Family, TailModel};
use crate::error::{Error, Result};
use crate::numeric::{brent_root, integrate};
use crate::specfun::{harmonic, harmonic_real, lambert_w0, log_beta, trigamma};

/// Law of the maximum of `n` iid draws from `model`. `n` may be real (e.g. nθ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BmLaw {
    model: TailModel,
    n: f64,
}

const QUAD_TAIL: f64 = 1e-12;
const QUAD_REL_TOL: f64 = 1e-10;

impl BmLaw {
    pub fn new(model: TailModel, n: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::domain(format!("block size must be positive and finite, got {n}")));
        }
        Ok(Self { model, n })
    }

    pub fn model(&self) -> TailModel {
        self.model
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// `ln F_X(m)`, accurate in the upper tail.
    fn ln_cdf(&self, m: f64) -> f64 {
        let sf = self.model.sf(m);
        if sf < 0.5 {
            (-sf).ln_1p()
        } else {
            self.model.cdf(m).ln()
        }
    }

    /// `F_M(m) = F_X(m)^n`.
    pub fn cdf(&self, m: f64) -> f64 {
        if self.model.cdf(m) == 0.0 {
            return 0.0;
        }
        (self.n * self.ln_cdf(m)).exp()
    }

    /// `f_M(m) = n f_X(m) F_X(m)^(n−1)`.
    pub fn pdf(&self, m: f64) -> f64 {
        let lf = self.model.log_pdf(m);
        if lf == f64::NEG_INFINITY {
            return 0.0;
        }
        let tail = if self.n == 1.0 { 0.0 } else { (self.n - 1.0) * self.ln_cdf(m) };
        (self.n.ln() + lf + tail).exp()
    }

    /// Inverse of [`BmLaw::cdf`]: `F_X^{-1}(u^{1/n})`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::domain(format!("probability must lie in (0, 1), got {u}")));
        }
        let s = -(u.ln() / self.n).exp_m1();
        self.model.isf(s)
    }

    /// Mode of the BM law (the MPMR), from the stationarity condition
    /// `f'_X(m) F_X(m) + (n−1) f_X(m)² = 0`.
    pub fn mpmr_exact(&self) -> Result<f64> {
        let n = self.n;
        if n < 1.0 {
            return Err(Error::domain(format!("mpmr needs n ≥ 1, got {n}")));
        }
        let p = self.model.param();
        match self.model.family() {
            Family::Exponential => Ok(p * n.ln()),
            Family::ParetoGpd => Ok(((n + p) / (p + 1.0)).powf(p) / p),
            Family::Gaussian | Family::HalfNormal => {
                if n == 1.0 {
                    return Ok(self.model.mode());
                }
                let m = self.model;
                let g = |x: f64| m.score(x) * m.cdf(x) + (n - 1.0) * m.pdf(x);
                let lo = m.mode();
                let mut hi = m.isf(1.0 / (10.0 * n))?;
                let mut tries = 0;
                while g(hi) > 0.0 {
                    tries += 1;
                    if tries > 60 {
                        return Err(Error::NoRoot(format!(
                            "mpmr bracket for {} at n = {n} could not be established",
                            m.family()
                        )));
                    }
                    hi = 2.0 * hi + m.param();
                }
                brent_root(g, lo, hi, 1e-15 * hi.abs().max(1.0))
            }
        }
    }

    /// Leading-order MPMR as n grows. Requires n ≥ 2.
    pub fn mpmr_asymptotic(&self) -> Result<f64> {
        let n = self.n;
        if n < 2.0 {
            return Err(Error::domain(format!("asymptotic mpmr needs n ≥ 2, got {n}")));
        }
        let p = self.model.param();
        match self.model.family() {
            Family::Gaussian => Ok(p * lambert_w0(n * n / (2.0 * PI))?.sqrt()),
            Family::HalfNormal => Ok(p * lambert_w0(2.0 * n * n / PI)?.sqrt()),
            Family::ParetoGpd => Ok((n / (p + 1.0)).powf(p) / p),
            Family::Exponential => Ok(p * n.ln()),
        }
    }

    /// Expected maximum (EMR).
    pub fn emr(&self) -> Result<f64> {
        let n = self.n;
        let p = self.model.param();
        match self.model.family() {
            Family::Exponential => {
                if n.fract() == 0.0 && n <= u64::MAX as f64 {
                    Ok(p * harmonic(n as u64))
                } else {
                    Ok(p * harmonic_real(n)?)
                }
            }
            Family::ParetoGpd => {
                if p >= 1.0 {
                    return Err(Error::NotExist { quantity: "EMR", xi: p });
                }
                Ok(n / p * log_beta(n, 1.0 - p)?.exp())
            }
            Family::Gaussian | Family::HalfNormal => self.quad_moment(|m| m),
        }
    }

    /// Variance of the block maximum.
    pub fn variance(&self) -> Result<f64> {
        let n = self.n;
        let p = self.model.param();
        match self.model.family() {
            Family::Exponential => Ok(p * p * (PI * PI / 6.0 - trigamma(n + 1.0)?)),
            Family::ParetoGpd => {
                if p >= 0.5 {
                    return Err(Error::NotExist {
                        quantity: "BM variance",
                        xi: p,
                    });
                }
                let b2 = log_beta(n, 1.0 - 2.0 * p)?.exp();
                let b1 = log_beta(n, 1.0 - p)?.exp();
                Ok(n * (b2 - n * b1 * b1) / (p * p))
            }
            Family::Gaussian | Family::HalfNormal => {
                let mean = self.emr()?;
                self.quad_moment(|m| (m - mean) * (m - mean))
            }
        }
    }

    /// Raw moment `E[M^k] = n ξ^(−k) B(n, 1 − kξ)` of a Pareto BM law.
    pub fn moment_pareto(&self, k: u32) -> Result<f64> {
        if self.model.family() != Family::ParetoGpd {
            return Err(Error::domain("raw BM moments are only available in closed form for pareto"));
        }
        if k == 0 {
            return Err(Error::domain("moment order must be positive"));
        }
        let p = self.model.param();
        let kxi = f64::from(k) * p;
        if kxi >= 1.0 {
            return Err(Error::NotExist {
                quantity: "BM raw moment",
                xi: p,
            });
        }
        Ok((self.n.ln() - f64::from(k) * p.ln() + log_beta(self.n, 1.0 - kxi)?).exp())
    }

    fn quad_moment(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let a = self.quantile(QUAD_TAIL)?;
        let b = self.quantile(1.0 - QUAD_TAIL)?;
        integrate(|m| g(m) * self.pdf(m), a, b, 1e-300, QUAD_REL_TOL)
    }
}

/// `F_M(m* + kξπ/√6) ≈ (1 − e^(−kπ/√6)/n)^n`; pass `f64::INFINITY` for the
/// Gumbel limit `exp(−e^(−kπ/√6))`.
pub fn bm_cdf_offset(n: f64, k: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::domain(format!("offset probability needs n ≥ 1, got {n}")));
    }
    let a = (-k * PI / 6f64.sqrt()).exp();
    if n == f64::INFINITY {
        return Ok((-a).exp());
    }
    if a >= n {
        return Ok(0.0);
    }
    Ok((n * (-a / n).ln_1p()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KldDirection {
    /// `KL(f_M ‖ f_X)`.
    MToX,
    /// `KL(f_X ‖ f_M)`.
    XToM,
}

/// Kullback–Leibler divergence between the BM law at effective size `n_eff`
/// and the underlying law.
pub fn kld(n_eff: f64, direction: KldDirection) -> Result<f64> {
    if !(n_eff > 0.0 && n_eff.is_finite()) {
        return Err(Error::domain(format!("effective block size must be positive, got {n_eff}")));
    }
    let l = n_eff.ln();
    Ok(match direction {
        KldDirection::MToX => 1.0 / n_eff + l - 1.0,
        KldDirection::XToM => n_eff - l - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn law(m: TailModel, n: f64) -> BmLaw {
        BmLaw::new(m, n).unwrap()
    }

    fn all_models() -> Vec<TailModel> {
        vec![
            TailModel::gaussian(1.0).unwrap(),
            TailModel::half_normal(2.0).unwrap(),
            TailModel::pareto(0.3).unwrap(),
            TailModel::pareto(1.5).unwrap(),
            TailModel::exponential(0.8).unwrap(),
        ]
    }

    #[test]
    fn single_block_is_the_underlying() {
        for m in all_models() {
            let l = law(m, 1.0);
            for u in [0.1, 0.5, 0.95] {
                let x = m.quantile(u).unwrap();
                assert_relative_eq!(l.cdf(x), m.cdf(x), max_relative = 1e-14);
                assert_relative_eq!(l.pdf(x), m.pdf(x), max_relative = 1e-13);
            }
            assert_relative_eq!(l.mpmr_exact().unwrap(), m.mode(), epsilon = 1e-15);
        }
        let e = TailModel::exponential(1.0).unwrap();
        assert_relative_eq!(law(e, 1.0).emr().unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(law(e, 1.0).variance().unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn bm_cdf_and_quantile_examples() {
        let e = law(TailModel::exponential(1.0).unwrap(), 10.0);
        let u = (-1f64).exp();
        let want = -(1.0 - (-0.1f64).exp()).ln();
        assert_relative_eq!(e.quantile(u).unwrap(), want, max_relative = 1e-14);
        let p = law(TailModel::pareto(1.0).unwrap(), 9.0);
        assert_relative_eq!(p.cdf(5.0), 0.134_217_728, max_relative = 1e-14);
    }

    #[test]
    fn mpmr_examples() {
        let e = law(TailModel::exponential(1.0).unwrap(), 100.0);
        assert_relative_eq!(e.mpmr_exact().unwrap(), 4.605_170_185_988_091, max_relative = 1e-15);
        // grid maximization of the density as an independent check
        let (mut best, mut arg) = (0.0, 0.0);
        for i in 1..=200_000 {
            let m = f64::from(i) * 1e-4;
            let d = e.pdf(m);
            if d > best {
                best = d;
                arg = m;
            }
        }
        assert!((arg - 100f64.ln()).abs() < 1e-3);
        let p = law(TailModel::pareto(1.0).unwrap(), 9.0);
        assert_relative_eq!(p.mpmr_exact().unwrap(), 5.0, max_relative = 1e-15);
        assert!(law(TailModel::gaussian(1.0).unwrap(), 0.5).mpmr_exact().is_err());
    }

    #[test]
    fn mpmr_asymptotic_examples() {
        let g = law(TailModel::gaussian(1.0).unwrap(), 100.0);
        let w = lambert_w0(1e4 / (2.0 * PI)).unwrap();
        assert_relative_eq!(g.mpmr_asymptotic().unwrap(), w.sqrt(), max_relative = 1e-14);
        let exact = g.mpmr_exact().unwrap();
        assert!((g.mpmr_asymptotic().unwrap() / exact - 1.0).abs() < 0.02);
        let e = law(TailModel::exponential(2.0).unwrap(), 5f64.exp());
        assert_relative_eq!(e.mpmr_asymptotic().unwrap(), 10.0, max_relative = 1e-14);
        let h = law(TailModel::half_normal(1.0).unwrap(), 100.0);
        let w = lambert_w0(2e4 / PI).unwrap();
        assert_relative_eq!(h.mpmr_asymptotic().unwrap(), w.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn mpmr_maximizes_density() {
        for m in all_models() {
            for n in [2.0, 10.0, 100.0, 1000.0] {
                let l = law(m, n);
                let x = l.mpmr_exact().unwrap();
                let d = l.pdf(x);
                assert!(d >= l.pdf(x * (1.0 + 1e-4)), "{m:?} n={n}");
                assert!(d >= l.pdf(x * (1.0 - 1e-4)), "{m:?} n={n}");
            }
        }
    }

    #[test]
    fn cdf_at_mpmr_limits() {
        let e = law(TailModel::exponential(1.3).unwrap(), 1e4);
        assert!((e.cdf(e.mpmr_exact().unwrap()) - (-1f64).exp()).abs() < 1e-3);
        for xi in [0.3, 1.0, 2.0] {
            let p = law(TailModel::pareto(xi).unwrap(), 1e4);
            let at = p.cdf(p.mpmr_exact().unwrap());
            assert_relative_eq!(at, ((1e4 - 1.0) / (1e4 + xi)).powf(1e4), max_relative = 1e-9);
            assert!((at - (-1.0 - xi).exp()).abs() < 1e-3);
        }
    }

    #[test]
    fn emr_examples() {
        let e = law(TailModel::exponential(1.0).unwrap(), 10.0);
        assert_relative_eq!(e.emr().unwrap(), 2.928_968_253_968_254, max_relative = 1e-14);
        let p = law(TailModel::pareto(1.5).unwrap(), 50.0);
        assert!(matches!(p.emr(), Err(Error::NotExist { .. })));
        // real n interpolates the harmonic numbers smoothly
        let a = law(TailModel::exponential(1.0).unwrap(), 10.0).emr().unwrap();
        let b = law(TailModel::exponential(1.0).unwrap(), 10.000_001).emr().unwrap();
        assert!((b - a).abs() < 1e-6);
    }

    #[test]
    fn gaussian_moments_by_quadrature() {
        let g = law(TailModel::gaussian(1.0).unwrap(), 2.0);
        assert_relative_eq!(g.emr().unwrap(), 1.0 / PI.sqrt(), max_relative = 1e-9);
        assert_relative_eq!(g.variance().unwrap(), 1.0 - 1.0 / PI, max_relative = 1e-9);
        let h = law(TailModel::half_normal(1.0).unwrap(), 1.0);
        assert_relative_eq!(h.emr().unwrap(), (2.0 / PI).sqrt(), max_relative = 1e-9);
        assert_relative_eq!(h.variance().unwrap(), 1.0 - 2.0 / PI, max_relative = 1e-9);
    }

    #[test]
    fn pareto_moments_against_quadrature() {
        let m = TailModel::pareto(0.5).unwrap();
        let one = law(m, 1.0);
        // heavy tail: integrate in u = F(x)
        let mean = integrate(|u| m.quantile(u).unwrap(), 1e-15, 1.0 - 1e-15, 1e-12, 1e-10).unwrap();
        assert_relative_eq!(one.moment_pareto(1).unwrap(), 4.0, max_relative = 1e-13);
        assert!((mean - 4.0).abs() < 1e-4);
        let ten = law(m, 10.0);
        assert_relative_eq!(ten.moment_pareto(1).unwrap(), ten.emr().unwrap(), max_relative = 1e-14);
        assert!(law(TailModel::pareto(0.6).unwrap(), 3.0).moment_pareto(2).is_err());
    }

    #[test]
    fn pareto_variance_against_quadrature() {
        let l = law(TailModel::pareto(0.25).unwrap(), 100.0);
        let mean = l.emr().unwrap();
        let var = integrate(
            |u| (l.quantile(u).unwrap() - mean).powi(2),
            1e-16,
            1.0 - 1e-16,
            1e-14,
            1e-11,
        )
        .unwrap();
        assert_relative_eq!(l.variance().unwrap(), var, max_relative = 1e-6);
        let m2 = l.moment_pareto(2).unwrap();
        assert_relative_eq!(l.variance().unwrap(), m2 - mean * mean, max_relative = 1e-10);
        assert!(law(TailModel::pareto(0.5).unwrap(), 3.0).variance().is_err());
    }

    #[test]
    fn exponential_variance_limits() {
        let xi: f64 = 1.7;
        let m = TailModel::exponential(xi).unwrap();
        let v100 = law(m, 100.0).variance().unwrap();
        let v1e4 = law(m, 1e4).variance().unwrap();
        assert!((v100 - v1e4).abs() <= xi * xi * trigamma(101.0).unwrap());
        let big = law(TailModel::exponential(1.0).unwrap(), 1e12).variance().unwrap();
        assert_relative_eq!(big, PI * PI / 6.0, max_relative = 1e-11);
    }

    #[test]
    fn offset_table_values() {
        let table = [
            (-3.0, 4.355_99e-21),
            (-2.0, 2.255_92e-6),
            (-1.0, 0.027_165_1),
            (0.0, 0.367_879),
            (1.0, 0.757_805),
            (2.0, 0.925_972),
            (3.0, 0.978_896),
        ];
        for (k, want) in table {
            let got = bm_cdf_offset(f64::INFINITY, k).unwrap();
            assert!((got / want - 1.0).abs() < 5e-6, "k={k}: {got}");
        }
        assert_eq!(bm_cdf_offset(1.0, -3.0).unwrap(), 0.0);
        let finite = bm_cdf_offset(1e9, 1.0).unwrap();
        assert!((finite - bm_cdf_offset(f64::INFINITY, 1.0).unwrap()).abs() < 1e-9);
        assert!(bm_cdf_offset(0.5, 1.0).is_err());
    }

    #[test]
    fn kld_examples() {
        assert_eq!(kld(1.0, KldDirection::MToX).unwrap(), 0.0);
        assert_eq!(kld(1.0, KldDirection::XToM).unwrap(), 0.0);
        assert_relative_eq!(kld(10.0, KldDirection::MToX).unwrap(), 1.402_585_092_994_045_7, max_relative = 1e-15);
        assert_relative_eq!(kld(5.0, KldDirection::MToX).unwrap(), 0.809_437_912_434_100_4, max_relative = 1e-15);
        assert!(kld(0.0, KldDirection::XToM).is_err());
    }

    proptest! {
        #[test]
        fn bm_quantile_round_trip(idx in 0usize..5, n in 1.0f64..1e4, u in 1e-6f64..(1.0 - 1e-6)) {
            let l = law(all_models()[idx], n);
            let m = l.quantile(u).unwrap();
            prop_assert!((l.cdf(m) - u).abs() <= 1e-10);
        }

        #[test]
        fn kld_directions_sum(n in 1e-3f64..1e3) {
            let s = kld(n, KldDirection::MToX).unwrap() + kld(n, KldDirection::XToM).unwrap();
            prop_assert!((s - (n + 1.0 / n - 2.0)).abs() <= 1e-12 * (n + 1.0 / n));
        }
    }
}
