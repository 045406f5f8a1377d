use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pre-processing applied to a raw series before analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Log,
    /// `r_t = log(max_T y_T) − log(y_t)`: loss relative to the historical maximum.
    LogLoss,
}

impl Transform {
    /// Apply the transform elementwise, preserving order.
    pub fn apply(self, series: &[f64]) -> Result<Vec<f64>> {
        match self {
            Transform::Identity => Ok(series.to_vec()),
            Transform::Log | Transform::LogLoss => {
                if let Some(bad) = series.iter().find(|v| !(**v > 0.0)) {
                    return Err(Error::Support(format!(
                        "{self} transform requires strictly positive values, found {bad}"
                    )));
                }
                let logs = series.iter().map(|v| v.ln());
                if self == Transform::Log {
                    return Ok(logs.collect());
                }
                let top = series.iter().copied().fold(f64::NEG_INFINITY, f64::max).ln();
                Ok(logs.map(|l| top - l).collect())
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Transform::Identity => "identity",
            Transform::Log => "log",
            Transform::LogLoss => "logloss",
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Transform::Identity),
            "log" => Ok(Transform::Log),
            "logloss" => Ok(Transform::LogLoss),
            other => Err(Error::domain(format!("unknown transform `{other}`"))),
        }
    }
}

/// Observations sorted ascending, `x_[1] ≤ … ≤ x_[N]`, with the transform
/// that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
    transform: Transform,
}

impl SortedSample {
    /// Sort already-transformed values. Requires N ≥ 2 finite values.
    pub fn new(mut values: Vec<f64>, transform: Transform) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Insufficient(format!(
                "a sample needs at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite observation {bad}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values, transform })
    }

    /// Transform a raw series and sort it.
    pub fn from_raw(raw: &[f64], transform: Transform) -> Result<Self> {
        Self::new(transform.apply(raw)?, transform)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn range(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn is_constant(&self) -> bool {
        self.range() == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logloss_examples() {
        let r = Transform::LogLoss.apply(&[4.0, 2.0, 8.0]).unwrap();
        assert!((r[0] - 2f64.ln()).abs() < 1e-15);
        assert!((r[1] - 4f64.ln()).abs() < 1e-15);
        assert_eq!(r[2], 0.0);
        let e = std::f64::consts::E;
        let r = Transform::LogLoss.apply(&[5.0 / e, 5.0]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_rejects_nonpositive() {
        assert!(matches!(Transform::Log.apply(&[1.0, 0.0]), Err(Error::Support(_))));
        assert!(Transform::LogLoss.apply(&[1.0, -2.0]).is_err());
        assert_eq!(Transform::Identity.apply(&[-1.0, 0.0]).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn sorted_sample_sorts_and_validates() {
        let s = SortedSample::new(vec![3.0, 1.0, 2.0], Transform::Identity).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert!(SortedSample::new(vec![1.0], Transform::Identity).is_err());
        assert!(SortedSample::new(vec![1.0, f64::NAN], Transform::Identity).is_err());
        assert_eq!("logloss".parse::<Transform>().unwrap(), Transform::LogLoss);
    }
}
