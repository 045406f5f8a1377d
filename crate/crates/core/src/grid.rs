use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Block-size grid specification, written `geometric:<points>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpec {
    Geometric { points: usize },
}

impl GridSpec {
    pub fn geometric(points: usize) -> Self {
        GridSpec::Geometric { points }
    }

    /// Integer block sizes covering `[lo, hi]`, strictly increasing and
    /// always containing both endpoints. Rounding may merge nearby points.
    pub fn block_sizes(&self, lo: usize, hi: usize) -> Result<Vec<usize>> {
        if lo == 0 || lo > hi {
            return Err(Error::domain(format!("invalid block size range [{lo}, {hi}]")));
        }
        let GridSpec::Geometric { points } = *self;
        if points < 2 {
            return Err(Error::domain("a geometric grid needs at least 2 points"));
        }
        let ratio = (hi as f64 / lo as f64).ln();
        let mut out: Vec<usize> = Vec::with_capacity(points);
        for j in 0..points {
            let v = (lo as f64 * (ratio * j as f64 / (points - 1) as f64).exp()).round() as usize;
            let v = v.clamp(lo, hi);
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        if out.last() != Some(&hi) {
            out.push(hi);
        }
        Ok(out)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::geometric(64)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let GridSpec::Geometric { points } = self;
        write!(f, "geometric:{points}")
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, count) = s
            .split_once(':')
            .ok_or_else(|| Error::domain(format!("grid `{s}` is not of the form geometric:<points>")))?;
        if kind != "geometric" {
            return Err(Error::domain(format!("unknown grid kind `{kind}`")));
        }
        let points: usize = count
            .parse()
            .map_err(|_| Error::domain(format!("invalid grid point count `{count}`")))?;
        if points < 2 {
            return Err(Error::domain("a geometric grid needs at least 2 points"));
        }
        Ok(GridSpec::geometric(points))
    }
}

impl Serialize for GridSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_is_strictly_increasing_with_endpoints() {
        let g = GridSpec::geometric(64).block_sizes(2, 50_000).unwrap();
        assert_eq!(g[0], 2);
        assert_eq!(*g.last().unwrap(), 50_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.len() > 55);
        let small = GridSpec::geometric(64).block_sizes(2, 5).unwrap();
        assert_eq!(small, vec![2, 3, 4, 5]);
        let g8 = GridSpec::geometric(8).block_sizes(2, 100).unwrap();
        assert_eq!(g8.len(), 8);
    }

    #[test]
    fn parses_and_prints() {
        let g: GridSpec = "geometric:32".parse().unwrap();
        assert_eq!(g, GridSpec::geometric(32));
        assert_eq!(g.to_string(), "geometric:32");
        assert!("linear:3".parse::<GridSpec>().is_err());
        assert!("geometric:x".parse::<GridSpec>().is_err());
        assert!("geometric:1".parse::<GridSpec>().is_err());
    }
}
