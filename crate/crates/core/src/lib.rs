//! Sub-sampling block-maxima estimators for extreme risk: most probable and
//! expected maximum risk, extreme value index regressions, extremal index,
//! closed-form references and a simulation harness.

pub mod bench;
pub mod closedform;
pub mod distributions;
pub mod error;
pub mod ei;
pub mod evi;
pub mod grid;
pub mod numeric;
pub mod plateau;
pub mod sample;
pub mod simulate;
pub mod specfun;
pub mod subsample;

pub use error::{Error, Result};
pub use sample::{SortedSample, Transform};
