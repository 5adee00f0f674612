//! Chronological train/validation/test splitting. No shuffling: test
//! samples are strictly later than training samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let ratios = SplitRatios { train, val, test };
        ratios.validate()?;
        Ok(ratios)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train <= 0.0 || self.val <= 0.0 || self.test <= 0.0 {
            return Err(Error::InvalidConfig("split ratios must be positive".into()));
        }
        if ((self.train + self.val + self.test) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "split ratios must sum to 1, got {}",
                self.train + self.val + self.test
            )));
        }
        Ok(())
    }

    /// Split sizes for `n` items: val and test are floor-rounded, the
    /// remainder goes to train.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        self.validate()?;
        let n_val = (n as f64 * self.val).floor() as usize;
        let n_test = (n as f64 * self.test).floor() as usize;
        let n_train = n - n_val - n_test;
        if n_train == 0 || n_val == 0 || n_test == 0 {
            return Err(Error::InvalidConfig(format!(
                "{n} samples split into {n_train}/{n_val}/{n_test}; every split must be non-empty"
            )));
        }
        Ok((n_train, n_val, n_test))
    }
}

/// Contiguous prefix/middle/suffix split of time-ordered items.
pub fn chronological_split<T>(items: &[T], ratios: SplitRatios) -> Result<(&[T], &[T], &[T])> {
    let (n_train, n_val, _) = ratios.sizes(items.len())?;
    Ok((
        &items[..n_train],
        &items[n_train..n_train + n_val],
        &items[n_train + n_val..],
    ))
}
