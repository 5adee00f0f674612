//! Global Min-Max scaling.
//!
//! One scaler covers the whole demand matrix (not per station) so that the
//! graph filter keeps mixing values on a common scale. Fitting must only see
//! training-split values; test values outside the fitted range scale past
//! [0, 1] and are intentionally not clipped.

use serde::{Deserialize, Serialize};

use crate::data::window::WindowedSample;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    min: f64,
    max: f64,
}

impl Scaler {
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Result<Scaler> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut seen = false;
        for v in values {
            if !v.is_finite() {
                return Err(Error::NonFinite { op: "Scaler::fit" });
            }
            min = min.min(v);
            max = max.max(v);
            seen = true;
        }
        if !seen {
            return Err(Error::EmptyInput("cannot fit a scaler on no values".into()));
        }
        if max == min {
            log::warn!("scaler fitted on constant data (min == max == {min}); scaling maps everything to 0");
        }
        Ok(Scaler { min, max })
    }

    /// Fit on every input and target value of the given (training) samples.
    pub fn fit_samples(samples: &[WindowedSample]) -> Result<Scaler> {
        Scaler::fit(
            samples
                .iter()
                .flat_map(|s| s.x.data().iter().chain(s.y.data()).copied()),
        )
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn scale_value(&self, v: f64) -> f64 {
        if self.max == self.min {
            0.0
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    pub fn unscale_value(&self, v: f64) -> f64 {
        if self.max == self.min {
            self.min
        } else {
            v * (self.max - self.min) + self.min
        }
    }

    pub fn scale(&self, t: &Tensor) -> Tensor {
        t.map(|v| self.scale_value(v))
    }

    pub fn unscale(&self, t: &Tensor) -> Tensor {
        t.map(|v| self.unscale_value(v))
    }
}
