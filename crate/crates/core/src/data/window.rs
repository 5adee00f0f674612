//! Lag-window samples: C0 consecutive hours of demand as input, the next
//! hour as target.

use crate::data::demand::DemandMatrix;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    /// N x C0, columns in chronological order (oldest lag first).
    pub x: Tensor,
    /// N x 1, the hour immediately after the last input column.
    pub y: Tensor,
    /// Clock hour (0-23) of the target column.
    pub target_hour_of_day: u32,
}

/// Slide a window of `c0` hours over the demand matrix. Produces exactly
/// `T - c0` samples in chronological order.
pub fn make_windows(demand: &DemandMatrix, c0: usize) -> Result<Vec<WindowedSample>> {
    if c0 == 0 {
        return Err(Error::Contract(
            "window length c0 must be at least 1".into(),
        ));
    }
    let t = demand.n_hours();
    if t < c0 + 1 {
        return Err(Error::Contract(format!(
            "need at least c0 + 1 = {} hours to build windows, have {t}",
            c0 + 1
        )));
    }
    let n = demand.n_stations();
    let mut samples = Vec::with_capacity(t - c0);
    for k in 0..t - c0 {
        let mut x = Tensor::zeros(n, c0);
        for j in 0..n {
            for c in 0..c0 {
                x.set(j, c, demand.count(j, k + c) as f64);
            }
        }
        let y_vals: Vec<f64> = (0..n).map(|j| demand.count(j, k + c0) as f64).collect();
        samples.push(WindowedSample {
            x,
            y: Tensor::column(&y_vals)?,
            target_hour_of_day: demand.hour_of_day(k + c0),
        });
    }
    Ok(samples)
}
