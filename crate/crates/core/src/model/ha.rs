//! Historical-average baseline: per station, the mean training demand at
//! each hour of day.

use crate::data::demand::DemandMatrix;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct HaParams {
    /// N x 24 hour-of-day means; hours never seen in training fall back to
    /// the station's global mean.
    pub hourly: Tensor,
    /// N x 1 global mean per station.
    pub global: Tensor,
}

pub fn ha_fit(train: &DemandMatrix) -> Result<HaParams> {
    let n = train.n_stations();
    let t = train.n_hours();
    if t == 0 {
        return Err(Error::EmptyInput("cannot fit HA on an empty matrix".into()));
    }
    let mut sums = vec![[0.0f64; 24]; n];
    let mut counts = [0u64; 24];
    for i in 0..t {
        let hod = train.hour_of_day(i) as usize;
        counts[hod] += 1;
        for (j, sum) in sums.iter_mut().enumerate() {
            sum[hod] += train.count(j, i) as f64;
        }
    }

    let mut global = Tensor::zeros(n, 1);
    for j in 0..n {
        let total: f64 = sums[j].iter().sum();
        global.set(j, 0, total / t as f64);
    }

    let mut hourly = Tensor::zeros(n, 24);
    for j in 0..n {
        for hod in 0..24 {
            let value = if counts[hod] > 0 {
                sums[j][hod] / counts[hod] as f64
            } else {
                global.get(j, 0)
            };
            hourly.set(j, hod, value);
        }
    }
    Ok(HaParams { hourly, global })
}

pub fn ha_predict(params: &HaParams, station: usize, hour_of_day: u32) -> Result<f64> {
    if station >= params.hourly.rows() {
        return Err(Error::StationMismatch(format!(
            "station index {station} out of range for {} stations",
            params.hourly.rows()
        )));
    }
    if hour_of_day > 23 {
        return Err(Error::Contract(format!(
            "hour of day {hour_of_day} out of range"
        )));
    }
    Ok(params.hourly.get(station, hour_of_day as usize))
}
