//! Hourly station-demand matrices.
//!
//! "Demand" here is check-outs: the number of trips that *start* at a
//! station during a clock hour. Hours are bucketed by the raw local
//! timestamps in the source file; no timezone conversion is applied.

use std::collections::BTreeSet;

use chrono::{NaiveDateTime, Timelike};

use crate::data::trips::TripRecord;
use crate::error::{Error, Result};

/// N stations x T hours of non-negative check-out counts. Hours are
/// contiguous: column `i` is exactly `t0 + i` hours, and hours with no
/// trips are explicit zero columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    stations: Vec<String>,
    t0: NaiveDateTime,
    n: usize,
    t: usize,
    /// Row-major N x T: counts[j * t + i] is station j at hour i.
    counts: Vec<u32>,
}

pub(crate) fn floor_to_hour(dt: NaiveDateTime) -> NaiveDateTime {
    dt.with_minute(0)
        .and_then(|d| d.with_second(0))
        .and_then(|d| d.with_nanosecond(0))
        .expect("zeroing sub-hour fields cannot fail")
}

impl DemandMatrix {
    pub fn from_parts(
        stations: Vec<String>,
        t0: NaiveDateTime,
        n_hours: usize,
        counts: Vec<u32>,
    ) -> Result<Self> {
        if counts.len() != stations.len() * n_hours {
            return Err(Error::Contract(format!(
                "demand matrix expects {} x {} = {} counts, got {}",
                stations.len(),
                n_hours,
                stations.len() * n_hours,
                counts.len()
            )));
        }
        if t0 != floor_to_hour(t0) {
            return Err(Error::Contract(
                "demand matrix t0 must be on the hour".into(),
            ));
        }
        Ok(DemandMatrix {
            n: stations.len(),
            t: n_hours,
            stations,
            t0,
            counts,
        })
    }

    pub fn n_stations(&self) -> usize {
        self.n
    }

    pub fn n_hours(&self) -> usize {
        self.t
    }

    pub fn stations(&self) -> &[String] {
        &self.stations
    }

    pub fn t0(&self) -> NaiveDateTime {
        self.t0
    }

    pub fn count(&self, station: usize, hour: usize) -> u32 {
        self.counts[station * self.t + hour]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn station_index(&self, id: &str) -> Option<usize> {
        self.stations.iter().position(|s| s == id)
    }

    /// Clock hour of day (0-23) for column `i`.
    pub fn hour_of_day(&self, i: usize) -> u32 {
        (self.t0 + chrono::Duration::hours(i as i64)).hour()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| *c as u64).sum()
    }

    /// Demand series of one station as floats.
    pub fn station_series(&self, station: usize) -> Vec<f64> {
        self.counts[station * self.t..(station + 1) * self.t]
            .iter()
            .map(|c| *c as f64)
            .collect()
    }

    /// Sub-matrix covering hour columns `[0, end_hour)`.
    pub fn prefix_hours(&self, end_hour: usize) -> Result<DemandMatrix> {
        if end_hour == 0 || end_hour > self.t {
            return Err(Error::Contract(format!(
                "prefix_hours({end_hour}) out of range for {} hours",
                self.t
            )));
        }
        let mut counts = Vec::with_capacity(self.n * end_hour);
        for j in 0..self.n {
            counts.extend_from_slice(&self.counts[j * self.t..j * self.t + end_hour]);
        }
        DemandMatrix::from_parts(self.stations.clone(), self.t0, end_hour, counts)
    }
}

/// Count check-outs per station per hour over the span of the given trips.
///
/// The station universe is every id seen as a start station, sorted; with a
/// `filter` it is exactly the filtered set, and trips from other stations are
/// dropped with a warning.
pub fn build_demand_matrix(
    trips: &[TripRecord],
    filter: Option<&BTreeSet<String>>,
) -> Result<DemandMatrix> {
    if trips.is_empty() {
        return Err(Error::EmptyInput(
            "no trips to build a demand matrix from".into(),
        ));
    }

    let stations: Vec<String> = match filter {
        Some(set) => set.iter().cloned().collect(),
        None => trips
            .iter()
            .map(|t| t.start_station.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    if stations.is_empty() {
        return Err(Error::EmptyInput("station filter is empty".into()));
    }

    let kept: Vec<&TripRecord> = match filter {
        Some(set) => trips
            .iter()
            .filter(|t| set.contains(&t.start_station))
            .collect(),
        None => trips.iter().collect(),
    };
    let dropped = trips.len() - kept.len();
    if dropped > 0 {
        log::warn!("dropped {dropped} trips from stations outside the filter");
    }
    if kept.is_empty() {
        return Err(Error::EmptyInput(
            "no trips match the station filter".into(),
        ));
    }

    let t0 = floor_to_hour(kept.iter().map(|t| t.start_time).min().unwrap());
    let t_last = floor_to_hour(kept.iter().map(|t| t.start_time).max().unwrap());
    let n_hours = (t_last - t0).num_hours() as usize + 1;

    let n = stations.len();
    let mut counts = vec![0u32; n * n_hours];
    for trip in kept {
        // Universe construction guarantees the lookup succeeds.
        let j = stations
            .binary_search(&trip.start_station)
            .expect("start station missing from universe");
        let i = (floor_to_hour(trip.start_time) - t0).num_hours() as usize;
        counts[j * n_hours + i] += 1;
    }

    DemandMatrix::from_parts(stations, t0, n_hours, counts)
}
