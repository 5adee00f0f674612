//! Fixed adjacency matrices and their symmetric normalization.
//!
//! Four data-driven constructions are supported: thresholded inverse
//! distance (SD), trip counts (DE), mean trip duration (ATD) and clipped
//! demand correlation (DC). Each yields an exactly symmetric, non-negative
//! matrix with a zero diagonal; `normalize_adjacency` then applies the
//! self-loop + degree normalization that turns it into a graph filter whose
//! spectrum lies in [-1, 1].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::demand::DemandMatrix;
use crate::data::trips::TripRecord;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyKind {
    /// 1/distance for station pairs within a distance threshold.
    SparseDistance,
    /// Trip counts between station pairs, either direction.
    Demand,
    /// Mean trip duration (seconds) between station pairs.
    AvgTripDuration,
    /// Non-negative part of the Pearson correlation of hourly demand series.
    DemandCorrelation,
    /// The all-zero adjacency; normalizes to the identity filter, which makes
    /// the fixed-filter GCNN collapse to a per-station MLP with shared
    /// weights.
    Identity,
}

impl std::fmt::Display for AdjacencyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AdjacencyKind::SparseDistance => "sd",
            AdjacencyKind::Demand => "de",
            AdjacencyKind::AvgTripDuration => "atd",
            AdjacencyKind::DemandCorrelation => "dc",
            AdjacencyKind::Identity => "identity",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for AdjacencyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sd" => Ok(AdjacencyKind::SparseDistance),
            "de" => Ok(AdjacencyKind::Demand),
            "atd" => Ok(AdjacencyKind::AvgTripDuration),
            "dc" => Ok(AdjacencyKind::DemandCorrelation),
            "identity" | "id" => Ok(AdjacencyKind::Identity),
            other => Err(Error::InvalidConfig(format!(
                "unknown adjacency kind '{other}' (expected sd|de|atd|dc|identity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    /// SD cutoff: pairs farther apart than this get weight 0.
    pub sd_threshold_km: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            sd_threshold_km: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    pub kind: AdjacencyKind,
    values: Tensor,
}

impl AdjacencyMatrix {
    pub fn new(kind: AdjacencyKind, values: Tensor) -> Result<Self> {
        if values.rows() != values.cols() {
            return Err(Error::Contract(format!(
                "adjacency matrix must be square, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        for i in 0..values.rows() {
            if values.get(i, i) != 0.0 {
                return Err(Error::Contract("adjacency diagonal must be zero".into()));
            }
            for j in 0..values.cols() {
                let v = values.get(i, j);
                if v < 0.0 {
                    return Err(Error::Contract(
                        "adjacency weights must be non-negative".into(),
                    ));
                }
                if v.to_bits() != values.get(j, i).to_bits() {
                    return Err(Error::Contract("adjacency matrix must be symmetric".into()));
                }
            }
        }
        Ok(AdjacencyMatrix { kind, values })
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }
}

/// A normalized filter ready to drop into the GCNN layer rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFilter {
    values: Tensor,
}

impl GraphFilter {
    pub fn new(values: Tensor) -> Result<Self> {
        if values.rows() != values.cols() {
            return Err(Error::Contract(format!(
                "graph filter must be square, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        Ok(GraphFilter { values })
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn into_values(self) -> Tensor {
        self.values
    }
}

/// Great-circle distance in kilometers.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    const EARTH_RADIUS_KM: f64 = 6371.0;
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().atan2((1.0 - a).sqrt())
}

/// Pearson correlation coefficient. Series with zero variance correlate to 0
/// by convention rather than producing NaN.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!(
            "pearson requires equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Contract("pearson requires at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// First coordinate seen for each station (as start or end of a trip).
fn station_coordinates(trips: &[TripRecord], stations: &[String]) -> Result<Vec<(f64, f64)>> {
    let mut coords: HashMap<&str, (f64, f64)> = HashMap::new();
    for trip in trips {
        if let (Some(lat), Some(lon)) = (trip.start_lat, trip.start_lon) {
            coords
                .entry(trip.start_station.as_str())
                .or_insert((lat, lon));
        }
        if let (Some(lat), Some(lon)) = (trip.end_lat, trip.end_lon) {
            coords
                .entry(trip.end_station.as_str())
                .or_insert((lat, lon));
        }
    }
    let mut resolved = Vec::with_capacity(stations.len());
    let mut missing = Vec::new();
    for s in stations {
        match coords.get(s.as_str()) {
            Some(c) => resolved.push(*c),
            None => missing.push(s.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCoordinates { stations: missing });
    }
    Ok(resolved)
}

/// Minimum distance used for the SD weight so co-located stations do not
/// produce an infinite weight (1 meter).
const SD_MIN_DISTANCE_KM: f64 = 1e-3;

/// Build a fixed adjacency of the requested kind over the demand matrix's
/// station universe. Trips and demand should cover the training period only.
pub fn build_adjacency(
    kind: AdjacencyKind,
    trips: &[TripRecord],
    demand: &DemandMatrix,
    params: &GraphParams,
) -> Result<AdjacencyMatrix> {
    let n = demand.n_stations();
    let stations = demand.stations();
    let index: HashMap<&str, usize> = stations
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let mut values = Tensor::zeros(n, n);
    match kind {
        AdjacencyKind::Identity => {}
        AdjacencyKind::SparseDistance => {
            let coords = station_coordinates(trips, stations)?;
            for i in 0..n {
                for j in i + 1..n {
                    let (lat1, lon1) = coords[i];
                    let (lat2, lon2) = coords[j];
                    let d = haversine_km(lat1, lon1, lat2, lon2);
                    if d <= params.sd_threshold_km {
                        let w = 1.0 / d.max(SD_MIN_DISTANCE_KM);
                        values.set(i, j, w);
                        values.set(j, i, w);
                    }
                }
            }
        }
        AdjacencyKind::Demand => {
            for trip in trips {
                let (Some(&i), Some(&j)) = (
                    index.get(trip.start_station.as_str()),
                    index.get(trip.end_station.as_str()),
                ) else {
                    continue;
                };
                if i == j {
                    continue;
                }
                values.set(i, j, values.get(i, j) + 1.0);
                values.set(j, i, values.get(j, i) + 1.0);
            }
        }
        AdjacencyKind::AvgTripDuration => {
            let mut sums: HashMap<(usize, usize), (f64, u64)> = HashMap::new();
            for trip in trips {
                let (Some(&i), Some(&j)) = (
                    index.get(trip.start_station.as_str()),
                    index.get(trip.end_station.as_str()),
                ) else {
                    continue;
                };
                if i == j {
                    continue;
                }
                let key = (i.min(j), i.max(j));
                let entry = sums.entry(key).or_insert((0.0, 0));
                entry.0 += trip.duration_secs as f64;
                entry.1 += 1;
            }
            for ((i, j), (total, count)) in sums {
                let mean = total / count as f64;
                values.set(i, j, mean);
                values.set(j, i, mean);
            }
        }
        AdjacencyKind::DemandCorrelation => {
            let series: Vec<Vec<f64>> = (0..n).map(|j| demand.station_series(j)).collect();
            for i in 0..n {
                for j in i + 1..n {
                    let r = pearson(&series[i], &series[j])?.max(0.0);
                    values.set(i, j, r);
                    values.set(j, i, r);
                }
            }
        }
    }

    AdjacencyMatrix::new(kind, values)
}

/// Add self-loops and symmetrically normalize by the degree matrix. The
/// result is exactly symmetric (upper triangle computed once and mirrored)
/// and its spectral radius is at most 1.
pub fn normalize_adjacency(a: &AdjacencyMatrix) -> GraphFilter {
    let n = a.n();
    let values = a.values();
    // Degrees of the self-loop-augmented matrix: always >= 1.
    let mut inv_sqrt_degree = vec![0.0; n];
    for i in 0..n {
        let mut degree = 1.0;
        for j in 0..n {
            degree += values.get(i, j);
        }
        inv_sqrt_degree[i] = 1.0 / degree.sqrt();
    }
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let augmented = values.get(i, j) + if i == j { 1.0 } else { 0.0 };
            let v = augmented * (inv_sqrt_degree[i] * inv_sqrt_degree[j]);
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    GraphFilter { values: out }
}
