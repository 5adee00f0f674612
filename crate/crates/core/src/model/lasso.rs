//! L1-penalized linear baseline, fit by cyclic coordinate descent.
//!
//! Each station gets its own regression of the next-hour demand on that
//! station's C0 lags plus every station's last-hour value. Features are
//! standardized (population variance) before fitting; coefficients are
//! stored on the standardized scale together with the feature means and
//! standard deviations.
//!
//! Objective per station: (1/2n) Σ (y - Xβ)² + λ Σ |β|.

use crate::data::window::WindowedSample;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAX_SWEEPS: usize = 10_000;
const COEF_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoParams {
    /// N x P coefficients on the standardized feature scale.
    pub coef: Tensor,
    /// N x 1 intercepts (mean of each station's target).
    pub intercept: Tensor,
    /// N x P feature means.
    pub feat_mean: Tensor,
    /// N x P feature standard deviations (1.0 where a feature is constant).
    pub feat_std: Tensor,
}

impl LassoParams {
    pub fn n_features(&self) -> usize {
        self.coef.cols()
    }
}

/// S(z, γ) = sign(z) · max(|z| − γ, 0).
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Feature vector for one station from one input window: the station's own
/// lags (oldest first) followed by all stations' last-hour values.
pub fn lasso_features(x: &Tensor, station: usize) -> Vec<f64> {
    let c0 = x.cols();
    let n = x.rows();
    let mut features = Vec::with_capacity(c0 + n);
    for c in 0..c0 {
        features.push(x.get(station, c));
    }
    for j in 0..n {
        features.push(x.get(j, c0 - 1));
    }
    features
}

fn fit_station(
    rows: &[Vec<f64>],
    targets: &[f64],
    lambda: f64,
) -> (Vec<f64>, f64, Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let p = rows[0].len();
    let nf = n as f64;

    let mut mean = vec![0.0; p];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= nf;
    }
    let mut std = vec![0.0; p];
    for row in rows {
        for k in 0..p {
            let d = row[k] - mean[k];
            std[k] += d * d;
        }
    }
    for s in std.iter_mut() {
        *s = (*s / nf).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }

    let y_mean = targets.iter().sum::<f64>() / nf;
    // Standardized design and centered targets.
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(k, v)| (v - mean[k]) / std[k])
                .collect()
        })
        .collect();
    let y_c: Vec<f64> = targets.iter().map(|y| y - y_mean).collect();

    let mut beta = vec![0.0; p];
    let mut residual = y_c.clone();
    // Column norms (1/n) Σ z²; exactly 1 for non-constant features, 0 for
    // constant ones (their z column is all zeros).
    let mut col_norm = vec![0.0; p];
    for zrow in &z {
        for (k, v) in zrow.iter().enumerate() {
            col_norm[k] += v * v;
        }
    }
    for c in col_norm.iter_mut() {
        *c /= nf;
    }

    for _ in 0..MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for k in 0..p {
            if col_norm[k] == 0.0 {
                continue;
            }
            let old = beta[k];
            let mut rho = 0.0;
            for (zrow, r) in z.iter().zip(&residual) {
                rho += zrow[k] * (r + zrow[k] * old);
            }
            rho /= nf;
            let new = soft_threshold(rho, lambda) / col_norm[k];
            if new != old {
                let delta = new - old;
                for (zrow, r) in z.iter().zip(residual.iter_mut()) {
                    *r -= delta * zrow[k];
                }
                beta[k] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < COEF_TOLERANCE {
            break;
        }
    }

    (beta, y_mean, mean, std)
}

/// Fit one lasso per station on scaled windowed samples.
pub fn lasso_fit(samples: &[WindowedSample], lambda: f64) -> Result<LassoParams> {
    if samples.is_empty() {
        return Err(Error::EmptyInput(
            "lasso_fit needs at least one sample".into(),
        ));
    }
    if lambda < 0.0 {
        return Err(Error::Contract("lasso lambda must be non-negative".into()));
    }
    let n = samples[0].x.rows();
    let p = samples[0].x.cols() + n;

    let mut coef = Tensor::zeros(n, p);
    let mut intercept = Tensor::zeros(n, 1);
    let mut feat_mean = Tensor::zeros(n, p);
    let mut feat_std = Tensor::zeros(n, p);

    for station in 0..n {
        let rows: Vec<Vec<f64>> = samples
            .iter()
            .map(|s| lasso_features(&s.x, station))
            .collect();
        let targets: Vec<f64> = samples.iter().map(|s| s.y.get(station, 0)).collect();
        let (beta, y_mean, mean, std) = fit_station(&rows, &targets, lambda);
        for k in 0..p {
            coef.set(station, k, beta[k]);
            feat_mean.set(station, k, mean[k]);
            feat_std.set(station, k, std[k]);
        }
        intercept.set(station, 0, y_mean);
    }

    Ok(LassoParams {
        coef,
        intercept,
        feat_mean,
        feat_std,
    })
}

/// Predict all stations' next-hour demand (scaled space) from a scaled window.
pub fn lasso_predict(params: &LassoParams, x_scaled: &Tensor) -> Result<Tensor> {
    let n = params.coef.rows();
    if x_scaled.rows() != n {
        return Err(Error::StationMismatch(format!(
            "lasso model has {n} stations, input has {}",
            x_scaled.rows()
        )));
    }
    let p = params.n_features();
    if x_scaled.cols() + n != p {
        return Err(Error::Contract(format!(
            "lasso model expects a window of {} lags, got {}",
            p - n,
            x_scaled.cols()
        )));
    }
    let mut out = Tensor::zeros(n, 1);
    for station in 0..n {
        let features = lasso_features(x_scaled, station);
        let mut pred = params.intercept.get(station, 0);
        for (k, v) in features.iter().enumerate() {
            let z = (v - params.feat_mean.get(station, k)) / params.feat_std.get(station, k);
            pred += params.coef.get(station, k) * z;
        }
        out.set(station, 0, pred);
    }
    Ok(out)
}
