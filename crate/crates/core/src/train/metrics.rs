//! Evaluation metrics over a test split, in original demand units.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::data::window::WindowedSample;
use crate::error::{Error, Result};
use crate::model::trained::TrainedModel;
use crate::tensor::Tensor;

/// Target hours counted as daytime: 7AM through 9PM inclusive.
pub const DAYTIME_HOURS: RangeInclusive<u32> = 7..=21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: f64,
    /// RMSE restricted to rows whose target hour falls in [`DAYTIME_HOURS`];
    /// 0 when no row does.
    pub rmse_daytime: f64,
    pub mae: f64,
    /// Pooled R²: SS_tot is taken around the global mean over all hours and
    /// stations. Degenerate rule: when SS_tot is 0, R² is 1 if SS_res is 0
    /// and 0 otherwise.
    pub r2: f64,
    pub hours: usize,
    pub stations: usize,
}

/// Metrics over an M x N block of true demands and predictions.
/// `row_hours[i]` is the clock hour of row i, used for the daytime RMSE.
pub fn compute_metrics(y: &Tensor, p: &Tensor, row_hours: &[u32]) -> Result<MetricsReport> {
    if y.shape() != p.shape() {
        return Err(Error::ShapeMismatch {
            op: "compute_metrics",
            lhs_rows: y.rows(),
            lhs_cols: y.cols(),
            rhs_rows: p.rows(),
            rhs_cols: p.cols(),
        });
    }
    if row_hours.len() != y.rows() {
        return Err(Error::Contract(format!(
            "row_hours has {} entries for {} rows",
            row_hours.len(),
            y.rows()
        )));
    }
    let (m, n) = y.shape();
    if m == 0 || n == 0 {
        return Err(Error::EmptyInput(
            "cannot compute metrics on an empty block".into(),
        ));
    }
    let total = (m * n) as f64;

    let mut ss_res = 0.0;
    let mut abs_sum = 0.0;
    let mut y_sum = 0.0;
    for (a, b) in y.data().iter().zip(p.data()) {
        let d = a - b;
        ss_res += d * d;
        abs_sum += d.abs();
        y_sum += a;
    }
    let y_mean = y_sum / total;
    let mut ss_tot = 0.0;
    for a in y.data() {
        let d = a - y_mean;
        ss_tot += d * d;
    }

    let mut day_sq = 0.0;
    let mut day_count = 0usize;
    for i in 0..m {
        if DAYTIME_HOURS.contains(&row_hours[i]) {
            for j in 0..n {
                let d = y.get(i, j) - p.get(i, j);
                day_sq += d * d;
            }
            day_count += n;
        }
    }

    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };

    Ok(MetricsReport {
        rmse: (ss_res / total).sqrt(),
        rmse_daytime: if day_count > 0 {
            (day_sq / day_count as f64).sqrt()
        } else {
            0.0
        },
        mae: abs_sum / total,
        r2,
        hours: m,
        stations: n,
    })
}

/// Predict every sample and compare against the recorded demand.
pub fn evaluate_model(model: &TrainedModel, samples: &[WindowedSample]) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("cannot evaluate on zero samples".into()));
    }
    let n = model.n_stations();
    let m = samples.len();
    let mut y = Tensor::zeros(m, n);
    let mut p = Tensor::zeros(m, n);
    let mut hours = Vec::with_capacity(m);
    for (i, sample) in samples.iter().enumerate() {
        let pred = model.predict(&sample.x, sample.target_hour_of_day)?;
        for j in 0..n {
            y.set(i, j, sample.y.get(j, 0));
            p.set(i, j, pred.get(j, 0));
        }
        hours.push(sample.target_hour_of_day);
    }
    compute_metrics(&y, &p, &hours)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let y = Tensor::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = Tensor::new(2, 2, vec![1.0, 2.0, 3.0, 6.0]).unwrap();
        let report = compute_metrics(&y, &p, &[8, 9]).unwrap();
        assert!((report.rmse - 1.0).abs() < 1e-12);
        assert!((report.mae - 0.5).abs() < 1e-12);
        assert!((report.r2 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction() {
        let y = Tensor::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let report = compute_metrics(&y, &y, &[3, 12]).unwrap();
        assert_eq!(report.rmse, 0.0);
        assert_eq!(report.rmse_daytime, 0.0);
        assert_eq!(report.mae, 0.0);
        assert_eq!(report.r2, 1.0);
    }

    #[test]
    fn pooled_mean_predictor_scores_zero_r2() {
        let y = Tensor::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = Tensor::filled(2, 2, 2.5);
        let report = compute_metrics(&y, &p, &[8, 9]).unwrap();
        assert!(report.r2.abs() < 1e-12);
    }

    #[test]
    fn constant_predictor_r2_nonpositive() {
        let y = Tensor::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        for c in [0.0, 1.0, 2.5, 4.0, 10.0] {
            let p = Tensor::filled(2, 2, c);
            let report = compute_metrics(&y, &p, &[8, 9]).unwrap();
            assert!(report.r2 <= 1e-12, "c={c}: r2={}", report.r2);
        }
    }

    #[test]
    fn daytime_restriction_drops_night_rows() {
        // Row 0 is 3AM (night), row 1 is noon. Errors only on the night row
        // leave the daytime RMSE at zero.
        let y = Tensor::new(2, 1, vec![5.0, 7.0]).unwrap();
        let p = Tensor::new(2, 1, vec![9.0, 7.0]).unwrap();
        let report = compute_metrics(&y, &p, &[3, 12]).unwrap();
        assert!(report.rmse > 0.0);
        assert_eq!(report.rmse_daytime, 0.0);

        // Boundary hours 7 and 21 count as daytime; 6 and 22 do not.
        let report = compute_metrics(&y, &p, &[7, 21]).unwrap();
        assert!(report.rmse_daytime > 0.0);
        let report = compute_metrics(&y, &p, &[6, 22]).unwrap();
        assert_eq!(report.rmse_daytime, 0.0);
    }

    #[test]
    fn degenerate_constant_truth() {
        let y = Tensor::filled(2, 2, 3.0);
        let report = compute_metrics(&y, &y, &[8, 9]).unwrap();
        assert_eq!(report.r2, 1.0);
        let p = Tensor::filled(2, 2, 4.0);
        let report = compute_metrics(&y, &p, &[8, 9]).unwrap();
        assert_eq!(report.r2, 0.0);
    }

    #[test]
    fn shape_mismatch_errors() {
        let y = Tensor::zeros(2, 2);
        let p = Tensor::zeros(2, 3);
        assert!(compute_metrics(&y, &p, &[8, 9]).is_err());
        let p = Tensor::zeros(2, 2);
        assert!(compute_metrics(&y, &p, &[8]).is_err());
    }

    #[test]
    fn rmse_invariant_under_station_permutation() {
        let y = Tensor::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let p = Tensor::new(2, 3, vec![1.5, 2.5, 2.0, 4.5, 4.0, 7.0]).unwrap();
        let perm = [2usize, 0, 1];
        let permute = |t: &Tensor| -> Tensor {
            let mut out = Tensor::zeros(t.rows(), t.cols());
            for i in 0..t.rows() {
                for (dst, &src) in perm.iter().enumerate() {
                    out.set(i, dst, t.get(i, src));
                }
            }
            out
        };
        let a = compute_metrics(&y, &p, &[8, 9]).unwrap();
        let b = compute_metrics(&permute(&y), &permute(&p), &[8, 9]).unwrap();
        assert_eq!(a.rmse, b.rmse);
        assert_eq!(a.mae, b.mae);
    }
}
