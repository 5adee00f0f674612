//! Side-by-side model comparison on a shared split.

use crate::error::Result;
use crate::graph::GraphFilter;
use crate::model::spec::ModelSpec;
use crate::train::metrics::{evaluate_model, MetricsReport};
use crate::train::trainer::{fit_model, PreparedData, TrainConfig};

/// Published full-corpus reference results (28M Citi Bike trips, 2013-2016)
/// from the original GCNN-DDGF study, reproduced in report footers for
/// context. Columns: model, RMSE, RMSE 7AM-9PM, MAE, R².
pub const REFERENCE_RESULTS: &[(&str, f64, f64, f64, f64)] = &[
    ("GCNN_rec-DDGF", 2.12, 2.58, 1.26, 0.75),
    ("GCNN_reg-DDGF", 2.35, 2.85, 1.43, 0.70),
    ("XGBoost", 2.43, 2.95, 1.44, 0.68),
    ("LSTM", 2.46, 3.00, 1.44, 0.67),
    ("GCNN-DC", 2.50, 3.02, 1.53, 0.66),
    ("MLP", 2.51, 3.05, 1.51, 0.65),
    ("GCNN-DE", 2.67, 3.21, 1.60, 0.61),
    ("SVR-RBF", 2.67, 3.25, 1.57, 0.61),
    ("LASSO", 2.70, 3.27, 1.65, 0.60),
    ("SVR-linear", 2.72, 3.31, 1.52, 0.59),
    ("GCNN-SD", 2.77, 3.31, 1.68, 0.58),
    ("HA", 3.44, 3.42, 2.08, 0.35),
    ("GCNN-ATD", 3.44, 3.83, 2.21, 0.35),
];

#[derive(Debug, Clone)]
pub struct ComparisonEntry {
    pub name: String,
    pub spec: ModelSpec,
    /// Pre-built filter for fixed-filter specs.
    pub filter: Option<GraphFilter>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub name: String,
    pub report: MetricsReport,
}

/// Fit every entry on the same splits and scaler convention, evaluate on the
/// test split, and sort by RMSE ascending.
pub fn run_comparison(
    entries: &[ComparisonEntry],
    data: &PreparedData,
    config: &TrainConfig,
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::with_capacity(entries.len());
    for entry in entries {
        log::info!("fitting {}", entry.name);
        let outcome = fit_model(&entry.spec, data, config, entry.filter.as_ref())?;
        let report = evaluate_model(&outcome.model, data.test())?;
        rows.push(ComparisonRow {
            name: entry.name.clone(),
            report,
        });
    }
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn sort_rows(rows: &mut [ComparisonRow]) {
    rows.sort_by(|a, b| {
        a.report
            .rmse
            .partial_cmp(&b.report.rmse)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.name.cmp(&b.name))
    });
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("model,rmse,rmse_daytime,mae,r2,hours,stations\n");
    for row in rows {
        let r = &row.report;
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{},{}\n",
            row.name, r.rmse, r.rmse_daytime, r.mae, r.r2, r.hours, r.stations
        ));
    }
    out
}

/// Aligned text table, RMSE ascending, with the published reference numbers
/// as a footer.
pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let name_width = rows
        .iter()
        .map(|r| r.name.len())
        .chain(["Model".len()])
        .max()
        .unwrap_or(5);
    let mut out = String::new();
    out.push_str(&format!(
        "{:<name_width$}  {:>8}  {:>15}  {:>8}  {:>8}\n",
        "Model", "RMSE", "RMSE (7AM-9PM)", "MAE", "R2"
    ));
    for row in rows {
        let r = &row.report;
        out.push_str(&format!(
            "{:<name_width$}  {:>8.4}  {:>15.4}  {:>8.4}  {:>8.4}\n",
            row.name, r.rmse, r.rmse_daytime, r.mae, r.r2
        ));
    }
    out.push('\n');
    out.push_str(
        "Reference (original GCNN-DDGF study; full 28M-trip Citi Bike corpus, 2013-2016):\n",
    );
    for (name, rmse, rmse_day, mae, r2) in REFERENCE_RESULTS {
        out.push_str(&format!(
            "  {name:<14} RMSE {rmse:.2}  RMSE(7AM-9PM) {rmse_day:.2}  MAE {mae:.2}  R2 {r2:.2}\n"
        ));
    }
    out
}
