//! Python bindings: ingest trip CSVs, train demand models and inspect the
//! learned graph filters from Python.

use std::collections::BTreeSet;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ddgf_core::container;
use ddgf_core::data::{build_demand_matrix, open_trip_file, parse_trips};
use ddgf_core::graph::{normalize_adjacency as core_normalize, AdjacencyKind, AdjacencyMatrix};
use ddgf_core::model::ModelSpec;
use ddgf_core::train::{
    evaluate_model, fit_model, prepare, MetricsReport, SplitRatios, TrainConfig,
};
use ddgf_core::Tensor;

fn to_py_err(e: ddgf_core::Error) -> PyErr {
    if e.is_user_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn tensor_from_rows(rows: Vec<Vec<f64>>) -> PyResult<Tensor> {
    Tensor::from_rows(&rows).map_err(to_py_err)
}

fn tensor_to_rows(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows())
        .map(|i| (0..t.cols()).map(|j| t.get(i, j)).collect())
        .collect()
}

fn metrics_to_dict(py: Python<'_>, report: &MetricsReport) -> PyResult<Py<pyo3::types::PyDict>> {
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("rmse", report.rmse)?;
    dict.set_item("rmse_daytime", report.rmse_daytime)?;
    dict.set_item("mae", report.mae)?;
    dict.set_item("r2", report.r2)?;
    dict.set_item("hours", report.hours)?;
    dict.set_item("stations", report.stations)?;
    Ok(dict.unbind())
}

/// Hourly station-demand matrix.
#[pyclass(name = "DemandMatrix", skip_from_py_object)]
#[derive(Clone)]
struct PyDemandMatrix {
    inner: ddgf_core::data::DemandMatrix,
}

#[pymethods]
impl PyDemandMatrix {
    /// Ingest one or more trip CSVs (gzip accepted).
    #[staticmethod]
    #[pyo3(signature = (paths, stations=None))]
    fn from_csv(paths: Vec<PathBuf>, stations: Option<Vec<String>>) -> PyResult<Self> {
        let mut trips = Vec::new();
        for path in &paths {
            let reader = open_trip_file(path).map_err(to_py_err)?;
            let outcome = parse_trips(reader).map_err(to_py_err)?;
            trips.extend(outcome.trips);
        }
        let filter: Option<BTreeSet<String>> = stations.map(|s| s.into_iter().collect());
        let inner = build_demand_matrix(&trips, filter.as_ref()).map_err(to_py_err)?;
        Ok(PyDemandMatrix { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyDemandMatrix {
            inner: container::read_demand(&path).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        container::write_demand(&path, &self.inner, None).map_err(to_py_err)
    }

    #[getter]
    fn n_stations(&self) -> usize {
        self.inner.n_stations()
    }

    #[getter]
    fn n_hours(&self) -> usize {
        self.inner.n_hours()
    }

    #[getter]
    fn stations(&self) -> Vec<String> {
        self.inner.stations().to_vec()
    }

    /// Counts as a stations x hours list of lists.
    fn counts(&self) -> Vec<Vec<u32>> {
        (0..self.inner.n_stations())
            .map(|j| {
                (0..self.inner.n_hours())
                    .map(|i| self.inner.count(j, i))
                    .collect()
            })
            .collect()
    }

    fn hour_of_day(&self, column: usize) -> u32 {
        self.inner.hour_of_day(column)
    }

    fn total(&self) -> u64 {
        self.inner.total()
    }

    fn __repr__(&self) -> String {
        format!(
            "DemandMatrix({} stations x {} hours, {} check-outs)",
            self.inner.n_stations(),
            self.inner.n_hours(),
            self.inner.total()
        )
    }
}

/// A fitted model plus its scaler and station universe.
#[pyclass(name = "TrainedModel")]
struct PyTrainedModel {
    inner: ddgf_core::model::TrainedModel,
}

#[pymethods]
impl PyTrainedModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyTrainedModel {
            inner: container::read_model(&path).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        container::write_model(&path, &self.inner, None).map_err(to_py_err)
    }

    /// Next-hour forecast in demand counts. `x` is the stations x lags
    /// window in raw counts, `hour` the clock hour (0-23) being predicted.
    fn predict(&self, x: Vec<Vec<f64>>, hour: u32) -> PyResult<Vec<f64>> {
        let x = tensor_from_rows(x)?;
        let pred = self.inner.predict(&x, hour).map_err(to_py_err)?;
        Ok(pred.data().to_vec())
    }

    /// Materialized graph filter of a convolution layer.
    fn filter_matrix(&self, layer: usize) -> PyResult<Vec<Vec<f64>>> {
        let filter = self.inner.materialized_filter(layer).map_err(to_py_err)?;
        Ok(tensor_to_rows(&filter))
    }

    #[getter]
    fn stations(&self) -> Vec<String> {
        self.inner.stations.clone()
    }

    #[getter]
    fn architecture(&self) -> String {
        self.inner.spec.architecture.to_string()
    }

    #[getter]
    fn window_len(&self) -> Option<usize> {
        self.inner.window_len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TrainedModel({}, {} stations)",
            self.inner.spec.architecture,
            self.inner.n_stations()
        )
    }
}

fn build_spec(
    arch: &str,
    c0: usize,
    hidden_widths: Option<Vec<usize>>,
    conv_widths: Option<Vec<usize>>,
    lstm_hidden: Option<usize>,
    lasso_lambda: Option<f64>,
) -> PyResult<ModelSpec> {
    let hidden = hidden_widths.unwrap_or_else(|| vec![32, 16]);
    let conv = conv_widths.unwrap_or_else(|| vec![16]);
    let u = lstm_hidden.unwrap_or(32);
    let spec = match arch {
        "gcnn-reg-ddgf" => ModelSpec::gcnn_reg(c0, &hidden),
        "gcnn-rec-ddgf" => ModelSpec::gcnn_rec(&conv, u),
        "gcnn-fixed" => ModelSpec::gcnn_fixed(AdjacencyKind::Identity, c0, &hidden),
        "mlp" => ModelSpec::mlp(c0, &hidden),
        "lstm" => ModelSpec::lstm(u),
        "ha" => ModelSpec::historical_average(),
        "lasso" => ModelSpec::lasso(lasso_lambda.unwrap_or(1e-3)),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown arch '{other}' (expected gcnn-reg-ddgf|gcnn-rec-ddgf|gcnn-fixed|mlp|lstm|ha|lasso)"
            )))
        }
    };
    spec.validate().map_err(to_py_err)?;
    Ok(spec)
}

fn ratios_from(ratios: Option<(f64, f64, f64)>) -> PyResult<SplitRatios> {
    match ratios {
        Some((train, val, test)) => SplitRatios::new(train, val, test).map_err(to_py_err),
        None => Ok(SplitRatios::default()),
    }
}

/// Train a model on a demand matrix. Returns the model and the per-epoch
/// (train_loss, val_loss) history.
#[pyfunction]
#[pyo3(signature = (
    demand, arch, c0=24, hidden_widths=None, conv_widths=None, lstm_hidden=None,
    lasso_lambda=None, graph=None, learning_rate=1e-3, epochs=200, batch_size=16,
    patience=10, seed=42, ratios=None
))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    demand: &PyDemandMatrix,
    arch: &str,
    c0: usize,
    hidden_widths: Option<Vec<usize>>,
    conv_widths: Option<Vec<usize>>,
    lstm_hidden: Option<usize>,
    lasso_lambda: Option<f64>,
    graph: Option<PathBuf>,
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
    patience: usize,
    seed: u64,
    ratios: Option<(f64, f64, f64)>,
) -> PyResult<(PyTrainedModel, Vec<(usize, f64, f64)>)> {
    let spec = build_spec(
        arch,
        c0,
        hidden_widths,
        conv_widths,
        lstm_hidden,
        lasso_lambda,
    )?;
    let filter = match graph {
        Some(path) => Some(container::read_filter(&path).map_err(to_py_err)?),
        None => None,
    };
    let config = TrainConfig {
        learning_rate,
        epochs,
        batch_size,
        patience,
        seed,
        ratios: ratios_from(ratios)?,
    };
    let inner_demand = demand.inner.clone();
    let outcome = py
        .detach(move || -> ddgf_core::Result<_> {
            let data = prepare(inner_demand, c0, config.ratios)?;
            fit_model(&spec, &data, &config, filter.as_ref())
        })
        .map_err(to_py_err)?;
    let history = outcome
        .history
        .iter()
        .map(|s| (s.epoch, s.train_loss, s.val_loss))
        .collect();
    Ok((
        PyTrainedModel {
            inner: outcome.model,
        },
        history,
    ))
}

/// Evaluate a model on the chronological test split of a demand matrix.
#[pyfunction]
#[pyo3(signature = (model, demand, c0=24, ratios=None))]
fn evaluate(
    py: Python<'_>,
    model: &PyTrainedModel,
    demand: &PyDemandMatrix,
    c0: usize,
    ratios: Option<(f64, f64, f64)>,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let data = prepare(demand.inner.clone(), c0, ratios_from(ratios)?).map_err(to_py_err)?;
    let report = evaluate_model(&model.inner, data.test()).map_err(to_py_err)?;
    metrics_to_dict(py, &report)
}

/// Symmetric self-loop normalization of a non-negative adjacency matrix.
#[pyfunction]
fn normalize_adjacency(values: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let t = tensor_from_rows(values)?;
    let adj = AdjacencyMatrix::new(AdjacencyKind::Demand, t).map_err(to_py_err)?;
    Ok(tensor_to_rows(core_normalize(&adj).values()))
}

/// RMSE / daytime RMSE / MAE / R² over an hours x stations block.
#[pyfunction]
fn compute_metrics(
    py: Python<'_>,
    y: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    row_hours: Vec<u32>,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let y = tensor_from_rows(y)?;
    let p = tensor_from_rows(p)?;
    let report = ddgf_core::train::compute_metrics(&y, &p, &row_hours).map_err(to_py_err)?;
    metrics_to_dict(py, &report)
}

/// Pearson correlation; zero-variance series correlate to 0.
#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    ddgf_core::graph::pearson(&x, &y).map_err(to_py_err)
}

#[pymodule]
fn ddgf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDemandMatrix>()?;
    m.add_class::<PyTrainedModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_adjacency, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    Ok(())
}
