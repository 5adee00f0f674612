//! Subcommand implementations.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use ddgf_core::container;
use ddgf_core::data::{build_demand_matrix, open_trip_file, parse_trips, TripRecord};
use ddgf_core::graph::{build_adjacency, normalize_adjacency, AdjacencyKind, GraphParams};
use ddgf_core::model::Architecture;
use ddgf_core::train::{
    comparison_csv, comparison_table, evaluate_model, fit_model, prepare, sort_rows, ComparisonRow,
    MetricsReport, PreparedData, TrainConfig,
};
use ddgf_core::Tensor;

use crate::config::ExperimentConfig;

/// Command error carrying the process exit code: 1 for user errors (bad
/// paths, bad config, malformed input), 2 for internal invariant violations.
#[derive(Debug)]
pub struct CmdError {
    source: anyhow::Error,
    internal: bool,
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        if self.internal {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.source.fmt(f)
    }
}

impl From<anyhow::Error> for CmdError {
    fn from(source: anyhow::Error) -> Self {
        let internal = source
            .downcast_ref::<ddgf_core::Error>()
            .map(|e| !e.is_user_error())
            .unwrap_or(false);
        CmdError { source, internal }
    }
}

impl From<ddgf_core::Error> for CmdError {
    fn from(e: ddgf_core::Error) -> Self {
        CmdError::from(anyhow::Error::from(e))
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError {
            source: e.into(),
            internal: false,
        }
    }
}

type CmdResult = Result<(), CmdError>;

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance hash over a canonical description of the invocation.
fn invocation_hash(parts: &[&str]) -> String {
    sha256_hex(parts.join("\x1f").as_bytes())
}

fn ingest_files(inputs: &[PathBuf]) -> Result<Vec<TripRecord>, CmdError> {
    let mut trips = Vec::new();
    for path in inputs {
        let reader = open_trip_file(path)?;
        let outcome = parse_trips(reader)?;
        log::info!(
            "{}: {} trips, {} rejected",
            path.display(),
            outcome.trips.len(),
            outcome.rejected.len()
        );
        for reject in &outcome.rejected {
            log::debug!(
                "{}:{} rejected ({}): {}",
                path.display(),
                reject.line,
                reject.reason.code(),
                reject.reason
            );
        }
        trips.extend(outcome.trips);
    }
    Ok(trips)
}

fn station_filter(spec: Option<&str>) -> Option<BTreeSet<String>> {
    spec.map(|s| {
        s.split(',')
            .map(|id| id.trim().to_string())
            .filter(|id| !id.is_empty())
            .collect()
    })
}

pub fn ingest(inputs: &[PathBuf], out: &Path, stations: Option<&str>) -> CmdResult {
    let trips = ingest_files(inputs)?;
    let filter = station_filter(stations);
    let demand = build_demand_matrix(&trips, filter.as_ref())?;
    let input_names: Vec<String> = inputs.iter().map(|p| p.display().to_string()).collect();
    let mut hash_parts = vec!["ingest".to_string()];
    hash_parts.extend(input_names);
    hash_parts.push(stations.unwrap_or("").to_string());
    let parts: Vec<&str> = hash_parts.iter().map(String::as_str).collect();
    container::write_demand(out, &demand, Some(invocation_hash(&parts)))?;
    println!(
        "wrote {}: {} stations x {} hours, {} check-outs",
        out.display(),
        demand.n_stations(),
        demand.n_hours(),
        demand.total()
    );
    Ok(())
}

pub fn build_graph(
    kind: &str,
    demand_path: &Path,
    trips: &[PathBuf],
    out: &Path,
    sd_threshold_km: f64,
) -> CmdResult {
    let kind: AdjacencyKind = kind.parse()?;
    let demand = container::read_demand(demand_path)?;
    let trip_records = if trips.is_empty() {
        Vec::new()
    } else {
        ingest_files(trips)?
    };
    if trip_records.is_empty()
        && matches!(
            kind,
            AdjacencyKind::SparseDistance | AdjacencyKind::Demand | AdjacencyKind::AvgTripDuration
        )
    {
        return Err(anyhow::anyhow!("the {kind} kind needs --trips to derive edge weights").into());
    }
    let params = GraphParams { sd_threshold_km };
    let adjacency = build_adjacency(kind, &trip_records, &demand, &params)?;
    let filter = normalize_adjacency(&adjacency);
    let hash = invocation_hash(&[
        "build-graph",
        &kind.to_string(),
        &demand_path.display().to_string(),
        &format!("{sd_threshold_km}"),
    ]);
    container::write_filter(out, &filter, &kind.to_string(), Some(&params), Some(hash))?;
    println!(
        "wrote {}: {kind} filter over {} stations",
        out.display(),
        filter.n()
    );
    Ok(())
}

struct LoadedExperiment {
    config: ExperimentConfig,
    data: PreparedData,
    train_config: TrainConfig,
    config_hash: String,
    base: PathBuf,
}

fn load_experiment(config_path: &Path) -> Result<LoadedExperiment, CmdError> {
    let bytes = std::fs::read(config_path).map_err(|e| {
        CmdError::from(anyhow::anyhow!(
            "cannot read config {}: {e}",
            config_path.display()
        ))
    })?;
    let config_hash = sha256_hex(&bytes);
    let config = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();

    let demand = if let Some(dmx) = &config.data.demand {
        container::read_demand(&config.resolve(&base, dmx))?
    } else {
        let inputs: Vec<PathBuf> = config
            .data
            .trips
            .iter()
            .map(|p| config.resolve(&base, p))
            .collect();
        let trips = ingest_files(&inputs)?;
        let filter: Option<BTreeSet<String>> = if config.data.station_filter.is_empty() {
            None
        } else {
            Some(config.data.station_filter.iter().cloned().collect())
        };
        build_demand_matrix(&trips, filter.as_ref())?
    };

    let train_config = config.train_config()?;
    let data = prepare(demand, config.data.c0, train_config.ratios)?;
    Ok(LoadedExperiment {
        config,
        data,
        train_config,
        config_hash,
        base,
    })
}

fn history_csv(history: &[ddgf_core::train::EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for stats in history {
        out.push_str(&format!(
            "{},{:.12},{:.12}\n",
            stats.epoch, stats.train_loss, stats.val_loss
        ));
    }
    out
}

fn metrics_csv(name: &str, report: &MetricsReport) -> String {
    comparison_csv(&[ComparisonRow {
        name: name.to_string(),
        report: *report,
    }])
}

pub fn train(
    config_path: &Path,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
    epochs_override: Option<usize>,
    only_model: Option<&str>,
) -> CmdResult {
    let mut exp = load_experiment(config_path)?;
    if let Some(seed) = seed_override {
        exp.train_config.seed = seed;
    }
    if let Some(epochs) = epochs_override {
        exp.train_config.epochs = epochs;
    }
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| exp.config.resolve(&exp.base, &exp.config.output_dir));
    std::fs::create_dir_all(&out_dir)?;

    let mut rows = Vec::new();
    for section in &exp.config.models {
        if let Some(only) = only_model {
            if section.name != only {
                continue;
            }
        }
        let mut spec = section.to_spec(exp.config.data.c0)?;
        let filter = match &section.graph {
            Some(path) => {
                let resolved = exp.config.resolve(&exp.base, path);
                let (filter, source) = container::read_filter_with_source(&resolved)?;
                // Keep the checkpoint's provenance honest: record which
                // adjacency the loaded filter came from when it is one.
                if let Ok(kind) = source.parse::<AdjacencyKind>() {
                    if matches!(spec.architecture, Architecture::GcnnFixed(_)) {
                        spec.architecture = Architecture::GcnnFixed(kind);
                    }
                }
                Some(filter)
            }
            None => None,
        };
        log::info!("training {}", section.name);
        let outcome = fit_model(&spec, &exp.data, &exp.train_config, filter.as_ref())?;
        let report = evaluate_model(&outcome.model, exp.data.test())?;

        let model_path = out_dir.join(format!("{}.mdl", section.name));
        container::write_model(&model_path, &outcome.model, Some(exp.config_hash.clone()))?;
        std::fs::write(
            out_dir.join(format!("{}_history.csv", section.name)),
            history_csv(&outcome.history),
        )?;
        std::fs::write(
            out_dir.join(format!("{}_metrics.csv", section.name)),
            metrics_csv(&section.name, &report),
        )?;
        println!(
            "{}: test RMSE {:.4}, MAE {:.4}, R2 {:.4} -> {}",
            section.name,
            report.rmse,
            report.mae,
            report.r2,
            model_path.display()
        );
        rows.push(ComparisonRow {
            name: section.name.clone(),
            report,
        });
    }

    if rows.is_empty() {
        return Err(anyhow::anyhow!(
            "no models trained{}",
            only_model
                .map(|m| format!(" (no config entry named '{m}')"))
                .unwrap_or_default()
        )
        .into());
    }

    sort_rows(&mut rows);
    std::fs::write(out_dir.join("comparison.csv"), comparison_csv(&rows))?;
    let table = comparison_table(&rows);
    std::fs::write(out_dir.join("comparison.txt"), &table)?;
    println!("\n{table}");
    Ok(())
}

pub fn evaluate(config_path: &Path, model_path: &Path, out: Option<&Path>) -> CmdResult {
    let exp = load_experiment(config_path)?;
    let model = container::read_model(model_path)?;
    if model.stations != exp.data.stations() {
        return Err(ddgf_core::Error::StationMismatch(format!(
            "checkpoint covers {} stations, config data has {}",
            model.stations.len(),
            exp.data.n_stations()
        ))
        .into());
    }
    let report = evaluate_model(&model, exp.data.test())?;
    let name = model_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let csv = metrics_csv(&name, &report);
    if let Some(path) = out {
        std::fs::write(path, &csv)?;
    }
    print!("{csv}");
    Ok(())
}

pub fn predict(
    model_path: &Path,
    demand_path: &Path,
    lags: Option<usize>,
    out: Option<&Path>,
) -> CmdResult {
    let model = container::read_model(model_path)?;
    let demand = container::read_demand(demand_path)?;
    if model.stations != demand.stations() {
        return Err(ddgf_core::Error::StationMismatch(
            "checkpoint and demand matrix cover different stations".into(),
        )
        .into());
    }
    let c0 = lags.or_else(|| model.window_len()).unwrap_or(24);
    let t = demand.n_hours();
    if t < c0 {
        return Err(anyhow::anyhow!(
            "demand matrix has {t} hours, need at least {c0} for the input window"
        )
        .into());
    }
    let n = demand.n_stations();
    let mut x = Tensor::zeros(n, c0);
    for j in 0..n {
        for c in 0..c0 {
            x.set(j, c, demand.count(j, t - c0 + c) as f64);
        }
    }
    // The forecast target is the hour after the last observed column.
    let target_hour = (demand.hour_of_day(t - 1) + 1) % 24;
    let forecast = model.predict(&x, target_hour)?;

    let mut csv = String::from("station,next_hour,forecast\n");
    for (j, station) in demand.stations().iter().enumerate() {
        csv.push_str(&format!(
            "{station},{target_hour},{:.4}\n",
            forecast.get(j, 0)
        ));
    }
    if let Some(path) = out {
        std::fs::write(path, &csv)?;
    }
    print!("{csv}");
    Ok(())
}

pub fn export_filter(model_path: &Path, layer: usize, out: &Path) -> CmdResult {
    let model = container::read_model(model_path)?;
    let values = model.materialized_filter(layer)?;
    let filter = ddgf_core::graph::GraphFilter::new(values)?;
    let source = format!("learned:{}:layer{layer}", model.spec.architecture);
    let hash = invocation_hash(&["export-filter", &model_path.display().to_string(), &source]);
    container::write_filter(out, &filter, &source, None, Some(hash))?;
    println!("wrote {}: {source}", out.display());
    Ok(())
}

fn parse_metrics_csv(text: &str) -> Vec<ComparisonRow> {
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            continue;
        }
        let parse = |s: &str| s.parse::<f64>().ok();
        if let (Some(rmse), Some(rmse_daytime), Some(mae), Some(r2)) = (
            parse(fields[1]),
            parse(fields[2]),
            parse(fields[3]),
            parse(fields[4]),
        ) {
            rows.push(ComparisonRow {
                name: fields[0].to_string(),
                report: MetricsReport {
                    rmse,
                    rmse_daytime,
                    mae,
                    r2,
                    hours: fields[5].parse().unwrap_or(0),
                    stations: fields[6].parse().unwrap_or(0),
                },
            });
        }
    }
    rows
}

fn collect_metrics_files(dir: &Path, found: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            collect_metrics_files(&path, found)?;
        } else if path
            .file_name()
            .map(|n| n.to_string_lossy().ends_with("_metrics.csv"))
            .unwrap_or(false)
        {
            found.push(path);
        }
    }
    Ok(())
}

pub fn report(runs: &Path, out: Option<&Path>) -> CmdResult {
    if !runs.is_dir() {
        return Err(anyhow::anyhow!("{} is not a directory", runs.display()).into());
    }
    let mut files = Vec::new();
    collect_metrics_files(runs, &mut files)?;
    let mut rows = Vec::new();
    for file in &files {
        rows.extend(parse_metrics_csv(&std::fs::read_to_string(file)?));
    }
    if rows.is_empty() {
        return Err(anyhow::anyhow!("no *_metrics.csv files under {}", runs.display()).into());
    }
    sort_rows(&mut rows);
    if let Some(path) = out {
        std::fs::write(path, comparison_csv(&rows))?;
    }
    print!("{}", comparison_table(&rows));
    Ok(())
}
