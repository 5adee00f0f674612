//! `ddgf` — ingest trip data, build graph filters, train demand models and
//! compare them.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ddgf",
    version,
    about = "Station-level bike-share demand prediction with learnable graph filters",
    after_help = "Log verbosity is controlled by the DDGF_LOG environment variable \
                  (error|warn|info|debug), default info."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse trip CSVs into an hourly demand matrix (.dmx)
    Ingest {
        /// Input trip CSV files (.csv or .csv.gz)
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Output demand matrix path
        #[arg(long, default_value = "demand.dmx")]
        out: PathBuf,
        /// Comma-separated station ids to keep (default: every start station)
        #[arg(long)]
        stations: Option<String>,
    },
    /// Build a fixed graph filter (.gfl) from trips and/or demand
    BuildGraph {
        /// Adjacency kind: sd | de | atd | dc | identity
        #[arg(long)]
        kind: String,
        /// Demand matrix defining the station universe (training period)
        #[arg(long)]
        demand: PathBuf,
        /// Trip CSVs (required for sd, de and atd)
        #[arg(long = "trips", num_args = 0..)]
        trips: Vec<PathBuf>,
        /// Output filter path
        #[arg(long, default_value = "graph.gfl")]
        out: PathBuf,
        /// Distance cutoff for the sd kind, in km
        #[arg(long, default_value_t = 1.0)]
        sd_threshold_km: f64,
    },
    /// Train every model in an experiment config
    Train {
        /// Experiment config (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's epoch budget
        #[arg(long)]
        epochs: Option<usize>,
        /// Train only the named model from the config
        #[arg(long)]
        model: Option<String>,
    },
    /// Evaluate a checkpoint on the config's test split
    Evaluate {
        /// Experiment config (TOML) describing the data and split
        #[arg(long)]
        config: PathBuf,
        /// Model checkpoint (.mdl)
        #[arg(long)]
        model: PathBuf,
        /// Where to write the metrics CSV (default: stdout only)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forecast every station's next hour from the latest demand window
    Predict {
        /// Model checkpoint (.mdl)
        #[arg(long)]
        model: PathBuf,
        /// Demand matrix supplying the latest hours
        #[arg(long)]
        demand: PathBuf,
        /// Window length (default: the model's own, else 24)
        #[arg(long)]
        lags: Option<usize>,
        /// Where to write the forecast CSV (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a model's materialized graph filter as a .gfl
    ExportFilter {
        /// Model checkpoint (.mdl)
        #[arg(long)]
        model: PathBuf,
        /// Convolution layer to export
        #[arg(long, default_value_t = 0)]
        layer: usize,
        /// Output filter path
        #[arg(long, default_value = "learned.gfl")]
        out: PathBuf,
    },
    /// Aggregate metrics CSVs under a directory into one ranked table
    Report {
        /// Directory containing completed runs
        #[arg(long)]
        runs: PathBuf,
        /// Where to write the combined CSV (default: stdout only)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DDGF_LOG", "info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; anything else is a
            // usage error.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let result = match cli.command {
        Command::Ingest {
            inputs,
            out,
            stations,
        } => commands::ingest(&inputs, &out, stations.as_deref()),
        Command::BuildGraph {
            kind,
            demand,
            trips,
            out,
            sd_threshold_km,
        } => commands::build_graph(&kind, &demand, &trips, &out, sd_threshold_km),
        Command::Train {
            config,
            out,
            seed,
            epochs,
            model,
        } => commands::train(&config, out.as_deref(), seed, epochs, model.as_deref()),
        Command::Evaluate { config, model, out } => {
            commands::evaluate(&config, &model, out.as_deref())
        }
        Command::Predict {
            model,
            demand,
            lags,
            out,
        } => commands::predict(&model, &demand, lags, out.as_deref()),
        Command::ExportFilter { model, layer, out } => commands::export_filter(&model, layer, &out),
        Command::Report { runs, out } => commands::report(&runs, out.as_deref()),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            log::error!("{err:#}");
            ExitCode::from(err.exit_code())
        }
    }
}
