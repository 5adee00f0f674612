//! Experiment configuration file (TOML).
//!
//! ```toml
//! seed = 42
//! output_dir = "runs/demo"
//!
//! [data]
//! trips = ["202307-citibike-tripdata.csv"]  # or: demand = "demand.dmx"
//! c0 = 24
//! station_filter = []                        # optional station ids
//!
//! [split]
//! train = 0.6
//! val = 0.2
//! test = 0.2
//!
//! [training]
//! learning_rate = 0.001
//! epochs = 200
//! batch_size = 16
//! patience = 10
//!
//! [[models]]
//! name = "gcnn_reg_ddgf"
//! arch = "gcnn-reg-ddgf"       # gcnn-reg-ddgf | gcnn-rec-ddgf | gcnn-fixed
//! hidden_widths = [32, 16]     #  | mlp | lstm | ha | lasso
//!
//! [[models]]
//! name = "gcnn_dc"
//! arch = "gcnn-fixed"
//! graph = "dc.gfl"             # built beforehand with `ddgf build-graph`
//!
//! [[models]]
//! name = "rec"
//! arch = "gcnn-rec-ddgf"
//! conv_widths = [16]
//! lstm_hidden = 32
//! ```
//!
//! Command-line flags override `seed`, `output_dir` and the training fields.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use ddgf_core::graph::AdjacencyKind;
use ddgf_core::model::ModelSpec;
use ddgf_core::train::{SplitRatios, TrainConfig};
use ddgf_core::ActivationKind;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub training: TrainingSection,
    pub models: Vec<ModelSection>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Trip CSVs to ingest (gzip accepted) ...
    #[serde(default)]
    pub trips: Vec<PathBuf>,
    /// ... or a pre-built demand matrix.
    pub demand: Option<PathBuf>,
    #[serde(default = "default_c0")]
    pub c0: usize,
    #[serde(default)]
    pub station_filter: Vec<String>,
}

fn default_c0() -> usize {
    24
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let r = SplitRatios::default();
        SplitSection {
            train: r.train,
            val: r.val,
            test: r.test,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let c = TrainConfig::default();
        TrainingSection {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            batch_size: c.batch_size,
            patience: c.patience,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub arch: String,
    #[serde(default)]
    pub hidden_widths: Option<Vec<usize>>,
    #[serde(default)]
    pub conv_widths: Option<Vec<usize>>,
    #[serde(default)]
    pub lstm_hidden: Option<usize>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub activation: Option<String>,
    /// Pre-built `.gfl` filter for `gcnn-fixed`.
    #[serde(default)]
    pub graph: Option<PathBuf>,
}

const DEFAULT_HIDDEN: &[usize] = &[32, 16];
const DEFAULT_CONV: &[usize] = &[16];
const DEFAULT_LSTM_HIDDEN: usize = 32;

impl ModelSection {
    /// Turn the section into a model spec. `c0` comes from the data section.
    pub fn to_spec(&self, c0: usize) -> anyhow::Result<ModelSpec> {
        let hidden = self.hidden_widths.as_deref().unwrap_or(DEFAULT_HIDDEN);
        let conv = self.conv_widths.as_deref().unwrap_or(DEFAULT_CONV);
        let lstm_hidden = self.lstm_hidden.unwrap_or(DEFAULT_LSTM_HIDDEN);
        let mut spec = match self.arch.as_str() {
            "gcnn-reg-ddgf" => ModelSpec::gcnn_reg(c0, hidden),
            "gcnn-rec-ddgf" => ModelSpec::gcnn_rec(conv, lstm_hidden),
            "gcnn-fixed" => {
                if self.graph.is_none() {
                    anyhow::bail!(
                        "model '{}': gcnn-fixed needs a `graph` path (build one with `ddgf build-graph`)",
                        self.name
                    );
                }
                // The manifest of the .gfl records how it was built; the
                // spec only needs a placeholder kind until load time.
                ModelSpec::gcnn_fixed(AdjacencyKind::Identity, c0, hidden)
            }
            "mlp" => ModelSpec::mlp(c0, hidden),
            "lstm" => ModelSpec::lstm(lstm_hidden),
            "ha" => ModelSpec::historical_average(),
            "lasso" => ModelSpec::lasso(self.lambda.unwrap_or(1e-3)),
            other => anyhow::bail!(
                "model '{}': unknown arch '{other}' (expected gcnn-reg-ddgf|gcnn-rec-ddgf|gcnn-fixed|mlp|lstm|ha|lasso)",
                self.name
            ),
        };
        if let Some(act) = &self.activation {
            spec.hidden_activation = act.parse::<ActivationKind>()?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| anyhow::anyhow!("cannot parse config {}: {e}", path.display()))?;
        config.validate(path.parent().unwrap_or(Path::new(".")))?;
        Ok(config)
    }

    pub fn ratios(&self) -> anyhow::Result<SplitRatios> {
        Ok(SplitRatios::new(
            self.split.train,
            self.split.val,
            self.split.test,
        )?)
    }

    pub fn train_config(&self) -> anyhow::Result<TrainConfig> {
        let config = TrainConfig {
            learning_rate: self.training.learning_rate,
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            patience: self.training.patience,
            seed: self.seed,
            ratios: self.ratios()?,
        };
        config.validate()?;
        Ok(config)
    }

    /// Resolve a config-relative path.
    pub fn resolve(&self, base: &Path, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            base.join(path)
        }
    }

    fn validate(&self, base: &Path) -> anyhow::Result<()> {
        if self.data.c0 == 0 {
            anyhow::bail!("data.c0 must be at least 1");
        }
        if self.data.trips.is_empty() && self.data.demand.is_none() {
            anyhow::bail!("the [data] section needs either `trips` or `demand`");
        }
        if self.models.is_empty() {
            anyhow::bail!("at least one [[models]] entry is required");
        }
        let mut names = BTreeSet::new();
        for model in &self.models {
            if !names.insert(&model.name) {
                anyhow::bail!("duplicate model name '{}'", model.name);
            }
            model.to_spec(self.data.c0)?;
        }
        for path in self
            .data
            .trips
            .iter()
            .chain(self.data.demand.iter())
            .chain(self.models.iter().filter_map(|m| m.graph.as_ref()))
        {
            let resolved = self.resolve(base, path);
            if !resolved.exists() {
                anyhow::bail!("referenced path does not exist: {}", resolved.display());
            }
        }
        self.ratios()?;
        self.train_config()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("exp.toml");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("trips.csv"), "x").unwrap();
        let path = write_config(
            dir.path(),
            r#"
output_dir = "runs/demo"

[data]
trips = ["trips.csv"]

[[models]]
name = "reg"
arch = "gcnn-reg-ddgf"
"#,
        );
        let config = ExperimentConfig::load(&path).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.data.c0, 24);
        let spec = config.models[0].to_spec(24).unwrap();
        assert_eq!(spec.widths, vec![24, 32, 16, 1]);
    }

    #[test]
    fn missing_path_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            dir.path(),
            r#"
output_dir = "runs"

[data]
trips = ["missing.csv"]

[[models]]
name = "reg"
arch = "gcnn-reg-ddgf"
"#,
        );
        let err = ExperimentConfig::load(&path).unwrap_err().to_string();
        assert!(err.contains("missing.csv"), "{err}");
    }

    #[test]
    fn duplicate_names_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("t.csv"), "x").unwrap();
        let path = write_config(
            dir.path(),
            r#"
output_dir = "runs"

[data]
trips = ["t.csv"]

[[models]]
name = "m"
arch = "mlp"

[[models]]
name = "m"
arch = "ha"
"#,
        );
        assert!(ExperimentConfig::load(&path).is_err());
    }

    #[test]
    fn fixed_without_graph_rejected() {
        let section = ModelSection {
            name: "dc".into(),
            arch: "gcnn-fixed".into(),
            hidden_widths: None,
            conv_widths: None,
            lstm_hidden: None,
            lambda: None,
            activation: None,
            graph: None,
        };
        assert!(section.to_spec(24).is_err());
    }
}
