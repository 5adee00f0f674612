//! Binary artifact container: a JSON manifest followed by raw little-endian
//! arrays.
//!
//! Layout: 8-byte magic, u64 LE manifest length, manifest JSON, then the
//! arrays back to back in manifest order. One format backs all three
//! artifact kinds — demand matrices (`.dmx`, u32 arrays), graph filters
//! (`.gfl`, f64) and model checkpoints (`.mdl`, f64). Writing is fully
//! deterministic so re-running a pipeline step reproduces files byte for
//! byte.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::data::demand::DemandMatrix;
use crate::data::scaler::Scaler;
use crate::error::{Error, Result};
use crate::graph::{GraphFilter, GraphParams};
use crate::model::spec::ModelSpec;
use crate::model::trained::{ModelParams, TrainedModel};
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"DDGFBOX1";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayInfo {
    name: String,
    rows: usize,
    cols: usize,
    dtype: String, // "u32le" | "f64le"
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ArtifactKind {
    Demand {
        stations: Vec<String>,
        t0: NaiveDateTime,
    },
    Filter {
        /// How the filter came to be: an adjacency kind ("sd", "dc", ...)
        /// or "learned:<arch>:layer<i>" for exported trained filters.
        source: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        params: Option<GraphParams>,
        n: usize,
    },
    Model {
        spec: ModelSpec,
        stations: Vec<String>,
        scaler: Scaler,
        rng_algorithm: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    #[serde(flatten)]
    kind: ArtifactKind,
    arrays: Vec<ArrayInfo>,
}

fn write_container(path: &Path, manifest: &Manifest, payloads: &[Payload<'_>]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    let manifest_bytes = serde_json::to_vec(manifest)?;
    file.write_all(MAGIC)?;
    file.write_all(&(manifest_bytes.len() as u64).to_le_bytes())?;
    file.write_all(&manifest_bytes)?;
    for payload in payloads {
        match payload {
            Payload::U32(values) => {
                for v in *values {
                    file.write_all(&v.to_le_bytes())?;
                }
            }
            Payload::F64(values) => {
                for v in *values {
                    file.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    file.flush()?;
    Ok(())
}

enum Payload<'a> {
    U32(&'a [u32]),
    F64(&'a [f64]),
}

struct Loaded {
    manifest: Manifest,
    u32_arrays: Vec<Vec<u32>>,
    f64_arrays: Vec<Vec<f64>>,
}

fn read_container(path: &Path) -> Result<Loaded> {
    let mut file = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)
        .map_err(|_| Error::Format(format!("{} is too short to be an artifact", path.display())))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "{} is not a recognized artifact (bad magic)",
            path.display()
        )));
    }
    let mut len_bytes = [0u8; 8];
    file.read_exact(&mut len_bytes)?;
    let manifest_len = u64::from_le_bytes(len_bytes) as usize;
    let mut manifest_bytes = vec![0u8; manifest_len];
    file.read_exact(&mut manifest_bytes)?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {}",
            manifest.format_version
        )));
    }

    let mut u32_arrays = Vec::new();
    let mut f64_arrays = Vec::new();
    for info in &manifest.arrays {
        let count = info.rows * info.cols;
        match info.dtype.as_str() {
            "u32le" => {
                let mut values = Vec::with_capacity(count);
                let mut buf = [0u8; 4];
                for _ in 0..count {
                    file.read_exact(&mut buf)?;
                    values.push(u32::from_le_bytes(buf));
                }
                u32_arrays.push(values);
            }
            "f64le" => {
                let mut values = Vec::with_capacity(count);
                let mut buf = [0u8; 8];
                for _ in 0..count {
                    file.read_exact(&mut buf)?;
                    values.push(f64::from_le_bytes(buf));
                }
                f64_arrays.push(values);
            }
            other => return Err(Error::Format(format!("unknown dtype '{other}'"))),
        }
    }
    Ok(Loaded {
        manifest,
        u32_arrays,
        f64_arrays,
    })
}

fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// Write a demand matrix as a `.dmx` artifact.
pub fn write_demand(path: &Path, demand: &DemandMatrix, config_hash: Option<String>) -> Result<()> {
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        tool_version: tool_version(),
        config_hash,
        kind: ArtifactKind::Demand {
            stations: demand.stations().to_vec(),
            t0: demand.t0(),
        },
        arrays: vec![ArrayInfo {
            name: "counts".into(),
            rows: demand.n_stations(),
            cols: demand.n_hours(),
            dtype: "u32le".into(),
        }],
    };
    write_container(path, &manifest, &[Payload::U32(demand.counts())])
}

pub fn read_demand(path: &Path) -> Result<DemandMatrix> {
    let loaded = read_container(path)?;
    let ArtifactKind::Demand { stations, t0 } = loaded.manifest.kind else {
        return Err(Error::Format(format!(
            "{} is not a demand artifact",
            path.display()
        )));
    };
    let info = loaded
        .manifest
        .arrays
        .first()
        .ok_or_else(|| Error::Format("demand artifact has no array".into()))?;
    let counts = loaded
        .u32_arrays
        .into_iter()
        .next()
        .ok_or_else(|| Error::Format("demand artifact missing counts array".into()))?;
    DemandMatrix::from_parts(stations, t0, info.cols, counts)
}

/// Write a graph filter as a `.gfl` artifact, recording how it was built.
pub fn write_filter(
    path: &Path,
    filter: &GraphFilter,
    source: &str,
    params: Option<&GraphParams>,
    config_hash: Option<String>,
) -> Result<()> {
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        tool_version: tool_version(),
        config_hash,
        kind: ArtifactKind::Filter {
            source: source.to_string(),
            params: params.copied(),
            n: filter.n(),
        },
        arrays: vec![ArrayInfo {
            name: "filter".into(),
            rows: filter.n(),
            cols: filter.n(),
            dtype: "f64le".into(),
        }],
    };
    write_container(path, &manifest, &[Payload::F64(filter.values().data())])
}

pub fn read_filter(path: &Path) -> Result<GraphFilter> {
    Ok(read_filter_with_source(path)?.0)
}

/// Read a `.gfl` along with its recorded source string.
pub fn read_filter_with_source(path: &Path) -> Result<(GraphFilter, String)> {
    let loaded = read_container(path)?;
    let ArtifactKind::Filter { n, source, .. } = loaded.manifest.kind else {
        return Err(Error::Format(format!(
            "{} is not a graph-filter artifact",
            path.display()
        )));
    };
    let values = loaded
        .f64_arrays
        .into_iter()
        .next()
        .ok_or_else(|| Error::Format("filter artifact missing values".into()))?;
    Ok((GraphFilter::new(Tensor::new(n, n, values)?)?, source))
}

/// Write a trained model as a `.mdl` checkpoint.
pub fn write_model(path: &Path, model: &TrainedModel, config_hash: Option<String>) -> Result<()> {
    let named = model.params.named_tensors();
    let arrays: Vec<ArrayInfo> = named
        .iter()
        .map(|(name, t)| ArrayInfo {
            name: name.clone(),
            rows: t.rows(),
            cols: t.cols(),
            dtype: "f64le".into(),
        })
        .collect();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        tool_version: tool_version(),
        config_hash,
        kind: ArtifactKind::Model {
            spec: model.spec.clone(),
            stations: model.stations.clone(),
            scaler: model.scaler,
            rng_algorithm: crate::RNG_ALGORITHM.to_string(),
        },
        arrays,
    };
    let payloads: Vec<Payload<'_>> = named.values().map(|t| Payload::F64(t.data())).collect();
    write_container(path, &manifest, &payloads)
}

pub fn read_model(path: &Path) -> Result<TrainedModel> {
    let loaded = read_container(path)?;
    let ArtifactKind::Model {
        spec,
        stations,
        scaler,
        ..
    } = loaded.manifest.kind
    else {
        return Err(Error::Format(format!(
            "{} is not a model checkpoint",
            path.display()
        )));
    };
    let mut named = BTreeMap::new();
    for (info, values) in loaded.manifest.arrays.iter().zip(loaded.f64_arrays) {
        named.insert(
            info.name.clone(),
            Tensor::new(info.rows, info.cols, values)?,
        );
    }
    let params = ModelParams::from_named(&spec, stations.len(), &named)?;
    Ok(TrainedModel {
        spec,
        params,
        scaler,
        stations,
    })
}
