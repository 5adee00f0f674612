//! Parameter sets, initialization and the trained-model wrapper.

use std::collections::BTreeMap;

use rand::Rng;

use crate::activation::ActivationKind;
use crate::autodiff::upper_triangle_len;
use crate::data::scaler::Scaler;
use crate::error::{Error, Result};
use crate::graph::GraphFilter;
use crate::model::forward::forward_value;
use crate::model::ha::{ha_predict, HaParams};
use crate::model::lasso::{lasso_predict, LassoParams};
use crate::model::layers::{materialize_filter, DenseParams, FilterParam, GcnnLayerParams};
use crate::model::lstm::LstmCellParams;
use crate::model::spec::{Architecture, ModelSpec};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct RecParams {
    /// Per-lag convolution stack, shared across lags. Empty for the plain
    /// LSTM baseline.
    pub conv: Vec<GcnnLayerParams>,
    pub cell: LstmCellParams,
    pub head: DenseParams,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Gcnn(Vec<GcnnLayerParams>),
    Rec(RecParams),
    Ha(HaParams),
    Lasso(LassoParams),
}

/// Off-diagonal noise added to the identity when initializing a learnable
/// filter: start near the graph-blind model and learn correlations.
const DDGF_INIT_NOISE: f64 = 0.01;

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Tensor::new(rows, cols, data).expect("bounded init values are finite")
}

fn ddgf_theta(n: usize, rng: &mut impl Rng) -> Tensor {
    let mut theta = Tensor::zeros(1, upper_triangle_len(n));
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                1.0
            } else {
                rng.random_range(-DDGF_INIT_NOISE..DDGF_INIT_NOISE)
            };
            theta.set(0, k, v);
            k += 1;
        }
    }
    theta
}

fn init_gcnn_stack(
    widths: &[usize],
    n: usize,
    hidden_activation: ActivationKind,
    make_filter: &mut dyn FnMut(&mut dyn FnMut() -> FilterParam) -> FilterParam,
    last_is_output: bool,
    rng: &mut impl Rng,
) -> Vec<GcnnLayerParams> {
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for l in 0..widths.len() - 1 {
        let activation = if last_is_output && l == widths.len() - 2 {
            ActivationKind::Identity
        } else {
            hidden_activation
        };
        let filter = make_filter(&mut || FilterParam::Ddgf {
            n,
            theta: ddgf_theta(n, rng),
        });
        // Filter is drawn before the weight so the rng order is fixed.
        let weight = glorot(widths[l], widths[l + 1], rng);
        layers.push(GcnnLayerParams {
            filter,
            weight,
            bias: Tensor::zeros(1, widths[l + 1]),
            activation,
        });
    }
    layers
}

/// Fresh parameters for a gradient-trained architecture. Fixed-filter specs
/// need the pre-built filter; MLP freezes the identity.
pub fn init_params(
    spec: &ModelSpec,
    n_stations: usize,
    filter: Option<&GraphFilter>,
    rng: &mut impl Rng,
) -> Result<ModelParams> {
    spec.validate()?;
    match spec.architecture {
        Architecture::GcnnRegDdgf => {
            let layers = init_gcnn_stack(
                &spec.widths,
                n_stations,
                spec.hidden_activation,
                &mut |mk| mk(),
                true,
                rng,
            );
            Ok(ModelParams::Gcnn(layers))
        }
        Architecture::GcnnFixed(_) | Architecture::Mlp => {
            let frozen = match (spec.architecture, filter) {
                (Architecture::Mlp, _) => Tensor::eye(n_stations),
                (_, Some(f)) => {
                    if f.n() != n_stations {
                        return Err(Error::StationMismatch(format!(
                            "filter covers {} stations, data has {n_stations}",
                            f.n()
                        )));
                    }
                    f.values().clone()
                }
                (_, None) => {
                    return Err(Error::InvalidConfig(
                        "fixed-filter specs need a pre-built graph filter".into(),
                    ))
                }
            };
            let layers = init_gcnn_stack(
                &spec.widths,
                n_stations,
                spec.hidden_activation,
                &mut |_| FilterParam::Fixed(frozen.clone()),
                true,
                rng,
            );
            Ok(ModelParams::Gcnn(layers))
        }
        Architecture::GcnnRecDdgf | Architecture::Lstm => {
            let conv = if spec.widths.len() > 1 {
                init_gcnn_stack(
                    &spec.widths,
                    n_stations,
                    spec.hidden_activation,
                    &mut |mk| mk(),
                    false,
                    rng,
                )
            } else {
                Vec::new()
            };
            let f = *spec.widths.last().unwrap();
            let u = spec.lstm_hidden.unwrap();
            let cell = LstmCellParams {
                w_f: glorot(f, u, rng),
                w_i: glorot(f, u, rng),
                w_o: glorot(f, u, rng),
                w_g: glorot(f, u, rng),
                r_f: glorot(u, u, rng),
                r_i: glorot(u, u, rng),
                r_o: glorot(u, u, rng),
                r_g: glorot(u, u, rng),
                b_f: Tensor::zeros(1, u),
                b_i: Tensor::zeros(1, u),
                b_o: Tensor::zeros(1, u),
                b_g: Tensor::zeros(1, u),
            };
            let head = DenseParams {
                weight: glorot(u, 1, rng),
                bias: Tensor::zeros(1, 1),
            };
            Ok(ModelParams::Rec(RecParams { conv, cell, head }))
        }
        Architecture::HistoricalAverage | Architecture::Lasso => Err(Error::Contract(
            "historical-average and lasso models are fit, not initialized".into(),
        )),
    }
}

impl ModelParams {
    /// Flatten to the checkpoint's named-tensor map. Names and shapes are a
    /// function of the model spec alone.
    pub fn named_tensors(&self) -> BTreeMap<String, Tensor> {
        let mut map = BTreeMap::new();
        let insert_layers = |layers: &[GcnnLayerParams], map: &mut BTreeMap<String, Tensor>| {
            for (i, layer) in layers.iter().enumerate() {
                match &layer.filter {
                    FilterParam::Ddgf { theta, .. } => {
                        map.insert(format!("conv{i}.theta"), theta.clone());
                    }
                    FilterParam::Fixed(values) => {
                        map.insert(format!("conv{i}.filter"), values.clone());
                    }
                }
                map.insert(format!("conv{i}.weight"), layer.weight.clone());
                map.insert(format!("conv{i}.bias"), layer.bias.clone());
            }
        };
        match self {
            ModelParams::Gcnn(layers) => insert_layers(layers, &mut map),
            ModelParams::Rec(rec) => {
                insert_layers(&rec.conv, &mut map);
                let c = &rec.cell;
                for (name, t) in [
                    ("lstm.w_f", &c.w_f),
                    ("lstm.w_i", &c.w_i),
                    ("lstm.w_o", &c.w_o),
                    ("lstm.w_g", &c.w_g),
                    ("lstm.r_f", &c.r_f),
                    ("lstm.r_i", &c.r_i),
                    ("lstm.r_o", &c.r_o),
                    ("lstm.r_g", &c.r_g),
                    ("lstm.b_f", &c.b_f),
                    ("lstm.b_i", &c.b_i),
                    ("lstm.b_o", &c.b_o),
                    ("lstm.b_g", &c.b_g),
                ] {
                    map.insert(name.to_string(), t.clone());
                }
                map.insert("head.weight".to_string(), rec.head.weight.clone());
                map.insert("head.bias".to_string(), rec.head.bias.clone());
            }
            ModelParams::Ha(ha) => {
                map.insert("ha.hourly".to_string(), ha.hourly.clone());
                map.insert("ha.global".to_string(), ha.global.clone());
            }
            ModelParams::Lasso(l) => {
                map.insert("lasso.coef".to_string(), l.coef.clone());
                map.insert("lasso.intercept".to_string(), l.intercept.clone());
                map.insert("lasso.feat_mean".to_string(), l.feat_mean.clone());
                map.insert("lasso.feat_std".to_string(), l.feat_std.clone());
            }
        }
        map
    }

    /// Rebuild typed parameters from a named-tensor map.
    pub fn from_named(
        spec: &ModelSpec,
        n_stations: usize,
        map: &BTreeMap<String, Tensor>,
    ) -> Result<ModelParams> {
        spec.validate()?;
        let fetch = |name: &str| -> Result<Tensor> {
            map.get(name)
                .cloned()
                .ok_or_else(|| Error::Format(format!("checkpoint is missing tensor '{name}'")))
        };
        let read_layers = |count: usize, last_is_output: bool| -> Result<Vec<GcnnLayerParams>> {
            (0..count)
                .map(|i| {
                    let filter = if let Some(theta) = map.get(&format!("conv{i}.theta")) {
                        FilterParam::Ddgf {
                            n: n_stations,
                            theta: theta.clone(),
                        }
                    } else {
                        FilterParam::Fixed(fetch(&format!("conv{i}.filter"))?)
                    };
                    let activation = if last_is_output && i == count - 1 {
                        ActivationKind::Identity
                    } else {
                        spec.hidden_activation
                    };
                    Ok(GcnnLayerParams {
                        filter,
                        weight: fetch(&format!("conv{i}.weight"))?,
                        bias: fetch(&format!("conv{i}.bias"))?,
                        activation,
                    })
                })
                .collect()
        };
        match spec.architecture {
            Architecture::GcnnRegDdgf | Architecture::GcnnFixed(_) | Architecture::Mlp => {
                Ok(ModelParams::Gcnn(read_layers(spec.widths.len() - 1, true)?))
            }
            Architecture::GcnnRecDdgf | Architecture::Lstm => {
                let conv = read_layers(spec.widths.len() - 1, false)?;
                let cell = LstmCellParams {
                    w_f: fetch("lstm.w_f")?,
                    w_i: fetch("lstm.w_i")?,
                    w_o: fetch("lstm.w_o")?,
                    w_g: fetch("lstm.w_g")?,
                    r_f: fetch("lstm.r_f")?,
                    r_i: fetch("lstm.r_i")?,
                    r_o: fetch("lstm.r_o")?,
                    r_g: fetch("lstm.r_g")?,
                    b_f: fetch("lstm.b_f")?,
                    b_i: fetch("lstm.b_i")?,
                    b_o: fetch("lstm.b_o")?,
                    b_g: fetch("lstm.b_g")?,
                };
                cell.validate()?;
                let head = DenseParams {
                    weight: fetch("head.weight")?,
                    bias: fetch("head.bias")?,
                };
                Ok(ModelParams::Rec(RecParams { conv, cell, head }))
            }
            Architecture::HistoricalAverage => Ok(ModelParams::Ha(HaParams {
                hourly: fetch("ha.hourly")?,
                global: fetch("ha.global")?,
            })),
            Architecture::Lasso => Ok(ModelParams::Lasso(LassoParams {
                coef: fetch("lasso.coef")?,
                intercept: fetch("lasso.intercept")?,
                feat_mean: fetch("lasso.feat_mean")?,
                feat_std: fetch("lasso.feat_std")?,
            })),
        }
    }
}

/// A fitted model: spec, parameters, the training scaler and the station
/// universe it was trained on. Immutable after training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub params: ModelParams,
    pub scaler: Scaler,
    pub stations: Vec<String>,
}

impl TrainedModel {
    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    /// Lag-window length the model was built for, when it is determined by
    /// the parameters (recurrent nets and HA accept any window).
    pub fn window_len(&self) -> Option<usize> {
        match &self.params {
            ModelParams::Lasso(l) => Some(l.n_features() - self.n_stations()),
            _ => self.spec.expected_c0(),
        }
    }

    /// Next-hour forecast in original demand units. `x_raw` is the N x C0
    /// lag window in raw counts; `target_hour` is the clock hour (0-23) of
    /// the hour being predicted, which only the historical-average baseline
    /// consumes.
    pub fn predict(&self, x_raw: &Tensor, target_hour: u32) -> Result<Tensor> {
        let n = self.n_stations();
        if x_raw.rows() != n {
            return Err(Error::StationMismatch(format!(
                "model covers {n} stations, input has {} rows",
                x_raw.rows()
            )));
        }
        if let Some(c0) = self.spec.expected_c0() {
            if x_raw.cols() != c0 {
                return Err(Error::Contract(format!(
                    "model expects a window of {c0} lags, got {}",
                    x_raw.cols()
                )));
            }
        }
        match &self.params {
            ModelParams::Ha(ha) => {
                let values: Vec<f64> = (0..n)
                    .map(|j| ha_predict(ha, j, target_hour))
                    .collect::<Result<_>>()?;
                Tensor::column(&values)
            }
            ModelParams::Lasso(params) => {
                let scaled = self.scaler.scale(x_raw);
                let pred = lasso_predict(params, &scaled)?;
                Ok(self.scaler.unscale(&pred))
            }
            _ => {
                let scaled = self.scaler.scale(x_raw);
                let pred = forward_value(&self.params, &scaled)?;
                Ok(self.scaler.unscale(&pred))
            }
        }
    }

    /// Materialized graph filter of convolution layer `layer` (learned or
    /// frozen), for inspection and export.
    pub fn materialized_filter(&self, layer: usize) -> Result<Tensor> {
        let layers = match &self.params {
            ModelParams::Gcnn(layers) => layers,
            ModelParams::Rec(rec) => &rec.conv,
            _ => {
                return Err(Error::InvalidConfig(
                    "this architecture has no graph filter to export".into(),
                ))
            }
        };
        let l = layers.get(layer).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "layer {layer} out of range ({} convolution layers)",
                layers.len()
            ))
        })?;
        match &l.filter {
            FilterParam::Ddgf { n, theta } => materialize_filter(theta, *n),
            FilterParam::Fixed(values) => Ok(values.clone()),
        }
    }
}
