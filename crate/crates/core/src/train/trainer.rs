//! Mini-batch Adam training with early stopping, plus the closed-form fits
//! for the non-gradient baselines.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::demand::DemandMatrix;
use crate::data::scaler::Scaler;
use crate::data::window::{make_windows, WindowedSample};
use crate::error::{Error, Result};
use crate::graph::GraphFilter;
use crate::model::forward::{forward_value, mse_loss_and_gradients};
use crate::model::ha::ha_fit;
use crate::model::lasso::lasso_fit;
use crate::model::spec::{Architecture, ModelSpec};
use crate::model::trained::{init_params, ModelParams, TrainedModel};
use crate::tensor::Tensor;
use crate::train::split::SplitRatios;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Consecutive non-improving validation epochs tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
    pub ratios: SplitRatios,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 16,
            patience: 10,
            seed: 42,
            ratios: SplitRatios::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.ratios.validate()?;
        if self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::InvalidConfig(
                "epochs, batch size and patience must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Windowed samples split chronologically, still in raw demand units.
#[derive(Debug, Clone)]
pub struct PreparedData {
    demand: DemandMatrix,
    c0: usize,
    samples: Vec<WindowedSample>,
    n_train: usize,
    n_val: usize,
}

/// Window the demand matrix and fix the chronological split boundaries.
pub fn prepare(demand: DemandMatrix, c0: usize, ratios: SplitRatios) -> Result<PreparedData> {
    let samples = make_windows(&demand, c0)?;
    let (n_train, n_val, _) = ratios.sizes(samples.len())?;
    Ok(PreparedData {
        demand,
        c0,
        samples,
        n_train,
        n_val,
    })
}

impl PreparedData {
    pub fn demand(&self) -> &DemandMatrix {
        &self.demand
    }

    pub fn c0(&self) -> usize {
        self.c0
    }

    pub fn stations(&self) -> &[String] {
        self.demand.stations()
    }

    pub fn n_stations(&self) -> usize {
        self.demand.n_stations()
    }

    pub fn train(&self) -> &[WindowedSample] {
        &self.samples[..self.n_train]
    }

    pub fn val(&self) -> &[WindowedSample] {
        &self.samples[self.n_train..self.n_train + self.n_val]
    }

    pub fn test(&self) -> &[WindowedSample] {
        &self.samples[self.n_train + self.n_val..]
    }

    /// The demand columns the training samples are allowed to see (inputs
    /// and targets of the training split, nothing later).
    pub fn train_period_matrix(&self) -> Result<DemandMatrix> {
        self.demand.prefix_hours(self.n_train + self.c0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub history: Vec<EpochStats>,
}

/// Early-stopping bookkeeping: stop once the streak of non-improving
/// validation epochs exceeds the patience; the best snapshot wins.
#[derive(Debug)]
pub(crate) struct EarlyStopping {
    patience: usize,
    best: f64,
    streak: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub(crate) fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            streak: 0,
        }
    }

    pub(crate) fn observe(&mut self, val_loss: f64) -> StopDecision {
        if val_loss < self.best {
            self.best = val_loss;
            self.streak = 0;
            StopDecision::Improved
        } else {
            self.streak += 1;
            if self.streak > self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }
}

fn scaled_mse(params: &ModelParams, x: &Tensor, y: &Tensor) -> Result<f64> {
    let pred = forward_value(params, x)?;
    if pred.shape() != y.shape() {
        return Err(Error::ShapeMismatch {
            op: "scaled_mse",
            lhs_rows: pred.rows(),
            lhs_cols: pred.cols(),
            rhs_rows: y.rows(),
            rhs_cols: y.cols(),
        });
    }
    let mut acc = 0.0;
    for (p, t) in pred.data().iter().zip(y.data()) {
        let d = p - t;
        acc += d * d;
    }
    Ok(acc / pred.len() as f64)
}

fn parameter_norms(named: &BTreeMap<String, Tensor>) -> String {
    named
        .iter()
        .map(|(name, t)| format!("{name}={:.3e}", t.max_abs()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn train_gradient(
    spec: &ModelSpec,
    data: &PreparedData,
    config: &TrainConfig,
    filter: Option<&GraphFilter>,
) -> Result<TrainOutcome> {
    let n = data.n_stations();
    let scaler = Scaler::fit_samples(data.train())?;
    let scale_split = |samples: &[WindowedSample]| -> Vec<(Tensor, Tensor)> {
        samples
            .iter()
            .map(|s| (scaler.scale(&s.x), scaler.scale(&s.y)))
            .collect()
    };
    let train = scale_split(data.train());
    let val = scale_split(data.val());

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = init_params(spec, n, filter, &mut rng)?;
    let mut named = params.named_tensors();
    let mut adam = crate::train::adam::Adam::new(config.learning_rate);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best_named = named.clone();
    let mut history = Vec::new();

    let mut order: Vec<usize> = (0..train.len()).collect();
    'epochs: for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let typed = ModelParams::from_named(spec, n, &named)?;
            let diverged = |details: String| Error::TrainingDiverged {
                epoch,
                batch: batch_idx,
                details,
            };
            let batch: Vec<(Tensor, Tensor)> = chunk.iter().map(|&i| train[i].clone()).collect();
            let (loss_value, grads) = mse_loss_and_gradients(&typed, &batch)
                .map_err(|e| diverged(format!("{e}; norms: {}", parameter_norms(&named))))?;
            adam.step(&mut named, &grads)
                .map_err(|e| diverged(format!("{e}; norms: {}", parameter_norms(&named))))?;
            loss_sum += loss_value * chunk.len() as f64;
        }
        let train_loss = loss_sum / train.len() as f64;

        let typed = ModelParams::from_named(spec, n, &named)?;
        let mut val_sum = 0.0;
        for (x, y) in &val {
            val_sum += scaled_mse(&typed, x, y)?;
        }
        let val_loss = val_sum / val.len() as f64;
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });

        match stopper.observe(val_loss) {
            StopDecision::Improved => best_named = named.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break 'epochs,
        }
    }

    let params = ModelParams::from_named(spec, n, &best_named)?;
    Ok(TrainOutcome {
        model: TrainedModel {
            spec: spec.clone(),
            params,
            scaler,
            stations: data.stations().to_vec(),
        },
        history,
    })
}

/// Fit any architecture on the prepared data: gradient descent for the
/// networks, closed-form fits for HA and lasso. Fixed-filter specs take the
/// pre-built filter.
pub fn fit_model(
    spec: &ModelSpec,
    data: &PreparedData,
    config: &TrainConfig,
    filter: Option<&GraphFilter>,
) -> Result<TrainOutcome> {
    spec.validate()?;
    config.validate()?;
    if let Some(c0) = spec.expected_c0() {
        if c0 != data.c0() {
            return Err(Error::InvalidConfig(format!(
                "spec expects a window of {c0} lags but the data was prepared with c0 = {}",
                data.c0()
            )));
        }
    }
    match spec.architecture {
        Architecture::HistoricalAverage => {
            let scaler = Scaler::fit_samples(data.train())?;
            let params = ModelParams::Ha(ha_fit(&data.train_period_matrix()?)?);
            Ok(TrainOutcome {
                model: TrainedModel {
                    spec: spec.clone(),
                    params,
                    scaler,
                    stations: data.stations().to_vec(),
                },
                history: Vec::new(),
            })
        }
        Architecture::Lasso => {
            let scaler = Scaler::fit_samples(data.train())?;
            let scaled: Vec<WindowedSample> = data
                .train()
                .iter()
                .map(|s| WindowedSample {
                    x: scaler.scale(&s.x),
                    y: scaler.scale(&s.y),
                    target_hour_of_day: s.target_hour_of_day,
                })
                .collect();
            let lambda = spec.lasso_lambda.unwrap();
            let params = ModelParams::Lasso(lasso_fit(&scaled, lambda)?);
            Ok(TrainOutcome {
                model: TrainedModel {
                    spec: spec.clone(),
                    params,
                    scaler,
                    stations: data.stations().to_vec(),
                },
                history: Vec::new(),
            })
        }
        _ => train_gradient(spec, data, config, filter),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn toy_demand(n: usize, t: usize, seed: u64) -> DemandMatrix {
        // Deterministic integer demand series with daily structure.
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let counts: Vec<u32> = (0..n)
            .flat_map(|j| {
                let mut col = Vec::with_capacity(t);
                for i in 0..t {
                    let wave = (8.0 + 6.0 * ((i % 24) as f64 / 24.0 * std::f64::consts::TAU).sin())
                        .max(0.0);
                    col.push(wave as u32 + (next() % 4) as u32 + j as u32);
                }
                col
            })
            .collect();
        let stations = (0..n).map(|i| format!("S{i}")).collect();
        let t0 = NaiveDate::from_ymd_opt(2015, 6, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        DemandMatrix::from_parts(stations, t0, t, counts).unwrap()
    }

    #[test]
    fn early_stopping_rigged_schedule() {
        // patience 1, losses 1.0, 1.1, 1.2: improve, tolerate, stop at the
        // third observation with the first epoch still best.
        let mut stopper = EarlyStopping::new(1);
        assert_eq!(stopper.observe(1.0), StopDecision::Improved);
        assert_eq!(stopper.observe(1.1), StopDecision::Continue);
        assert_eq!(stopper.observe(1.2), StopDecision::Stop);
        assert_eq!(stopper.best, 1.0);
    }

    #[test]
    fn early_stopping_recovers_on_improvement() {
        let mut stopper = EarlyStopping::new(2);
        stopper.observe(1.0);
        stopper.observe(1.5);
        stopper.observe(1.4);
        assert_eq!(stopper.observe(0.9), StopDecision::Improved);
        assert_eq!(stopper.streak, 0);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let data = prepare(toy_demand(3, 60, 5), 4, SplitRatios::default()).unwrap();
        let spec = ModelSpec::gcnn_reg(4, &[6]);
        let config = TrainConfig {
            epochs: 5,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let a = fit_model(&spec, &data, &config, None).unwrap();
        let b = fit_model(&spec, &data, &config, None).unwrap();

        let bits = |m: &TrainedModel| -> Vec<(String, Vec<u64>)> {
            m.params
                .named_tensors()
                .into_iter()
                .map(|(k, t)| (k, t.data().iter().map(|v| v.to_bits()).collect()))
                .collect()
        };
        assert_eq!(bits(&a.model), bits(&b.model));
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn history_records_every_epoch_until_stop() {
        let data = prepare(toy_demand(2, 50, 9), 3, SplitRatios::default()).unwrap();
        let spec = ModelSpec::mlp(3, &[4]);
        let config = TrainConfig {
            epochs: 8,
            batch_size: 8,
            patience: 3,
            ..TrainConfig::default()
        };
        let out = fit_model(&spec, &data, &config, None).unwrap();
        assert!(!out.history.is_empty());
        assert!(out.history.len() <= 8);
        for (i, stats) in out.history.iter().enumerate() {
            assert_eq!(stats.epoch, i + 1);
            assert!(stats.train_loss.is_finite());
            assert!(stats.val_loss.is_finite());
        }
    }

    #[test]
    fn returned_model_matches_best_validation_epoch() {
        let data = prepare(toy_demand(2, 60, 3), 4, SplitRatios::default()).unwrap();
        let spec = ModelSpec::mlp(4, &[5]);
        let config = TrainConfig {
            epochs: 10,
            batch_size: 8,
            patience: 10,
            ..TrainConfig::default()
        };
        let out = fit_model(&spec, &data, &config, None).unwrap();
        let best_recorded = out
            .history
            .iter()
            .map(|s| s.val_loss)
            .fold(f64::INFINITY, f64::min);

        // Recompute the returned model's validation loss by hand.
        let scaler = out.model.scaler;
        let mut val_sum = 0.0;
        for s in data.val() {
            let x = scaler.scale(&s.x);
            let y = scaler.scale(&s.y);
            val_sum += scaled_mse(&out.model.params, &x, &y).unwrap();
        }
        let val_loss = val_sum / data.val().len() as f64;
        assert!((val_loss - best_recorded).abs() < 1e-12);
    }

    #[test]
    fn ha_and_lasso_fit_through_fit_model() {
        let data = prepare(toy_demand(2, 80, 1), 4, SplitRatios::default()).unwrap();
        let ha = fit_model(
            &ModelSpec::historical_average(),
            &data,
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        assert!(matches!(ha.model.params, ModelParams::Ha(_)));
        let lasso = fit_model(
            &ModelSpec::lasso(0.001),
            &data,
            &TrainConfig::default(),
            None,
        )
        .unwrap();
        assert!(matches!(lasso.model.params, ModelParams::Lasso(_)));
        // Both predict in raw units with plausible magnitudes.
        let sample = &data.test()[0];
        for out in [&ha, &lasso] {
            let pred = out
                .model
                .predict(&sample.x, sample.target_hour_of_day)
                .unwrap();
            assert!(pred.data().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn c0_mismatch_rejected() {
        let data = prepare(toy_demand(2, 50, 2), 3, SplitRatios::default()).unwrap();
        let spec = ModelSpec::gcnn_reg(5, &[4]);
        let err = fit_model(&spec, &data, &TrainConfig::default(), None).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }
}
