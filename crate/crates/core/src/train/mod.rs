//! MSE loss, Adam, min-max scaling and the mini-batch training loop.
//!
//! The loop holds out the chronologically last fraction of windows for
//! validation (random splitting would leak future values through window
//! overlap), shuffles only the training windows, and is bit-deterministic
//! given the config seed.

mod adam;
mod loss;
mod scaler;

pub use adam::{AdamHyper, AdamState};
pub use loss::mse_loss;
pub use scaler::Scaler;

use std::time::Instant;

use crate::data::WindowedDataset;
use crate::models::TrainableModel;
use crate::numeric::RngState;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Training configuration. Defaults follow the experiment settings: 20
/// epochs, batch size 128, 10% validation split, standard Adam constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_split: f64,
    pub adam: AdamHyper,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 128,
            validation_split: 0.1,
            adam: AdamHyper::default(),
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("train config: batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_split) {
            return Err(Error::InvalidArgument(format!(
                "train config: validation_split must be in [0, 1), got {}",
                self.validation_split
            )));
        }
        self.adam.validate()
    }
}

/// Losses and wall-clock duration of one completed epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub seconds: f64,
}

/// One record per completed epoch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }

    pub fn best_train_loss(&self) -> Option<f64> {
        self.epochs
            .iter()
            .map(|e| e.train_loss)
            .min_by(|a, b| a.partial_cmp(b).expect("finite losses"))
    }

    /// CSV export: `epoch,train_loss,val_loss,seconds`, one row per epoch.
    /// The validation column is empty when no split was held out.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,seconds\n");
        for e in &self.epochs {
            let val = e.val_loss.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, val, e.seconds));
        }
        out
    }
}

/// Chronological window split: the last `validation_split` fraction of
/// windows is held out. Returns (train indices, validation indices).
fn split_indices(n: usize, validation_split: f64) -> (Vec<usize>, Vec<usize>) {
    let n_val = ((n as f64) * validation_split).floor() as usize;
    let n_train = n - n_val;
    ((0..n_train).collect(), (n_train..n).collect())
}

/// Trains `model` in place; returns the per-epoch history.
///
/// Deterministic given `config.seed`: shuffling and dropout draw from
/// independent forks of the seed, in a fixed order.
pub fn train<M: TrainableModel>(
    model: &mut M,
    dataset: &WindowedDataset,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    config.validate()?;
    let n = dataset.len();
    if n == 0 {
        return Err(Error::Data("train: empty dataset".into()));
    }
    if dataset.input_len() != model.input_len() || dataset.output_len() != model.horizon() {
        return Err(Error::shape(
            "train",
            format!(
                "dataset windows [{}, {}] vs model [{}, {}]",
                dataset.input_len(),
                dataset.output_len(),
                model.input_len(),
                model.horizon()
            ),
        ));
    }

    let (train_idx, val_idx) = split_indices(n, config.validation_split);
    if train_idx.is_empty() {
        return Err(Error::Data(format!(
            "train: validation split {} leaves no training windows (n = {n})",
            config.validation_split
        )));
    }

    let mut root = RngState::new(config.seed);
    let mut shuffle_rng = root.fork();
    let mut dropout_rng = root.fork();

    let mut adam = AdamState::new(&model.param_tensors(), config.adam);
    let mut history = TrainHistory::default();
    let mut order = train_idx;

    for epoch in 0..config.epochs {
        let started = Instant::now();
        if config.shuffle {
            shuffle_rng.shuffle(&mut order);
        }

        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch_x = dataset.inputs().gather_rows(chunk);
            let batch_y = dataset.targets().gather_rows(chunk);
            let (pred, trace) = model.forward(&batch_x, &mut dropout_rng, true)?;
            let (loss, grad) = mse_loss(&pred, &batch_y)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "train: non-finite loss at epoch {epoch} (diverged)"
                )));
            }
            let grads = model.backward(&trace, &grad)?;
            adam.step(&mut model.param_tensors_mut(), &grads)?;
            loss_sum += loss * chunk.len() as f64;
        }
        let train_loss = loss_sum / order.len() as f64;

        let val_loss = if val_idx.is_empty() {
            None
        } else {
            let mut vsum = 0.0;
            for chunk in val_idx.chunks(config.batch_size) {
                let batch_x = dataset.inputs().gather_rows(chunk);
                let batch_y = dataset.targets().gather_rows(chunk);
                let pred = model.predict(&batch_x)?;
                let (loss, _) = mse_loss(&pred, &batch_y)?;
                vsum += loss * chunk.len() as f64;
            }
            Some(vsum / val_idx.len() as f64)
        };

        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            seconds: started.elapsed().as_secs_f64(),
        });
    }

    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_windows, synth_series, SynthKind, SynthParams, TimeSeries};
    use crate::models::{AnyModel, ModelConfig, ModelKind};
    use crate::numeric::Tensor;
    use crate::rnn::DenseHead;

    /// Head-only model: flattens the window straight into the dense head.
    /// Training it on a linear mapping is a convex problem.
    struct DenseOnly {
        head: DenseHead,
        input_len: usize,
    }

    impl TrainableModel for DenseOnly {
        type Trace = Tensor;

        fn input_len(&self) -> usize {
            self.input_len
        }

        fn horizon(&self) -> usize {
            self.head.horizon()
        }

        fn forward(
            &self,
            input: &Tensor,
            _rng: &mut RngState,
            _training: bool,
        ) -> Result<(Tensor, Tensor)> {
            let batch = input.shape()[0];
            let flat = input.reshape(&[batch, self.input_len])?;
            Ok((self.head.forward(&flat)?, flat))
        }

        fn backward(&self, flat: &Tensor, grad_out: &Tensor) -> Result<Vec<Tensor>> {
            let (dw, db, _) = self.head.backward(flat, grad_out)?;
            Ok(vec![dw, db])
        }

        fn param_tensors(&self) -> Vec<&Tensor> {
            vec![&self.head.w, &self.head.b]
        }

        fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
            vec![&mut self.head.w, &mut self.head.b]
        }
    }

    fn sine_dataset(len: usize) -> WindowedDataset {
        let series = synth_series(
            SynthKind::Sine,
            len,
            &SynthParams { amplitude: 1.0, period: 24.0, offset: 0.0, ..SynthParams::default() },
            7,
        )
        .unwrap();
        make_windows(&series, 10, 10, 1).unwrap()
    }

    #[test]
    fn zero_epochs_returns_model_unchanged() {
        let mut rng = RngState::new(300);
        let mut config = ModelConfig::new(ModelKind::Gru);
        config.units = 4;
        let mut model = AnyModel::init(&config, &mut rng).unwrap();
        let before: Vec<Tensor> = model.param_tensors().into_iter().cloned().collect();
        let dataset = sine_dataset(60);
        let history = train(
            &mut model,
            &dataset,
            &TrainConfig { epochs: 0, ..TrainConfig::default() },
        )
        .unwrap();
        assert!(history.epochs.is_empty());
        for (a, b) in model.param_tensors().iter().zip(before.iter()) {
            assert_eq!(*a, b);
        }
    }

    #[test]
    fn dense_only_model_on_linear_map_decreases_monotonically() {
        // Targets are a fixed linear function of the inputs; the first 10
        // epochs of Adam on this convex objective must strictly decrease.
        let mut rng = RngState::new(301);
        let n = 64;
        let input_len = 6;
        let horizon = 3;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let window: Vec<f64> = (0..input_len).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let y: Vec<f64> = (0..horizon)
                .map(|h| window.iter().enumerate().map(|(i, v)| v * ((i + h) as f64 * 0.1)).sum())
                .collect();
            xs.extend(window);
            ys.extend(y);
        }
        let dataset = WindowedDataset::from_tensors(
            Tensor::new(&[n, input_len, 1], xs).unwrap(),
            Tensor::new(&[n, horizon], ys).unwrap(),
            (0..n).collect(),
        )
        .unwrap();

        let mut model = DenseOnly { head: DenseHead::init(input_len, horizon, &mut rng).unwrap(), input_len };
        let config = TrainConfig {
            epochs: 10,
            batch_size: 64,
            validation_split: 0.0,
            adam: AdamHyper { lr: 0.01, ..AdamHyper::default() },
            seed: 5,
            shuffle: false,
        };
        let history = train(&mut model, &dataset, &config).unwrap();
        for pair in history.epochs.windows(2) {
            assert!(
                pair[1].train_loss < pair[0].train_loss,
                "loss rose: {} -> {}",
                pair[0].train_loss,
                pair[1].train_loss
            );
        }
    }

    #[test]
    fn pure_noise_targets_bottom_out_at_target_variance() {
        // Unpredictable targets: training MSE should approach the target
        // variance and not dip meaningfully below it.
        let input_len = 8;
        let horizon = 4;
        let n = 512;
        let mut final_ratio_sum = 0.0;
        let seeds = 5;
        for seed in 0..seeds {
            let mut rng = RngState::new(400 + seed);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut var_acc = 0.0;
            for _ in 0..n {
                xs.extend((0..input_len).map(|_| rng.uniform(-1.0, 1.0)));
                for _ in 0..horizon {
                    let t = rng.normal(0.0, 1.0);
                    var_acc += t * t;
                    ys.push(t);
                }
            }
            let target_var = var_acc / (n * horizon) as f64;
            let dataset = WindowedDataset::from_tensors(
                Tensor::new(&[n, input_len, 1], xs).unwrap(),
                Tensor::new(&[n, horizon], ys).unwrap(),
                (0..n).collect(),
            )
            .unwrap();
            let mut model = DenseOnly {
                head: DenseHead::init(input_len, horizon, &mut rng).unwrap(),
                input_len,
            };
            let config = TrainConfig {
                epochs: 15,
                batch_size: 128,
                validation_split: 0.0,
                seed,
                ..TrainConfig::default()
            };
            let history = train(&mut model, &dataset, &config).unwrap();
            final_ratio_sum += history.final_train_loss().unwrap() / target_var;
        }
        let mean_ratio = final_ratio_sum / seeds as f64;
        assert!(
            mean_ratio > 0.85 && mean_ratio < 1.6,
            "loss/variance ratio {mean_ratio} outside sanity band"
        );
    }

    #[test]
    fn chronological_validation_split_never_interleaves() {
        let (train_idx, val_idx) = split_indices(100, 0.1);
        assert_eq!(train_idx.len(), 90);
        assert_eq!(val_idx.len(), 10);
        assert!(train_idx.iter().max().unwrap() < val_idx.iter().min().unwrap());
    }

    #[test]
    fn identical_seeds_give_bit_identical_histories() {
        let dataset = sine_dataset(120);
        let run = || {
            let mut rng = RngState::new(55);
            let mut config = ModelConfig::new(ModelKind::Gru);
            config.units = 5;
            let mut model = AnyModel::init(&config, &mut rng).unwrap();
            let tc = TrainConfig { epochs: 3, batch_size: 16, seed: 9, ..TrainConfig::default() };
            train(&mut model, &dataset, &tc).unwrap()
        };
        let h1 = run();
        let h2 = run();
        assert_eq!(h1.epochs.len(), h2.epochs.len());
        for (a, b) in h1.epochs.iter().zip(h2.epochs.iter()) {
            assert_eq!(a.train_loss.to_bits(), b.train_loss.to_bits());
            assert_eq!(
                a.val_loss.map(f64::to_bits),
                b.val_loss.map(f64::to_bits)
            );
        }
    }

    #[test]
    fn history_csv_has_header_and_one_row_per_epoch() {
        let history = TrainHistory {
            epochs: vec![
                EpochRecord { epoch: 0, train_loss: 0.5, val_loss: Some(0.6), seconds: 0.01 },
                EpochRecord { epoch: 1, train_loss: 0.25, val_loss: None, seconds: 0.01 },
            ],
        };
        let csv = history.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "epoch,train_loss,val_loss,seconds");
        assert!(lines[2].starts_with("1,0.25,,"));
    }

    // Keep a fast single-model overfit check here; the acceptance suite runs
    // the full six-model version.
    #[test]
    fn gru_overfits_small_noiseless_sine() {
        let series = TimeSeries::from_values(
            (0..200).map(|t| (t as f64 * std::f64::consts::TAU / 48.0).sin() * 0.5 + 0.5).collect(),
        )
        .unwrap();
        let dataset = make_windows(&series, 10, 10, 1).unwrap();
        let mut rng = RngState::new(77);
        let mut config = ModelConfig::new(ModelKind::Gru);
        config.units = 16;
        let mut model = AnyModel::init(&config, &mut rng).unwrap();
        let tc = TrainConfig {
            epochs: 150,
            batch_size: 32,
            validation_split: 0.0,
            seed: 3,
            ..TrainConfig::default()
        };
        let history = train(&mut model, &dataset, &tc).unwrap();
        let best = history.best_train_loss().unwrap();
        assert!(best < 1e-3, "GRU failed to overfit a noiseless sine: best {best}");
    }
}
