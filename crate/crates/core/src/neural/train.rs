use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamParams, AdamState};
use super::model::{mse_loss, MlpModel, MlpSpec};
use super::scaler::ScalerKind;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    #[default]
    Mse,
}

/// How phase targets are presented to the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetEncoding {
    /// Phases unwrapped across the aperture, continuous in the pointing
    /// angle. Predictions are wrapped back into (-180, 180].
    #[default]
    Unwrapped,
    /// Phases as stored, in (-180, 180]; the regression target jumps by 360
    /// degrees wherever an element's phase wraps.
    Wrapped,
}

impl std::str::FromStr for TargetEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unwrapped" => Ok(Self::Unwrapped),
            "wrapped" => Ok(Self::Wrapped),
            _ => Err(Error::InvalidArgument(format!("unknown target encoding `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub loss: Loss,
    pub batch_norm: bool,
    pub normalization: ScalerKind,
    pub target_encoding: TargetEncoding,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamParams::default();
        Self {
            learning_rate: adam.learning_rate,
            batch_size: 1024,
            epochs: 1200,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            seed: 0,
            loss: Loss::Mse,
            batch_norm: true,
            normalization: ScalerKind::Standard,
            target_encoding: TargetEncoding::Unwrapped,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument("batch size and epochs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("bad Adam moment coefficients".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Normalized training and validation arrays, one sample per row.
#[derive(Debug, Clone)]
pub struct TrainSet<T> {
    pub x_train: Array2<T>,
    pub y_train: Array2<T>,
    pub x_val: Array2<T>,
    pub y_val: Array2<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult<T> {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: MlpModel<T>,
    pub best_epoch: usize,
    pub trace: Vec<EpochLoss>,
}

/// Validation MSE in inference mode.
pub fn evaluate_mse<T: Real>(model: &MlpModel<T>, x: ArrayView2<'_, T>, y: ArrayView2<'_, T>) -> Result<f64> {
    const CHUNK: usize = 4096;
    let mut total = 0.0;
    for start in (0..x.nrows()).step_by(CHUNK) {
        let end = (start + CHUNK).min(x.nrows());
        let pred = model.predict(x.slice(s![start..end, ..]))?;
        total += mse_loss(pred.view(), y.slice(s![start..end, ..])).as_f64() * pred.len() as f64;
    }
    Ok(total / y.len() as f64)
}

pub fn fit<T: Real>(data: &TrainSet<T>, spec: MlpSpec, cfg: &TrainConfig) -> Result<FitResult<T>> {
    fit_with_progress(data, spec, cfg, |_| {})
}

/// Seeded mini-batch Adam on mean squared error. `on_epoch` sees every
/// epoch's losses as they are produced.
pub fn fit_with_progress<T: Real>(
    data: &TrainSet<T>,
    spec: MlpSpec,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<FitResult<T>> {
    cfg.validate()?;
    let n = data.x_train.nrows();
    if n == 0 {
        return Err(Error::Empty("training split"));
    }
    if data.x_val.nrows() == 0 {
        return Err(Error::Empty("validation split"));
    }
    if data.y_train.nrows() != n || data.y_val.nrows() != data.x_val.nrows() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: data.y_train.nrows(),
        });
    }
    let spec = if cfg.batch_norm { spec } else { spec.without_batch_norm() };
    let has_norm = spec.batch_norm.iter().any(|&b| b);
    let mut model = MlpModel::<T>::new(spec, cfg.seed)?;
    if data.x_train.ncols() != model.input_width() || data.y_train.ncols() != model.output_width() {
        return Err(Error::DimensionMismatch {
            expected: model.input_width() + model.output_width(),
            actual: data.x_train.ncols() + data.y_train.ncols(),
        });
    }
    let shapes: Vec<usize> = model.params_mut().iter().map(|p| p.len()).collect();
    let mut state = AdamState::<T>::zeros(shapes);
    let hp = cfg.adam();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0005_eed0_fba7_c4e5);
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0u64;

    let mut best = (f64::INFINITY, 0usize, model.clone());
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut seen) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch_size) {
            // batch statistics of a single row are degenerate
            if has_norm && idx.len() < 2 {
                continue;
            }
            let xb = data.x_train.select(Axis(0), idx);
            let yb = data.y_train.select(Axis(0), idx);
            let cache = model.forward_train(xb.view())?;
            loss_sum += mse_loss(cache.output.view(), yb.view()).as_f64() * idx.len() as f64;
            seen += idx.len();
            let grads = model.backward(&cache, yb.view())?;
            model.update_running_stats(&cache);
            step += 1;
            let g = grads.slices();
            adam_step(&mut model.params_mut(), &g, &mut state, step, &hp)?;
        }
        let val_loss = evaluate_mse(&model, data.x_val.view(), data.y_val.view())?;
        let record = EpochLoss {
            epoch,
            train_loss: loss_sum / seen.max(1) as f64,
            val_loss,
        };
        on_epoch(&record);
        trace.push(record);
        if !val_loss.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "training diverged at epoch {epoch} (validation loss {val_loss})"
            )));
        }
        if val_loss < best.0 {
            best = (val_loss, epoch, model.clone());
        }
    }
    Ok(FitResult {
        model: best.2,
        best_epoch: best.1,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Activation;

    fn small_spec() -> MlpSpec {
        MlpSpec {
            layer_dims: vec![2, 8, 8, 3],
            activations: vec![Activation::Snake, Activation::Tsigmoid],
            batch_norm: vec![false, true],
        }
    }

    fn constant_target_set() -> TrainSet<f64> {
        let x = Array2::from_shape_fn((100, 2), |(i, j)| ((i * 37 + j * 11) % 100) as f64 / 50.0 - 1.0);
        let y = Array2::from_shape_fn((100, 3), |(_, j)| [0.5, -0.25, 0.1][j]);
        TrainSet {
            x_train: x.clone(),
            y_train: y.clone(),
            x_val: x,
            y_val: y,
        }
    }

    #[test]
    fn learns_a_constant() {
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 20,
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        let fit = fit(&constant_target_set(), small_spec(), &cfg).unwrap();
        let best = fit.trace[fit.best_epoch - 1].val_loss;
        assert!(best < 1e-4, "{best}");
        assert!(best <= fit.trace[0].val_loss);
        assert!(fit.model.is_finite());
    }

    #[test]
    fn same_seed_same_trace() {
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            seed: 9,
            ..TrainConfig::default()
        };
        let data = constant_target_set();
        let a = fit(&data, small_spec(), &cfg).unwrap();
        let b = fit(&data, small_spec(), &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn rejects_empty_and_bad_config() {
        let mut data = constant_target_set();
        data.x_val = Array2::zeros((0, 2));
        data.y_val = Array2::zeros((0, 3));
        assert!(fit(&data, small_spec(), &TrainConfig::default()).is_err());
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(fit(&constant_target_set(), small_spec(), &cfg).is_err());
    }
}
