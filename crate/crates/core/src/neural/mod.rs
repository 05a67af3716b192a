//! Feed-forward regressor from pointing angles to element phases.

mod activation;
mod adam;
mod io;
mod model;
mod scaler;
mod train;

pub use activation::{snake_activation, tsigmoid_activation, Activation};
pub use adam::{adam_step, AdamParams, AdamState};
pub use io::{AnyModel, TrainedModel, MODEL_FORMAT, MODEL_VERSION};
pub use model::{mse_loss, BatchNorm, Dense, ForwardCache, Gradients, MlpModel, MlpSpec, Mode};
pub use scaler::{fit_scaler, ConstantFeature, ScalerKind, ScalerParams, Scalers};
pub use train::{evaluate_mse, fit, fit_with_progress, EpochLoss, FitResult, Loss, TargetEncoding, TrainConfig, TrainSet};
