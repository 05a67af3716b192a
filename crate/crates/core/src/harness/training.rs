use ndarray::Array2;

use super::dataset::Dataset;
use crate::array::{ArrayGeometry, SpatialUnwrapper};
use crate::error::{Error, Result};
use crate::neural::{
    fit_scaler, fit_with_progress, EpochLoss, MlpSpec, Scalers, TargetEncoding, TrainConfig, TrainSet, TrainedModel,
};
use crate::scalar::Real;

/// Inputs `[az, el]` and regression targets of a dataset, in degrees.
pub fn regression_arrays(
    data: &Dataset,
    geom: &ArrayGeometry<f64>,
    encoding: TargetEncoding,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let n = geom.len();
    let unwrapper = match encoding {
        TargetEncoding::Unwrapped => Some(SpatialUnwrapper::new(geom)?),
        TargetEncoding::Wrapped => None,
    };
    let mut x = Array2::zeros((data.len(), 2));
    let mut y = Array2::zeros((data.len(), n));
    for (i, row) in data.rows.iter().enumerate() {
        row.phases.check_len(n)?;
        x[[i, 0]] = row.bpa.az_deg();
        x[[i, 1]] = row.bpa.el_deg();
        let target = match &unwrapper {
            Some(u) => u.unwrap(row.phases.as_slice())?,
            None => row.phases.as_slice().to_vec(),
        };
        y.row_mut(i).iter_mut().zip(target).for_each(|(d, s)| *d = s);
    }
    Ok((x, y))
}

fn normalized<T: Real>(scalers: &Scalers, x: &Array2<f64>, y: &Array2<f64>) -> Result<(Array2<T>, Array2<T>)> {
    let xs = scalers.input.apply(x.view())?.mapv(T::lit);
    let ys = scalers.output.apply(y.view())?.mapv(T::lit);
    Ok((xs, ys))
}

/// A trained regressor and its loss history.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub model: TrainedModel<T>,
    pub trace: Vec<EpochLoss>,
}

/// Fits scalers on the training split, then the network.
pub fn train_regressor<T: Real>(
    train: &Dataset,
    validation: &Dataset,
    geom: &ArrayGeometry<f64>,
    spec: MlpSpec,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochLoss),
) -> Result<TrainOutcome<T>> {
    let planar = *geom
        .planar_spec()
        .ok_or_else(|| Error::InvalidGeometry("training needs a planar array description".into()))?;
    if train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if validation.is_empty() {
        return Err(Error::Empty("validation split"));
    }
    let (xt, yt) = regression_arrays(train, geom, cfg.target_encoding)?;
    let (xv, yv) = regression_arrays(validation, geom, cfg.target_encoding)?;
    let scalers = fit_scaler(xt.view(), yt.view(), cfg.normalization)?;
    let (x_train, y_train) = normalized::<T>(&scalers, &xt, &yt)?;
    let (x_val, y_val) = normalized::<T>(&scalers, &xv, &yv)?;
    let set = TrainSet {
        x_train,
        y_train,
        x_val,
        y_val,
    };
    let fit = fit_with_progress(&set, spec, cfg, on_epoch)?;
    let model = TrainedModel::new(fit.model, scalers, cfg.clone(), planar, fit.best_epoch)?;
    Ok(TrainOutcome { model, trace: fit.trace })
}
