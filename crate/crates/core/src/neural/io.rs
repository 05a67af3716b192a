use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::model::{BatchNorm, Dense, MlpModel, MlpSpec};
use super::scaler::Scalers;
use super::train::TrainConfig;
use crate::array::{BeamPointingAngle, PhaseVector, PlanarSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MODEL_FORMAT: &str = "beamsynth-mlp";
pub const MODEL_VERSION: u32 = 1;

/// A fitted regressor with everything needed to turn a pointing angle into
/// element phases.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    pub model: MlpModel<T>,
    pub scalers: Scalers,
    pub config: TrainConfig,
    pub geometry: PlanarSpec,
    pub best_epoch: usize,
}

impl<T: Real> TrainedModel<T> {
    pub fn new(model: MlpModel<T>, scalers: Scalers, config: TrainConfig, geometry: PlanarSpec, best_epoch: usize) -> Result<Self> {
        let tm = Self {
            model,
            scalers,
            config,
            geometry,
            best_epoch,
        };
        tm.validate()?;
        Ok(tm)
    }

    fn validate(&self) -> Result<()> {
        self.model.spec().validate()?;
        let elements = self.geometry.rows * self.geometry.cols;
        let checks = [
            (self.model.input_width(), 2),
            (self.scalers.input.features(), 2),
            (self.model.output_width(), elements),
            (self.scalers.output.features(), elements),
        ];
        for (actual, expected) in checks {
            if actual != expected {
                return Err(Error::DimensionMismatch { expected, actual });
            }
        }
        if !self.model.is_finite() {
            return Err(Error::ModelFormat("non-finite parameters".into()));
        }
        Ok(())
    }

    /// Phases for one pointing angle, wrapped into (-180, 180].
    pub fn predict_phases<U: Real>(&self, bpa: &BeamPointingAngle<U>) -> Result<PhaseVector<f64>> {
        let mut out = self.predict_batch(std::slice::from_ref(bpa))?;
        Ok(out.pop().expect("one row in, one row out"))
    }

    pub fn predict_batch<U: Real>(&self, bpas: &[BeamPointingAngle<U>]) -> Result<Vec<PhaseVector<f64>>> {
        const CHUNK: usize = 4096;
        let mut out = Vec::with_capacity(bpas.len());
        for chunk in bpas.chunks(CHUNK) {
            let x = Array2::from_shape_fn((chunk.len(), 2), |(i, j)| {
                let mut row = [chunk[i].az_deg().as_f64(), chunk[i].el_deg().as_f64()];
                self.scalers.input.apply_row(&mut row);
                T::lit(row[j])
            });
            let y = self.model.predict(x.view())?;
            for row in y.rows() {
                let mut phases: Vec<f64> = row.iter().map(|v| v.as_f64()).collect();
                self.scalers.output.invert_row(&mut phases);
                out.push(PhaseVector::from_degrees(phases)?);
            }
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.precision != T::NAME {
            return Err(Error::ModelFormat(format!(
                "file holds {} parameters, requested {}",
                file.precision,
                T::NAME
            )));
        }
        Self::from_file(file)
    }

    fn to_file(&self) -> ModelFile {
        let m = &self.model;
        let layers = m
            .dense
            .iter()
            .enumerate()
            .map(|(i, d)| LayerFile {
                weight: d.weight.iter().map(|v| v.as_f64()).collect(),
                bias: to_f64(&d.bias),
                norm: m.norms.get(i).and_then(|n| n.as_ref()).map(|n| NormFile {
                    gamma: to_f64(&n.gamma),
                    beta: to_f64(&n.beta),
                    running_mean: to_f64(&n.running_mean),
                    running_var: to_f64(&n.running_var),
                    eps: n.eps.as_f64(),
                    momentum: n.momentum.as_f64(),
                }),
                snake_a: m.snake_a.get(i).copied().flatten().map(|a| a.as_f64()),
            })
            .collect();
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            precision: T::NAME.into(),
            spec: m.spec.clone(),
            layers,
            scalers: self.scalers.clone(),
            train_config: self.config.clone(),
            geometry: self.geometry,
            best_epoch: self.best_epoch,
        }
    }

    fn from_file(file: ModelFile) -> Result<Self> {
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("{} v{}", file.format, file.version)));
        }
        let spec = file.spec;
        spec.validate()?;
        let h = spec.hidden_layers();
        if file.layers.len() != h + 1 {
            return Err(Error::ModelFormat(format!(
                "{} layers stored for {} dense transforms",
                file.layers.len(),
                h + 1
            )));
        }
        let (mut dense, mut norms, mut snake_a) = (Vec::new(), Vec::new(), Vec::new());
        for (i, layer) in file.layers.into_iter().enumerate() {
            let (fan_in, fan_out) = (spec.layer_dims[i], spec.layer_dims[i + 1]);
            if layer.weight.len() != fan_in * fan_out || layer.bias.len() != fan_out {
                return Err(Error::ModelFormat(format!("layer {i} shape does not match {fan_in}x{fan_out}")));
            }
            let flat: Vec<T> = layer.weight.iter().map(|&v| T::lit(v)).collect();
            dense.push(Dense {
                weight: Array2::from_shape_vec((fan_in, fan_out), flat).expect("shape checked"),
                bias: from_f64(&layer.bias),
            });
            if i == h {
                if layer.norm.is_some() || layer.snake_a.is_some() {
                    return Err(Error::ModelFormat("output layer has no normalization or activation".into()));
                }
                continue;
            }
            let norm = match (spec.batch_norm[i], layer.norm) {
                (true, Some(n)) => {
                    if [&n.gamma, &n.beta, &n.running_mean, &n.running_var].iter().any(|v| v.len() != fan_out) {
                        return Err(Error::ModelFormat(format!("layer {i} normalization width")));
                    }
                    Some(BatchNorm {
                        gamma: from_f64(&n.gamma),
                        beta: from_f64(&n.beta),
                        running_mean: from_f64(&n.running_mean),
                        running_var: from_f64(&n.running_var),
                        eps: T::lit(n.eps),
                        momentum: T::lit(n.momentum),
                    })
                }
                (false, None) => None,
                _ => return Err(Error::ModelFormat(format!("layer {i} normalization flag mismatch"))),
            };
            norms.push(norm);
            let is_snake = spec.activations[i] == super::Activation::Snake;
            match (is_snake, layer.snake_a) {
                (true, Some(a)) if a > 0.0 => snake_a.push(Some(T::lit(a))),
                (false, None) => snake_a.push(None),
                _ => return Err(Error::ModelFormat(format!("layer {i} snake frequency"))),
            }
        }
        let model = MlpModel {
            spec,
            dense,
            norms,
            snake_a,
        };
        Self::new(model, file.scalers, file.train_config, file.geometry, file.best_epoch)
    }
}

fn to_f64<T: Real>(a: &Array1<T>) -> Vec<f64> {
    a.iter().map(|v| v.as_f64()).collect()
}

fn from_f64<T: Real>(v: &[f64]) -> Array1<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    precision: String,
    spec: MlpSpec,
    layers: Vec<LayerFile>,
    scalers: Scalers,
    train_config: TrainConfig,
    geometry: PlanarSpec,
    best_epoch: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    /// Row-major `fan_in x fan_out`.
    weight: Vec<f64>,
    bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    norm: Option<NormFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    snake_a: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NormFile {
    gamma: Vec<f64>,
    beta: Vec<f64>,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
    eps: f64,
    momentum: f64,
}

/// A model file of either precision.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    F32(TrainedModel<f32>),
    F64(TrainedModel<f64>),
}

impl AnyModel {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        match file.precision.as_str() {
            "f32" => Ok(Self::F32(TrainedModel::from_file(file)?)),
            "f64" => Ok(Self::F64(TrainedModel::from_file(file)?)),
            p => Err(Error::ModelFormat(format!("unknown precision {p:?}"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            Self::F32(m) => m.save(path),
            Self::F64(m) => m.save(path),
        }
    }

    pub fn predict_phases(&self, bpa: &BeamPointingAngle<f64>) -> Result<PhaseVector<f64>> {
        match self {
            Self::F32(m) => m.predict_phases(bpa),
            Self::F64(m) => m.predict_phases(bpa),
        }
    }

    pub fn predict_batch(&self, bpas: &[BeamPointingAngle<f64>]) -> Result<Vec<PhaseVector<f64>>> {
        match self {
            Self::F32(m) => m.predict_batch(bpas),
            Self::F64(m) => m.predict_batch(bpas),
        }
    }

    pub fn geometry(&self) -> &PlanarSpec {
        match self {
            Self::F32(m) => &m.geometry,
            Self::F64(m) => &m.geometry,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        match self {
            Self::F32(m) => &m.config,
            Self::F64(m) => &m.config,
        }
    }
}

impl From<TrainedModel<f32>> for AnyModel {
    fn from(m: TrainedModel<f32>) -> Self {
        Self::F32(m)
    }
}

impl From<TrainedModel<f64>> for AnyModel {
    fn from(m: TrainedModel<f64>) -> Self {
        Self::F64(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{fit_scaler, Activation, ScalerKind};
    use ndarray::Array2;

    fn tiny<T: Real>() -> TrainedModel<T> {
        let geometry = PlanarSpec {
            rows: 2,
            cols: 2,
            ..PlanarSpec::default()
        };
        let spec = MlpSpec {
            layer_dims: vec![2, 5, 6, 4],
            activations: vec![Activation::Snake, Activation::Tsigmoid],
            batch_norm: vec![false, true],
        };
        let mut model = MlpModel::<T>::new(spec, 3).unwrap();
        if let Some(n) = model.norms[1].as_mut() {
            n.running_mean.fill(T::lit(0.25));
            n.running_var.fill(T::lit(1.5));
        }
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i * 13 + j * 40) as f64);
        let y = Array2::from_shape_fn((10, 4), |(i, j)| if j == 0 { 0.0 } else { (i * j) as f64 });
        let scalers = fit_scaler(x.view(), y.view(), ScalerKind::Standard).unwrap();
        TrainedModel::new(model, scalers, TrainConfig::default(), geometry, 7).unwrap()
    }

    #[test]
    fn round_trips_both_precisions() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let m64 = tiny::<f64>();
        m64.save(&p).unwrap();
        assert_eq!(TrainedModel::<f64>::load(&p).unwrap(), m64);
        assert!(TrainedModel::<f32>::load(&p).is_err());

        let m32 = tiny::<f32>();
        m32.save(&p).unwrap();
        let back = AnyModel::load(&p).unwrap();
        assert_eq!(back, AnyModel::F32(m32.clone()));
        let bpa = BeamPointingAngle::new(10.0, 80.0).unwrap();
        assert_eq!(back.predict_phases(&bpa).unwrap(), m32.predict_phases(&bpa).unwrap());
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        tiny::<f64>().save(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        std::fs::write(&p, text.replace("\"version\": 1", "\"version\": 99")).unwrap();
        assert!(matches!(AnyModel::load(&p), Err(Error::ModelFormat(_))));
        std::fs::write(&p, "{").unwrap();
        assert!(AnyModel::load(&p).is_err());
    }

    #[test]
    fn predictions_are_wrapped_and_batch_consistent() {
        let m = tiny::<f64>();
        let bpas: Vec<_> = (0..5).map(|i| BeamPointingAngle::new(20.0 * i as f64, 40.0 + i as f64).unwrap()).collect();
        let batch = m.predict_batch(&bpas).unwrap();
        for (b, pv) in bpas.iter().zip(&batch) {
            assert_eq!(pv.len(), 4);
            assert!(pv.as_slice().iter().all(|p| *p > -180.0 && *p <= 180.0));
            assert_eq!(&m.predict_phases(b).unwrap(), pv);
        }
    }
}
