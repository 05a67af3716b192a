use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dataset::SectorSpec;
use super::eval::{CsimReference, EvalSettings};
use crate::array::{ArrayGeometry, ElementModel, Orientation, PeakField, PlanarSpec};
use crate::error::{Error, Result};
use crate::neural::{Loss, ScalerKind, TargetEncoding, TrainConfig};

/// Scalar type used for network parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

pub const FULL_SCALE_SAMPLES: usize = 1_500_000;
pub const FULL_SCALE_EPOCHS: usize = 1200;

/// Flat experiment description, read from TOML. Missing keys take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stage seed is derived from it.
    pub seed: u64,
    /// Replaces `samples` and `epochs` with the full-size run.
    pub full_scale: bool,

    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    /// `xy` or `panel:<facing azimuth>`.
    pub orientation: String,
    pub element: ElementModel,

    pub az_min: f64,
    pub az_max: f64,
    pub el_min: f64,
    pub el_max: f64,
    pub samples: usize,
    pub split_train: f64,
    pub split_validation: f64,
    pub split_test: f64,

    pub precision: Precision,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_norm: bool,
    pub normalization: ScalerKind,
    pub target_encoding: TargetEncoding,

    pub codebook_sizes: Vec<usize>,
    pub codebook_bits: u32,

    /// Step of the cosine-similarity grid, degrees.
    pub grid_step: f64,
    /// Coarse step of the peak search, degrees.
    pub peak_step: f64,
    pub peak_field: PeakField,
    pub csim_reference: CsimReference,
    /// Test angles per evaluation; 0 uses the whole test split.
    pub eval_samples: usize,
    pub sweep_bits: Vec<u32>,
    pub sweep_codebook: usize,
    /// Test angles per sweep entry; 0 uses the whole test split.
    pub sweep_samples: usize,
    pub latency_trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let planar = PlanarSpec::default();
        let sector = SectorSpec::default();
        let train = TrainConfig::default();
        let eval = EvalSettings::default();
        Self {
            seed: 0,
            full_scale: false,
            rows: planar.rows,
            cols: planar.cols,
            spacing: planar.spacing,
            orientation: planar.orientation.to_string(),
            element: planar.element,
            az_min: sector.az_range[0],
            az_max: sector.az_range[1],
            el_min: sector.el_range[0],
            el_max: sector.el_range[1],
            samples: sector.samples,
            split_train: 0.7,
            split_validation: 0.15,
            split_test: 0.15,
            precision: Precision::F32,
            learning_rate: train.learning_rate,
            batch_size: train.batch_size,
            epochs: 200,
            beta1: train.beta1,
            beta2: train.beta2,
            epsilon: train.epsilon,
            batch_norm: train.batch_norm,
            normalization: train.normalization,
            target_encoding: train.target_encoding,
            codebook_sizes: vec![16, 64, 256, 1024],
            codebook_bits: 16,
            grid_step: eval.csim_grid_step,
            peak_step: eval.peak_step,
            peak_field: eval.peak_field,
            csim_reference: eval.csim_reference,
            eval_samples: 0,
            sweep_bits: vec![2, 3, 4, 5, 6],
            sweep_codebook: 1024,
            sweep_samples: 2000,
            latency_trials: 10_000,
        }
    }
}

/// Stage seed: the first eight bytes (little endian) of
/// `sha256(master_le_bytes || stage)`.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// The config with `full_scale` expanded.
    pub fn effective(&self) -> Self {
        let mut c = self.clone();
        if c.full_scale {
            c.samples = FULL_SCALE_SAMPLES;
            c.epochs = FULL_SCALE_EPOCHS;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.planar_spec()?;
        self.sector(0).validate()?;
        self.train_config(0).validate()?;
        let ratios = self.split_ratios();
        if ratios.iter().any(|r| !(*r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios {ratios:?} must sum to 1")));
        }
        for &k in &self.codebook_sizes {
            if !k.is_power_of_two() || k < 4 || k.trailing_zeros() % 2 != 0 {
                return Err(Error::Config(format!("codebook size {k} must be an even power of two")));
            }
        }
        if !(1..=16).contains(&self.codebook_bits) || self.sweep_bits.iter().any(|b| !(1..=16).contains(b)) {
            return Err(Error::Config("bit depths must be in 1..=16".into()));
        }
        if !self.sweep_bits.is_empty() && !self.codebook_sizes.contains(&self.sweep_codebook) {
            return Err(Error::Config(format!(
                "sweep codebook {} is not among codebook_sizes",
                self.sweep_codebook
            )));
        }
        if !(self.grid_step > 0.0 && self.peak_step > 0.0) {
            return Err(Error::Config("grid and peak steps must be positive".into()));
        }
        Ok(())
    }

    pub fn planar_spec(&self) -> Result<PlanarSpec> {
        let orientation: Orientation = self.orientation.parse()?;
        Ok(PlanarSpec {
            rows: self.rows,
            cols: self.cols,
            spacing: self.spacing,
            orientation,
            element: self.element,
        })
    }

    pub fn geometry(&self) -> Result<ArrayGeometry<f64>> {
        ArrayGeometry::planar(self.planar_spec()?)
    }

    pub fn sector(&self, seed: u64) -> SectorSpec {
        SectorSpec {
            az_range: [self.az_min, self.az_max],
            el_range: [self.el_min, self.el_max],
            samples: self.effective().samples,
            seed,
        }
    }

    pub fn split_ratios(&self) -> [f64; 3] {
        [self.split_train, self.split_validation, self.split_test]
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.effective().epochs,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            seed,
            loss: Loss::Mse,
            batch_norm: self.batch_norm,
            normalization: self.normalization,
            target_encoding: self.target_encoding,
        }
    }

    pub fn eval_settings(&self) -> EvalSettings {
        EvalSettings {
            csim_grid_step: self.grid_step,
            peak_step: self.peak_step,
            peak_field: self.peak_field,
            csim_reference: self.csim_reference,
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_vec(self)?;
        Ok(hex(&Sha256::digest(&json)))
    }
}
