use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalerKind {
    /// Zero mean, unit variance.
    #[default]
    Standard,
    /// Affine map of the observed range onto `[-1, 1]`.
    MinMax,
}

impl std::str::FromStr for ScalerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "min-max" => Ok(Self::MinMax),
            _ => Err(Error::InvalidArgument(format!("unknown normalization `{s}`"))),
        }
    }
}

/// What to do with a feature that never varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantFeature {
    Reject,
    /// Centre it and leave the scale at 1.
    PassThrough,
}

/// Per-feature affine normalization `z = (x - center) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub kind: ScalerKind,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ScalerParams {
    /// Fits on the rows of `data` (one row per sample).
    pub fn fit(data: ArrayView2<'_, f64>, kind: ScalerKind, constant: ConstantFeature) -> Result<Self> {
        let rows = data.nrows();
        if rows == 0 {
            return Err(Error::Empty("scaler fit on zero rows"));
        }
        let mut center = Vec::with_capacity(data.ncols());
        let mut scale = Vec::with_capacity(data.ncols());
        for (j, col) in data.axis_iter(Axis(1)).enumerate() {
            let (c, s) = match kind {
                ScalerKind::Standard => {
                    let mean = col.iter().sum::<f64>() / rows as f64;
                    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / rows as f64;
                    (mean, var.sqrt())
                }
                ScalerKind::MinMax => {
                    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    ((hi + lo) / 2.0, (hi - lo) / 2.0)
                }
            };
            let s = if s > 0.0 && s.is_finite() {
                s
            } else {
                match constant {
                    ConstantFeature::Reject => return Err(Error::ZeroVariance(j)),
                    ConstantFeature::PassThrough => 1.0,
                }
            };
            center.push(c);
            scale.push(s);
        }
        Ok(Self { kind, center, scale })
    }

    pub fn features(&self) -> usize {
        self.center.len()
    }

    fn check(&self, cols: usize) -> Result<()> {
        if cols != self.features() {
            return Err(Error::DimensionMismatch {
                expected: self.features(),
                actual: cols,
            });
        }
        Ok(())
    }

    pub fn apply(&self, data: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(data.ncols())?;
        let mut out = data.to_owned();
        for mut row in out.rows_mut() {
            self.apply_row(row.as_slice_mut().expect("owned rows are contiguous"));
        }
        Ok(out)
    }

    pub fn invert(&self, data: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(data.ncols())?;
        let mut out = data.to_owned();
        for mut row in out.rows_mut() {
            self.invert_row(row.as_slice_mut().expect("owned rows are contiguous"));
        }
        Ok(out)
    }

    #[inline]
    pub fn apply_row(&self, row: &mut [f64]) {
        for ((v, c), s) in row.iter_mut().zip(&self.center).zip(&self.scale) {
            *v = (*v - c) / s;
        }
    }

    #[inline]
    pub fn invert_row(&self, row: &mut [f64]) {
        for ((v, c), s) in row.iter_mut().zip(&self.center).zip(&self.scale) {
            *v = *v * s + c;
        }
    }
}

/// Input and output normalization of a regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalers {
    pub input: ScalerParams,
    pub output: ScalerParams,
}

/// Fits both scalers on training data. Input features must vary; constant
/// output features (element 0 always has phase 0) are only centred.
pub fn fit_scaler(
    inputs: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    kind: ScalerKind,
) -> Result<Scalers> {
    Ok(Scalers {
        input: ScalerParams::fit(inputs, kind, ConstantFeature::Reject)?,
        output: ScalerParams::fit(targets, kind, ConstantFeature::PassThrough)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rows(n: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, cols), |(_, j)| rng.random_range(-50.0..50.0) * (j + 1) as f64 + 7.0 * j as f64)
    }

    #[test]
    fn mean_maps_to_zero() {
        let data = random_rows(200, 3, 1);
        let s = ScalerParams::fit(data.view(), ScalerKind::Standard, ConstantFeature::Reject).unwrap();
        let mut mean = s.center.clone();
        s.apply_row(&mut mean);
        assert!(mean.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn roundtrip_is_identity() {
        let data = random_rows(1000, 4, 2);
        for kind in [ScalerKind::Standard, ScalerKind::MinMax] {
            let s = ScalerParams::fit(data.view(), kind, ConstantFeature::Reject).unwrap();
            let back = s.invert(s.apply(data.view()).unwrap().view()).unwrap();
            for (a, b) in data.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn standardized_moments() {
        let data = random_rows(700, 5, 3);
        let s = ScalerParams::fit(data.view(), ScalerKind::Standard, ConstantFeature::Reject).unwrap();
        let z = s.apply(data.view()).unwrap();
        for col in z.columns() {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-10 && (var - 1.0).abs() < 1e-10, "{mean} {var}");
        }
    }

    #[test]
    fn minmax_hits_unit_interval() {
        let data = random_rows(300, 2, 4);
        let s = ScalerParams::fit(data.view(), ScalerKind::MinMax, ConstantFeature::Reject).unwrap();
        let z = s.apply(data.view()).unwrap();
        for col in z.columns() {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_features() {
        let mut data = random_rows(50, 2, 5);
        data.column_mut(1).fill(3.0);
        assert!(matches!(
            ScalerParams::fit(data.view(), ScalerKind::Standard, ConstantFeature::Reject),
            Err(Error::ZeroVariance(1))
        ));
        let s = ScalerParams::fit(data.view(), ScalerKind::Standard, ConstantFeature::PassThrough).unwrap();
        assert_eq!((s.center[1], s.scale[1]), (3.0, 1.0));
        assert!(ScalerParams::fit(Array2::<f64>::zeros((0, 2)).view(), ScalerKind::Standard, ConstantFeature::Reject).is_err());
    }
}
