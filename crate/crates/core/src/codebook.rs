//! 802.15.3c-style beam-steering codebooks for uniform rectangular arrays.
//!
//! A linear codebook of size `K` assigns element `n` of beam `k` the phase
//! `(360 / 2^b) * ceil(n * mod(k - 1 + K/2, K) / (K / 2^b))`. Planar
//! codebooks are the separable product of one linear codebook per array axis.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::{ArrayGeometry, BeamPointingAngle, PeakFinder, PhaseVector, PlanarSpec};
use crate::error::{Error, Result};
use crate::metrics::central_angle;
use crate::scalar::{wrap_deg, Real};

/// Phase in degrees of element `n` in beam `k` of a `size`-beam linear
/// codebook built for a `bits`-bit phase shifter.
pub fn linear_codeword_phase(n: usize, k: usize, size: usize, bits: u32) -> Result<f64> {
    if size == 0 || !size.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "codebook size {size} is not a power of two"
        )));
    }
    if k >= size {
        return Err(Error::InvalidArgument(format!("beam {k} out of range for size {size}")));
    }
    if !(1..=16).contains(&bits) {
        return Err(Error::InvalidArgument(format!("bits {bits} outside 1..=16")));
    }
    // k - 1 + K/2, normalized into [0, K)
    let m = (k as i128 - 1 + (size / 2) as i128).rem_euclid(size as i128);
    let states = 1i128 << bits;
    // n * m / (K / 2^b) = n * m * 2^b / K, rounded up in exact integer math.
    let num = n as i128 * m * states;
    let idx = (num + size as i128 - 1).div_euclid(size as i128);
    let step = 360.0 / states as f64;
    Ok(wrap_deg(step * idx.rem_euclid(states) as f64))
}

/// A fixed set of beams, optionally calibrated to their measured peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Codebook<T> {
    #[serde(rename = "K")]
    size: usize,
    bits: u32,
    geometry: PlanarSpec,
    codewords: Vec<PhaseVector<T>>,
    calibrated_bpas: Option<Vec<BeamPointingAngle<T>>>,
    #[serde(default)]
    calibration_step: Option<f64>,
}

/// Separable planar codebook with `size` beams in row-major `(k_x, k_y)`
/// order. `size` must be the square of a power of two.
pub fn build_planar_codebook<T: Real>(
    geom: &ArrayGeometry<T>,
    size: usize,
    bits: u32,
) -> Result<Codebook<T>> {
    let spec = *geom.planar_spec().ok_or_else(|| {
        Error::InvalidGeometry("codebooks need a rectangular planar array".into())
    })?;
    let axis = (size as f64).sqrt().round() as usize;
    if axis * axis != size || !axis.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "codebook size {size} is not the square of a power of two"
        )));
    }
    // column phase table x[k_x][c] and row phase table y[k_y][r]
    let table = |len: usize| -> Result<Vec<Vec<f64>>> {
        (0..axis)
            .map(|k| (0..len).map(|n| linear_codeword_phase(n, k, axis, bits)).collect())
            .collect()
    };
    let x = table(spec.cols)?;
    let y = table(spec.rows)?;
    let mut codewords = Vec::with_capacity(size);
    for xk in &x {
        for yk in &y {
            let phases = (0..spec.rows)
                .flat_map(|r| (0..spec.cols).map(move |c| T::lit(xk[c] + yk[r])));
            codewords.push(PhaseVector::from_degrees(phases)?);
        }
    }
    Ok(Codebook {
        size,
        bits,
        geometry: spec,
        codewords,
        calibrated_bpas: None,
        calibration_step: None,
    })
}

impl<T: Real> Codebook<T> {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn geometry_spec(&self) -> &PlanarSpec {
        &self.geometry
    }

    pub fn geometry(&self) -> Result<ArrayGeometry<T>> {
        ArrayGeometry::planar(self.geometry)
    }

    pub fn codewords(&self) -> &[PhaseVector<T>] {
        &self.codewords
    }

    pub fn codeword(&self, k: usize) -> &PhaseVector<T> {
        &self.codewords[k]
    }

    pub fn calibrated_bpas(&self) -> Option<&[BeamPointingAngle<T>]> {
        self.calibrated_bpas.as_deref()
    }

    pub fn calibration_step(&self) -> Option<f64> {
        self.calibration_step
    }

    /// Index of the calibrated beam closest to `target` in central angle;
    /// ties resolve to the lowest index.
    pub fn nearest(&self, target: &BeamPointingAngle<T>) -> Result<usize> {
        let bpas = self.calibrated_bpas.as_ref().ok_or(Error::Uncalibrated)?;
        let mut best = (0, T::infinity());
        for (k, b) in bpas.iter().enumerate() {
            let d = central_angle(b, target);
            if d < best.1 {
                best = (k, d);
            }
        }
        Ok(best.0)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cb: Self = serde_json::from_str(&text)?;
        cb.validate()?;
        Ok(cb)
    }

    fn validate(&self) -> Result<()> {
        let n = self.geometry.rows * self.geometry.cols;
        if self.codewords.len() != self.size || self.size == 0 {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                actual: self.codewords.len(),
            });
        }
        for cw in &self.codewords {
            cw.check_len(n)?;
        }
        if let Some(b) = &self.calibrated_bpas {
            if b.len() != self.size {
                return Err(Error::DimensionMismatch {
                    expected: self.size,
                    actual: b.len(),
                });
            }
        }
        Ok(())
    }
}

/// Measures each codeword's actual beam peak.
pub fn calibrate_codebook<T: Real>(
    cb: &Codebook<T>,
    geom: &ArrayGeometry<T>,
    coarse_step: f64,
) -> Result<Codebook<T>> {
    let finder = PeakFinder::new(geom, coarse_step)?;
    calibrate_with(cb, &finder)
}

/// [`calibrate_codebook`] with a prebuilt peak finder.
pub fn calibrate_with<T: Real>(cb: &Codebook<T>, finder: &PeakFinder<T>) -> Result<Codebook<T>> {
    let refs: Vec<&PhaseVector<T>> = cb.codewords.iter().collect();
    let bpas = finder.find_batch(&refs)?;
    Ok(Codebook {
        calibrated_bpas: Some(bpas),
        calibration_step: Some(finder.coarse_step()),
        ..cb.clone()
    })
}

/// Index of the calibrated beam closest to `target`.
pub fn nearest_codeword<T: Real>(cb: &Codebook<T>, target: &BeamPointingAngle<T>) -> Result<usize> {
    cb.nearest(target)
}
