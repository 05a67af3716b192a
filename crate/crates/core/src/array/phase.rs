use std::collections::VecDeque;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::angle::BeamPointingAngle;
use super::geometry::ArrayGeometry;
use crate::error::{Error, Result};
use crate::scalar::{wrap_deg, Real};

/// Per-element phases in degrees, each in `(-180, 180]`. The weight on
/// element `n` is the unit phasor `exp(j * phase_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound = "T: Real")]
pub struct PhaseVector<T> {
    phases_deg: Vec<T>,
}

impl<T: Real> PhaseVector<T> {
    /// Wraps every entry into `(-180, 180]`.
    pub fn from_degrees(phases: impl IntoIterator<Item = T>) -> Result<Self> {
        let phases_deg: Vec<T> = phases.into_iter().map(wrap_deg).collect();
        if phases_deg.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite phase".into()));
        }
        Ok(Self { phases_deg })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            phases_deg: vec![T::zero(); n],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.phases_deg.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.phases_deg.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.phases_deg
    }

    /// Unit-modulus complex weights.
    pub fn weights(&self) -> Vec<Complex<T>> {
        self.phases_deg
            .iter()
            .map(|p| Complex::from_polar(T::one(), p.to_radians()))
            .collect()
    }

    pub fn cast<U: Real>(&self) -> PhaseVector<U> {
        PhaseVector {
            phases_deg: self.phases_deg.iter().map(|p| wrap_deg(U::lit(p.as_f64()))).collect(),
        }
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// Unwrapped co-phasing phases `-360 * (P_n / λ) · û`, in degrees.
pub fn mgb_phases_unwrapped<T: Real>(bpa: &BeamPointingAngle<T>, geom: &ArrayGeometry<T>) -> Vec<T> {
    let u = bpa.unit_vector();
    let k = T::lit(-360.0);
    geom.positions()
        .iter()
        .map(|p| k * (p[0] * u[0] + p[1] * u[1] + p[2] * u[2]))
        .collect()
}

/// Maximum-gain phase-only weights steering the main lobe to `bpa`.
pub fn mgb_weights<T: Real>(bpa: &BeamPointingAngle<T>, geom: &ArrayGeometry<T>) -> PhaseVector<T> {
    PhaseVector {
        phases_deg: mgb_phases_unwrapped(bpa, geom).into_iter().map(wrap_deg).collect(),
    }
}

/// Phase step of a `bits`-bit phase shifter, in degrees.
pub fn phase_resolution<T: Real>(bits: u32) -> Result<T> {
    if !(1..=16).contains(&bits) {
        return Err(Error::InvalidArgument(format!(
            "phase shifter bits must be in 1..=16, got {bits}"
        )));
    }
    Ok(T::lit(360.0 / f64::from(1u32 << bits)))
}

/// Rounds every phase to the nearest state of a `bits`-bit phase shifter
/// (`floor(phase / step + 1/2) * step`), then re-wraps.
pub fn quantize_phases<T: Real>(pv: &PhaseVector<T>, bits: u32) -> Result<PhaseVector<T>> {
    let step = phase_resolution::<T>(bits)?;
    let half = T::lit(0.5);
    Ok(PhaseVector {
        phases_deg: pv
            .phases_deg
            .iter()
            .map(|&p| wrap_deg((p / step + half).floor() * step))
            .collect(),
    })
}

/// Recovers a continuous phase field from wrapped phases by walking the
/// nearest-neighbour graph from element 0. Exact whenever neighbouring
/// elements differ by less than 180 degrees, which holds for spacings of at
/// most half a wavelength.
#[derive(Debug, Clone)]
pub struct SpatialUnwrapper {
    /// `(child, parent)` in breadth-first order, excluding the root.
    order: Vec<(usize, usize)>,
    n: usize,
}

impl SpatialUnwrapper {
    pub fn new<T: Real>(geom: &ArrayGeometry<T>) -> Result<Self> {
        let pos = geom.positions();
        let n = pos.len();
        let dist = |a: usize, b: usize| -> f64 {
            (0..3)
                .map(|k| (pos[a][k] - pos[b][k]).as_f64().powi(2))
                .sum::<f64>()
                .sqrt()
        };
        // Link every pair closer than half a wavelength (plus slack).
        let limit = 0.5 + 1e-9;
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n.saturating_sub(1));
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(cur) = queue.pop_front() {
            for next in 0..n {
                if !seen[next] && dist(cur, next) <= limit {
                    seen[next] = true;
                    order.push((next, cur));
                    queue.push_back(next);
                }
            }
        }
        if order.len() + 1 != n {
            return Err(Error::InvalidGeometry(
                "phase unwrapping needs every element within half a wavelength of a neighbour".into(),
            ));
        }
        Ok(Self { order, n })
    }

    pub fn unwrap<T: Real>(&self, wrapped: &[T]) -> Result<Vec<T>> {
        if wrapped.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: wrapped.len(),
            });
        }
        let mut out = vec![T::zero(); self.n];
        out[0] = wrapped[0];
        for &(child, parent) in &self.order {
            out[child] = out[parent] + wrap_deg(wrapped[child] - wrapped[parent]);
        }
        Ok(out)
    }
}
