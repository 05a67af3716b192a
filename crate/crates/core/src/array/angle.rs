use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{wrap_az, Real};

/// Beam pointing angle: azimuth `phi` and polar angle `theta` from the
/// array z-axis, both in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAngle<T>", into = "RawAngle<T>")]
#[serde(bound = "T: Real")]
pub struct BeamPointingAngle<T> {
    az_deg: T,
    el_deg: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct RawAngle<T> {
    az_deg: T,
    el_deg: T,
}

impl<T: Real> TryFrom<RawAngle<T>> for BeamPointingAngle<T> {
    type Error = Error;
    fn try_from(raw: RawAngle<T>) -> Result<Self> {
        Self::new(raw.az_deg, raw.el_deg)
    }
}

impl<T: Real> From<BeamPointingAngle<T>> for RawAngle<T> {
    fn from(a: BeamPointingAngle<T>) -> Self {
        RawAngle {
            az_deg: a.az_deg,
            el_deg: a.el_deg,
        }
    }
}

impl<T: Real> BeamPointingAngle<T> {
    /// Strict constructor: `az` in `[0, 360)`, `el` in `[0, 180]`.
    pub fn new(az_deg: T, el_deg: T) -> Result<Self> {
        if !az_deg.is_finite() || !el_deg.is_finite() {
            return Err(Error::InvalidAngle(format!(
                "non-finite angle ({az_deg}, {el_deg})"
            )));
        }
        if az_deg < T::zero() || az_deg >= T::lit(360.0) {
            return Err(Error::InvalidAngle(format!(
                "azimuth {az_deg} outside [0, 360)"
            )));
        }
        if el_deg < T::zero() || el_deg > T::lit(180.0) {
            return Err(Error::InvalidAngle(format!(
                "elevation {el_deg} outside [0, 180]"
            )));
        }
        Ok(Self { az_deg, el_deg })
    }

    /// Wraps the azimuth into `[0, 360)` before validating.
    pub fn wrapped(az_deg: T, el_deg: T) -> Result<Self> {
        if !az_deg.is_finite() {
            return Err(Error::InvalidAngle(format!("non-finite azimuth {az_deg}")));
        }
        Self::new(wrap_az(az_deg), el_deg)
    }

    #[inline]
    pub fn az_deg(&self) -> T {
        self.az_deg
    }

    #[inline]
    pub fn el_deg(&self) -> T {
        self.el_deg
    }

    /// Unit propagation vector `(sin θ cos φ, sin θ sin φ, cos θ)`.
    pub fn unit_vector(&self) -> [T; 3] {
        unit_vector(self.az_deg, self.el_deg)
    }

    pub fn cast<U: Real>(&self) -> BeamPointingAngle<U> {
        BeamPointingAngle {
            az_deg: U::lit(self.az_deg.as_f64()),
            el_deg: U::lit(self.el_deg.as_f64()),
        }
    }
}

#[inline]
pub(crate) fn unit_vector<T: Real>(az_deg: T, el_deg: T) -> [T; 3] {
    let (sp, cp) = az_deg.to_radians().sin_cos();
    let (st, ct) = el_deg.to_radians().sin_cos();
    [st * cp, st * sp, ct]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_domain() {
        assert!(BeamPointingAngle::new(f64::NAN, 10.0).is_err());
        assert!(BeamPointingAngle::new(10.0, f64::INFINITY).is_err());
        assert!(BeamPointingAngle::new(360.0, 10.0).is_err());
        assert!(BeamPointingAngle::new(-0.5, 10.0).is_err());
        assert!(BeamPointingAngle::new(10.0, 180.5).is_err());
        assert!(BeamPointingAngle::new(0.0_f64, 180.0).is_ok());
        let w = BeamPointingAngle::wrapped(-30.0_f64, 20.0).unwrap();
        assert_eq!(w.az_deg(), 330.0);
    }

    #[test]
    fn serde_validates() {
        let ok: BeamPointingAngle<f64> =
            serde_json::from_str(r#"{"az_deg": 12.5, "el_deg": 91.0}"#).unwrap();
        assert_eq!(ok.el_deg(), 91.0);
        let bad = serde_json::from_str::<BeamPointingAngle<f64>>(r#"{"az_deg": 12.5, "el_deg": 191.0}"#);
        assert!(bad.is_err());
    }
}
