use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Regular `(theta, phi)` sampling of a region of the sphere.
///
/// Samples are ordered row-major in theta then phi; sample `i` sits at
/// `theta[i / n_phi]`, `phi[i % n_phi]`. Every sample carries the solid angle
/// `sin θ · Δθ · Δφ` it represents.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionGrid<T> {
    step_deg: T,
    theta_deg: Vec<T>,
    phi_deg: Vec<T>,
    weights: Vec<T>,
}

/// Serializable summary of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub step_deg: f64,
    pub theta_range: [f64; 2],
    pub phi_range: [f64; 2],
    pub samples: usize,
}

fn steps_in(span: f64, step: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!("grid step {step} must be positive")));
    }
    let n = (span / step).round();
    if (n * step - span).abs() > 1e-9 * span.max(1.0) || n < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "grid step {step} does not evenly divide {span}"
        )));
    }
    Ok(n as usize)
}

impl<T: Real> DirectionGrid<T> {
    /// Full sphere: theta in `[0, 180]` inclusive, phi in `[0, 360)`.
    pub fn full_sphere(step_deg: f64) -> Result<Self> {
        let n_theta = steps_in(180.0, step_deg)? + 1;
        let n_phi = steps_in(360.0, step_deg)?;
        let theta: Vec<f64> = (0..n_theta).map(|i| i as f64 * step_deg).collect();
        let phi: Vec<f64> = (0..n_phi).map(|i| i as f64 * step_deg).collect();
        Ok(Self::from_axes(step_deg, &theta, &phi))
    }

    /// Rectangular region `phi ∈ [phi0, phi1]`, `theta ∈ [theta0, theta1]`,
    /// both inclusive.
    pub fn region(step_deg: f64, phi_range: [f64; 2], theta_range: [f64; 2]) -> Result<Self> {
        let ok = |r: [f64; 2], hi: f64| r[0] >= 0.0 && r[1] <= hi && r[0] < r[1];
        if !ok(theta_range, 180.0) || !ok(phi_range, 360.0) {
            return Err(Error::InvalidArgument(format!(
                "bad grid region phi {phi_range:?} theta {theta_range:?}"
            )));
        }
        let n_theta = steps_in(theta_range[1] - theta_range[0], step_deg)? + 1;
        let mut n_phi = steps_in(phi_range[1] - phi_range[0], step_deg)? + 1;
        if phi_range[1] - phi_range[0] >= 360.0 {
            n_phi -= 1;
        }
        let theta: Vec<f64> = (0..n_theta).map(|i| theta_range[0] + i as f64 * step_deg).collect();
        let phi: Vec<f64> = (0..n_phi).map(|i| phi_range[0] + i as f64 * step_deg).collect();
        Ok(Self::from_axes(step_deg, &theta, &phi))
    }

    fn from_axes(step_deg: f64, theta: &[f64], phi: &[f64]) -> Self {
        let d = step_deg.to_radians();
        let mut weights = Vec::with_capacity(theta.len() * phi.len());
        for t in theta {
            let w = t.to_radians().sin().abs() * d * d;
            weights.extend(std::iter::repeat_n(T::lit(w), phi.len()));
        }
        Self {
            step_deg: T::lit(step_deg),
            theta_deg: theta.iter().map(|&t| T::lit(t)).collect(),
            phi_deg: phi.iter().map(|&p| T::lit(p)).collect(),
            weights,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn step_deg(&self) -> T {
        self.step_deg
    }

    pub fn theta_axis(&self) -> &[T] {
        &self.theta_deg
    }

    pub fn phi_axis(&self) -> &[T] {
        &self.phi_deg
    }

    /// `(phi, theta)` of sample `i`.
    #[inline]
    pub fn direction(&self, i: usize) -> (T, T) {
        let n_phi = self.phi_deg.len();
        (self.phi_deg[i % n_phi], self.theta_deg[i / n_phi])
    }

    pub fn directions(&self) -> impl Iterator<Item = (T, T)> + '_ {
        (0..self.len()).map(|i| self.direction(i))
    }

    pub fn solid_angle_weights(&self) -> &[T] {
        &self.weights
    }

    pub fn descriptor(&self) -> GridDescriptor {
        let f = |v: &[T]| [v[0].as_f64(), v[v.len() - 1].as_f64()];
        GridDescriptor {
            step_deg: self.step_deg.as_f64(),
            theta_range: f(&self.theta_deg),
            phi_range: f(&self.phi_deg),
            samples: self.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn solid_angle_converges_to_full_sphere() {
        for (step, tol) in [(1.0, 0.01), (2.0, 0.01), (10.0, 0.05)] {
            let g = DirectionGrid::<f64>::full_sphere(step).unwrap();
            let total: f64 = g.solid_angle_weights().iter().sum();
            assert!((total / (4.0 * PI) - 1.0).abs() < tol, "step {step}: {total}");
        }
    }

    #[test]
    fn ordering_is_theta_major() {
        let g = DirectionGrid::<f64>::full_sphere(90.0).unwrap();
        let dirs: Vec<_> = g.directions().collect();
        assert_eq!(dirs.len(), 3 * 4);
        assert_eq!(dirs[0], (0.0, 0.0));
        assert_eq!(dirs[1], (90.0, 0.0));
        assert_eq!(dirs[4], (0.0, 90.0));
    }

    #[test]
    fn rejects_uneven_steps() {
        assert!(DirectionGrid::<f64>::full_sphere(7.0).is_err());
        assert!(DirectionGrid::<f64>::full_sphere(0.0).is_err());
        assert!(DirectionGrid::<f64>::full_sphere(0.1).is_ok());
    }

    #[test]
    fn sector_region() {
        let g = DirectionGrid::<f64>::region(2.0, [0.0, 120.0], [30.0, 150.0]).unwrap();
        assert_eq!(g.phi_axis().len(), 61);
        assert_eq!(g.theta_axis().len(), 61);
        assert_eq!(g.descriptor().theta_range, [30.0, 150.0]);
    }
}
