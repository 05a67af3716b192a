//! Beam quality metrics and distribution summaries.

use serde::{Deserialize, Serialize};

use crate::array::{BeamPointingAngle, RadiationPattern};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Great-circle angle between two pointing directions, in degrees.
///
/// Mathematically `acos(cos θa cos θb + sin θa sin θb cos(φa - φb))`, the
/// angle between the two unit vectors. Evaluated as
/// `atan2(|ua × ub|, ua · ub)`, which keeps full precision near 0 and 180
/// degrees where the arccosine loses about half the significant digits.
pub fn central_angle<T: Real>(a: &BeamPointingAngle<T>, b: &BeamPointingAngle<T>) -> T {
    let (ua, ub) = (a.unit_vector(), b.unit_vector());
    let cross = [
        ua[1] * ub[2] - ua[2] * ub[1],
        ua[2] * ub[0] - ua[0] * ub[2],
        ua[0] * ub[1] - ua[1] * ub[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = ua[0] * ub[0] + ua[1] * ub[1] + ua[2] * ub[2];
    sin.atan2(cos).to_degrees()
}

/// Central angle by the clamped arccosine form.
pub fn central_angle_acos<T: Real>(a: &BeamPointingAngle<T>, b: &BeamPointingAngle<T>) -> T {
    let (ta, tb) = (a.el_deg().to_radians(), b.el_deg().to_radians());
    let dphi = (a.az_deg() - b.az_deg()).to_radians();
    let c = ta.cos() * tb.cos() + ta.sin() * tb.sin() * dphi.cos();
    c.max(-T::one()).min(T::one()).acos().to_degrees()
}

/// Normalized inner product of two magnitude patterns, in `[0, 1]`.
pub fn cosine_similarity<T: Real>(f1: &RadiationPattern<T>, f2: &RadiationPattern<T>) -> Result<T> {
    if !std::sync::Arc::ptr_eq(f1.grid(), f2.grid()) && f1.grid() != f2.grid() {
        return Err(Error::GridMismatch);
    }
    cosine_similarity_raw(f1.magnitude(), f2.magnitude())
}

pub(crate) fn cosine_similarity_raw<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch);
    }
    let (mut dot, mut na, mut nb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if !(na > T::zero() && nb > T::zero()) {
        return Err(Error::ZeroPattern);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).max(T::zero()).min(T::one()))
}

/// One evaluated beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub target: BeamPointingAngle<f64>,
    pub achieved: BeamPointingAngle<f64>,
    pub central_angle_deg: f64,
    pub cosine_similarity: f64,
}

/// Linear-interpolation quantiles; `ps` are percentiles in `[0, 100]`.
pub fn quantiles(values: &[f64], ps: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Empty("quantiles of an empty sample"));
    }
    if let Some(p) = ps.iter().find(|p| !(0.0..=100.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("percentile {p} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = sorted.len() - 1;
    Ok(ps
        .iter()
        .map(|p| {
            let h = p / 100.0 * last as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(last);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        })
        .collect())
}

/// Step points `(value, fraction of samples <= value)`, one per distinct value.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Empty("cdf of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    if let Some(last) = out.last_mut() {
        last.1 = 1.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::DirectionGrid;
    use std::sync::Arc;

    fn bpa(az: f64, el: f64) -> BeamPointingAngle<f64> {
        BeamPointingAngle::new(az, el).unwrap()
    }

    #[test]
    fn central_angle_examples() {
        assert_eq!(central_angle(&bpa(12.0, 34.0), &bpa(12.0, 34.0)), 0.0);
        assert!((central_angle(&bpa(0.0, 90.0), &bpa(90.0, 90.0)) - 90.0).abs() < 1e-12);
        assert!((central_angle(&bpa(0.0, 30.0), &bpa(0.0, 150.0)) - 120.0).abs() < 1e-12);
        assert!((central_angle_acos(&bpa(0.0, 30.0), &bpa(0.0, 150.0)) - 120.0).abs() < 1e-12);
        // poles are single points regardless of azimuth
        assert!(central_angle(&bpa(10.0, 0.0), &bpa(200.0, 0.0)) < 1e-12);
    }

    #[test]
    fn both_forms_agree_away_from_degeneracy() {
        let pts = [bpa(0.0, 30.0), bpa(100.0, 77.0), bpa(250.0, 160.0), bpa(359.0, 90.0)];
        for a in &pts {
            for b in &pts {
                let (x, y) = (central_angle(a, b), central_angle_acos(a, b));
                assert!((x - y).abs() < 1e-5, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn cosine_similarity_examples() {
        let grid = Arc::new(DirectionGrid::<f64>::full_sphere(90.0).unwrap());
        let n = grid.len();
        let f1 = RadiationPattern::new(grid.clone(), (0..n).map(|i| i as f64).collect()).unwrap();
        let f2 = RadiationPattern::new(grid.clone(), (0..n).map(|i| 2.5 * i as f64).collect()).unwrap();
        assert!((cosine_similarity(&f1, &f1).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_similarity(&f1, &f2).unwrap() - 1.0).abs() < 1e-15);
        let a = RadiationPattern::new(grid.clone(), (0..n).map(|i| (i % 2) as f64).collect()).unwrap();
        let b = RadiationPattern::new(grid.clone(), (0..n).map(|i| ((i + 1) % 2) as f64).collect()).unwrap();
        assert_eq!(cosine_similarity(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn cosine_similarity_errors() {
        let g1 = Arc::new(DirectionGrid::<f64>::full_sphere(90.0).unwrap());
        let g2 = Arc::new(DirectionGrid::<f64>::full_sphere(45.0).unwrap());
        let a = RadiationPattern::new(g1.clone(), vec![1.0; g1.len()]).unwrap();
        let b = RadiationPattern::new(g2.clone(), vec![1.0; g2.len()]).unwrap();
        assert!(matches!(cosine_similarity(&a, &b), Err(Error::GridMismatch)));
        let z = RadiationPattern::new(g1.clone(), vec![0.0; g1.len()]).unwrap();
        assert!(matches!(cosine_similarity(&a, &z), Err(Error::ZeroPattern)));
        // equal grids built separately still compare
        let g3 = Arc::new(DirectionGrid::<f64>::full_sphere(90.0).unwrap());
        let c = RadiationPattern::new(g3.clone(), vec![2.0; g3.len()]).unwrap();
        assert!(cosine_similarity(&a, &c).is_ok());
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantiles(&[1.0, 2.0, 3.0, 4.0], &[50.0]).unwrap(), vec![2.5]);
        assert_eq!(quantiles(&[7.0; 5], &[0.0, 25.0, 95.0, 100.0]).unwrap(), vec![7.0; 4]);
        assert_eq!(quantiles(&[3.0, 1.0, 2.0], &[0.0, 100.0]).unwrap(), vec![1.0, 3.0]);
        assert!(quantiles(&[], &[50.0]).is_err());
        assert!(quantiles(&[1.0], &[101.0]).is_err());
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(empirical_cdf(&[5.0]).unwrap(), vec![(5.0, 1.0)]);
        assert_eq!(
            empirical_cdf(&[1.0, 1.0, 2.0]).unwrap(),
            vec![(1.0, 2.0 / 3.0), (2.0, 1.0)]
        );
        assert!(empirical_cdf(&[]).is_err());
    }
}
