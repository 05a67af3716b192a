use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    /// `x + sin²(a x) / a` with a trainable frequency `a`.
    Snake,
    /// Hyperbolic tangent.
    Tsigmoid,
}

/// Snake value and derivative `dy/dx = 1 + sin(2 a x)`.
pub fn snake_activation<T: Real>(x: T, a: T) -> Result<(T, T)> {
    if !(a > T::zero()) {
        return Err(Error::InvalidArgument(format!("snake frequency {a} must be positive")));
    }
    Ok(snake_unchecked(x, a))
}

#[inline]
pub(crate) fn snake_unchecked<T: Real>(x: T, a: T) -> (T, T) {
    let (s, c) = (a * x).sin_cos();
    (x + s * s / a, T::one() + T::lit(2.0) * s * c)
}

/// `dy/da = x sin(2 a x) / a - sin²(a x) / a²`.
#[cfg(test)]
pub(crate) fn snake_da<T: Real>(x: T, a: T) -> T {
    let (s, c) = (a * x).sin_cos();
    (T::lit(2.0) * s * c * x) / a - s * s / (a * a)
}

/// `tanh` value and derivative `1 - y²`.
#[inline]
pub fn tsigmoid_activation<T: Real>(x: T) -> (T, T) {
    let y = tanh(x);
    (y, T::one() - y * y)
}

/// `tanh` through `exp`; several times faster than the libm routine for
/// `f32`, within a few ulps of it in absolute terms.
#[inline]
pub(crate) fn tanh<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax < T::lit(1e-4) {
        return x - x * x * x / T::lit(3.0);
    }
    let e = (T::lit(-2.0) * ax).exp();
    ((T::one() - e) / (T::one() + e)).copysign(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
    }

    #[test]
    fn tanh_matches_libm() {
        for i in -4000..=4000 {
            let x = i as f64 * 0.01;
            assert!((tanh(x) - x.tanh()).abs() <= 4.0 * f64::EPSILON, "{x}");
            let xf = x as f32;
            assert!((tanh(xf) - xf.tanh()).abs() <= 4.0 * f32::EPSILON, "{x}");
        }
        assert_eq!(tanh(0.0_f64), 0.0);
        assert!((tanh(1e-9_f64) - 1e-9).abs() < 1e-24);
        assert_eq!(tanh(1e3_f64), 1.0);
        assert_eq!(tanh(-1e3_f32), -1.0);
    }

    #[test]
    fn snake_values() {
        assert_eq!(snake_activation(0.0_f64, 1.0).unwrap(), (0.0, 1.0));
        let (y, _) = snake_activation(FRAC_PI_2, 1.0).unwrap();
        assert!((y - (FRAC_PI_2 + 1.0)).abs() < 1e-12);
        assert!((y - 2.5708).abs() < 1e-4);
        assert!(snake_activation(1.0_f64, 0.0).is_err());
        assert!(snake_activation(1.0_f64, -2.0).is_err());
    }

    #[test]
    fn snake_derivatives_match_central_differences() {
        let h = 1e-6;
        for a in [0.5, 1.0, 2.3] {
            for i in 0..=60 {
                let x = -3.0 + 0.1 * i as f64;
                let (_, d) = snake_activation(x, a).unwrap();
                let fd = (snake_unchecked(x + h, a).0 - snake_unchecked(x - h, a).0) / (2.0 * h);
                assert!(rel(d, fd) < 1e-6 || (d - fd).abs() < 1e-9, "x {x} a {a}: {d} vs {fd}");
                let fa = (snake_unchecked(x, a + h).0 - snake_unchecked(x, a - h).0) / (2.0 * h);
                let da = snake_da(x, a);
                assert!(rel(da, fa) < 1e-6 || (da - fa).abs() < 1e-9, "x {x} a {a}: {da} vs {fa}");
            }
        }
    }

    #[test]
    fn tsigmoid_values_and_derivative() {
        assert_eq!(tsigmoid_activation(0.0_f64).0, 0.0);
        assert!(tsigmoid_activation(30.0_f64).0 <= 1.0);
        assert!(tsigmoid_activation(5.0_f64).0 < 1.0);
        assert!(tsigmoid_activation(-5.0_f64).0 > -1.0);
        assert!((tsigmoid_activation(-40.0_f64).0 + 1.0).abs() < 1e-15);
        let h = 1e-6;
        for i in 0..=60 {
            let x = -3.0 + 0.1 * i as f64;
            let d = tsigmoid_activation(x).1;
            let fd = (tsigmoid_activation(x + h).0 - tsigmoid_activation(x - h).0) / (2.0 * h);
            assert!(rel(d, fd) < 1e-6, "x {x}: {d} vs {fd}");
        }
    }
}
