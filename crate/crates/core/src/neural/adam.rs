use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.0005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Real> AdamState<T> {
    /// Zero moments shaped like `shapes` (lengths of the flat tensors).
    pub fn zeros(shapes: impl IntoIterator<Item = usize>) -> Self {
        let (m, v) = shapes
            .into_iter()
            .map(|n| (vec![T::zero(); n], vec![T::zero(); n]))
            .unzip();
        Self { m, v }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step<T: Real>(
    params: &mut [&mut [T]],
    grads: &[&[T]],
    state: &mut AdamState<T>,
    t: u64,
    hp: &AdamParams,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() || state.m.len() != state.v.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            actual: grads.len().min(state.m.len()),
        });
    }
    if t == 0 {
        return Err(Error::InvalidArgument("adam step index starts at 1".into()));
    }
    let t = i32::try_from(t).unwrap_or(i32::MAX);
    let (b1, b2) = (T::lit(hp.beta1), T::lit(hp.beta2));
    let (c1, c2) = (T::one() - b1, T::one() - b2);
    let bias1 = T::one() - b1.powi(t);
    let bias2 = T::one() - b2.powi(t);
    let lr = T::lit(hp.learning_rate);
    let eps = T::lit(hp.epsilon);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        if p.len() != g.len() || p.len() != m.len() || p.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                actual: g.len(),
            });
        }
        for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + c1 * g;
            *v = b2 * *v + c2 * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![1.5_f64, -2.0];
        let g = vec![0.0, 0.0];
        let mut st = AdamState::zeros([2]);
        adam_step(&mut [&mut p[..]], &[&g[..]], &mut st, 1, &AdamParams::default()).unwrap();
        assert_eq!(p, vec![1.5, -2.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let hp = AdamParams::default();
        let mut p = vec![0.0_f64];
        let mut st = AdamState::zeros([1]);
        adam_step(&mut [&mut p[..]], &[&[1.0][..]], &mut st, 1, &hp).unwrap();
        // m_hat = 1, v_hat = 1 -> delta = -lr / (1 + eps)
        assert!((p[0] + 0.0005).abs() < 1e-11, "{}", p[0]);
        let mut q = vec![0.0_f64];
        let mut st = AdamState::zeros([1]);
        adam_step(&mut [&mut q[..]], &[&[-3.0][..]], &mut st, 1, &hp).unwrap();
        assert!((q[0] - 0.0005).abs() < 1e-11);
    }

    #[test]
    fn identical_inputs_identical_outputs() {
        let hp = AdamParams::default();
        let run = || {
            let mut p = vec![0.3_f64, 0.7, -1.1];
            let mut st = AdamState::zeros([3]);
            st.m[0] = vec![0.01, 0.02, 0.03];
            st.v[0] = vec![0.1, 0.2, 0.3];
            adam_step(&mut [&mut p[..]], &[&[0.5, -0.2, 0.9][..]], &mut st, 7, &hp).unwrap();
            (p, st)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_errors() {
        let hp = AdamParams::default();
        let mut p = vec![0.0_f64; 2];
        let mut st = AdamState::zeros([3]);
        assert!(adam_step(&mut [&mut p[..]], &[&[1.0, 1.0][..]], &mut st, 1, &hp).is_err());
        let mut st = AdamState::zeros([2]);
        assert!(adam_step(&mut [&mut p[..]], &[&[1.0, 1.0][..]], &mut st, 0, &hp).is_err());
        assert!(adam_step(&mut [&mut p[..]], &[], &mut st, 1, &hp).is_err());
    }
}
