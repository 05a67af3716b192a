use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::{snake_unchecked, tanh, Activation};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Layer widths, hidden activations and batch-norm placement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// Input, hidden..., output widths.
    pub layer_dims: Vec<usize>,
    /// One per hidden layer.
    pub activations: Vec<Activation>,
    /// One per hidden layer; normalization sits between the dense transform
    /// and the activation.
    pub batch_norm: Vec<bool>,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self {
            layer_dims: vec![2, 32, 300, 600, 64],
            activations: vec![Activation::Snake, Activation::Snake, Activation::Tsigmoid],
            batch_norm: vec![false, true, true],
        }
    }
}

impl MlpSpec {
    pub fn hidden_layers(&self) -> usize {
        self.layer_dims.len().saturating_sub(2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 || self.layer_dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "bad layer dims {:?}",
                self.layer_dims
            )));
        }
        let h = self.hidden_layers();
        if self.activations.len() != h || self.batch_norm.len() != h {
            return Err(Error::InvalidArgument(format!(
                "{h} hidden layers need {h} activations and batch-norm flags"
            )));
        }
        Ok(())
    }

    pub fn without_batch_norm(mut self) -> Self {
        self.batch_norm.iter_mut().for_each(|b| *b = false);
        self
    }
}

/// Fully connected layer `y = x W + b`, `W` stored `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Array1<T>,
    pub beta: Array1<T>,
    pub running_mean: Array1<T>,
    pub running_var: Array1<T>,
    pub eps: T,
    pub momentum: T,
}

impl<T: Real> BatchNorm<T> {
    fn new(width: usize) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            eps: T::lit(1e-5),
            momentum: T::lit(0.1),
        }
    }
}

/// Feed-forward regressor with optional batch normalization and trainable
/// snake frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    pub(crate) spec: MlpSpec,
    pub(crate) dense: Vec<Dense<T>>,
    pub(crate) norms: Vec<Option<BatchNorm<T>>>,
    /// `Some(a)` for snake layers.
    pub(crate) snake_a: Vec<Option<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in the normalization layers.
    Train,
    /// Running statistics; rows are processed independently.
    Infer,
}

/// Intermediates of a train-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// Input of every dense layer.
    inputs: Vec<Array2<T>>,
    hidden: Vec<HiddenCache<T>>,
    pub output: Array2<T>,
}

#[derive(Debug, Clone)]
struct HiddenCache<T> {
    /// Activation input (after normalization when present), kept for snake
    /// layers.
    pre: Option<Array2<T>>,
    norm: Option<NormCache<T>>,
}

#[derive(Debug, Clone)]
struct NormCache<T> {
    x_hat: Array2<T>,
    inv_std: Array1<T>,
    mean: Array1<T>,
    var: Array1<T>,
}

/// Loss gradients, shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub dense: Vec<Dense<T>>,
    /// `(d gamma, d beta)` per normalized layer.
    pub norms: Vec<Option<(Array1<T>, Array1<T>)>>,
    pub snake_a: Vec<Option<T>>,
}

impl<T: Real> Gradients<T> {
    /// Flat views in [`MlpModel::params_mut`] order.
    pub fn slices(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for l in 0..self.dense.len() {
            out.push(self.dense[l].weight.as_slice().expect("standard layout"));
            out.push(self.dense[l].bias.as_slice().expect("standard layout"));
            if l < self.norms.len() {
                if let Some((g, b)) = &self.norms[l] {
                    out.push(g.as_slice().expect("standard layout"));
                    out.push(b.as_slice().expect("standard layout"));
                }
                if let Some(a) = &self.snake_a[l] {
                    out.push(std::slice::from_ref(a));
                }
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Mean squared error over every entry.
pub fn mse_loss<T: Real>(pred: ArrayView2<'_, T>, target: ArrayView2<'_, T>) -> T {
    let n = T::from_usize(pred.len()).expect("size fits");
    Zip::from(&pred)
        .and(&target)
        .fold(T::zero(), |acc, &p, &t| acc + (p - t) * (p - t))
        / n
}

impl<T: Real> MlpModel<T> {
    /// Uniform `±1/sqrt(fan_in)` initialization from a seeded generator.
    pub fn new(spec: MlpSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = spec
            .layer_dims
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let mut draw = || T::lit(rng.random_range(-bound..bound));
                let weight = Array2::from_shape_simple_fn((w[0], w[1]), &mut draw);
                let bias = Array1::from_shape_simple_fn(w[1], &mut draw);
                Dense { weight, bias }
            })
            .collect();
        let norms = spec
            .batch_norm
            .iter()
            .enumerate()
            .map(|(l, &on)| on.then(|| BatchNorm::new(spec.layer_dims[l + 1])))
            .collect();
        let snake_a = spec
            .activations
            .iter()
            .map(|a| (*a == Activation::Snake).then_some(T::one()))
            .collect();
        Ok(Self {
            spec,
            dense,
            norms,
            snake_a,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn input_width(&self) -> usize {
        self.spec.layer_dims[0]
    }

    pub fn output_width(&self) -> usize {
        *self.spec.layer_dims.last().expect("validated")
    }

    pub fn dense(&self) -> &[Dense<T>] {
        &self.dense
    }

    pub fn dense_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.dense
    }

    pub fn norms(&self) -> &[Option<BatchNorm<T>>] {
        &self.norms
    }

    pub fn norms_mut(&mut self) -> &mut [Option<BatchNorm<T>>] {
        &mut self.norms
    }

    pub fn snake_frequencies(&self) -> &[Option<T>] {
        &self.snake_a
    }

    /// Mutable flat views of every trainable parameter: per layer the
    /// weights and bias, then for hidden layers the normalization scale and
    /// shift and the snake frequency, when present.
    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        let hidden = self.norms.len();
        let mut norms = self.norms.iter_mut();
        let mut snakes = self.snake_a.iter_mut();
        for (l, d) in self.dense.iter_mut().enumerate() {
            out.push(d.weight.as_slice_mut().expect("standard layout"));
            out.push(d.bias.as_slice_mut().expect("standard layout"));
            if l < hidden {
                if let Some(Some(bn)) = norms.next() {
                    out.push(bn.gamma.as_slice_mut().expect("standard layout"));
                    out.push(bn.beta.as_slice_mut().expect("standard layout"));
                }
                if let Some(Some(a)) = snakes.next() {
                    out.push(std::slice::from_mut(a));
                }
            }
        }
        out
    }

    pub fn parameter_count(&mut self) -> usize {
        self.params_mut().iter().map(|s| s.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        let mut copy = self.clone();
        let params_ok = copy.params_mut().iter().all(|s| s.iter().all(|v| v.is_finite()));
        params_ok
            && self.norms.iter().flatten().all(|bn| {
                bn.running_mean.iter().all(|v| v.is_finite())
                    && bn.running_var.iter().all(|v| v.is_finite() && *v > T::zero())
            })
    }

    fn check_input(&self, x: &ArrayView2<'_, T>) -> Result<()> {
        if x.ncols() != self.input_width() {
            return Err(Error::DimensionMismatch {
                expected: self.input_width(),
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    /// Deterministic inference; every row is independent of the others.
    pub fn predict(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        self.check_input(&x)?;
        let hidden = self.spec.hidden_layers();
        let mut h = x.to_owned();
        for l in 0..hidden {
            let mut z = self.affine(l, h.view());
            if let Some(bn) = &self.norms[l] {
                let scale = Zip::from(&bn.gamma)
                    .and(&bn.running_var)
                    .map_collect(|&g, &v| g / (v + bn.eps).sqrt());
                let shift = Zip::from(&bn.beta)
                    .and(&bn.running_mean)
                    .and(&scale)
                    .map_collect(|&b, &m, &s| b - m * s);
                Zip::from(z.rows_mut()).for_each(|mut row| {
                    Zip::from(&mut row).and(&scale).and(&shift).for_each(|v, &s, &b| *v = *v * s + b)
                });
            }
            self.activate_in_place(l, &mut z);
            h = z;
        }
        Ok(self.affine(hidden, h.view()))
    }

    /// Forward pass with batch statistics, keeping what backprop needs.
    pub fn forward_train(&self, x: ArrayView2<'_, T>) -> Result<ForwardCache<T>> {
        self.check_input(&x)?;
        let hidden = self.spec.hidden_layers();
        let mut inputs = Vec::with_capacity(hidden + 1);
        let mut caches = Vec::with_capacity(hidden);
        let mut h = x.to_owned();
        for l in 0..hidden {
            let mut z = self.affine(l, h.view());
            let norm = match &self.norms[l] {
                Some(bn) => Some(batch_norm_train(bn, &mut z)),
                None => None,
            };
            // snake backward needs its input; tanh uses its output instead
            let pre = match self.spec.activations[l] {
                Activation::Snake => Some(z.clone()),
                Activation::Tsigmoid => None,
            };
            self.activate_in_place(l, &mut z);
            inputs.push(h);
            caches.push(HiddenCache { pre, norm });
            h = z;
        }
        let output = self.affine(hidden, h.view());
        inputs.push(h);
        Ok(ForwardCache {
            inputs,
            hidden: caches,
            output,
        })
    }

    /// Folds the batch statistics of a train-mode pass into the running
    /// estimates (unbiased variance, exponential moving average).
    pub fn update_running_stats(&mut self, cache: &ForwardCache<T>) {
        let rows = cache.output.nrows();
        let correction = if rows > 1 {
            T::from_usize(rows).expect("fits") / T::from_usize(rows - 1).expect("fits")
        } else {
            T::one()
        };
        for (bn, hc) in self.norms.iter_mut().zip(&cache.hidden) {
            if let (Some(bn), Some(nc)) = (bn.as_mut(), hc.norm.as_ref()) {
                let m = bn.momentum;
                let keep = T::one() - m;
                Zip::from(&mut bn.running_mean)
                    .and(&nc.mean)
                    .for_each(|r, &b| *r = keep * *r + m * b);
                Zip::from(&mut bn.running_var)
                    .and(&nc.var)
                    .for_each(|r, &b| *r = keep * *r + m * b * correction);
            }
        }
    }

    /// Gradients of `mse_loss(cache.output, target)` with respect to every
    /// parameter.
    pub fn backward(&self, cache: &ForwardCache<T>, target: ArrayView2<'_, T>) -> Result<Gradients<T>> {
        if cache.output.dim() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: cache.output.len(),
                actual: target.len(),
            });
        }
        if cache.inputs.len() != self.dense.len() {
            return Err(Error::MissingCache);
        }
        let scale = T::lit(2.0) / T::from_usize(target.len()).expect("fits");
        let mut delta = Zip::from(&cache.output)
            .and(&target)
            .map_collect(|&p, &t| (p - t) * scale);

        let hidden = self.spec.hidden_layers();
        let mut dense_grads: Vec<Option<Dense<T>>> = vec![None; self.dense.len()];
        let mut norm_grads = vec![None; hidden];
        let mut snake_grads = vec![None; hidden];

        for l in (0..=hidden).rev() {
            if l < hidden {
                // delta currently holds dL/d(activation output) of layer l
                let hc = &cache.hidden[l];
                match self.spec.activations[l] {
                    Activation::Snake => {
                        let a = self.snake_a[l].expect("snake layer has a frequency");
                        let mut da = T::zero();
                        let (two, inv_a) = (T::lit(2.0), T::one() / a);
                        let pre = hc.pre.as_ref().ok_or(Error::MissingCache)?;
                        Zip::from(&mut delta).and(pre).for_each(|d, &s| {
                            let (sn, cs) = (a * s).sin_cos();
                            let sin2 = two * sn * cs;
                            // same as snake_da / snake_unchecked, one sin_cos
                            da += *d * (sin2 * s - sn * sn * inv_a) * inv_a;
                            *d *= T::one() + sin2;
                        });
                        snake_grads[l] = Some(da);
                    }
                    Activation::Tsigmoid => {
                        // the activation output is the next layer's input
                        Zip::from(&mut delta).and(&cache.inputs[l + 1]).for_each(|d, &y| {
                            *d *= T::one() - y * y;
                        });
                    }
                }
                if let (Some(bn), Some(nc)) = (&self.norms[l], &hc.norm) {
                    let (dg, db) = batch_norm_backward(bn, nc, &mut delta);
                    norm_grads[l] = Some((dg, db));
                }
            }
            let input = &cache.inputs[l];
            let weight = input.t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            if l > 0 {
                let next = delta.dot(&self.dense[l].weight.t());
                dense_grads[l] = Some(Dense { weight, bias });
                delta = next;
            } else {
                dense_grads[l] = Some(Dense { weight, bias });
            }
        }
        Ok(Gradients {
            dense: dense_grads.into_iter().map(|d| d.expect("every layer visited")).collect(),
            norms: norm_grads,
            snake_a: snake_grads,
        })
    }

    fn affine(&self, l: usize, x: ArrayView2<'_, T>) -> Array2<T> {
        let d = &self.dense[l];
        let mut z = x.dot(&d.weight);
        z += &d.bias;
        z
    }

    fn activate_in_place(&self, l: usize, z: &mut Array2<T>) {
        match self.spec.activations[l] {
            Activation::Snake => {
                let a = self.snake_a[l].expect("snake layer has a frequency");
                z.mapv_inplace(|v| snake_unchecked(v, a).0);
            }
            Activation::Tsigmoid => z.mapv_inplace(tanh),
        }
    }
}

/// Normalizes `z` in place with its own column statistics.
fn batch_norm_train<T: Real>(bn: &BatchNorm<T>, z: &mut Array2<T>) -> NormCache<T> {
    let rows = T::from_usize(z.nrows()).expect("fits");
    let mean = z.sum_axis(Axis(0)) / rows;
    let mut var = Array1::zeros(z.ncols());
    for row in z.rows() {
        Zip::from(&mut var).and(&row).and(&mean).for_each(|v, &x, &m| *v += (x - m) * (x - m));
    }
    var /= rows;
    let inv_std = var.mapv(|v| T::one() / (v + bn.eps).sqrt());
    let mut x_hat = z.clone();
    Zip::from(x_hat.rows_mut()).and(z.rows_mut()).for_each(|mut xh, mut out| {
        Zip::from(&mut xh)
            .and(&mut out)
            .and(&mean)
            .and(&inv_std)
            .for_each(|xh, o, &m, &is| {
                *xh = (*xh - m) * is;
                *o = *xh;
            });
        Zip::from(&mut out)
            .and(&bn.gamma)
            .and(&bn.beta)
            .for_each(|o, &g, &b| *o = *o * g + b);
    });
    NormCache {
        x_hat,
        inv_std,
        mean,
        var,
    }
}

/// Replaces `delta` (dL/d output) with dL/d input; returns (d gamma, d beta).
fn batch_norm_backward<T: Real>(
    bn: &BatchNorm<T>,
    nc: &NormCache<T>,
    delta: &mut Array2<T>,
) -> (Array1<T>, Array1<T>) {
    let rows = T::from_usize(delta.nrows()).expect("fits");
    let width = delta.ncols();
    let mut dgamma = Array1::zeros(width);
    let dbeta = delta.sum_axis(Axis(0));
    for (d, xh) in delta.rows().into_iter().zip(nc.x_hat.rows()) {
        Zip::from(&mut dgamma).and(&d).and(&xh).for_each(|g, &d, &x| *g += d * x);
    }
    // with dx_hat = delta * gamma:
    // dz = inv_std / B * (B dx_hat - sum(dx_hat) - x_hat * sum(dx_hat x_hat))
    let sum_dxh = &dbeta * &bn.gamma;
    let sum_dxh_xh = &dgamma * &bn.gamma;
    Zip::from(delta.rows_mut()).and(nc.x_hat.rows()).for_each(|mut d, xh| {
        Zip::from(&mut d)
            .and(&xh)
            .and(&bn.gamma)
            .and(&nc.inv_std)
            .and(&sum_dxh)
            .and(&sum_dxh_xh)
            .for_each(|d, &x, &g, &is, &s1, &s2| {
                *d = is / rows * (rows * *d * g - s1 - x * s2);
            });
    });
    (dgamma, dbeta)
}
