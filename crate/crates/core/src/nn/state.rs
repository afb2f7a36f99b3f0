use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::layer::{LayerSpec, NetworkSpec};
use super::matrix::Matrix;
use crate::{Error, Result};

pub const BATCHNORM_EPSILON: f64 = 1e-5;
pub const BATCHNORM_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNormParams {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: BATCHNORM_MOMENTUM,
            epsilon: BATCHNORM_EPSILON,
        }
    }

    /// Exponential moving average: `new = momentum * old + (1 - momentum) * batch`.
    pub fn absorb(&mut self, batch_mean: &[f64], batch_var: &[f64]) {
        let m = self.momentum;
        for (r, b) in self.running_mean.iter_mut().zip(batch_mean) {
            *r = m * *r + (1.0 - m) * b;
        }
        for (r, b) in self.running_var.iter_mut().zip(batch_var) {
            *r = (m * *r + (1.0 - m) * b).max(0.0);
        }
    }
}

/// Learned parameters of one layer. Parameter-free layers hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    None,
    /// `weights` is `input_dim x output_dim`.
    Dense {
        weights: Matrix,
        bias: Vec<f64>,
    },
    BatchNorm(BatchNormParams),
}

/// Parameters for every layer of a [`NetworkSpec`], index-aligned with it.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub layers: Vec<LayerParams>,
}

impl NetworkState {
    /// Glorot-uniform dense weights, zero biases, identity batchnorm.
    pub fn init<R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> Self {
        let layers = spec
            .layers()
            .iter()
            .map(|layer| match *layer {
                LayerSpec::Dense {
                    input_dim,
                    output_dim,
                } => {
                    let limit = (6.0 / (input_dim + output_dim) as f64).sqrt();
                    let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
                    let values = (0..input_dim * output_dim)
                        .map(|_| dist.sample(rng))
                        .collect();
                    LayerParams::Dense {
                        weights: Matrix::from_vec(input_dim, output_dim, values)
                            .expect("sized above"),
                        bias: vec![0.0; output_dim],
                    }
                }
                LayerSpec::BatchNorm { dim } => LayerParams::BatchNorm(BatchNormParams::new(dim)),
                _ => LayerParams::None,
            })
            .collect();
        Self { layers }
    }

    /// Checks that every parameter block has the shape its layer demands.
    pub fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        if self.layers.len() != spec.layers().len() {
            return Err(Error::Shape(format!(
                "state has {} layers, spec has {}",
                self.layers.len(),
                spec.layers().len()
            )));
        }
        for (i, (params, layer)) in self.layers.iter().zip(spec.layers()).enumerate() {
            let ok = match (params, layer) {
                (
                    LayerParams::Dense { weights, bias },
                    LayerSpec::Dense {
                        input_dim,
                        output_dim,
                    },
                ) => weights.shape() == (*input_dim, *output_dim) && bias.len() == *output_dim,
                (LayerParams::BatchNorm(bn), LayerSpec::BatchNorm { dim }) => {
                    bn.gamma.len() == *dim
                        && bn.beta.len() == *dim
                        && bn.running_mean.len() == *dim
                        && bn.running_var.len() == *dim
                }
                (LayerParams::None, l) => {
                    !matches!(l, LayerSpec::Dense { .. } | LayerSpec::BatchNorm { .. })
                }
                _ => false,
            };
            if !ok {
                return Err(Error::Shape(format!(
                    "parameters of layer {i} do not match {layer:?}"
                )));
            }
        }
        Ok(())
    }

    /// Trainable tensors in canonical order: per dense layer weights then bias,
    /// per batchnorm layer gamma then beta.
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                LayerParams::Dense { weights, bias } => {
                    out.push(weights.as_slice());
                    out.push(bias.as_slice());
                }
                LayerParams::BatchNorm(bn) => {
                    out.push(bn.gamma.as_slice());
                    out.push(bn.beta.as_slice());
                }
                LayerParams::None => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                LayerParams::Dense { weights, bias } => {
                    out.push(weights.as_mut_slice());
                    out.push(bias.as_mut_slice());
                }
                LayerParams::BatchNorm(bn) => {
                    out.push(bn.gamma.as_mut_slice());
                    out.push(bn.beta.as_mut_slice());
                }
                LayerParams::None => {}
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params()
            .iter()
            .all(|p| p.iter().all(|x| x.is_finite()))
    }
}

/// Gradients of a scalar loss, laid out exactly like [`NetworkState`].
#[derive(Debug, Clone, PartialEq)]
pub enum LayerGrads {
    None,
    Dense { weights: Matrix, bias: Vec<f64> },
    BatchNorm { gamma: Vec<f64>, beta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
}

impl Gradients {
    /// Same canonical order as [`NetworkState::params`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                LayerGrads::Dense { weights, bias } => {
                    out.push(weights.as_slice());
                    out.push(bias.as_slice());
                }
                LayerGrads::BatchNorm { gamma, beta } => {
                    out.push(gamma.as_slice());
                    out.push(beta.as_slice());
                }
                LayerGrads::None => {}
            }
        }
        out
    }

    /// Flattened copy in canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn is_zero(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|&g| g == 0.0))
    }
}
