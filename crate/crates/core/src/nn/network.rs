//! Forward and backward passes over a [`NetworkSpec`].
//!
//! `forward` is pure: batchnorm batch statistics are returned in the cache and
//! folded into the running averages by [`absorb_batch_statistics`], so a caller
//! decides whether a given train-mode pass should move them.

use rand::{Rng, RngCore};

use super::activation::{relu, sigmoid, softmax_in_place};
use super::layer::{LayerKind, LayerSpec, NetworkSpec};
use super::loss::{loss_gradient, LossKind};
use super::matrix::Matrix;
use super::state::{Gradients, LayerGrads, LayerParams, NetworkState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone)]
enum LayerAux {
    None,
    /// Per-element multiplier: 0 for dropped units, `1 / (1 - rate)` for survivors.
    Dropout {
        mask: Vec<f64>,
    },
    BatchNorm {
        normalized: Matrix,
        inv_std: Vec<f64>,
        batch_mean: Vec<f64>,
        batch_var: Vec<f64>,
    },
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[i + 1]` is layer `i`'s output.
    activations: Vec<Matrix>,
    aux: Vec<LayerAux>,
    mode: Mode,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.activations
            .last()
            .expect("cache always holds the input")
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Input of layer `i` (the output of layer `i - 1`).
    pub fn layer_input(&self, i: usize) -> &Matrix {
        &self.activations[i]
    }

    /// Train-mode normalized values of the batchnorm at layer `i`, before gamma/beta.
    pub fn batchnorm_normalized(&self, i: usize) -> Option<&Matrix> {
        match self.aux.get(i) {
            Some(LayerAux::BatchNorm { normalized, .. }) => Some(normalized),
            _ => None,
        }
    }
}

/// Runs the network on `input`.
///
/// `rng` is only consulted by dropout layers in train mode and may be `None`
/// otherwise. In infer mode dropout is the identity and batchnorm uses its
/// running statistics.
pub fn forward(
    spec: &NetworkSpec,
    state: &NetworkState,
    input: &Matrix,
    mode: Mode,
    mut rng: Option<&mut dyn RngCore>,
) -> Result<(Matrix, ForwardCache)> {
    if input.cols() != spec.input_dim() {
        return Err(Error::Shape(format!(
            "input has {} columns, network expects {}",
            input.cols(),
            spec.input_dim()
        )));
    }
    state.check_against(spec)?;
    if mode == Mode::Train && spec.has_dropout() && rng.is_none() {
        return Err(Error::Precondition(
            "train-mode forward through dropout needs a random source".into(),
        ));
    }

    let mut activations = Vec::with_capacity(spec.layers().len() + 1);
    let mut aux = Vec::with_capacity(spec.layers().len());
    activations.push(input.clone());

    for (layer, params) in spec.layers().iter().zip(&state.layers) {
        let x = activations.last().expect("non-empty");
        let (y, a) = match (layer, params) {
            (LayerSpec::Dense { .. }, LayerParams::Dense { weights, bias }) => {
                let mut y = x.matmul(weights)?;
                y.add_row_vector(bias);
                (y, LayerAux::None)
            }
            (LayerSpec::Relu { .. }, _) => (x.map(relu), LayerAux::None),
            (LayerSpec::Sigmoid { .. }, _) => (x.map(sigmoid), LayerAux::None),
            (LayerSpec::Softmax { .. }, _) => {
                let mut y = x.clone();
                for r in 0..y.rows() {
                    softmax_in_place(y.row_mut(r));
                }
                (y, LayerAux::None)
            }
            (LayerSpec::Dropout { rate, .. }, _) => match mode {
                Mode::Infer => (x.clone(), LayerAux::None),
                Mode::Train => {
                    let rng = rng.as_deref_mut().expect("checked above");
                    let keep = 1.0 - rate;
                    let scale = 1.0 / keep;
                    let mask: Vec<f64> = (0..x.as_slice().len())
                        .map(|_| {
                            if rng.random::<f64>() < *rate {
                                0.0
                            } else {
                                scale
                            }
                        })
                        .collect();
                    let values = x.as_slice().iter().zip(&mask).map(|(v, m)| v * m).collect();
                    (
                        Matrix::from_vec(x.rows(), x.cols(), values)?,
                        LayerAux::Dropout { mask },
                    )
                }
            },
            (LayerSpec::BatchNorm { .. }, LayerParams::BatchNorm(bn)) => match mode {
                Mode::Infer => {
                    let mut y = x.clone();
                    for r in 0..y.rows() {
                        for (c, v) in y.row_mut(r).iter_mut().enumerate() {
                            let inv = 1.0 / (bn.running_var[c] + bn.epsilon).sqrt();
                            *v = bn.gamma[c] * (*v - bn.running_mean[c]) * inv + bn.beta[c];
                        }
                    }
                    (y, LayerAux::None)
                }
                Mode::Train => {
                    if x.rows() == 0 {
                        return Err(Error::Shape("batchnorm on an empty batch".into()));
                    }
                    let n = x.rows() as f64;
                    let batch_mean: Vec<f64> = x.column_sums().into_iter().map(|s| s / n).collect();
                    let mut batch_var = vec![0.0; x.cols()];
                    for row in x.row_iter() {
                        for ((v, &xv), &m) in batch_var.iter_mut().zip(row).zip(&batch_mean) {
                            *v += (xv - m) * (xv - m);
                        }
                    }
                    for v in &mut batch_var {
                        *v /= n;
                    }
                    let inv_std: Vec<f64> = batch_var
                        .iter()
                        .map(|v| 1.0 / (v + bn.epsilon).sqrt())
                        .collect();
                    let mut normalized = x.clone();
                    let mut y = x.clone();
                    for r in 0..x.rows() {
                        let nrow = normalized.row_mut(r);
                        for (c, v) in nrow.iter_mut().enumerate() {
                            *v = (*v - batch_mean[c]) * inv_std[c];
                        }
                        let nrow = normalized.row(r).to_vec();
                        for (c, v) in y.row_mut(r).iter_mut().enumerate() {
                            *v = bn.gamma[c] * nrow[c] + bn.beta[c];
                        }
                    }
                    (
                        y,
                        LayerAux::BatchNorm {
                            normalized,
                            inv_std,
                            batch_mean,
                            batch_var,
                        },
                    )
                }
            },
            (layer, _) => return Err(Error::Internal(format!("parameters missing for {layer:?}"))),
        };
        activations.push(y);
        aux.push(a);
    }

    let output = activations.last().expect("non-empty").clone();
    Ok((
        output,
        ForwardCache {
            activations,
            aux,
            mode,
        },
    ))
}

/// Inference-mode forward pass; no random source needed.
pub fn infer(spec: &NetworkSpec, state: &NetworkState, input: &Matrix) -> Result<Matrix> {
    forward(spec, state, input, Mode::Infer, None).map(|(out, _)| out)
}

/// Folds the batch statistics from a train-mode pass into the batchnorm running averages.
pub fn absorb_batch_statistics(state: &mut NetworkState, cache: &ForwardCache) {
    for (params, aux) in state.layers.iter_mut().zip(&cache.aux) {
        if let (
            LayerParams::BatchNorm(bn),
            LayerAux::BatchNorm {
                batch_mean,
                batch_var,
                ..
            },
        ) = (params, aux)
        {
            bn.absorb(batch_mean, batch_var);
        }
    }
}

/// Gradients of the mean loss with respect to every parameter.
///
/// When the network ends in sigmoid and the loss is binary cross-entropy, or
/// ends in softmax and the loss is categorical cross-entropy, the error at the
/// final pre-activation is taken directly as `prediction - target`.
pub fn backward(
    spec: &NetworkSpec,
    state: &NetworkState,
    cache: &ForwardCache,
    loss: LossKind,
    targets: &Matrix,
) -> Result<Gradients> {
    backward_with_input_grad(spec, state, cache, loss, targets).map(|(g, _)| g)
}

/// Like [`backward`] but also returns `dL/d input`, needed to push the
/// discriminator's error back into the generator.
pub fn backward_with_input_grad(
    spec: &NetworkSpec,
    state: &NetworkState,
    cache: &ForwardCache,
    loss: LossKind,
    targets: &Matrix,
) -> Result<(Gradients, Matrix)> {
    check_cache(spec, cache)?;
    let output = cache.output();
    if output.shape() != targets.shape() {
        return Err(Error::Shape(format!(
            "targets {:?} vs network output {:?}",
            targets.shape(),
            output.shape()
        )));
    }

    let fused = matches!(
        (spec.last_kind(), loss),
        (LayerKind::Sigmoid, LossKind::BinaryCrossEntropy)
            | (LayerKind::Softmax, LossKind::CategoricalCrossEntropy)
    );
    if fused {
        let denom = match loss {
            LossKind::BinaryCrossEntropy => output.as_slice().len(),
            LossKind::CategoricalCrossEntropy => output.rows(),
        }
        .max(1) as f64;
        let values = output
            .as_slice()
            .iter()
            .zip(targets.as_slice())
            .map(|(p, t)| (p - t) / denom)
            .collect();
        let delta = Matrix::from_vec(output.rows(), output.cols(), values)?;
        backprop(spec, state, cache, spec.layers().len() - 1, delta)
    } else {
        let delta = loss_gradient(loss, output, targets);
        backprop(spec, state, cache, spec.layers().len(), delta)
    }
}

/// Backpropagates an arbitrary upstream gradient `dL/d output`.
pub fn backward_from_output_grad(
    spec: &NetworkSpec,
    state: &NetworkState,
    cache: &ForwardCache,
    output_grad: Matrix,
) -> Result<(Gradients, Matrix)> {
    check_cache(spec, cache)?;
    if output_grad.shape() != cache.output().shape() {
        return Err(Error::Shape(format!(
            "output gradient {:?} vs network output {:?}",
            output_grad.shape(),
            cache.output().shape()
        )));
    }
    backprop(spec, state, cache, spec.layers().len(), output_grad)
}

fn check_cache(spec: &NetworkSpec, cache: &ForwardCache) -> Result<()> {
    if cache.aux.len() != spec.layers().len() || cache.activations.len() != spec.layers().len() + 1
    {
        return Err(Error::Internal(format!(
            "cache holds {} layers, spec has {}",
            cache.aux.len(),
            spec.layers().len()
        )));
    }
    for (i, layer) in spec.layers().iter().enumerate() {
        if cache.activations[i].cols() != layer.input_dim() {
            return Err(Error::Internal(format!(
                "cached input of layer {i} has {} columns, layer expects {}",
                cache.activations[i].cols(),
                layer.input_dim()
            )));
        }
    }
    Ok(())
}

/// `delta` is `dL/d output` of layer `end - 1`; layers `end..` are skipped.
fn backprop(
    spec: &NetworkSpec,
    state: &NetworkState,
    cache: &ForwardCache,
    end: usize,
    mut delta: Matrix,
) -> Result<(Gradients, Matrix)> {
    let mut grads: Vec<LayerGrads> = vec![LayerGrads::None; spec.layers().len()];
    for (i, params) in state.layers.iter().enumerate() {
        // layers skipped by the fused path still need correctly shaped zero entries
        grads[i] = match params {
            LayerParams::Dense { weights, bias } => LayerGrads::Dense {
                weights: Matrix::zeros(weights.rows(), weights.cols()),
                bias: vec![0.0; bias.len()],
            },
            LayerParams::BatchNorm(bn) => LayerGrads::BatchNorm {
                gamma: vec![0.0; bn.gamma.len()],
                beta: vec![0.0; bn.beta.len()],
            },
            LayerParams::None => LayerGrads::None,
        };
    }

    for i in (0..end).rev() {
        let layer = &spec.layers()[i];
        let x = &cache.activations[i];
        let y = &cache.activations[i + 1];
        delta = match (layer, &state.layers[i], &cache.aux[i]) {
            (LayerSpec::Dense { .. }, LayerParams::Dense { weights, .. }, _) => {
                grads[i] = LayerGrads::Dense {
                    weights: x.t_matmul(&delta)?,
                    bias: delta.column_sums(),
                };
                delta.matmul_t(weights)?
            }
            (LayerSpec::Relu { .. }, _, _) => {
                let values = delta
                    .as_slice()
                    .iter()
                    .zip(x.as_slice())
                    .map(|(d, &xv)| if xv > 0.0 { *d } else { 0.0 })
                    .collect();
                Matrix::from_vec(delta.rows(), delta.cols(), values)?
            }
            (LayerSpec::Sigmoid { .. }, _, _) => {
                let values = delta
                    .as_slice()
                    .iter()
                    .zip(y.as_slice())
                    .map(|(d, &s)| d * s * (1.0 - s))
                    .collect();
                Matrix::from_vec(delta.rows(), delta.cols(), values)?
            }
            (LayerSpec::Softmax { .. }, _, _) => {
                // dx_j = s_j * (d_j - sum_k d_k s_k)
                let mut out = delta.clone();
                for r in 0..out.rows() {
                    let s = y.row(r);
                    let dot: f64 = delta.row(r).iter().zip(s).map(|(d, s)| d * s).sum();
                    for (o, &sv) in out.row_mut(r).iter_mut().zip(s) {
                        *o = sv * (*o - dot);
                    }
                }
                out
            }
            (LayerSpec::Dropout { .. }, _, aux) => match (cache.mode, aux) {
                (Mode::Infer, _) => delta,
                (Mode::Train, LayerAux::Dropout { mask }) => {
                    let values = delta
                        .as_slice()
                        .iter()
                        .zip(mask)
                        .map(|(d, m)| d * m)
                        .collect();
                    Matrix::from_vec(delta.rows(), delta.cols(), values)?
                }
                _ => {
                    return Err(Error::Internal(format!(
                        "dropout mask missing at layer {i}"
                    )))
                }
            },
            (LayerSpec::BatchNorm { .. }, LayerParams::BatchNorm(bn), aux) => match aux {
                LayerAux::BatchNorm {
                    normalized,
                    inv_std,
                    ..
                } => {
                    let n = delta.rows() as f64;
                    let cols = delta.cols();
                    let mut dgamma = vec![0.0; cols];
                    let dbeta = delta.column_sums();
                    let mut sum_dxhat = vec![0.0; cols];
                    let mut sum_dxhat_xhat = vec![0.0; cols];
                    for r in 0..delta.rows() {
                        for c in 0..cols {
                            let d = delta.get(r, c);
                            let xh = normalized.get(r, c);
                            dgamma[c] += d * xh;
                            let dxh = d * bn.gamma[c];
                            sum_dxhat[c] += dxh;
                            sum_dxhat_xhat[c] += dxh * xh;
                        }
                    }
                    let mut dx = Matrix::zeros(delta.rows(), cols);
                    for r in 0..delta.rows() {
                        for c in 0..cols {
                            let dxh = delta.get(r, c) * bn.gamma[c];
                            let xh = normalized.get(r, c);
                            dx.set(
                                r,
                                c,
                                inv_std[c] / n * (n * dxh - sum_dxhat[c] - xh * sum_dxhat_xhat[c]),
                            );
                        }
                    }
                    grads[i] = LayerGrads::BatchNorm {
                        gamma: dgamma,
                        beta: dbeta,
                    };
                    dx
                }
                LayerAux::None => {
                    // inference-mode batchnorm is a fixed affine map per feature
                    let mut dgamma = vec![0.0; delta.cols()];
                    let mut dx = delta.clone();
                    for r in 0..delta.rows() {
                        for (c, dg) in dgamma.iter_mut().enumerate() {
                            let inv = 1.0 / (bn.running_var[c] + bn.epsilon).sqrt();
                            let xh = (x.get(r, c) - bn.running_mean[c]) * inv;
                            *dg += delta.get(r, c) * xh;
                            dx.set(r, c, delta.get(r, c) * bn.gamma[c] * inv);
                        }
                    }
                    grads[i] = LayerGrads::BatchNorm {
                        gamma: dgamma,
                        beta: delta.column_sums(),
                    };
                    dx
                }
                LayerAux::Dropout { .. } => {
                    return Err(Error::Internal(format!("bad cache entry at layer {i}")))
                }
            },
            (layer, _, _) => {
                return Err(Error::Internal(format!(
                    "parameters missing for {layer:?} at layer {i}"
                )))
            }
        };
    }

    Ok((Gradients { layers: grads }, delta))
}
