use super::matrix::Matrix;
use crate::{Error, Result};

/// Predictions are clipped to `[LOG_EPSILON, 1 - LOG_EPSILON]` before taking logs.
pub const LOG_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean binary cross-entropy over every element.
    BinaryCrossEntropy,
    /// Mean over rows of `-sum(t * ln p)`.
    CategoricalCrossEntropy,
}

#[inline]
fn clip(p: f64) -> f64 {
    p.clamp(LOG_EPSILON, 1.0 - LOG_EPSILON)
}

pub fn loss_bce(predicted: &[f64], target: &[f64]) -> Result<f64> {
    if predicted.len() != target.len() {
        return Err(Error::Shape(format!(
            "bce: {} predictions vs {} targets",
            predicted.len(),
            target.len()
        )));
    }
    if predicted.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = predicted
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let p = clip(p);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / predicted.len() as f64)
}

pub fn loss_categorical_ce(predicted: &Matrix, target: &Matrix) -> Result<f64> {
    if predicted.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "categorical ce: predicted {:?} vs target {:?}",
            predicted.shape(),
            target.shape()
        )));
    }
    if predicted.rows() == 0 {
        return Ok(0.0);
    }
    let total: f64 = predicted
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(&p, &t)| if t == 0.0 { 0.0 } else { -t * clip(p).ln() })
        .sum();
    Ok(total / predicted.rows() as f64)
}

pub fn loss(kind: LossKind, predicted: &Matrix, target: &Matrix) -> Result<f64> {
    match kind {
        LossKind::BinaryCrossEntropy => {
            if predicted.shape() != target.shape() {
                return Err(Error::Shape(format!(
                    "bce: predicted {:?} vs target {:?}",
                    predicted.shape(),
                    target.shape()
                )));
            }
            loss_bce(predicted.as_slice(), target.as_slice())
        }
        LossKind::CategoricalCrossEntropy => loss_categorical_ce(predicted, target),
    }
}

/// `dL/dp` for the unfused path. Zero where the clip is active.
pub(crate) fn loss_gradient(kind: LossKind, predicted: &Matrix, target: &Matrix) -> Matrix {
    let mut grad = Matrix::zeros(predicted.rows(), predicted.cols());
    let clipped = |p: f64| !(LOG_EPSILON..=1.0 - LOG_EPSILON).contains(&p);
    match kind {
        LossKind::BinaryCrossEntropy => {
            let n = predicted.as_slice().len().max(1) as f64;
            for ((g, &p), &t) in grad
                .as_mut_slice()
                .iter_mut()
                .zip(predicted.as_slice())
                .zip(target.as_slice())
            {
                if !clipped(p) {
                    *g = (-t / p + (1.0 - t) / (1.0 - p)) / n;
                }
            }
        }
        LossKind::CategoricalCrossEntropy => {
            let n = predicted.rows().max(1) as f64;
            for ((g, &p), &t) in grad
                .as_mut_slice()
                .iter_mut()
                .zip(predicted.as_slice())
                .zip(target.as_slice())
            {
                if !clipped(p) {
                    *g = -t / p / n;
                }
            }
        }
    }
    grad
}
