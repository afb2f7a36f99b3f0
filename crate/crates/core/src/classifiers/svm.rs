use super::{require_both_classes, shuffled_batches, TrainConfig};
use crate::data::Dataset;
use crate::nn::{sigmoid, Matrix};
use crate::{seeded_rng, Result};

/// Linear soft-margin SVM in the primal.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub regularization: f64,
}

impl LinearSvmModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.bias
            + row
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
    }

    /// Sigmoid of the raw margin: a monotone map into (0, 1), not a calibrated probability.
    pub(crate) fn scores(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter().map(|r| sigmoid(self.margin(r))).collect()
    }
}

/// Minimizes `lambda * |w|^2 + mean(max(0, 1 - y (w.x + b)))` with labels in
/// {-1, +1}, by minibatch subgradient steps on the hinge term. The L2 term is
/// applied as its exact proximal step, `w / (1 + 2 * lr * lambda)`, which stays
/// stable for any `lambda`. The bias is not regularized.
pub fn train_svm(data: &Dataset, config: &TrainConfig) -> Result<LinearSvmModel> {
    config.validate()?;
    require_both_classes(data)?;
    let d = data.feature_count();
    let y: Vec<f64> = data
        .labels
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();
    let mut rng = seeded_rng(config.seed);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let lr = config.learning_rate;
    let shrink = 1.0 / (1.0 + 2.0 * lr * config.lambda);
    let mut grad_w = vec![0.0; d];

    for _ in 0..config.epochs {
        for batch in shuffled_batches(data.len(), config.batch_size, &mut rng) {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            let scale = 1.0 / batch.len() as f64;
            for &i in &batch {
                let row = data.features.row(i);
                let margin = b + row.iter().zip(&w).map(|(x, wj)| x * wj).sum::<f64>();
                if y[i] * margin < 1.0 {
                    for (g, x) in grad_w.iter_mut().zip(row) {
                        *g -= y[i] * x * scale;
                    }
                    grad_b -= y[i] * scale;
                }
            }
            for (wj, g) in w.iter_mut().zip(&grad_w) {
                *wj = (*wj - lr * g) * shrink;
            }
            b -= lr * grad_b;
        }
    }

    Ok(LinearSvmModel {
        weights: w,
        bias: b,
        regularization: config.lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ModelKind;
    use crate::Error;

    fn toy() -> Dataset {
        // two blobs separated along the diagonal with margin
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            let t = i as f64 * 0.1;
            rows.push([t, 0.2 - t * 0.1]);
            labels.push(0);
            rows.push([t + 0.2, 1.5 + t * 0.1]);
            labels.push(1);
        }
        Dataset::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn separable_rows_end_on_correct_side() {
        let d = toy();
        let config = TrainConfig {
            epochs: 500,
            ..TrainConfig::for_model(ModelKind::Svm)
        };
        let m = train_svm(&d, &config).unwrap();
        for (row, &l) in d.features.row_iter().zip(&d.labels) {
            let m = m.margin(row);
            assert!(
                if l == 1 { m > 0.0 } else { m < 0.0 },
                "margin {m} for label {l}"
            );
        }
    }

    #[test]
    fn huge_lambda_collapses_weights() {
        let d = toy();
        let config = TrainConfig {
            epochs: 50,
            lambda: 1e6,
            ..TrainConfig::for_model(ModelKind::Svm)
        };
        let m = train_svm(&d, &config).unwrap();
        let norm = m.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "{norm}");
        // margins are then essentially the bias alone
        for r in d.features.row_iter() {
            assert!((m.margin(r) - m.bias).abs() < 1e-2);
        }
    }

    #[test]
    fn zero_margin_scores_half() {
        let m = LinearSvmModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            regularization: 1e-4,
        };
        assert_eq!(m.scores(&Matrix::zeros(1, 2)), vec![0.5]);
    }

    #[test]
    fn deterministic_and_rejects_single_class() {
        let d = toy();
        let c = TrainConfig {
            epochs: 5,
            ..TrainConfig::for_model(ModelKind::Svm)
        };
        assert_eq!(train_svm(&d, &c).unwrap(), train_svm(&d, &c).unwrap());
        let single = Dataset::new(Matrix::zeros(2, 2), vec![0, 0]).unwrap();
        assert!(matches!(
            train_svm(&single, &c),
            Err(Error::DegenerateData(_))
        ));
    }
}
