use super::{require_both_classes, shuffled_batches, TrainConfig};
use crate::data::Dataset;
use crate::nn::{
    backward, forward, sigmoid, Adam, LayerParams, LayerSpec, LossKind, Matrix, Mode, NetworkSpec,
    NetworkState,
};
use crate::{seeded_rng, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.bias
            + row
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
    }

    pub(crate) fn scores(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter().map(|r| sigmoid(self.margin(r))).collect()
    }
}

/// Mean binary cross-entropy of `sigmoid(w.x + b)`, minimized with Adam over
/// shuffled minibatches.
pub fn train_logreg(data: &Dataset, config: &TrainConfig) -> Result<LogisticModel> {
    config.validate()?;
    require_both_classes(data)?;
    let d = data.feature_count();
    let spec = NetworkSpec::new(vec![LayerSpec::dense(d, 1), LayerSpec::Sigmoid { dim: 1 }])?;
    let mut rng = seeded_rng(config.seed);
    let mut state = NetworkState::init(&spec, &mut rng);
    // start from the constant model; Glorot noise buys nothing for a convex fit
    if let LayerParams::Dense { weights, .. } = &mut state.layers[0] {
        *weights = Matrix::zeros(d, 1);
    }
    let mut adam = Adam::new(config.learning_rate);
    let targets = data.label_column();

    for _ in 0..config.epochs {
        for batch in shuffled_batches(data.len(), config.batch_size, &mut rng) {
            let x = data.features.select_rows(&batch);
            let t = targets.select_rows(&batch);
            let (_, cache) = forward(&spec, &state, &x, Mode::Train, None)?;
            let grads = backward(&spec, &state, &cache, LossKind::BinaryCrossEntropy, &t)?;
            adam.step(&mut state, &grads)?;
        }
    }

    let LayerParams::Dense { weights, bias } = &state.layers[0] else {
        unreachable!("first layer is dense")
    };
    Ok(LogisticModel {
        weights: weights.as_slice().to_vec(),
        bias: bias[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ModelKind;
    use crate::Error;
    use rand::Rng;

    fn config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            ..TrainConfig::for_model(ModelKind::LogisticRegression)
        }
    }

    #[test]
    fn separable_line_is_learned() {
        // x in [-3, -1] -> 0, x in [1, 3] -> 1
        let xs: Vec<f64> = (0..40)
            .map(|i| {
                if i < 20 {
                    -3.0 + i as f64 * 0.1
                } else {
                    1.0 + (i - 20) as f64 * 0.1
                }
            })
            .collect();
        let labels = (0..40).map(|i| u8::from(i >= 20)).collect();
        let d = Dataset::new(Matrix::from_vec(40, 1, xs).unwrap(), labels).unwrap();
        let m = train_logreg(&d, &config(200)).unwrap();
        let acc = d
            .features
            .row_iter()
            .zip(&d.labels)
            .filter(|(r, &l)| u8::from(m.margin(r) > 0.0) == l)
            .count();
        assert_eq!(acc, 40);
    }

    #[test]
    fn label_noise_gives_half_probability() {
        // symmetric features, labels independent of them
        let mut rng = seeded_rng(9);
        let n = 400;
        let values: Vec<f64> = (0..n * 2).map(|_| rng.random_range(0.0..1.0)).collect();
        let labels = (0..n).map(|i| (i % 2) as u8).collect();
        let d = Dataset::new(Matrix::from_vec(n, 2, values).unwrap(), labels).unwrap();
        let m = train_logreg(&d, &config(100)).unwrap();
        let mean = m.scores(&d.features).iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.05, "{mean}");
    }

    #[test]
    fn deterministic_and_rejects_single_class() {
        let d = Dataset::new(
            Matrix::from_vec(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap(),
            vec![0, 0, 1, 1],
        )
        .unwrap();
        assert_eq!(
            train_logreg(&d, &config(5)).unwrap(),
            train_logreg(&d, &config(5)).unwrap()
        );
        let single = Dataset::new(Matrix::zeros(3, 1), vec![1, 1, 1]).unwrap();
        assert!(matches!(
            train_logreg(&single, &config(5)),
            Err(Error::DegenerateData(_))
        ));
    }
}
