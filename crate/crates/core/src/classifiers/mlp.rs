use super::{require_both_classes, shuffled_batches, TrainConfig};
use crate::data::Dataset;
use crate::nn::{
    backward, forward, infer, Adam, LayerSpec, LossKind, Matrix, Mode, NetworkSpec, NetworkState,
};
use crate::{seeded_rng, Result};

pub const MLP_HIDDEN: usize = 30;

/// `dense(d -> 30) relu, dense(30 -> 30) sigmoid, dense(30 -> 2) softmax`.
pub fn mlp_spec(features: usize) -> Result<NetworkSpec> {
    NetworkSpec::new(vec![
        LayerSpec::dense(features, MLP_HIDDEN),
        LayerSpec::Relu { dim: MLP_HIDDEN },
        LayerSpec::dense(MLP_HIDDEN, MLP_HIDDEN),
        LayerSpec::Sigmoid { dim: MLP_HIDDEN },
        LayerSpec::dense(MLP_HIDDEN, 2),
        LayerSpec::Softmax { dim: 2 },
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub spec: NetworkSpec,
    pub state: NetworkState,
}

impl MlpModel {
    pub fn untrained(features: usize, seed: u64) -> Result<Self> {
        let spec = mlp_spec(features)?;
        let state = NetworkState::init(&spec, &mut seeded_rng(seed));
        Ok(Self { spec, state })
    }

    /// Softmax output, one `[p(0), p(1)]` row per input row.
    pub fn probabilities(&self, x: &Matrix) -> Result<Matrix> {
        infer(&self.spec, &self.state, x)
    }

    pub(crate) fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.probabilities(x)?.column(1))
    }
}

fn one_hot(labels: &[u8]) -> Matrix {
    let mut m = Matrix::zeros(labels.len(), 2);
    for (r, &l) in labels.iter().enumerate() {
        m.set(r, l as usize, 1.0);
    }
    m
}

/// Categorical cross-entropy on one-hot targets, Adam over shuffled minibatches.
pub fn train_mlp(data: &Dataset, config: &TrainConfig) -> Result<MlpModel> {
    config.validate()?;
    require_both_classes(data)?;
    let mut rng = seeded_rng(config.seed);
    let spec = mlp_spec(data.feature_count())?;
    let mut state = NetworkState::init(&spec, &mut rng);
    let mut adam = Adam::new(config.learning_rate);
    let targets = one_hot(&data.labels);

    for _ in 0..config.epochs {
        for batch in shuffled_batches(data.len(), config.batch_size, &mut rng) {
            let x = data.features.select_rows(&batch);
            let t = targets.select_rows(&batch);
            let (_, cache) = forward(&spec, &state, &x, Mode::Train, None)?;
            let grads = backward(&spec, &state, &cache, LossKind::CategoricalCrossEntropy, &t)?;
            adam.step(&mut state, &grads)?;
        }
    }
    Ok(MlpModel { spec, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{predict_label, Classifier, ModelKind};
    use crate::Error;
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> Dataset {
        let mut rng = seeded_rng(seed);
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let l = (i % 2) as u8;
            let center = if l == 1 { 0.75 } else { 0.25 };
            for _ in 0..3 {
                values.push(center + rng.random_range(-0.15..0.15));
            }
            labels.push(l);
        }
        Dataset::new(Matrix::from_vec(n, 3, values).unwrap(), labels).unwrap()
    }

    #[test]
    fn separable_blobs_are_learned() {
        let d = blobs(200, 1);
        let config = TrainConfig {
            epochs: 300,
            learning_rate: 1e-2,
            batch_size: 32,
            ..TrainConfig::for_model(ModelKind::Mlp)
        };
        let m = Classifier::Mlp(train_mlp(&d, &config).unwrap());
        let pred = predict_label(&m, &d.features, 0.5).unwrap();
        let acc =
            pred.iter().zip(&d.labels).filter(|(p, l)| p == l).count() as f64 / d.len() as f64;
        assert!(acc >= 0.95, "{acc}");
    }

    #[test]
    fn untrained_outputs_are_near_uniform() {
        let d = blobs(100, 2);
        let m = MlpModel::untrained(3, 7).unwrap();
        let p = m.probabilities(&d.features).unwrap();
        for row in p.row_iter() {
            assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
            assert!((row[1] - 0.5).abs() < 0.25, "{row:?}");
        }
    }

    #[test]
    fn threshold_label_matches_argmax() {
        let d = blobs(100, 3);
        let config = TrainConfig {
            epochs: 3,
            ..TrainConfig::for_model(ModelKind::Mlp)
        };
        let model = train_mlp(&d, &config).unwrap();
        let probs = model.probabilities(&d.features).unwrap();
        let labels = predict_label(&Classifier::Mlp(model), &d.features, 0.5).unwrap();
        for (row, l) in probs.row_iter().zip(labels) {
            let argmax = u8::from(row[1] > row[0]);
            assert_eq!(argmax, l);
        }
    }

    #[test]
    fn deterministic_and_rejects_single_class() {
        let d = blobs(40, 4);
        let c = TrainConfig {
            epochs: 2,
            ..TrainConfig::for_model(ModelKind::Mlp)
        };
        assert_eq!(train_mlp(&d, &c).unwrap(), train_mlp(&d, &c).unwrap());
        let single = Dataset::new(Matrix::zeros(2, 3), vec![1, 1]).unwrap();
        assert!(matches!(
            train_mlp(&single, &c),
            Err(Error::DegenerateData(_))
        ));
    }
}
