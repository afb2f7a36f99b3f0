use rand::Rng as _;

use super::*;
use crate::seeded_rng;

fn single_dense(
    weights: Vec<f64>,
    rows: usize,
    cols: usize,
    bias: Vec<f64>,
) -> (NetworkSpec, NetworkState) {
    let spec = NetworkSpec::new(vec![LayerSpec::dense(rows, cols)]).unwrap();
    let state = NetworkState {
        layers: vec![LayerParams::Dense {
            weights: Matrix::from_vec(rows, cols, weights).unwrap(),
            bias,
        }],
    };
    (spec, state)
}

#[test]
fn dense_identity_passes_input_through() {
    let (spec, state) = single_dense(
        vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        3,
        3,
        vec![0.0; 3],
    );
    let x = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
    assert_eq!(
        infer(&spec, &state, &x).unwrap().as_slice(),
        &[1.0, 2.0, 3.0]
    );
}

#[test]
fn zero_input_yields_bias() {
    let mut rng = seeded_rng(3);
    let w: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
    let (spec, state) = single_dense(w, 4, 2, vec![0.25, -0.75]);
    let out = infer(&spec, &state, &Matrix::zeros(1, 4)).unwrap();
    assert_eq!(out.as_slice(), &[0.25, -0.75]);
}

#[test]
fn dense_hand_product() {
    let (spec, state) = single_dense(vec![2.0, 3.0], 2, 1, vec![1.0]);
    let out = infer(&spec, &state, &Matrix::from_rows(&[[1.0, 1.0]]).unwrap()).unwrap();
    assert_eq!(out.as_slice(), &[6.0]);
}

#[test]
fn forward_rejects_wrong_width() {
    let (spec, state) = single_dense(vec![2.0, 3.0], 2, 1, vec![1.0]);
    let err = infer(&spec, &state, &Matrix::zeros(1, 3)).unwrap_err();
    assert!(matches!(err, crate::Error::Shape(_)));
}

#[test]
fn train_dropout_without_rng_is_rejected() {
    let spec = NetworkSpec::new(vec![LayerSpec::Dropout { dim: 2, rate: 0.2 }]).unwrap();
    let state = NetworkState::init(&spec, &mut seeded_rng(0));
    let x = Matrix::zeros(1, 2);
    assert!(forward(&spec, &state, &x, Mode::Train, None).is_err());
    assert!(forward(&spec, &state, &x, Mode::Infer, None).is_ok());
}

#[test]
fn fused_sigmoid_bce_hand_gradient() {
    let spec =
        NetworkSpec::new(vec![LayerSpec::dense(1, 1), LayerSpec::Sigmoid { dim: 1 }]).unwrap();
    let state = NetworkState {
        layers: vec![
            LayerParams::Dense {
                weights: Matrix::zeros(1, 1),
                bias: vec![0.0],
            },
            LayerParams::None,
        ],
    };
    let x = Matrix::from_rows(&[[1.0]]).unwrap();
    let (_, cache) = forward(&spec, &state, &x, Mode::Train, None).unwrap();
    let t = Matrix::from_rows(&[[1.0]]).unwrap();
    let g = backward(&spec, &state, &cache, LossKind::BinaryCrossEntropy, &t).unwrap();
    assert_eq!(g.flatten(), vec![-0.5, -0.5]);
}

#[test]
fn exact_prediction_gives_zero_gradients() {
    // softmax of equal logits is [0.5, 0.5]; with a soft target equal to it the
    // fused error p - t vanishes everywhere
    let spec = NetworkSpec::new(vec![
        LayerSpec::dense(3, 4),
        LayerSpec::Relu { dim: 4 },
        LayerSpec::dense(4, 2),
        LayerSpec::Softmax { dim: 2 },
    ])
    .unwrap();
    let mut state = NetworkState::init(&spec, &mut seeded_rng(1));
    if let LayerParams::Dense { weights, .. } = &mut state.layers[2] {
        *weights = Matrix::zeros(4, 2);
    }
    let x = Matrix::from_rows(&[[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]]).unwrap();
    let (out, cache) = forward(&spec, &state, &x, Mode::Train, None).unwrap();
    let g = backward(
        &spec,
        &state,
        &cache,
        LossKind::CategoricalCrossEntropy,
        &out,
    )
    .unwrap();
    assert!(g.is_zero());
}

#[test]
fn backward_rejects_mismatched_cache() {
    let spec_a =
        NetworkSpec::new(vec![LayerSpec::dense(2, 1), LayerSpec::Sigmoid { dim: 1 }]).unwrap();
    let spec_b = NetworkSpec::new(vec![
        LayerSpec::dense(2, 2),
        LayerSpec::Relu { dim: 2 },
        LayerSpec::dense(2, 1),
        LayerSpec::Sigmoid { dim: 1 },
    ])
    .unwrap();
    let state_a = NetworkState::init(&spec_a, &mut seeded_rng(0));
    let state_b = NetworkState::init(&spec_b, &mut seeded_rng(0));
    let x = Matrix::zeros(1, 2);
    let (_, cache) = forward(&spec_a, &state_a, &x, Mode::Train, None).unwrap();
    let t = Matrix::zeros(1, 1);
    let err = backward(&spec_b, &state_b, &cache, LossKind::BinaryCrossEntropy, &t).unwrap_err();
    assert!(matches!(err, crate::Error::Internal(_)));
}

#[test]
fn dropout_rate_and_scaling() {
    let rate = 0.2;
    let n = 100_000;
    let spec = NetworkSpec::new(vec![LayerSpec::Dropout { dim: n, rate }]).unwrap();
    let state = NetworkState::init(&spec, &mut seeded_rng(0));
    let x = Matrix::filled(1, n, 1.0);
    let mut rng = seeded_rng(99);
    let (out, _) = forward(&spec, &state, &x, Mode::Train, Some(&mut rng)).unwrap();
    let dropped = out.as_slice().iter().filter(|&&v| v == 0.0).count();
    let empirical = dropped as f64 / n as f64;
    let sd = (rate * (1.0 - rate) / n as f64).sqrt();
    assert!((empirical - rate).abs() <= 3.0 * sd, "rate {empirical}");
    let scale = 1.0 / (1.0 - rate);
    assert!(out
        .as_slice()
        .iter()
        .all(|&v| v == 0.0 || (v - scale).abs() < 1e-15));

    let inferred = infer(&spec, &state, &x).unwrap();
    assert_eq!(inferred, x);
}

#[test]
fn batchnorm_train_normalizes_batch() {
    let spec = NetworkSpec::new(vec![LayerSpec::BatchNorm { dim: 3 }]).unwrap();
    let mut state = NetworkState::init(&spec, &mut seeded_rng(0));
    // non-trivial gamma/beta must not affect the pre-affine statistics
    if let LayerParams::BatchNorm(bn) = &mut state.layers[0] {
        bn.gamma = vec![2.0, -0.5, 3.0];
        bn.beta = vec![1.0, 4.0, -2.0];
    }
    let mut rng = seeded_rng(5);
    let rows: Vec<[f64; 3]> = (0..64)
        .map(|_| {
            [
                rng.random_range(-100.0..100.0),
                rng.random_range(500.0..900.0),
                rng.random_range(-300.0..0.0),
            ]
        })
        .collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let (_, cache) = forward(&spec, &state, &x, Mode::Train, None).unwrap();
    let normalized = cache.batchnorm_normalized(0).unwrap();
    for c in 0..3 {
        let col = normalized.column(c);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 1e-9, "mean {mean}");
        assert!((var - 1.0).abs() < 1e-6, "var {var}");
    }
}

#[test]
fn batchnorm_running_stats_update_with_momentum() {
    let spec = NetworkSpec::new(vec![LayerSpec::BatchNorm { dim: 1 }]).unwrap();
    let mut state = NetworkState::init(&spec, &mut seeded_rng(0));
    let x = Matrix::from_rows(&[[1.0], [3.0]]).unwrap();
    let (_, cache) = forward(&spec, &state, &x, Mode::Train, None).unwrap();
    absorb_batch_statistics(&mut state, &cache);
    let LayerParams::BatchNorm(bn) = &state.layers[0] else {
        unreachable!()
    };
    // batch mean 2, biased variance 1
    assert!((bn.running_mean[0] - 0.02).abs() < 1e-15);
    assert!((bn.running_var[0] - 1.0).abs() < 1e-15);

    // inference uses the running statistics, not the batch
    let y = infer(&spec, &state, &Matrix::from_rows(&[[0.02]]).unwrap()).unwrap();
    assert!(y.get(0, 0).abs() < 1e-12);
}

#[test]
fn training_is_bit_reproducible() {
    let spec = NetworkSpec::new(vec![
        LayerSpec::dense(4, 6),
        LayerSpec::Sigmoid { dim: 6 },
        LayerSpec::Dropout { dim: 6, rate: 0.3 },
        LayerSpec::BatchNorm { dim: 6 },
        LayerSpec::dense(6, 1),
        LayerSpec::Sigmoid { dim: 1 },
    ])
    .unwrap();
    let run = |seed: u64| {
        let mut rng = seeded_rng(seed);
        let mut state = NetworkState::init(&spec, &mut rng);
        let mut adam = Adam::new(1e-2);
        for _ in 0..25 {
            let x = Matrix::from_vec(8, 4, (0..32).map(|_| rng.random::<f64>()).collect()).unwrap();
            let t = Matrix::from_vec(8, 1, (0..8).map(|i| (i % 2) as f64).collect()).unwrap();
            let (_, cache) = forward(&spec, &state, &x, Mode::Train, Some(&mut rng)).unwrap();
            let g = backward(&spec, &state, &cache, LossKind::BinaryCrossEntropy, &t).unwrap();
            absorb_batch_statistics(&mut state, &cache);
            adam.step(&mut state, &g).unwrap();
        }
        state
    };
    let a = run(11);
    let b = run(11);
    assert_eq!(a, b);
    assert!(a.is_finite());
    assert_ne!(a, run(12));
}
