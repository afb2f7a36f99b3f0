//! Generator/discriminator pair trained on minority-class rows.
//!
//! Each epoch is one discriminator update on a half-real, half-generated batch
//! followed by one generator update through the (unchanged) discriminator with
//! the non-saturating objective: generated rows are scored against label 1.

use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::nn::{
    absorb_batch_statistics, backward, backward_from_output_grad, backward_with_input_grad,
    forward, infer, loss_bce, Adam, LayerParams, LayerSpec, LossKind, Matrix, Mode, NetworkSpec,
    NetworkState,
};
use crate::{seeded_rng, Error, Result};

pub const NOISE_DIM: usize = 100;
pub const GENERATOR_HIDDEN: [usize; 2] = [100, 30];
pub const DISCRIMINATOR_HIDDEN: usize = 36;
pub const DISCRIMINATOR_DROPOUT: f64 = 0.2;

/// Rows used to recompute the generator's batchnorm statistics after training.
const FINALIZE_ROWS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    StandardNormal,
    /// Uniform on `[0, 1)`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutPlacement {
    /// After each of the three hidden layers.
    EveryHidden,
    /// Only after the last hidden layer.
    Single,
}

/// `dense(noise -> 100) relu, dense(100 -> 30) relu, batchnorm(30), dense(30 -> features) sigmoid`.
pub fn generator_spec(noise_dim: usize, features: usize) -> Result<NetworkSpec> {
    let [h1, h2] = GENERATOR_HIDDEN;
    NetworkSpec::new(vec![
        LayerSpec::dense(noise_dim, h1),
        LayerSpec::Relu { dim: h1 },
        LayerSpec::dense(h1, h2),
        LayerSpec::Relu { dim: h2 },
        LayerSpec::BatchNorm { dim: h2 },
        LayerSpec::dense(h2, features),
        LayerSpec::Sigmoid { dim: features },
    ])
}

/// Three sigmoid hidden layers of 36 units with 20% dropout, one sigmoid output.
pub fn discriminator_spec(features: usize, placement: DropoutPlacement) -> Result<NetworkSpec> {
    let h = DISCRIMINATOR_HIDDEN;
    let mut layers = Vec::new();
    let mut input = features;
    for i in 0..3 {
        layers.push(LayerSpec::dense(input, h));
        layers.push(LayerSpec::Sigmoid { dim: h });
        if placement == DropoutPlacement::EveryHidden || i == 2 {
            layers.push(LayerSpec::Dropout {
                dim: h,
                rate: DISCRIMINATOR_DROPOUT,
            });
        }
        input = h;
    }
    layers.push(LayerSpec::dense(h, 1));
    layers.push(LayerSpec::Sigmoid { dim: 1 });
    NetworkSpec::new(layers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Capped at the number of positive rows.
    pub batch_size: usize,
    pub noise_dim: usize,
    pub noise: NoiseKind,
    pub dropout: DropoutPlacement,
    pub seed: u64,
    pub log_every: usize,
}

impl Default for GanTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10_000,
            learning_rate: 1e-5,
            batch_size: 64,
            noise_dim: NOISE_DIM,
            noise: NoiseKind::StandardNormal,
            dropout: DropoutPlacement::EveryHidden,
            seed: 0,
            log_every: 1,
        }
    }
}

impl GanTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Precondition(format!(
                "GAN learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.noise_dim == 0 || self.log_every == 0 {
            return Err(Error::Precondition(
                "GAN epochs, batch size, noise dimension and log interval must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GanLogEntry {
    /// 1-based.
    pub epoch: usize,
    pub generator_loss: f64,
    pub discriminator_loss: f64,
    pub discriminator_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GanTrainingLog {
    pub entries: Vec<GanLogEntry>,
}

impl GanTrainingLog {
    pub fn discriminator_accuracy(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.discriminator_accuracy)
            .collect()
    }

    pub fn write_csv_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epoch,gen_loss,disc_loss,disc_acc")?;
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{}",
                e.epoch, e.generator_loss, e.discriminator_loss, e.discriminator_accuracy
            )?;
        }
        Ok(())
    }

    /// Writes `epoch,gen_loss,disc_loss,disc_acc` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Trained generator: the network plus the noise it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub spec: NetworkSpec,
    pub state: NetworkState,
    pub noise: NoiseKind,
}

impl Generator {
    /// Freshly initialized (untrained) generator.
    pub fn untrained<R: Rng + ?Sized>(
        noise_dim: usize,
        features: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let spec = generator_spec(noise_dim, features)?;
        let state = NetworkState::init(&spec, rng);
        Ok(Self {
            spec,
            state,
            noise: NoiseKind::StandardNormal,
        })
    }

    pub fn noise_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn feature_count(&self) -> usize {
        self.spec.output_dim()
    }
}

#[derive(Debug, Clone)]
pub struct GanArtifacts {
    pub generator: Generator,
    pub discriminator_spec: NetworkSpec,
    pub discriminator: NetworkState,
    pub log: GanTrainingLog,
}

/// Hooks called after every optimizer update.
pub trait TrainingObserver {
    fn discriminator_updated(&mut self, _epoch: usize) {}
    fn generator_updated(&mut self, _epoch: usize) {}
}

impl TrainingObserver for () {}

/// `n x NOISE_DIM` standard normal draws.
pub fn sample_noise<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    sample_noise_with(NoiseKind::StandardNormal, n, NOISE_DIM, rng)
}

pub fn sample_noise_with<R: Rng + ?Sized>(
    kind: NoiseKind,
    n: usize,
    dim: usize,
    rng: &mut R,
) -> Matrix {
    let values = match kind {
        NoiseKind::StandardNormal => (0..n * dim)
            .map(|_| StandardNormal.sample(&mut *rng))
            .collect(),
        NoiseKind::Uniform => (0..n * dim).map(|_| rng.random::<f64>()).collect(),
    };
    Matrix::from_vec(n, dim, values).expect("sized above")
}

fn check_positive_set(positives: &Dataset) -> Result<()> {
    if positives.len() < 2 {
        return Err(Error::Precondition(format!(
            "GAN needs at least 2 positive rows, got {}",
            positives.len()
        )));
    }
    if positives.labels.iter().any(|&l| l != 1) {
        return Err(Error::Precondition(
            "GAN training set must contain only label-1 rows".into(),
        ));
    }
    if positives
        .features
        .as_slice()
        .iter()
        .any(|v| !(0.0..=1.0).contains(v))
    {
        return Err(Error::Precondition(
            "GAN training features must lie in [0, 1]".into(),
        ));
    }
    Ok(())
}

pub fn train_gan(positives: &Dataset, config: &GanTrainConfig) -> Result<GanArtifacts> {
    train_gan_observed(positives, config, &mut ())
}

pub fn train_gan_observed(
    positives: &Dataset,
    config: &GanTrainConfig,
    observer: &mut dyn TrainingObserver,
) -> Result<GanArtifacts> {
    config.validate()?;
    check_positive_set(positives)?;

    let features = positives.feature_count();
    let g_spec = generator_spec(config.noise_dim, features)?;
    let d_spec = discriminator_spec(features, config.dropout)?;
    let mut rng = seeded_rng(config.seed);
    let mut g_state = NetworkState::init(&g_spec, &mut rng);
    let mut d_state = NetworkState::init(&d_spec, &mut rng);
    let mut g_opt = Adam::new(config.learning_rate);
    let mut d_opt = Adam::new(config.learning_rate);

    let batch = config.batch_size.min(positives.len());
    let real_fake_targets = Matrix::from_vec(
        2 * batch,
        1,
        (0..2 * batch)
            .map(|i| if i < batch { 1.0 } else { 0.0 })
            .collect(),
    )?;
    let all_real = Matrix::filled(batch, 1, 1.0);

    let mut log = GanTrainingLog::default();
    for epoch in 1..=config.epochs {
        // discriminator: real rows labelled 1, generated rows labelled 0
        let picked = index::sample(&mut rng, positives.len(), batch).into_vec();
        let real = positives.features.select_rows(&picked);
        let noise = sample_noise_with(config.noise, batch, config.noise_dim, &mut rng);
        let (fake, _) = forward(&g_spec, &g_state, &noise, Mode::Train, None)?;
        let mixed = real.vstack(&fake)?;
        let (pred, d_cache) = forward(&d_spec, &d_state, &mixed, Mode::Train, Some(&mut rng))?;
        let d_loss = loss_bce(pred.as_slice(), real_fake_targets.as_slice())?;
        let correct = pred
            .as_slice()
            .iter()
            .zip(real_fake_targets.as_slice())
            .filter(|(p, t)| (**p > 0.5) == (**t == 1.0))
            .count();
        let d_acc = correct as f64 / (2 * batch) as f64;
        let d_grads = backward(
            &d_spec,
            &d_state,
            &d_cache,
            LossKind::BinaryCrossEntropy,
            &real_fake_targets,
        )?;
        d_opt.step(&mut d_state, &d_grads)?;
        observer.discriminator_updated(epoch);

        // generator: push D(G(z)) toward 1 without touching D
        let noise = sample_noise_with(config.noise, batch, config.noise_dim, &mut rng);
        let (fake, g_cache) = forward(&g_spec, &g_state, &noise, Mode::Train, None)?;
        let (pred, d_cache) = forward(&d_spec, &d_state, &fake, Mode::Train, Some(&mut rng))?;
        let g_loss = loss_bce(pred.as_slice(), all_real.as_slice())?;
        let (_, fake_grad) = backward_with_input_grad(
            &d_spec,
            &d_state,
            &d_cache,
            LossKind::BinaryCrossEntropy,
            &all_real,
        )?;
        let (g_grads, _) = backward_from_output_grad(&g_spec, &g_state, &g_cache, fake_grad)?;
        absorb_batch_statistics(&mut g_state, &g_cache);
        g_opt.step(&mut g_state, &g_grads)?;
        observer.generator_updated(epoch);

        if epoch % config.log_every == 0 || epoch == config.epochs {
            log.entries.push(GanLogEntry {
                epoch,
                generator_loss: g_loss,
                discriminator_loss: d_loss,
                discriminator_accuracy: d_acc,
            });
        }
    }

    if !g_state.is_finite() || !d_state.is_finite() {
        return Err(Error::Internal(
            "GAN parameters diverged to non-finite values".into(),
        ));
    }

    // replace the moving averages with statistics of the final generator
    let noise = sample_noise_with(config.noise, FINALIZE_ROWS, config.noise_dim, &mut rng);
    finalize_batchnorm(&g_spec, &mut g_state, &noise)?;

    Ok(GanArtifacts {
        generator: Generator {
            spec: g_spec,
            state: g_state,
            noise: config.noise,
        },
        discriminator_spec: d_spec,
        discriminator: d_state,
        log,
    })
}

/// Sets every batchnorm's running mean/variance to the statistics of `input`.
fn finalize_batchnorm(spec: &NetworkSpec, state: &mut NetworkState, input: &Matrix) -> Result<()> {
    let (_, cache) = forward(spec, state, input, Mode::Train, None)?;
    for (i, params) in state.layers.iter_mut().enumerate() {
        if let LayerParams::BatchNorm(bn) = params {
            let x = cache.layer_input(i);
            let n = x.rows() as f64;
            let mean: Vec<f64> = x.column_sums().into_iter().map(|s| s / n).collect();
            let mut var = vec![0.0; x.cols()];
            for row in x.row_iter() {
                for ((v, xv), m) in var.iter_mut().zip(row).zip(&mean) {
                    *v += (xv - m) * (xv - m);
                }
            }
            bn.running_mean = mean;
            bn.running_var = var.into_iter().map(|v| v / n).collect();
        }
    }
    Ok(())
}

/// Samples `n` synthetic rows in inference mode. Values lie strictly in (0, 1)
/// except where the sigmoid rounds to an endpoint, which is nudged inward.
pub fn generate<R: Rng + ?Sized>(generator: &Generator, n: usize, rng: &mut R) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::Precondition("cannot generate 0 rows".into()));
    }
    let noise = sample_noise_with(generator.noise, n, generator.noise_dim(), rng);
    let mut out = infer(&generator.spec, &generator.state, &noise)?;
    // f64 sigmoid rounds to exactly 1.0 above ~37; keep the open-interval contract
    for v in out.as_mut_slice() {
        *v = v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    }
    Ok(out)
}

/// Writes generated rows with header `f0,f1,...`.
pub fn write_samples_csv(path: impl AsRef<Path>, samples: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    let header: Vec<String> = (0..samples.cols()).map(|i| format!("f{i}")).collect();
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in samples.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}
