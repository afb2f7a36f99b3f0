//! End-to-end runner. Each balancing mode gets one training set, shared by
//! every classifier; all evaluation uses the same held-out test set.

mod output;
mod seed;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

pub use output::{emit_outputs, format_metrics_csv, METRICS_HEADER};
pub use seed::derive_seed;

use crate::augment::{gan_augment, isolate_positives, random_oversample, AugmentedDataset};
use crate::classifiers::{
    predict_label, predict_score, save_model, train, Classifier, ModelKind, TrainConfig,
};
use crate::data::{load_csv_with, preprocess, Dataset, LoadOptions, Prepared, SplitSpec};
use crate::gan::{generate, train_gan, write_samples_csv, GanArtifacts, GanTrainConfig};
use crate::metrics::{compute_metrics, confusion, roc_auc, MetricsReport, RocCurve};
use crate::{seeded_rng, Error, Result};

/// How the training set is balanced before the classifiers see it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AugmentMode {
    Raw,
    Oversample,
    Gan,
}

impl AugmentMode {
    pub const ALL: [AugmentMode; 3] = [AugmentMode::Raw, AugmentMode::Oversample, AugmentMode::Gan];

    pub fn name(&self) -> &'static str {
        match self {
            AugmentMode::Raw => "raw",
            AugmentMode::Oversample => "oversample",
            AugmentMode::Gan => "gan",
        }
    }
}

impl fmt::Display for AugmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AugmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AugmentMode::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "unknown mode {s:?}; expected raw, oversample or gan"
                ))
            })
    }
}

/// Optional per-run overrides of the classifier defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainOverrides {
    pub mlp_epochs: Option<usize>,
    pub mlp_learning_rate: Option<f64>,
    pub linear_epochs: Option<usize>,
    pub linear_learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: Option<usize>,
    pub svm_lambda: Option<f64>,
}

impl TrainOverrides {
    /// Defaults for `kind` with the overrides applied and the seed set.
    pub fn config_for(&self, kind: ModelKind, seed: u64) -> TrainConfig {
        let mut c = TrainConfig::for_model(kind);
        c.seed = seed;
        match kind {
            ModelKind::Mlp => {
                c.epochs = self.mlp_epochs.unwrap_or(c.epochs);
                c.learning_rate = self.mlp_learning_rate.unwrap_or(c.learning_rate);
            }
            ModelKind::Svm | ModelKind::LogisticRegression => {
                c.epochs = self.linear_epochs.unwrap_or(c.epochs);
                c.learning_rate = self.linear_learning_rate.unwrap_or(c.learning_rate);
            }
            ModelKind::DecisionTree => {}
        }
        c.batch_size = self.batch_size.unwrap_or(c.batch_size);
        c.max_depth = self.max_depth.unwrap_or(c.max_depth);
        c.min_leaf = self.min_leaf.unwrap_or(c.min_leaf);
        c.lambda = self.svm_lambda.unwrap_or(c.lambda);
        c
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data_path: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub modes: Vec<AugmentMode>,
    pub models: Vec<ModelKind>,
    pub split: SplitSpec,
    pub load: LoadOptions,
    /// The seed field is ignored; the GAN seed is derived from `seed`.
    pub gan: GanTrainConfig,
    pub train: TrainOverrides,
    pub dump_augmented: bool,
    pub save_models: bool,
    /// Train the classifiers of one mode on separate threads.
    pub parallel: bool,
    /// Stage messages on stderr.
    pub verbose: bool,
}

impl ExperimentConfig {
    /// Full-scale defaults: all modes, all models, 10000/5000 split, 10000 GAN epochs.
    pub fn new(data_path: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_path: data_path.into(),
            out_dir: out_dir.into(),
            seed: 0,
            modes: AugmentMode::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            split: SplitSpec::default(),
            load: LoadOptions::default(),
            gan: GanTrainConfig::default(),
            train: TrainOverrides::default(),
            dump_augmented: false,
            save_models: false,
            parallel: true,
            verbose: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() || self.models.is_empty() {
            return Err(Error::Precondition(
                "at least one mode and one model are required".into(),
            ));
        }
        self.split.validate()?;
        self.gan.validate()?;
        for &kind in &self.models {
            self.train.config_for(kind, 0).validate()?;
        }
        Ok(())
    }

    fn seed_for(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }
}

/// Outcome of one (mode, model) pair.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub mode: AugmentMode,
    pub model: ModelKind,
    /// Error message when this pair failed.
    pub outcome: std::result::Result<Evaluation, String>,
    /// Training plus evaluation wall-clock time.
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub metrics: MetricsReport,
    pub roc: RocCurve,
}

impl RunResult {
    pub fn metrics(&self) -> Option<&MetricsReport> {
        self.outcome.as_ref().ok().map(|e| &e.metrics)
    }

    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// Everything a run produced, besides what was written to disk.
#[derive(Debug)]
pub struct RunReport {
    pub results: Vec<RunResult>,
    pub gan_log: Option<crate::gan::GanTrainingLog>,
    /// Training-set sizes per mode, after balancing.
    pub training_sizes: Vec<(AugmentMode, usize)>,
}

impl RunReport {
    pub fn all_ok(&self) -> bool {
        self.results.iter().all(RunResult::is_ok)
    }
}

/// Creates `dir` and proves a file can be written there.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".fraudgan-write-probe");
    std::fs::write(&probe, b"ok").map_err(|e| Error::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn say(config: &ExperimentConfig, msg: impl AsRef<str>) {
    if config.verbose {
        eprintln!("[fraudgan] {}", msg.as_ref());
    }
}

/// Loads the CSV and runs the fixed preprocessing pipeline.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let table = load_csv_with(&config.data_path, &config.load)
        .map_err(|e| e.context(format!("loading {}", config.data_path.display())))?;
    say(
        config,
        format!(
            "loaded {} rows ({} positive)",
            table.len(),
            table.positive_count()
        ),
    );
    let mut rng = seeded_rng(config.seed_for("split"));
    preprocess(&table, &config.split, &mut rng).map_err(|e| e.context("preprocessing"))
}

fn gan_config(config: &ExperimentConfig) -> GanTrainConfig {
    GanTrainConfig {
        seed: config.seed_for("gan"),
        ..config.gan.clone()
    }
}

/// Trains the GAN on the positives of `train`.
pub fn train_minority_gan(config: &ExperimentConfig, train: &Dataset) -> Result<GanArtifacts> {
    let positives = isolate_positives(train)?;
    train_gan(&positives, &gan_config(config))
}

fn evaluate(model: &Classifier, test: &Dataset) -> Result<Evaluation> {
    let scores = predict_score(model, &test.features)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Internal(
            "classifier produced non-finite scores".into(),
        ));
    }
    let labels = predict_label(model, &test.features, 0.5)?;
    let cm = confusion(&test.labels, &labels)?;
    let (roc, auc) = roc_auc(&test.labels, &scores)?;
    Ok(Evaluation {
        metrics: compute_metrics(&cm, auc)?,
        roc,
    })
}

fn fit_and_evaluate(
    config: &ExperimentConfig,
    kind: ModelKind,
    train_set: &Dataset,
    test: &Dataset,
) -> (Result<(Classifier, Evaluation)>, f64) {
    let started = Instant::now();
    let train_config = config
        .train
        .config_for(kind, config.seed_for(&format!("classifier/{kind}")));
    let outcome = train(kind, train_set, &train_config).and_then(|model| {
        let eval = evaluate(&model, test)?;
        Ok((model, eval))
    });
    (outcome, started.elapsed().as_secs_f64())
}

/// Runs every requested (mode, model) pair and writes all outputs to `out_dir`.
///
/// Failures inside a mode or a model are recorded in the corresponding results
/// and do not stop the remaining pairs; only setup failures (output directory,
/// data loading, preprocessing) return `Err`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    ensure_writable(&config.out_dir)?;
    let prepared = prepare(config)?;
    let train_set = &prepared.train;
    let test = &prepared.test;
    say(
        config,
        format!(
            "train {} rows ({} positive), test {} rows ({} positive)",
            train_set.len(),
            train_set.positive_count(),
            test.len(),
            test.positive_count()
        ),
    );

    let mut results = Vec::new();
    let mut gan_log = None;
    let mut training_sizes = Vec::new();
    let mut modes = config.modes.clone();
    modes.dedup();
    let mut models = config.models.clone();
    models.dedup();

    for &mode in &modes {
        say(config, format!("mode {mode}: building training set"));
        let augmented: Result<AugmentedDataset> = match mode {
            AugmentMode::Raw => Ok(AugmentedDataset {
                data: train_set.clone(),
                provenance: vec![crate::augment::Provenance::Original; train_set.len()],
            }),
            AugmentMode::Oversample => {
                random_oversample(train_set, &mut seeded_rng(config.seed_for("oversample")))
            }
            AugmentMode::Gan => train_minority_gan(config, train_set).and_then(|artifacts| {
                artifacts
                    .log
                    .write_csv(config.out_dir.join("gan_training_log.csv"))?;
                let out = gan_augment(
                    train_set,
                    &artifacts.generator,
                    &mut seeded_rng(config.seed_for("gan-augment")),
                );
                gan_log = Some(artifacts.log);
                out
            }),
        };
        let augmented = match augmented {
            Ok(a) => a,
            Err(e) => {
                let msg = e.context(format!("mode {mode}")).to_string();
                say(config, &msg);
                for &model in &models {
                    results.push(RunResult {
                        mode,
                        model,
                        outcome: Err(msg.clone()),
                        seconds: 0.0,
                    });
                }
                continue;
            }
        };
        training_sizes.push((mode, augmented.len()));
        if config.dump_augmented && mode != AugmentMode::Raw {
            augmented.write_csv(config.out_dir.join(format!("train_augmented_{mode}.csv")))?;
        }

        say(
            config,
            format!(
                "mode {mode}: training {} classifiers on {} rows",
                models.len(),
                augmented.len()
            ),
        );
        let fitted: Vec<(Result<(Classifier, Evaluation)>, f64)> = if config.parallel {
            std::thread::scope(|scope| {
                let handles: Vec<_> = models
                    .iter()
                    .map(|&kind| {
                        let data = &augmented.data;
                        scope.spawn(move || fit_and_evaluate(config, kind, data, test))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| match h.join() {
                        Ok(r) => r,
                        Err(_) => (
                            Err(Error::Internal("classifier thread panicked".into())),
                            0.0,
                        ),
                    })
                    .collect()
            })
        } else {
            models
                .iter()
                .map(|&kind| fit_and_evaluate(config, kind, &augmented.data, test))
                .collect()
        };

        for (&model, (outcome, seconds)) in models.iter().zip(fitted) {
            let outcome = match outcome {
                Ok((classifier, eval)) => {
                    if config.save_models {
                        save_model(
                            &classifier,
                            config.out_dir.join(format!("model_{mode}_{model}.txt")),
                        )?;
                    }
                    say(
                        config,
                        format!(
                            "mode {mode} model {model}: f1 {:.4} auc {:.4} ({seconds:.1}s)",
                            eval.metrics.f1, eval.metrics.auc_roc
                        ),
                    );
                    Ok(eval)
                }
                Err(e) => {
                    let msg = e.context(format!("mode {mode}, model {model}")).to_string();
                    say(config, &msg);
                    Err(msg)
                }
            };
            results.push(RunResult {
                mode,
                model,
                outcome,
                seconds,
            });
        }
    }

    emit_outputs(&results, &config.out_dir)?;
    Ok(RunReport {
        results,
        gan_log,
        training_sizes,
    })
}

/// Trains the GAN on the split's positives and writes `n` generated rows to
/// `generated_samples.csv` plus the training log. Returns the samples.
pub fn synth(config: &ExperimentConfig, n: usize) -> Result<crate::nn::Matrix> {
    config.split.validate()?;
    config.gan.validate()?;
    if n == 0 {
        return Err(Error::Precondition("--n must be at least 1".into()));
    }
    ensure_writable(&config.out_dir)?;
    let prepared = prepare(config)?;
    say(config, "training GAN");
    let artifacts = train_minority_gan(config, &prepared.train)?;
    artifacts
        .log
        .write_csv(config.out_dir.join("gan_training_log.csv"))?;
    let samples = generate(
        &artifacts.generator,
        n,
        &mut seeded_rng(config.seed_for("synth")),
    )?;
    write_samples_csv(config.out_dir.join("generated_samples.csv"), &samples)?;
    Ok(samples)
}
