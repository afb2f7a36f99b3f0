use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fraudgan::classifiers::ModelKind;
use fraudgan::experiment::{self, AugmentMode, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "fraudgan",
    version,
    about = "GAN-based minority oversampling for fraud detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every classifier on every balancing mode and write metrics.
    Run(RunArgs),
    /// Train the GAN on the training positives and write generated rows.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// Input CSV with 30 feature columns and a label column.
    #[arg(long)]
    data: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "Class")]
    label_column: String,
    /// Accept any number of feature columns instead of exactly 30.
    #[arg(long)]
    any_width: bool,
    #[arg(long, default_value_t = 10000)]
    gan_epochs: usize,
    #[arg(long, default_value_t = 1e-5)]
    gan_lr: f64,
    /// Write one GAN log row every this many epochs.
    #[arg(long, default_value_t = 1)]
    gan_log_every: usize,
    #[arg(long, default_value_t = 10000)]
    train_size: usize,
    #[arg(long, default_value_t = 5000)]
    test_size: usize,
    #[arg(long, default_value_t = 315)]
    train_pos: usize,
    #[arg(long, default_value_t = 158)]
    test_pos: usize,
    /// Print stage progress to stderr.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated subset of raw,oversample,gan.
    #[arg(long, value_delimiter = ',', default_value = "raw,oversample,gan")]
    modes: Vec<AugmentMode>,
    /// Comma-separated subset of svm,dt,logreg,mlp.
    #[arg(long, value_delimiter = ',', default_value = "svm,dt,logreg,mlp")]
    models: Vec<ModelKind>,
    #[arg(long)]
    mlp_epochs: Option<usize>,
    #[arg(long)]
    mlp_lr: Option<f64>,
    /// Epochs for the SVM and logistic regression.
    #[arg(long)]
    linear_epochs: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Write the balanced training sets as CSV.
    #[arg(long)]
    dump_augmented: bool,
    /// Write each trained classifier as a text model file.
    #[arg(long)]
    save_models: bool,
    /// Train classifiers one at a time.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Number of rows to generate.
    #[arg(long)]
    n: usize,
}

fn base_config(c: &Common) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(&c.data, &c.out);
    config.seed = c.seed;
    config.load.label_column = c.label_column.clone();
    if c.any_width {
        config.load.feature_count = None;
    }
    config.gan.epochs = c.gan_epochs;
    config.gan.learning_rate = c.gan_lr;
    config.gan.log_every = c.gan_log_every;
    config.split.train_size = c.train_size;
    config.split.test_size = c.test_size;
    config.split.train_positives = c.train_pos;
    config.split.test_positives = c.test_pos;
    config.verbose = c.verbose;
    config
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let mut config = base_config(&args.common);
            config.modes = args.modes;
            config.models = args.models;
            config.train.mlp_epochs = args.mlp_epochs;
            config.train.mlp_learning_rate = args.mlp_lr;
            config.train.linear_epochs = args.linear_epochs;
            config.train.max_depth = args.max_depth;
            config.dump_augmented = args.dump_augmented;
            config.save_models = args.save_models;
            config.parallel = !args.sequential;
            match experiment::run(&config) {
                Ok(report) if report.all_ok() => ExitCode::SUCCESS,
                Ok(report) => {
                    for r in &report.results {
                        if let Err(msg) = &r.outcome {
                            eprintln!("error: {msg}");
                        }
                    }
                    ExitCode::FAILURE
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Synth(args) => {
            let config = base_config(&args.common);
            match experiment::synth(&config, args.n) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
