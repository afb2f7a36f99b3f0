mod common;

use std::path::Path;
use std::process::Command;

use fraudgan::classifiers::{load_model, predict_score, ModelKind};
use fraudgan::data::SplitSpec;
use fraudgan::experiment::{prepare, run, synth, AugmentMode, ExperimentConfig};
use fraudgan::Error;

fn small_config(data: &Path, out: &Path) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(data, out);
    config.seed = 7;
    config.split = SplitSpec {
        train_size: 600,
        test_size: 300,
        train_positives: 30,
        test_positives: 15,
    };
    config.gan.epochs = 40;
    config.gan.log_every = 10;
    config.train.mlp_epochs = Some(3);
    config.train.linear_epochs = Some(5);
    config
}

fn data_file(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("tx.csv");
    common::write_synthetic_csv(&path, 1200, 0.05, 3);
    path
}

#[test]
fn full_grid_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    let out = dir.path().join("out");
    let mut config = small_config(&data, &out);
    config.dump_augmented = true;
    config.save_models = true;
    let report = run(&config).unwrap();
    assert!(report.all_ok());
    assert_eq!(report.results.len(), 12);

    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 13);
    assert_eq!(
        metrics.lines().next().unwrap(),
        "mode,model,accuracy_pct,recall,precision,f1,specificity,auc_roc"
    );
    for mode in AugmentMode::ALL {
        for model in ModelKind::ALL {
            assert!(out.join(format!("roc_{mode}_{model}.csv")).is_file());
            assert!(out.join(format!("model_{mode}_{model}.txt")).is_file());
        }
    }
    let log = std::fs::read_to_string(out.join("gan_training_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + 4);
    assert_eq!(report.gan_log.as_ref().unwrap().entries.len(), 4);

    // both balanced modes double the negative count
    let sizes: Vec<_> = report.training_sizes.clone();
    assert_eq!(
        sizes,
        vec![
            (AugmentMode::Raw, 600),
            (AugmentMode::Oversample, 2 * 570),
            (AugmentMode::Gan, 2 * 570)
        ]
    );
    for mode in ["oversample", "gan"] {
        let text =
            std::fs::read_to_string(out.join(format!("train_augmented_{mode}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 1 + 1140);
    }

    // a reloaded model scores the test set exactly as during the run
    let prepared = prepare(&config).unwrap();
    let model = load_model(out.join("model_gan_logreg.txt")).unwrap();
    let scores = predict_score(&model, &prepared.test.features).unwrap();
    assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
}

#[test]
fn minimal_run_trains_no_gan() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    let out = dir.path().join("out");
    let mut config = small_config(&data, &out);
    config.modes = vec![AugmentMode::Raw];
    config.models = vec![ModelKind::DecisionTree];
    let report = run(&config).unwrap();
    assert_eq!(report.results.len(), 1);
    assert!(report.gan_log.is_none());
    assert!(!out.join("gan_training_log.csv").exists());
    assert!(out.join("roc_raw_dt.csv").is_file());
}

#[test]
fn test_set_is_shared_and_untouched_across_modes() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    let config = small_config(&data, dir.path());
    let a = prepare(&config).unwrap();
    let b = prepare(&config).unwrap();
    assert_eq!(a.test, b.test);
    assert_eq!(a.train, b.train);
}

#[test]
fn unwritable_output_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    // a regular file where the output directory should be
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "x").unwrap();
    let config = small_config(&data, &blocker.join("out"));
    assert!(matches!(run(&config), Err(Error::Io { .. })));
}

#[test]
fn split_too_large_is_a_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    let mut config = small_config(&data, &dir.path().join("out"));
    config.split.train_positives = 500;
    config.split.train_size = 900;
    let err = run(&config).unwrap_err();
    assert!(err.to_string().contains("positive rows"), "{err}");
}

#[test]
fn synth_writes_generated_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    let out = dir.path().join("out");
    let samples = synth(&small_config(&data, &out), 25).unwrap();
    assert_eq!(samples.shape(), (25, 30));
    let text = std::fs::read_to_string(out.join("generated_samples.csv")).unwrap();
    assert_eq!(text.lines().count(), 26);
    assert!(out.join("gan_training_log.csv").is_file());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraudgan"))
}

const SMALL_ARGS: [&str; 12] = [
    "--train-size",
    "600",
    "--test-size",
    "300",
    "--train-pos",
    "30",
    "--test-pos",
    "15",
    "--gan-epochs",
    "20",
    "--seed",
    "3",
];

#[test]
fn cli_run_and_synth() {
    let dir = tempfile::tempdir().unwrap();
    let data = data_file(dir.path());
    let out = dir.path().join("cli");
    let status = cli()
        .args(["run", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .args(SMALL_ARGS)
        .args([
            "--modes",
            "raw,gan",
            "--models",
            "dt,logreg",
            "--mlp-epochs",
            "2",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 5);

    let status = cli()
        .args(["synth", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .args(SMALL_ARGS)
        .args(["--n", "10"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("generated_samples.csv").is_file());
}

#[test]
fn cli_failures_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cli()
        .args(["run", "--data"])
        .arg(dir.path().join("nope.csv"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.csv"));

    let bad_mode = cli()
        .args(["run", "--data", "x.csv", "--out", "o", "--modes", "smote"])
        .output()
        .unwrap();
    assert!(!bad_mode.status.success());
}
