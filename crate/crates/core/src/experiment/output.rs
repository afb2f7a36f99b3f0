use std::path::Path;

use super::RunResult;
use crate::{Error, Result};

pub const METRICS_HEADER: [&str; 8] = [
    "mode",
    "model",
    "accuracy_pct",
    "recall",
    "precision",
    "f1",
    "specificity",
    "auc_roc",
];

/// Renders `metrics.csv`. A trailing `status` column is added only when some
/// pair failed; failed rows leave the metric cells empty and carry the message.
pub fn format_metrics_csv(results: &[RunResult]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::Precondition("no results to write".into()));
    }
    let with_status = results.iter().any(|r| !r.is_ok());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = METRICS_HEADER.to_vec();
    if with_status {
        header.push("status");
    }
    w.write_record(&header)?;
    for r in results {
        let mut row = vec![r.mode.to_string(), r.model.to_string()];
        match &r.outcome {
            Ok(e) => {
                let m = &e.metrics;
                row.push(format!("{:.2}", m.accuracy * 100.0));
                for v in [m.recall, m.precision, m.f1, m.specificity, m.auc_roc] {
                    row.push(format!("{v:.4}"));
                }
                if with_status {
                    row.push("ok".into());
                }
            }
            Err(msg) => {
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(format!("error: {msg}"));
            }
        }
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Internal(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Writes `metrics.csv` and one `roc_<mode>_<model>.csv` per successful pair.
pub fn emit_outputs(results: &[RunResult], out_dir: &Path) -> Result<()> {
    let text = format_metrics_csv(results)?;
    let path = out_dir.join("metrics.csv");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    for r in results {
        let Ok(eval) = &r.outcome else { continue };
        let mut body = String::from("fpr,tpr\n");
        for (fpr, tpr) in &eval.roc.points {
            body.push_str(&format!("{fpr},{tpr}\n"));
        }
        let path = out_dir.join(format!("roc_{}_{}.csv", r.mode, r.model));
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ModelKind;
    use crate::experiment::{AugmentMode, Evaluation};
    use crate::metrics::{MetricsReport, RocCurve};

    fn ok(model: ModelKind) -> RunResult {
        RunResult {
            mode: AugmentMode::Gan,
            model,
            outcome: Ok(Evaluation {
                metrics: MetricsReport {
                    accuracy: 0.99876,
                    recall: 0.5,
                    precision: 1.0 / 3.0,
                    f1: 0.4,
                    specificity: 0.99999,
                    auc_roc: 0.75,
                },
                roc: RocCurve {
                    points: vec![(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)],
                },
            }),
            seconds: 1.0,
        }
    }

    #[test]
    fn formats_rows() {
        let text = format_metrics_csv(&[ok(ModelKind::Svm)]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "mode,model,accuracy_pct,recall,precision,f1,specificity,auc_roc"
        );
        assert_eq!(lines[1], "gan,svm,99.88,0.5000,0.3333,0.4000,1.0000,0.7500");
    }

    #[test]
    fn failures_add_status_column() {
        let bad = RunResult {
            mode: AugmentMode::Raw,
            model: ModelKind::Mlp,
            outcome: Err("boom, again".into()),
            seconds: 0.0,
        };
        let text = format_metrics_csv(&[ok(ModelKind::Svm), bad]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].ends_with(",status"));
        assert!(lines[1].ends_with(",ok"));
        assert_eq!(lines[2], "raw,mlp,,,,,,,\"error: boom, again\"");
    }

    #[test]
    fn empty_is_an_error_and_roc_files_are_written() {
        assert!(format_metrics_csv(&[]).is_err());
        let dir = tempfile::tempdir().unwrap();
        emit_outputs(&[ok(ModelKind::DecisionTree)], dir.path()).unwrap();
        let roc = std::fs::read_to_string(dir.path().join("roc_gan_dt.csv")).unwrap();
        assert_eq!(roc, "fpr,tpr\n0,0\n0.5,1\n1,1\n");
    }
}
