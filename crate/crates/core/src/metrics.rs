//! Confusion matrix, the six threshold/ranking scores, and ROC curves.
//!
//! Any ratio with a zero denominator is reported as 0.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Positive class is 1.
pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} truths vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fn_ += 1,
            _ => {
                return Err(Error::Precondition(format!(
                    "labels must be 0 or 1, got truth {t} / prediction {p}"
                )))
            }
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    /// Fraction in `[0, 1]`; rendered as a percentage only when written out.
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub specificity: f64,
    pub auc_roc: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(cm: &ConfusionMatrix, auc: f64) -> Result<MetricsReport> {
    if cm.total() == 0 {
        return Err(Error::Precondition("empty confusion matrix".into()));
    }
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MetricsReport {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        recall,
        precision,
        f1,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        auc_roc: auc,
    })
}

/// `(fpr, tpr)` points from `(0, 0)` to `(1, 1)`, both coordinates non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

/// ROC curve by sweeping each distinct score as a threshold (descending) and
/// the trapezoidal area under it. Tied scores produce a diagonal segment, so
/// the area equals the Mann-Whitney statistic with ties counted as one half.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<(RocCurve, f64)> {
    if y_true.len() != scores.len() {
        return Err(Error::Shape(format!(
            "{} truths vs {} scores",
            y_true.len(),
            scores.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Precondition("NaN score".into()));
    }
    let positives = y_true.iter().filter(|&&t| t == 1).count();
    let negatives = y_true.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedAuc);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![(0.0, 0.0)];
    let mut auc = 0.0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (prev_fpr, prev_tpr) = *points.last().expect("starts at origin");
        let point = (fp as f64 / n, tp as f64 / p);
        auc += (point.0 - prev_fpr) * (point.1 + prev_tpr) / 2.0;
        points.push(point);
    }
    Ok((RocCurve { points }, auc))
}
