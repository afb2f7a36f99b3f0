//! The four downstream classifiers and their scoring interface.
//!
//! Every trainer reshuffles the training rows each epoch from its own seeded
//! random source, so equal seeds give identical models.

mod logistic;
mod mlp;
mod persist;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

pub use logistic::{train_logreg, LogisticModel};
pub use mlp::{mlp_spec, train_mlp, MlpModel, MLP_HIDDEN};
pub use persist::{load_model, save_model};
pub use svm::{train_svm, LinearSvmModel};
pub use tree::{train_tree, DecisionTreeModel, SplitCandidate, TreeNode};

use crate::data::Dataset;
use crate::nn::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Svm,
    DecisionTree,
    LogisticRegression,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Svm,
        ModelKind::DecisionTree,
        ModelKind::LogisticRegression,
        ModelKind::Mlp,
    ];

    /// Short name used on the command line and in output files.
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::DecisionTree => "dt",
            ModelKind::LogisticRegression => "logreg",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "unknown model {s:?}; expected svm, dt, logreg or mlp"
                ))
            })
    }
}

/// Hyperparameters shared by the trainers; each model reads the fields it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// SVM L2 strength.
    pub lambda: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults per model: MLP uses Adam at 1e-5 for 500 epochs, the convex
    /// models 1e-2 for 200 epochs; the tree reads only depth and leaf size.
    pub fn for_model(kind: ModelKind) -> Self {
        let (epochs, learning_rate) = match kind {
            ModelKind::Mlp => (500, 1e-5),
            _ => (200, 1e-2),
        };
        Self {
            epochs,
            learning_rate,
            batch_size: 64,
            max_depth: 8,
            min_leaf: 1,
            lambda: 1e-4,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Precondition(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Precondition(format!(
                "regularization must be positive, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.max_depth == 0 || self.min_leaf == 0 {
            return Err(Error::Precondition(
                "epochs, batch size, max depth and min leaf must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Any trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Logistic(LogisticModel),
    Svm(LinearSvmModel),
    Tree(DecisionTreeModel),
    Mlp(MlpModel),
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Logistic(_) => ModelKind::LogisticRegression,
            Classifier::Svm(_) => ModelKind::Svm,
            Classifier::Tree(_) => ModelKind::DecisionTree,
            Classifier::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn feature_count(&self) -> usize {
        match self {
            Classifier::Logistic(m) => m.weights.len(),
            Classifier::Svm(m) => m.weights.len(),
            Classifier::Tree(m) => m.feature_count,
            Classifier::Mlp(m) => m.spec.input_dim(),
        }
    }
}

pub fn train(kind: ModelKind, data: &Dataset, config: &TrainConfig) -> Result<Classifier> {
    Ok(match kind {
        ModelKind::LogisticRegression => Classifier::Logistic(train_logreg(data, config)?),
        ModelKind::Svm => Classifier::Svm(train_svm(data, config)?),
        ModelKind::DecisionTree => Classifier::Tree(train_tree(data, config)?),
        ModelKind::Mlp => Classifier::Mlp(train_mlp(data, config)?),
    })
}

/// Class-1 scores in `[0, 1]`, monotone in each model's raw decision value.
pub fn predict_score(model: &Classifier, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != model.feature_count() {
        return Err(Error::Shape(format!(
            "input has {} features, model was trained on {}",
            x.cols(),
            model.feature_count()
        )));
    }
    match model {
        Classifier::Logistic(m) => Ok(m.scores(x)),
        Classifier::Svm(m) => Ok(m.scores(x)),
        Classifier::Tree(m) => Ok(m.scores(x)),
        Classifier::Mlp(m) => m.scores(x),
    }
}

/// `1` iff the score is strictly above `threshold`.
pub fn predict_label(model: &Classifier, x: &Matrix, threshold: f64) -> Result<Vec<u8>> {
    Ok(predict_score(model, x)?
        .into_iter()
        .map(|s| u8::from(s > threshold))
        .collect())
}

pub(crate) fn require_both_classes(data: &Dataset) -> Result<()> {
    let pos = data.positive_count();
    if pos == 0 || pos == data.len() {
        return Err(Error::DegenerateData(format!(
            "training needs both classes, got {pos} positive of {} rows",
            data.len()
        )));
    }
    Ok(())
}

/// A fresh permutation of `0..n` cut into consecutive batches.
pub(crate) fn shuffled_batches<R: Rng + ?Sized>(
    n: usize,
    batch: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch.max(1)).map(<[usize]>::to_vec).collect()
}
