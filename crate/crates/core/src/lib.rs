//! GAN-based minority oversampling for imbalanced tabular binary classification.
//!
//! The crate trains a small generative adversarial network on the positive
//! (minority) rows of a training set, samples synthetic positives until both
//! classes are the same size, and compares four downstream classifiers trained
//! on the augmented set against plain random oversampling and the raw data.
//!
//! Module map:
//!
//! - [`nn`]: dense-network engine (forward/backward, losses, batchnorm, dropout, Adam)
//! - [`data`]: CSV ingestion, deduplication, stratified split, scaling
//! - [`gan`]: generator/discriminator training and sampling
//! - [`augment`]: random oversampling and GAN-sample merging
//! - [`classifiers`]: logistic regression, linear SVM, CART tree, MLP
//! - [`metrics`]: confusion matrix, threshold metrics, ROC/AUC
//! - [`experiment`]: end-to-end runner and output files

pub mod augment;
pub mod classifiers;
pub mod data;
pub mod error;
pub mod experiment;
pub mod gan;
pub mod metrics;
pub mod nn;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded random source used everywhere in the pipeline.
///
/// ChaCha8 gives the same stream on every platform, which the determinism
/// guarantees of the runner depend on.
pub type Rng = ChaCha8Rng;

/// Builds the crate's random source from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
