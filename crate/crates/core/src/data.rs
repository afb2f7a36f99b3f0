//! Transaction CSV loading and the fixed preprocessing pipeline. Scaling is
//! two-stage: standard, then min-max.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::nn::Matrix;
use crate::{Error, Result};

pub const DEFAULT_LABEL_COLUMN: &str = "Class";
pub const DEFAULT_FEATURE_COUNT: usize = 30;

/// Parsed CSV: every non-label column is a feature, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub features: Matrix,
    pub labels: Vec<u8>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub label_column: String,
    /// Required number of feature columns; `None` accepts any width ≥ 1.
    pub feature_count: Option<usize>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
            feature_count: Some(DEFAULT_FEATURE_COUNT),
        }
    }
}

/// Loads a labelled CSV with the default options (`Class` label, 30 features).
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawTable> {
    load_csv_with(path, &LoadOptions::default())
}

pub fn load_csv_with(path: impl AsRef<Path>, options: &LoadOptions) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, options)
}

/// Parses CSV text from any reader. Row numbers in errors are 1-based data rows.
pub fn read_csv<R: std::io::Read>(reader: R, options: &LoadOptions) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| *h == options.label_column)
        .ok_or_else(|| {
            Error::Schema(format!(
                "label column {:?} not found in header {headers:?}",
                options.label_column
            ))
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }
    if let Some(expected) = options.feature_count {
        if feature_names.len() != expected {
            return Err(Error::Schema(format!(
                "expected {expected} feature columns, found {}",
                feature_names.len()
            )));
        }
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("{} fields, header has {}", record.len(), headers.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let parsed: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[c].clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if !parsed.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[c].clone(),
                    message: format!("{cell:?} is not finite"),
                });
            }
            if c == label_idx {
                let label = match parsed {
                    0.0 => 0,
                    1.0 => 1,
                    _ => {
                        return Err(Error::Parse {
                            row,
                            column: headers[c].clone(),
                            message: format!("label {cell:?} is not 0 or 1"),
                        })
                    }
                };
                labels.push(label);
            } else {
                values.push(parsed);
            }
        }
    }
    let features = Matrix::from_vec(labels.len(), feature_names.len(), values)?;
    Ok(RawTable {
        feature_names,
        features,
        labels,
    })
}

fn row_key(row: &[f64], label: u8) -> Vec<u64> {
    // `+ 0.0` folds -0.0 into 0.0 so keys follow f64 equality
    row.iter()
        .map(|v| (v + 0.0).to_bits())
        .chain(std::iter::once(label as u64))
        .collect()
}

/// Drops rows equal (features and label) to an earlier row; survivors keep their order.
pub fn dedup(table: &RawTable) -> RawTable {
    let mut seen = HashSet::with_capacity(table.len());
    let keep: Vec<usize> = (0..table.len())
        .filter(|&i| seen.insert(row_key(table.features.row(i), table.labels[i])))
        .collect();
    RawTable {
        feature_names: table.feature_names.clone(),
        features: table.features.select_rows(&keep),
        labels: keep.iter().map(|&i| table.labels[i]).collect(),
    }
}

/// Feature matrix plus binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows vs {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Precondition(format!("label {bad} is not 0 or 1")));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols()
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn negative_count(&self) -> usize {
        self.len() - self.positive_count()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Labels as `0.0` / `1.0` in an `n x 1` matrix.
    pub fn label_column(&self) -> Matrix {
        Matrix::from_vec(
            self.len(),
            1,
            self.labels.iter().map(|&l| l as f64).collect(),
        )
        .expect("one value per row")
    }
}

/// Class counts for the stratified subsample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_size: usize,
    pub test_size: usize,
    pub train_positives: usize,
    pub test_positives: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_size: 10_000,
            test_size: 5_000,
            train_positives: 315,
            test_positives: 158,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train_positives > self.train_size || self.test_positives > self.test_size {
            return Err(Error::Precondition(format!(
                "positive counts exceed set sizes in {self:?}"
            )));
        }
        Ok(())
    }
}

/// Draws the train/test subsample with exact per-class counts.
///
/// Positives are shuffled and dealt to train then test; negatives are sampled
/// without replacement to fill the remaining slots. Each side keeps the
/// original row order.
pub fn stratified_split<R: Rng + ?Sized>(
    table: &RawTable,
    spec: &SplitSpec,
    rng: &mut R,
) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let (mut positives, mut negatives): (Vec<usize>, Vec<usize>) =
        (0..table.len()).partition(|&i| table.labels[i] == 1);

    let wanted_pos = spec.train_positives + spec.test_positives;
    if positives.len() < wanted_pos {
        return Err(Error::Capacity {
            what: "positive rows",
            requested: wanted_pos,
            available: positives.len(),
        });
    }
    let train_neg = spec.train_size - spec.train_positives;
    let test_neg = spec.test_size - spec.test_positives;
    if negatives.len() < train_neg + test_neg {
        return Err(Error::Capacity {
            what: "negative rows",
            requested: train_neg + test_neg,
            available: negatives.len(),
        });
    }

    positives.shuffle(rng);
    negatives.shuffle(rng);

    let mut train: Vec<usize> = positives[..spec.train_positives]
        .iter()
        .chain(&negatives[..train_neg])
        .copied()
        .collect();
    let mut test: Vec<usize> = positives[spec.train_positives..wanted_pos]
        .iter()
        .chain(&negatives[train_neg..train_neg + test_neg])
        .copied()
        .collect();
    train.sort_unstable();
    test.sort_unstable();

    let to_dataset = |idx: &[usize]| Dataset {
        features: table.features.select_rows(idx),
        labels: idx.iter().map(|&i| table.labels[i]).collect(),
    };
    Ok((to_dataset(&train), to_dataset(&test)))
}

/// Variance floor below which a feature is treated as constant.
const DEGENERATE_SCALE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StandardScalerParams {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
}

pub fn fit_standard(train: &Dataset) -> StandardScalerParams {
    let x = &train.features;
    let n = x.rows().max(1) as f64;
    let mean: Vec<f64> = x.column_sums().into_iter().map(|s| s / n).collect();
    let mut var = vec![0.0; x.cols()];
    for row in x.row_iter() {
        for ((v, &xv), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (xv - m) * (xv - m);
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    StandardScalerParams { mean, std }
}

impl StandardScalerParams {
    pub fn apply(&self, data: &Dataset) -> Dataset {
        let mut features = data.features.clone();
        for r in 0..features.rows() {
            for (c, v) in features.row_mut(r).iter_mut().enumerate() {
                let s = if self.std[c] < DEGENERATE_SCALE {
                    1.0
                } else {
                    self.std[c]
                };
                *v = (*v - self.mean[c]) / s;
            }
        }
        Dataset {
            features,
            labels: data.labels.clone(),
        }
    }
}

pub fn apply_standard(params: &StandardScalerParams, data: &Dataset) -> Dataset {
    params.apply(data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_minmax(train: &Dataset) -> MinMaxParams {
    let cols = train.feature_count();
    let mut min = vec![f64::INFINITY; cols];
    let mut max = vec![f64::NEG_INFINITY; cols];
    for row in train.features.row_iter() {
        for (c, &v) in row.iter().enumerate() {
            min[c] = min[c].min(v);
            max[c] = max[c].max(v);
        }
    }
    if train.is_empty() {
        min.iter_mut().for_each(|v| *v = 0.0);
        max.iter_mut().for_each(|v| *v = 0.0);
    }
    MinMaxParams { min, max }
}

impl MinMaxParams {
    /// `(x - min) / (max - min)` clamped to `[0, 1]`; constant features map to 0.
    pub fn apply(&self, data: &Dataset) -> Dataset {
        let mut features = data.features.clone();
        for r in 0..features.rows() {
            for (c, v) in features.row_mut(r).iter_mut().enumerate() {
                let range = self.max[c] - self.min[c];
                *v = if range < DEGENERATE_SCALE {
                    0.0
                } else {
                    ((*v - self.min[c]) / range).clamp(0.0, 1.0)
                };
            }
        }
        Dataset {
            features,
            labels: data.labels.clone(),
        }
    }
}

pub fn apply_minmax(params: &MinMaxParams, data: &Dataset) -> Dataset {
    params.apply(data)
}

/// Output of [`preprocess`].
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    /// Train/test before any scaling, for auditing disjointness.
    pub raw_train: Dataset,
    pub raw_test: Dataset,
    pub standard: StandardScalerParams,
    pub minmax: MinMaxParams,
}

/// Fixed pipeline: dedup, split, standard scaling, min-max scaling.
/// Both scalers are fitted on the training side only.
pub fn preprocess<R: Rng + ?Sized>(
    table: &RawTable,
    spec: &SplitSpec,
    rng: &mut R,
) -> Result<Prepared> {
    let unique = dedup(table);
    let (raw_train, raw_test) = stratified_split(&unique, spec, rng)?;
    let standard = fit_standard(&raw_train);
    let train_std = standard.apply(&raw_train);
    let test_std = standard.apply(&raw_test);
    let minmax = fit_minmax(&train_std);
    let train = minmax.apply(&train_std);
    let test = minmax.apply(&test_std);
    Ok(Prepared {
        train,
        test,
        raw_train,
        raw_test,
        standard,
        minmax,
    })
}
