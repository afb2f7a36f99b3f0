//! Class balancing by random duplication or by appending generated positives.
//! Appended rows always follow the untouched original rows.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::data::Dataset;
use crate::gan::{generate, Generator};
use crate::nn::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Original,
    Duplicated,
    Generated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Original => "original",
            Provenance::Duplicated => "duplicated",
            Provenance::Generated => "generated",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDataset {
    pub data: Dataset,
    pub provenance: Vec<Provenance>,
}

impl AugmentedDataset {
    fn unchanged(train: &Dataset) -> Self {
        Self {
            data: train.clone(),
            provenance: vec![Provenance::Original; train.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn appended(&self) -> usize {
        self.provenance
            .iter()
            .filter(|p| **p != Provenance::Original)
            .count()
    }

    /// Header `f0..f{n-1},Class,provenance`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let file = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(file);
        let mut header: Vec<String> = (0..self.data.feature_count())
            .map(|i| format!("f{i}"))
            .collect();
        header.push("Class".into());
        header.push("provenance".into());
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        for ((row, label), prov) in self
            .data
            .features
            .row_iter()
            .zip(&self.data.labels)
            .zip(&self.provenance)
        {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{label},{prov}", cells.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Rows labelled 1, in their original order.
pub fn isolate_positives(train: &Dataset) -> Result<Dataset> {
    let idx: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == 1).collect();
    if idx.is_empty() {
        return Err(Error::EmptyMinority);
    }
    Ok(train.select(&idx))
}

/// Appends uniformly drawn (with replacement) copies of minority rows until both
/// classes have the same count.
pub fn random_oversample<R: Rng + ?Sized>(
    train: &Dataset,
    rng: &mut R,
) -> Result<AugmentedDataset> {
    let pos = train.positive_count();
    let neg = train.negative_count();
    if pos == 0 || neg == 0 {
        return Err(Error::Precondition(format!(
            "oversampling needs both classes, got {pos} positive / {neg} negative"
        )));
    }
    let minority_label = u8::from(pos < neg);
    let minority: Vec<usize> = (0..train.len())
        .filter(|&i| train.labels[i] == minority_label)
        .collect();
    let deficit = pos.abs_diff(neg);
    if deficit == 0 {
        return Ok(AugmentedDataset::unchanged(train));
    }

    let picks: Vec<usize> = (0..deficit)
        .map(|_| minority[rng.random_range(0..minority.len())])
        .collect();
    let extra = train.select(&picks);
    let features = train.features.vstack(&extra.features)?;
    let mut labels = train.labels.clone();
    labels.extend(extra.labels);
    let mut provenance = vec![Provenance::Original; train.len()];
    provenance.extend(std::iter::repeat_n(Provenance::Duplicated, deficit));
    Ok(AugmentedDataset {
        data: Dataset::new(features, labels)?,
        provenance,
    })
}

/// Appends exactly `negatives - positives` generated rows labelled 1.
pub fn gan_augment<R: Rng + ?Sized>(
    train: &Dataset,
    generator: &Generator,
    rng: &mut R,
) -> Result<AugmentedDataset> {
    let pos = train.positive_count();
    let neg = train.negative_count();
    if pos >= neg {
        return Err(Error::NothingToBalance {
            positives: pos,
            negatives: neg,
        });
    }
    if generator.feature_count() != train.feature_count() {
        return Err(Error::Shape(format!(
            "generator emits {} features, training set has {}",
            generator.feature_count(),
            train.feature_count()
        )));
    }
    let deficit = neg - pos;
    let synthetic: Matrix = generate(generator, deficit, rng)?;
    let features = train.features.vstack(&synthetic)?;
    let mut labels = train.labels.clone();
    labels.extend(std::iter::repeat_n(1u8, deficit));
    let mut provenance = vec![Provenance::Original; train.len()];
    provenance.extend(std::iter::repeat_n(Provenance::Generated, deficit));
    Ok(AugmentedDataset {
        data: Dataset::new(features, labels)?,
        provenance,
    })
}
