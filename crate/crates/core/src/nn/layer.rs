use crate::{Error, Result};

/// One layer of a dense network.
///
/// Every non-dense layer preserves width, so it carries a single `dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Dense { input_dim: usize, output_dim: usize },
    Relu { dim: usize },
    Sigmoid { dim: usize },
    Softmax { dim: usize },
    BatchNorm { dim: usize },
    Dropout { dim: usize, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Dense,
    Relu,
    Sigmoid,
    Softmax,
    BatchNorm,
    Dropout,
}

impl LayerSpec {
    pub fn dense(input_dim: usize, output_dim: usize) -> Self {
        LayerSpec::Dense {
            input_dim,
            output_dim,
        }
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            LayerSpec::Dense { .. } => LayerKind::Dense,
            LayerSpec::Relu { .. } => LayerKind::Relu,
            LayerSpec::Sigmoid { .. } => LayerKind::Sigmoid,
            LayerSpec::Softmax { .. } => LayerKind::Softmax,
            LayerSpec::BatchNorm { .. } => LayerKind::BatchNorm,
            LayerSpec::Dropout { .. } => LayerKind::Dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        match *self {
            LayerSpec::Dense { input_dim, .. } => input_dim,
            LayerSpec::Relu { dim }
            | LayerSpec::Sigmoid { dim }
            | LayerSpec::Softmax { dim }
            | LayerSpec::BatchNorm { dim }
            | LayerSpec::Dropout { dim, .. } => dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match *self {
            LayerSpec::Dense { output_dim, .. } => output_dim,
            _ => self.input_dim(),
        }
    }

    /// Dropout rate, `None` for every other kind.
    pub fn rate(&self) -> Option<f64> {
        match *self {
            LayerSpec::Dropout { rate, .. } => Some(rate),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim() == 0 || self.output_dim() == 0 {
            return Err(Error::Shape(format!("{self:?} has a zero dimension")));
        }
        if let LayerSpec::Dropout { rate, .. } = *self {
            // rate 1 would zero everything and divide by zero in the inverted scale
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Precondition(format!(
                    "dropout rate {rate} outside [0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Ordered, dimension-checked stack of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for layer in &layers {
            layer.validate()?;
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn has_dropout(&self) -> bool {
        self.layers.iter().any(|l| l.kind() == LayerKind::Dropout)
    }

    pub fn last_kind(&self) -> LayerKind {
        self.layers[self.layers.len() - 1].kind()
    }
}
