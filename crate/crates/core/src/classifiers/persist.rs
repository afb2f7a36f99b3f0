//! Plain-text model files.
//!
//! ```text
//! fraudgan-model v1
//! kind <svm|dt|logreg|mlp>
//! features <d>
//! ...kind-specific lines...
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so a saved model
//! reloads bit-identically. Matrices are row-major.

use std::fmt::Write as _;
use std::path::Path;

use super::mlp::mlp_spec;
use super::{
    Classifier, DecisionTreeModel, LinearSvmModel, LogisticModel, MlpModel, ModelKind, TreeNode,
};
use crate::nn::{LayerParams, Matrix, NetworkState};
use crate::{Error, Result};

const MAGIC: &str = "fraudgan-model v1";

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn to_text(model: &Classifier) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "kind {}", model.kind());
    let _ = writeln!(s, "features {}", model.feature_count());
    match model {
        Classifier::Logistic(m) => {
            let _ = writeln!(s, "weights {}", join(&m.weights));
            let _ = writeln!(s, "bias {}", m.bias);
        }
        Classifier::Svm(m) => {
            let _ = writeln!(s, "weights {}", join(&m.weights));
            let _ = writeln!(s, "bias {}", m.bias);
            let _ = writeln!(s, "lambda {}", m.regularization);
        }
        Classifier::Tree(m) => {
            let _ = writeln!(s, "max_depth {}", m.max_depth);
            let _ = writeln!(s, "nodes {}", m.nodes.len());
            for node in &m.nodes {
                match node {
                    TreeNode::Leaf {
                        probability,
                        samples,
                    } => {
                        let _ = writeln!(s, "leaf {probability} {samples}");
                    }
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let _ = writeln!(s, "split {feature} {threshold} {left} {right}");
                    }
                }
            }
        }
        Classifier::Mlp(m) => {
            for params in &m.state.layers {
                if let LayerParams::Dense { weights, bias } = params {
                    let _ = writeln!(
                        s,
                        "dense {} {} {}",
                        weights.rows(),
                        weights.cols(),
                        join(weights.as_slice())
                    );
                    let _ = writeln!(s, "bias {}", join(bias));
                }
            }
        }
    }
    s
}

pub fn save_model(model: &Classifier, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_text(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Classifier> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Schema(format!("model file: {}", msg.into()))
}

fn floats<'a>(it: impl Iterator<Item = &'a str>) -> Result<Vec<f64>> {
    it.map(|t| {
        t.parse::<f64>()
            .map_err(|_| bad(format!("bad number {t:?}")))
    })
    .collect()
}

fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<Vec<&'a str>> {
    let line = lines.next().ok_or_else(|| bad(format!("missing {key}")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(bad(format!("expected {key:?}, found {line:?}")));
    }
    Ok(parts.collect())
}

fn single<T: std::str::FromStr>(values: &[&str], key: &str) -> Result<T> {
    match values {
        [v] => v.parse().map_err(|_| bad(format!("bad {key} value {v:?}"))),
        _ => Err(bad(format!("{key} needs one value"))),
    }
}

pub fn from_text(text: &str) -> Result<Classifier> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(bad("missing header"));
    }
    let kind: ModelKind = single::<String>(&field(&mut lines, "kind")?, "kind")?.parse()?;
    let features: usize = single(&field(&mut lines, "features")?, "features")?;

    let model = match kind {
        ModelKind::LogisticRegression | ModelKind::Svm => {
            let weights = floats(field(&mut lines, "weights")?.into_iter())?;
            if weights.len() != features {
                return Err(bad("weight count does not match features"));
            }
            let bias: f64 = single(&field(&mut lines, "bias")?, "bias")?;
            if kind == ModelKind::Svm {
                let regularization = single(&field(&mut lines, "lambda")?, "lambda")?;
                Classifier::Svm(LinearSvmModel {
                    weights,
                    bias,
                    regularization,
                })
            } else {
                Classifier::Logistic(LogisticModel { weights, bias })
            }
        }
        ModelKind::DecisionTree => {
            let max_depth = single(&field(&mut lines, "max_depth")?, "max_depth")?;
            let count: usize = single(&field(&mut lines, "nodes")?, "nodes")?;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                let line = lines.next().ok_or_else(|| bad("missing tree node"))?;
                let parts: Vec<&str> = line.split_whitespace().collect();
                let node = match parts.as_slice() {
                    ["leaf", p, n] => TreeNode::Leaf {
                        probability: p.parse().map_err(|_| bad("bad leaf probability"))?,
                        samples: n.parse().map_err(|_| bad("bad leaf size"))?,
                    },
                    ["split", f, t, l, r] => {
                        let split = TreeNode::Split {
                            feature: f.parse().map_err(|_| bad("bad split feature"))?,
                            threshold: t.parse().map_err(|_| bad("bad split threshold"))?,
                            left: l.parse().map_err(|_| bad("bad child index"))?,
                            right: r.parse().map_err(|_| bad("bad child index"))?,
                        };
                        if let TreeNode::Split {
                            feature,
                            left,
                            right,
                            ..
                        } = split
                        {
                            if feature >= features || left >= count || right >= count {
                                return Err(bad("split refers outside the tree"));
                            }
                        }
                        split
                    }
                    _ => return Err(bad(format!("bad tree node {line:?}"))),
                };
                nodes.push(node);
            }
            Classifier::Tree(DecisionTreeModel {
                nodes,
                feature_count: features,
                max_depth,
            })
        }
        ModelKind::Mlp => {
            let spec = mlp_spec(features)?;
            let mut layers = Vec::new();
            for layer in spec.layers() {
                if let crate::nn::LayerSpec::Dense { .. } = layer {
                    let parts = field(&mut lines, "dense")?;
                    if parts.len() < 2 {
                        return Err(bad("dense line needs dimensions"));
                    }
                    let rows: usize = parts[0].parse().map_err(|_| bad("bad rows"))?;
                    let cols: usize = parts[1].parse().map_err(|_| bad("bad cols"))?;
                    let weights =
                        Matrix::from_vec(rows, cols, floats(parts[2..].iter().copied())?)?;
                    let bias = floats(field(&mut lines, "bias")?.into_iter())?;
                    layers.push(LayerParams::Dense { weights, bias });
                } else {
                    layers.push(LayerParams::None);
                }
            }
            let state = NetworkState { layers };
            state.check_against(&spec)?;
            Classifier::Mlp(MlpModel { spec, state })
        }
    };
    Ok(model)
}
