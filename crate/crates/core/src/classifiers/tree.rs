//! CART classification tree with Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct values of a
//! feature within the node. Rows with `x <= threshold` go left. Among equally
//! good splits the lowest feature index wins, then the lowest threshold.
//! Split quality is compared in exact integer arithmetic so ties are real ties.

use std::cmp::Ordering;

use super::TrainConfig;
use crate::data::Dataset;
use crate::nn::Matrix;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        /// Fraction of class-1 training rows that reached this leaf.
        probability: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Flattened tree; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeModel {
    pub nodes: Vec<TreeNode>,
    pub feature_count: usize,
    pub max_depth: usize,
}

impl DecisionTreeModel {
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { probability, .. } => return *probability,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub(crate) fn scores(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter().map(|r| self.score_row(r)).collect()
    }

    /// `(feature, threshold)` of the root, or `None` if the tree is a single leaf.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            TreeNode::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }
}

/// A scored split. `purity` is `sum_k c_k^2 / n` summed over both children,
/// stored as a fraction; larger means a larger Gini decrease.
#[derive(Debug, Clone, Copy)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub left_count: usize,
    purity_num: u128,
    purity_den: u128,
}

impl SplitCandidate {
    fn new(feature: usize, threshold: f64, left: (usize, usize), right: (usize, usize)) -> Self {
        let sq = |(a, b): (usize, usize)| (a * a + b * b) as u128;
        let nl = (left.0 + left.1) as u128;
        let nr = (right.0 + right.1) as u128;
        Self {
            feature,
            threshold,
            left_count: left.0 + left.1,
            purity_num: sq(left) * nr + sq(right) * nl,
            purity_den: nl * nr,
        }
    }

    fn cmp_quality(&self, other: &Self) -> Ordering {
        (self.purity_num * other.purity_den).cmp(&(other.purity_num * self.purity_den))
    }

    /// Gini impurity decrease relative to a parent with class counts `parent`.
    pub fn gini_decrease(&self, parent: (usize, usize)) -> f64 {
        let n = (parent.0 + parent.1) as f64;
        let parent_sq = (parent.0 * parent.0 + parent.1 * parent.1) as f64;
        // parent gini - weighted child gini = (children purity - parent purity) / n
        (self.purity_num as f64 / self.purity_den as f64 - parent_sq / n) / n
    }
}

/// Best split of `rows` under the tie rule, or `None` when no threshold leaves
/// at least `min_leaf` rows on each side.
pub(crate) fn best_split(
    x: &Matrix,
    labels: &[u8],
    rows: &[usize],
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let total_pos = rows.iter().filter(|&&i| labels[i] == 1).count();
    let total = (rows.len() - total_pos, total_pos);
    let mut best: Option<SplitCandidate> = None;
    let mut sorted = rows.to_vec();
    for feature in 0..x.cols() {
        sorted.sort_by(|&a, &b| x.get(a, feature).total_cmp(&x.get(b, feature)));
        let mut left = (0usize, 0usize);
        for k in 0..sorted.len() - 1 {
            if labels[sorted[k]] == 1 {
                left.1 += 1;
            } else {
                left.0 += 1;
            }
            let v = x.get(sorted[k], feature);
            let next = x.get(sorted[k + 1], feature);
            if v == next {
                continue;
            }
            let n_left = k + 1;
            if n_left < min_leaf || sorted.len() - n_left < min_leaf {
                continue;
            }
            let right = (total.0 - left.0, total.1 - left.1);
            let cand = SplitCandidate::new(feature, v + (next - v) / 2.0, left, right);
            // strict improvement keeps the earliest feature and lowest threshold
            if best
                .as_ref()
                .is_none_or(|b| cand.cmp_quality(b) == Ordering::Greater)
            {
                best = Some(cand);
            }
        }
    }
    best
}

/// Greedy recursive partitioning. Stops at `max_depth`, at a pure node, or when
/// no split satisfies `min_leaf`. Splits with zero Gini decrease are taken, so
/// patterns like XOR can still be carved out at depth 2.
pub fn train_tree(data: &Dataset, config: &TrainConfig) -> Result<DecisionTreeModel> {
    config.validate()?;
    if data.is_empty() {
        return Err(crate::Error::Precondition(
            "cannot fit a tree on 0 rows".into(),
        ));
    }
    let mut nodes = Vec::new();
    let rows: Vec<usize> = (0..data.len()).collect();
    grow(data, config, rows, 0, &mut nodes);
    Ok(DecisionTreeModel {
        nodes,
        feature_count: data.feature_count(),
        max_depth: config.max_depth,
    })
}

fn grow(
    data: &Dataset,
    config: &TrainConfig,
    rows: Vec<usize>,
    depth: usize,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let id = nodes.len();
    let pos = rows.iter().filter(|&&i| data.labels[i] == 1).count();
    let leaf = TreeNode::Leaf {
        probability: pos as f64 / rows.len() as f64,
        samples: rows.len(),
    };
    nodes.push(leaf);

    if depth >= config.max_depth || pos == 0 || pos == rows.len() {
        return id;
    }
    let Some(split) = best_split(&data.features, &data.labels, &rows, config.min_leaf) else {
        return id;
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&i| data.features.get(i, split.feature) <= split.threshold);
    debug_assert_eq!(left_rows.len(), split.left_count);
    let left = grow(data, config, left_rows, depth + 1, nodes);
    let right = grow(data, config, right_rows, depth + 1, nodes);
    nodes[id] = TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    id
}
