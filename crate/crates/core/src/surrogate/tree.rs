//! CART classification tree with weighted Gini impurity.

use serde::{Deserialize, Serialize};

use super::{check_arity, class_weights, ClassWeight, TrainingSet};
use crate::error::Result;
use crate::ks::Label;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeHyper {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub class_weight: ClassWeight,
}

impl Default for TreeHyper {
    fn default() -> Self {
        Self {
            max_depth: 10,
            min_samples_split: 2,
            class_weight: ClassWeight::Uniform,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: Label,
        /// Weighted fraction of positive training rows reaching the leaf.
        probability: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    pub hyper: TreeHyper,
    pub arity: usize,
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

pub(crate) fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

/// Midpoint between two consecutive distinct sorted values, kept strictly
/// below `b` so `b` falls to the right.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

struct Builder<'a> {
    data: &'a TrainingSet,
    weights: Vec<f64>,
    hyper: TreeHyper,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn leaf(&self, rows: &[usize]) -> TreeNode {
        let (pos, total) = self.mass(rows);
        let probability = if total > 0.0 { pos / total } else { 0.0 };
        TreeNode::Leaf {
            label: if probability > 0.5 { Label::Positive } else { Label::Negative },
            probability,
        }
    }

    fn mass(&self, rows: &[usize]) -> (f64, f64) {
        rows.iter().fold((0.0, 0.0), |(p, t), &r| {
            let w = self.weights[r];
            (p + if self.data.label(r).is_positive() { w } else { 0.0 }, t + w)
        })
    }

    /// Best `(feature, threshold, impurity)` by weighted child Gini; the
    /// first candidate wins among equals.
    fn best_split(&self, rows: &[usize]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        let (pos_all, tot_all) = self.mass(rows);
        let mut order = rows.to_vec();
        for f in 0..self.data.arity() {
            order.sort_by(|&a, &b| self.data.row(a)[f].total_cmp(&self.data.row(b)[f]));
            let (mut pos_l, mut tot_l) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let r = order[k];
                let w = self.weights[r];
                tot_l += w;
                if self.data.label(r).is_positive() {
                    pos_l += w;
                }
                let (a, b) = (self.data.row(r)[f], self.data.row(order[k + 1])[f]);
                if a == b {
                    continue;
                }
                let (pos_r, tot_r) = (pos_all - pos_l, tot_all - tot_l);
                let imp = tot_l * gini(pos_l, tot_l) + tot_r * gini(pos_r, tot_r);
                let better = match best {
                    None => true,
                    Some((_, _, b_imp)) => imp < b_imp - 1e-12 * tot_all,
                };
                if better {
                    best = Some((f, midpoint(a, b), imp));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let leaf = self.leaf(&rows);
        self.nodes.push(leaf);
        let pure = matches!(self.nodes[id], TreeNode::Leaf { probability, .. } if probability == 0.0 || probability == 1.0);
        if pure || depth >= self.hyper.max_depth || rows.len() < self.hyper.min_samples_split.max(2) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.data.row(i)[feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

pub fn train_decision_tree(train: &TrainingSet, hyper: TreeHyper) -> Result<DecisionTreeModel> {
    train.require_non_empty()?;
    let mut b = Builder {
        data: train,
        weights: class_weights(train, hyper.class_weight),
        hyper,
        nodes: Vec::new(),
    };
    b.grow((0..train.len()).collect(), 0);
    Ok(DecisionTreeModel {
        hyper,
        arity: train.arity(),
        nodes: b.nodes,
    })
}

impl DecisionTreeModel {
    fn leaf_for(&self, x: &[f64]) -> (Label, f64) {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { label, probability } => return (*label, *probability),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        check_arity(self.arity, x)?;
        Ok(self.leaf_for(x).0)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_arity(self.arity, x)?;
        Ok(self.leaf_for(x).1)
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], id: usize) -> usize {
            match &nodes[id] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}
