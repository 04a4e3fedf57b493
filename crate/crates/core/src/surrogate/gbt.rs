//! Second-order gradient boosting of regression trees under logistic loss.
//!
//! Each round fits a tree to the per-row gradient `g = p - y` and hessian
//! `h = p (1 - p)`. Leaves take the Newton weight `-G / (H + lambda)` and
//! splits maximise
//! `(G_L^2 / (H_L + lambda) + G_R^2 / (H_R + lambda) - G^2 / (H + lambda)) / 2`.

use serde::{Deserialize, Serialize};

use super::tree::midpoint;
use super::{check_arity, class_weights, ClassWeight, TrainingSet};
use crate::error::{Error, Result};
use crate::ks::Label;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtHyper {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda_l2: f64,
    pub class_weight: ClassWeight,
}

impl Default for GbtHyper {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            lambda_l2: 1.0,
            class_weight: ClassWeight::Uniform,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum RegressionNode {
    Leaf {
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegressionNode>,
}

impl RegressionTree {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                RegressionNode::Leaf { weight } => return *weight,
                RegressionNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedModel {
    pub hyper: GbtHyper,
    pub arity: usize,
    /// Initial log-odds.
    pub base_score: f64,
    pub trees: Vec<RegressionTree>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Mean weighted logistic loss of margins `f` against `y`.
pub(crate) fn log_loss(f: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    let sum: f64 = f
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&fi, &yi), &wi)| {
            // log(1 + e^f) - y f, computed stably.
            let softplus = if fi > 0.0 { fi + (-fi).exp().ln_1p() } else { fi.exp().ln_1p() };
            wi * (softplus - yi * fi)
        })
        .sum();
    sum / total
}

struct TreeFit<'a> {
    data: &'a TrainingSet,
    grad: &'a [f64],
    hess: &'a [f64],
    /// Row indices ordered by each feature.
    sorted: &'a [Vec<usize>],
    in_node: Vec<bool>,
    lambda: f64,
    max_depth: usize,
    nodes: Vec<RegressionNode>,
}

impl TreeFit<'_> {
    fn sums(&self, rows: &[usize]) -> (f64, f64) {
        rows.iter()
            .fold((0.0, 0.0), |(g, h), &r| (g + self.grad[r], h + self.hess[r]))
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.lambda)
    }

    fn best_split(&mut self, rows: &[usize], g_all: f64, h_all: f64) -> Option<(usize, f64)> {
        let parent = self.score(g_all, h_all);
        let mut best: Option<(usize, f64, f64)> = None;
        for &r in rows {
            self.in_node[r] = true;
        }
        for f in 0..self.data.arity() {
            let (mut gl, mut hl) = (0.0, 0.0);
            let mut prev: Option<usize> = None;
            // Walk the presorted column, keeping only this node's rows.
            for &r in self.sorted[f].iter().filter(|&&r| self.in_node[r]) {
                if let Some(q) = prev {
                    gl += self.grad[q];
                    hl += self.hess[q];
                    let (a, b) = (self.data.row(q)[f], self.data.row(r)[f]);
                    if a != b {
                        let gain = 0.5 * (self.score(gl, hl) + self.score(g_all - gl, h_all - hl) - parent);
                        let floor = best.map_or(1e-12, |(_, _, g)| g + 1e-12);
                        if gain > floor {
                            best = Some((f, midpoint(a, b), gain));
                        }
                    }
                }
                prev = Some(r);
            }
        }
        for &r in rows {
            self.in_node[r] = false;
        }
        best.map(|(f, t, _)| (f, t))
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let (g, h) = self.sums(&rows);
        let id = self.nodes.len();
        self.nodes.push(RegressionNode::Leaf {
            weight: -g / (h + self.lambda),
        });
        if depth >= self.max_depth || rows.len() < 2 {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows, g, h) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.data.row(i)[feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = RegressionNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Train and return the model with its training log-loss trace; entry 0 is
/// the loss of the base score alone, entry `k` the loss after round `k`.
pub fn train_gbt_with_trace(train: &TrainingSet, hyper: GbtHyper) -> Result<(GradientBoostedModel, Vec<f64>)> {
    train.require_non_empty()?;
    let w = class_weights(train, hyper.class_weight);
    let y: Vec<f64> = (0..train.len())
        .map(|i| if train.label(i).is_positive() { 1.0 } else { 0.0 })
        .collect();
    let total: f64 = w.iter().sum();
    let pos: f64 = y.iter().zip(&w).map(|(yi, wi)| yi * wi).sum();
    if pos <= 0.0 || pos >= total {
        return Err(Error::SingleClass);
    }
    let prior = pos / total;
    let base_score = (prior / (1.0 - prior)).ln();

    let mut margin = vec![base_score; train.len()];
    let mut trace = vec![log_loss(&margin, &y, &w)];
    let mut trees = Vec::with_capacity(hyper.n_rounds);
    let sorted: Vec<Vec<usize>> = (0..train.arity())
        .map(|f| {
            let mut idx: Vec<usize> = (0..train.len()).collect();
            idx.sort_by(|&a, &b| train.row(a)[f].total_cmp(&train.row(b)[f]));
            idx
        })
        .collect();
    let mut grad = vec![0.0; train.len()];
    let mut hess = vec![0.0; train.len()];
    for _ in 0..hyper.n_rounds {
        for i in 0..train.len() {
            let p = sigmoid(margin[i]);
            grad[i] = w[i] * (p - y[i]);
            hess[i] = w[i] * p * (1.0 - p);
        }
        let mut fit = TreeFit {
            data: train,
            grad: &grad,
            hess: &hess,
            sorted: &sorted,
            in_node: vec![false; train.len()],
            lambda: hyper.lambda_l2,
            max_depth: hyper.max_depth,
            nodes: Vec::new(),
        };
        fit.grow((0..train.len()).collect(), 0);
        let tree = RegressionTree { nodes: fit.nodes };
        for (i, m) in margin.iter_mut().enumerate() {
            *m += hyper.learning_rate * tree.eval(train.row(i));
        }
        trace.push(log_loss(&margin, &y, &w));
        trees.push(tree);
    }
    Ok((
        GradientBoostedModel {
            hyper,
            arity: train.arity(),
            base_score,
            trees,
        },
        trace,
    ))
}

pub fn train_gbt(train: &TrainingSet, hyper: GbtHyper) -> Result<GradientBoostedModel> {
    train_gbt_with_trace(train, hyper).map(|(m, _)| m)
}

impl GradientBoostedModel {
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        check_arity(self.arity, x)?;
        let lr = self.hyper.learning_rate;
        Ok(self.trees.iter().fold(self.base_score, |acc, t| acc + lr * t.eval(x)))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.margin(x).map(sigmoid)
    }

    /// Probability exactly 0.5 resolves to negative.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(if self.predict_proba(x)? > 0.5 {
            Label::Positive
        } else {
            Label::Negative
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ks::Label::{Negative as N, Positive as P};

    fn one_dim(xs: &[(f64, Label)]) -> TrainingSet {
        TrainingSet::new(xs.iter().map(|&(x, l)| (vec![x], l)).collect()).unwrap()
    }

    fn separable() -> TrainingSet {
        one_dim(&[(0.1, N), (0.2, N), (0.3, N), (0.35, N), (0.6, P), (0.7, P), (0.8, P), (0.95, P), (0.99, P)])
    }

    #[test]
    fn separable_trace_decreases_and_fits() {
        let hyper = GbtHyper { n_rounds: 20, ..Default::default() };
        let (m, trace) = train_gbt_with_trace(&separable(), hyper).unwrap();
        assert_eq!(trace.len(), 21);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]), "{trace:?}");
        let t = separable();
        assert!((0..t.len()).all(|i| m.predict(t.row(i)).unwrap() == t.label(i)));
    }

    #[test]
    fn zero_rounds_predicts_prior() {
        let t = separable();
        let m = train_gbt(&t, GbtHyper { n_rounds: 0, ..Default::default() }).unwrap();
        let p = m.predict_proba(&[0.5]).unwrap();
        assert!((p - 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_prior_ties_to_negative() {
        let t = one_dim(&[(0.1, N), (0.9, P)]);
        let m = train_gbt(&t, GbtHyper { n_rounds: 0, ..Default::default() }).unwrap();
        assert_eq!(m.predict_proba(&[0.9]).unwrap(), 0.5);
        assert_eq!(m.predict(&[0.9]).unwrap(), N);
    }

    #[test]
    fn heavy_regularisation_returns_prior() {
        let t = separable();
        let m = train_gbt(&t, GbtHyper { lambda_l2: 1e12, ..Default::default() }).unwrap();
        let prior = 5.0 / 9.0;
        for x in [0.0, 0.5, 1.0] {
            assert!((m.predict_proba(&[x]).unwrap() - prior).abs() < 1e-9);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let t = one_dim(&[(0.1, P), (0.2, P)]);
        assert!(matches!(train_gbt(&t, GbtHyper::default()), Err(Error::SingleClass)));
    }
}
