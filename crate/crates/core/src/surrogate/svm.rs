//! Linear SVM trained in the primal by Pegasos stochastic subgradient
//! descent on the hinge loss.
//!
//! Features are mapped from their parameter ranges onto [-1, 1]; the bias
//! is carried as an extra constant feature and regularised with the
//! weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_arity, class_weights, ClassWeight, TrainingSet};
use crate::error::{Error, Result};
use crate::ks::Label;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmHyper {
    pub lambda_reg: f64,
    pub epochs: usize,
    pub class_weight: ClassWeight,
}

impl Default for SvmHyper {
    fn default() -> Self {
        Self {
            lambda_reg: 1e-3,
            epochs: 50,
            class_weight: ClassWeight::Uniform,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub hyper: SvmHyper,
    /// Per-feature `(low, high)` used for normalisation.
    pub feature_ranges: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn normalise(x: &[f64], ranges: &[(f64, f64)], out: &mut Vec<f64>) {
    out.clear();
    out.extend(x.iter().zip(ranges).map(|(&v, &(lo, hi))| 2.0 * (v - lo) / (hi - lo) - 1.0));
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn train_svm(
    train: &TrainingSet,
    hyper: SvmHyper,
    feature_ranges: &[(f64, f64)],
    seed: u64,
) -> Result<LinearSvmModel> {
    train.require_non_empty()?;
    check_arity(feature_ranges.len(), train.row(0))?;
    let (pos, neg) = train.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    if !(hyper.lambda_reg > 0.0) {
        return Err(Error::ConfigInvalid(format!(
            "lambda_reg must be positive, got {}",
            hyper.lambda_reg
        )));
    }
    let d = train.arity();
    let sample_w = class_weights(train, hyper.class_weight);
    // Augmented rows: normalised features followed by a constant 1.
    let rows: Vec<Vec<f64>> = (0..train.len())
        .map(|i| {
            let mut z = Vec::with_capacity(d + 1);
            normalise(train.row(i), feature_ranges, &mut z);
            z.push(1.0);
            z
        })
        .collect();
    let y: Vec<f64> = (0..train.len())
        .map(|i| if train.label(i).is_positive() { 1.0 } else { -1.0 })
        .collect();

    let lambda = hyper.lambda_reg;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; d + 1];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0u64;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = y[i] * dot(&w, &rows[i]);
            let shrink = 1.0 - eta * lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if margin < 1.0 {
                let step = eta * y[i] * sample_w[i];
                for (wj, zj) in w.iter_mut().zip(&rows[i]) {
                    *wj += step * zj;
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                for wj in w.iter_mut() {
                    *wj *= s;
                }
            }
        }
    }
    let bias = w.pop().expect("augmented weight vector");
    Ok(LinearSvmModel {
        hyper,
        feature_ranges: feature_ranges.to_vec(),
        weights: w,
        bias,
    })
}

impl LinearSvmModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_arity(self.weights.len(), x)?;
        let mut z = Vec::with_capacity(x.len());
        normalise(x, &self.feature_ranges, &mut z);
        Ok(dot(&self.weights, &z) + self.bias)
    }

    /// A zero decision value resolves to negative.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(if self.decision(x)? > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        })
    }

    /// Mean hinge loss plus `lambda/2 * |w|^2` (bias included) on `data`.
    pub fn objective(&self, data: &TrainingSet) -> Result<f64> {
        let hinge: f64 = (0..data.len())
            .map(|i| {
                let y = if data.label(i).is_positive() { 1.0 } else { -1.0 };
                self.decision(data.row(i)).map(|s| (1.0 - y * s).max(0.0))
            })
            .sum::<Result<f64>>()?;
        let sq = dot(&self.weights, &self.weights) + self.bias * self.bias;
        Ok(hinge / data.len() as f64 + 0.5 * self.hyper.lambda_reg * sq)
    }
}
