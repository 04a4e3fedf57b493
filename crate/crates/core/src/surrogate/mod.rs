//! Binary surrogate classifiers over parameter vectors, the train/validation
//! split, F1 scoring and the confidence gate.

mod gbt;
mod svm;
mod tree;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::ks::Label;

pub use gbt::{train_gbt, train_gbt_with_trace, GbtHyper, GradientBoostedModel, RegressionNode, RegressionTree};
pub use svm::{train_svm, LinearSvmModel, SvmHyper};
pub use tree::{train_decision_tree, DecisionTreeModel, TreeHyper, TreeNode};

/// Labelled feature rows of constant arity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingSet {
    features: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl TrainingSet {
    pub fn new(rows: Vec<(Vec<f64>, Label)>) -> Result<Self> {
        let mut set = Self::default();
        for (x, l) in rows {
            set.push(x, l)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, x: Vec<f64>, label: Label) -> Result<()> {
        if let Some(first) = self.features.first() {
            check_arity(first.len(), &x)?;
        }
        self.features.push(x);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// `(positives, negatives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|l| l.is_positive()).count();
        (pos, self.len() - pos)
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub(crate) fn require_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::TooFewRows { needed: 1, got: 0 })
        } else {
            Ok(())
        }
    }
}

pub(crate) fn check_arity(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        Err(Error::ArityMismatch {
            expected,
            got: x.len(),
        })
    } else {
        Ok(())
    }
}

/// Per-row training weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    #[default]
    Uniform,
    /// Inverse class frequency, `n / (2 n_c)`.
    Balanced,
}

pub(crate) fn class_weights(data: &TrainingSet, scheme: ClassWeight) -> Vec<f64> {
    match scheme {
        ClassWeight::Uniform => vec![1.0; data.len()],
        ClassWeight::Balanced => {
            let (pos, neg) = data.class_counts();
            let n = data.len() as f64;
            let wp = if pos > 0 { n / (2.0 * pos as f64) } else { 0.0 };
            let wn = if neg > 0 { n / (2.0 * neg as f64) } else { 0.0 };
            data.labels.iter().map(|l| if l.is_positive() { wp } else { wn }).collect()
        }
    }
}

pub trait Classifier {
    fn predict(&self, x: &[f64]) -> Result<Label>;
}

/// Adapter turning a closure into a [`Classifier`].
pub struct FnClassifier<F>(pub F);

impl<F: Fn(&[f64]) -> Label> Classifier for FnClassifier<F> {
    fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok((self.0)(x))
    }
}

impl Classifier for DecisionTreeModel {
    fn predict(&self, x: &[f64]) -> Result<Label> {
        DecisionTreeModel::predict(self, x)
    }
}

impl Classifier for GradientBoostedModel {
    fn predict(&self, x: &[f64]) -> Result<Label> {
        GradientBoostedModel::predict(self, x)
    }
}

impl Classifier for LinearSvmModel {
    fn predict(&self, x: &[f64]) -> Result<Label> {
        LinearSvmModel::predict(self, x)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    #[default]
    None,
    DecisionTree,
    GradientBoosted,
    LinearSvm,
}

impl SurrogateKind {
    pub fn label(self) -> &'static str {
        match self {
            SurrogateKind::None => "none",
            SurrogateKind::DecisionTree => "DT",
            SurrogateKind::GradientBoosted => "XGBoost",
            SurrogateKind::LinearSvm => "SVM",
        }
    }
}

/// Trained surrogate, serialised as a self-describing JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurrogateClassifier {
    DecisionTree(DecisionTreeModel),
    GradientBoosted(GradientBoostedModel),
    LinearSvm(LinearSvmModel),
}

impl SurrogateClassifier {
    pub fn kind(&self) -> SurrogateKind {
        match self {
            SurrogateClassifier::DecisionTree(_) => SurrogateKind::DecisionTree,
            SurrogateClassifier::GradientBoosted(_) => SurrogateKind::GradientBoosted,
            SurrogateClassifier::LinearSvm(_) => SurrogateKind::LinearSvm,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Classifier for SurrogateClassifier {
    fn predict(&self, x: &[f64]) -> Result<Label> {
        match self {
            SurrogateClassifier::DecisionTree(m) => m.predict(x),
            SurrogateClassifier::GradientBoosted(m) => m.predict(x),
            SurrogateClassifier::LinearSvm(m) => m.predict(x),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateHyper {
    pub decision_tree: TreeHyper,
    pub gradient_boosted: GbtHyper,
    pub linear_svm: SvmHyper,
}

/// Train the requested surrogate. `feature_ranges` normalises SVM inputs;
/// tree models consume raw values.
pub fn train_surrogate(
    kind: SurrogateKind,
    train: &TrainingSet,
    hyper: &SurrogateHyper,
    feature_ranges: &[(f64, f64)],
    seed: u64,
) -> Result<SurrogateClassifier> {
    Ok(match kind {
        SurrogateKind::None => {
            return Err(Error::ConfigInvalid("no surrogate kind selected".into()));
        }
        SurrogateKind::DecisionTree => {
            SurrogateClassifier::DecisionTree(train_decision_tree(train, hyper.decision_tree)?)
        }
        SurrogateKind::GradientBoosted => {
            SurrogateClassifier::GradientBoosted(train_gbt(train, hyper.gradient_boosted)?)
        }
        SurrogateKind::LinearSvm => {
            SurrogateClassifier::LinearSvm(train_svm(train, hyper.linear_svm, feature_ranges, seed)?)
        }
    })
}

/// Seeded split into `(train, validation)`. Stratified by label when both
/// classes have at least two members, so each side sees each class.
pub fn split_train_validation(db: &TrainingSet, ratio: f64, seed: u64) -> Result<(TrainingSet, TrainingSet)> {
    if db.len() < 5 {
        return Err(Error::TooFewRows {
            needed: 5,
            got: db.len(),
        });
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    let n = db.len();
    let n_val = (((1.0 - ratio) * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pos, neg) = db.class_counts();

    let mut val_idx = Vec::with_capacity(n_val);
    if pos >= 2 && neg >= 2 {
        let val_pos = ((n_val as f64 * pos as f64 / n as f64).round() as usize).clamp(1, pos - 1);
        let val_neg = n_val.saturating_sub(val_pos).clamp(1, neg - 1);
        for (class, take) in [(Label::Positive, val_pos), (Label::Negative, val_neg)] {
            let mut idx: Vec<usize> = (0..n).filter(|&i| db.label(i) == class).collect();
            idx.shuffle(&mut rng);
            val_idx.extend_from_slice(&idx[..take]);
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        val_idx.extend_from_slice(&idx[..n_val]);
    }
    val_idx.sort_unstable();
    let mut in_val = vec![false; n];
    for &i in &val_idx {
        in_val[i] = true;
    }
    let train_idx: Vec<usize> = (0..n).filter(|&i| !in_val[i]).collect();
    Ok((db.subset(&train_idx), db.subset(&val_idx)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub n_train: usize,
    pub n_val: usize,
}

/// F1 on the positive class.
pub fn f1_score(predictions: &[Label], truth: &[Label]) -> Result<ValidationReport> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch(predictions.len(), truth.len()));
    }
    if truth.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (Label::Positive, Label::Positive) => tp += 1,
            (Label::Positive, Label::Negative) => fp += 1,
            (Label::Negative, Label::Positive) => fn_ += 1,
            (Label::Negative, Label::Negative) => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ValidationReport {
        f1,
        precision,
        recall,
        n_train: 0,
        n_val: truth.len(),
    })
}

/// Score `model` on `validation`.
pub fn validate<C: Classifier + ?Sized>(model: &C, n_train: usize, validation: &TrainingSet) -> Result<ValidationReport> {
    let preds = (0..validation.len())
        .map(|i| model.predict(validation.row(i)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = f1_score(&preds, validation.labels())?;
    report.n_train = n_train;
    Ok(report)
}

/// Split, train on the training part, and score on the validation part.
pub fn fit_and_validate(
    kind: SurrogateKind,
    db: &TrainingSet,
    hyper: &SurrogateHyper,
    feature_ranges: &[(f64, f64)],
    ratio: f64,
    seed: u64,
) -> Result<(SurrogateClassifier, ValidationReport)> {
    let (train, val) = split_train_validation(db, ratio, seed)?;
    let model = train_surrogate(kind, &train, hyper, feature_ranges, seed)?;
    let report = validate(&model, train.len(), &val)?;
    Ok((model, report))
}

/// Enough evaluations (`batch_size * n_params`) and a validation F1 at or
/// above the threshold.
pub fn is_confident(
    report: &ValidationReport,
    db_size: usize,
    batch_size: usize,
    n_params: usize,
    f1_threshold: f64,
) -> bool {
    db_size >= batch_size * n_params && report.f1 >= f1_threshold
}
