//! Experiment harness: calibration metrics, the sanity-check protocol and
//! multi-repetition suites emitting summary tables.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{reference_series, CalibrationConfig, CalibrationResult, Calibrator, Termination};
use crate::error::{Error, Result};
use crate::params::{ParameterRanges, ParameterVector, N_PARAMS};
use crate::rng::derive_seed;
use crate::sampling::SamplerKind;
use crate::surrogate::SurrogateKind;

pub const DEFAULT_SUCCESS_LEVELS: [f64; 4] = [97.0, 97.5, 98.0, 98.5];

const TAG_PERTURB: u64 = 11;
const TAG_REP: u64 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn config(self) -> CalibrationConfig {
        match self {
            Profile::Desk => CalibrationConfig::desk(),
            Profile::Paper => CalibrationConfig::paper(),
        }
    }
}

/// Euclidean distance after dividing each coordinate difference by its range width.
pub fn standardized_l2(pred: &[f64], truth: &[f64], ranges: &ParameterRanges) -> Result<f64> {
    if pred.len() != truth.len() || pred.len() != ranges.len() {
        return Err(Error::ArityMismatch {
            expected: ranges.len(),
            got: if pred.len() != ranges.len() { pred.len() } else { truth.len() },
        });
    }
    Ok(pred
        .iter()
        .zip(truth)
        .enumerate()
        .map(|(i, (p, t))| ((p - t) / ranges.width(i)).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// 1-based index of the first batch whose running minimum reaches
/// `statistic <= (100 - level) / 100`; `None` if it never does.
pub fn bms(trace: &[f64], success_level_percent: f64) -> Option<usize> {
    let threshold = (100.0 - success_level_percent) / 100.0;
    trace.iter().position(|&s| s <= threshold).map(|i| i + 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SanityReport {
    pub theta_star: ParameterVector,
    pub best_vector: ParameterVector,
    pub best_statistic: f64,
    pub standardized_l2: f64,
    pub success_levels: Vec<f64>,
    pub bms: Vec<Option<usize>>,
    pub terminated_by: Termination,
    pub evaluations_used: usize,
    pub batches_used: usize,
}

/// Simulate a reference from `theta_star`, calibrate against it with the
/// non-searched parameters pinned to `theta_star`, and score the result.
pub fn sanity_check(theta_star: &ParameterVector, cfg: &CalibrationConfig, levels: &[f64]) -> Result<(SanityReport, CalibrationResult)> {
    let mut cfg = cfg.clone();
    cfg.pinned_vector = theta_star.clone();
    let reference = reference_series(theta_star, &cfg)?;
    let result = Calibrator::new(cfg.clone(), reference)?.run()?.result;
    let report = SanityReport {
        theta_star: theta_star.clone(),
        best_vector: result.best_vector.clone(),
        best_statistic: result.best_statistic,
        standardized_l2: standardized_l2(&result.best_vector, theta_star, &cfg.ranges)?,
        success_levels: levels.to_vec(),
        bms: levels.iter().map(|&l| bms(&result.best_statistic_trace, l)).collect(),
        terminated_by: result.terminated_by,
        evaluations_used: result.evaluations_used,
        batches_used: result.batches_used,
    };
    Ok((report, result))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Method {
    pub sampler_kind: SamplerKind,
    pub surrogate_kind: SurrogateKind,
}

impl Method {
    pub const fn new(sampler_kind: SamplerKind, surrogate_kind: SurrogateKind) -> Self {
        Self {
            sampler_kind,
            surrogate_kind,
        }
    }

    pub fn label(&self) -> String {
        match self.surrogate_kind {
            SurrogateKind::None => self.sampler_kind.label().to_string(),
            s => format!("{} {}", s.label(), self.sampler_kind.label()),
        }
    }

    /// The eight combinations: plain and three surrogates, over both bases.
    pub fn all() -> Vec<Method> {
        let mut v = Vec::new();
        for (plain, assisted) in [
            (SamplerKind::Random, SamplerKind::SurrogateRandom),
            (SamplerKind::Sobol, SamplerKind::SurrogateSobol),
        ] {
            v.push(Method::new(plain, SurrogateKind::None));
            for s in [SurrogateKind::DecisionTree, SurrogateKind::GradientBoosted, SurrogateKind::LinearSvm] {
                v.push(Method::new(assisted, s));
            }
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// 1-based contiguous prefix; the suite calibrates each shorter prefix too.
    pub params_to_calibrate: Vec<usize>,
    /// Restricts which prefix lengths are run; all of them when absent.
    pub param_counts: Option<Vec<usize>>,
    pub true_vector: ParameterVector,
    pub repetitions: usize,
    pub method_matrix: Vec<Method>,
    pub success_levels: Vec<f64>,
    /// Redraw the calibrated components of the true vector per repetition.
    pub perturb_true_vector: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            params_to_calibrate: (1..=N_PARAMS).collect(),
            param_counts: None,
            true_vector: ParameterVector::reference(),
            repetitions: 10,
            method_matrix: Method::all(),
            success_levels: DEFAULT_SUCCESS_LEVELS.to_vec(),
            perturb_true_vector: true,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        let n = self.params_to_calibrate.len();
        if n == 0 || n > N_PARAMS || self.params_to_calibrate.iter().enumerate().any(|(i, &p)| p != i + 1) {
            return bad(format!(
                "params_to_calibrate must be a prefix 1..=k of 1..={N_PARAMS}, got {:?}",
                self.params_to_calibrate
            ));
        }
        if let Some(counts) = &self.param_counts {
            if counts.is_empty() || counts.iter().any(|&c| c == 0 || c > n) {
                return bad(format!("param_counts must lie in 1..={n}, got {counts:?}"));
            }
        }
        if self.true_vector.len() != N_PARAMS {
            return bad(format!("true_vector must have {N_PARAMS} entries"));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1".into());
        }
        if self.method_matrix.is_empty() {
            return bad("method_matrix is empty".into());
        }
        if self.success_levels.iter().any(|&l| !(l > 0.0 && l < 100.0)) {
            return bad(format!("success levels must lie in (0,100): {:?}", self.success_levels));
        }
        Ok(())
    }

    pub fn counts(&self) -> Vec<usize> {
        self.param_counts
            .clone()
            .unwrap_or_else(|| (1..=self.params_to_calibrate.len()).collect())
    }

    /// True vector for repetition `rep` at `n_params`: the first `n_params`
    /// components redrawn uniformly inside their ranges. The draws depend on
    /// the repetition only, so a repetition's vectors are nested across
    /// parameter counts.
    pub fn true_vector_for(&self, ranges: &ParameterRanges, master_seed: u64, n_params: usize, rep: usize) -> ParameterVector {
        let mut v = self.true_vector.clone();
        if self.perturb_true_vector {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[master_seed, TAG_PERTURB, rep as u64]));
            for (i, x) in v.0.iter_mut().enumerate().take(n_params) {
                let (lo, hi) = ranges.get(i);
                *x = loop {
                    let y = lo + rng.gen::<f64>() * (hi - lo);
                    if y > lo && y < hi {
                        break y;
                    }
                };
            }
        }
        v
    }
}

/// Configuration of one repetition of one suite cell.
pub fn cell_config(base: &CalibrationConfig, method: Method, n_params: usize, rep: usize) -> CalibrationConfig {
    let mut cfg = base.clone().with_method(method.sampler_kind, method.surrogate_kind);
    cfg.params_to_calibrate = (1..=n_params).collect();
    cfg.master_seed = derive_seed(&[base.master_seed, TAG_REP, rep as u64]);
    cfg
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub method: String,
    pub n_params: usize,
    pub repetitions: usize,
    pub mean_l2: f64,
    pub mean_ks: f64,
    /// Mean over the repetitions that reached each level.
    pub mean_bms: Vec<Option<f64>>,
    pub reached: Vec<usize>,
    pub runs: Vec<SanityReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub success_levels: Vec<f64>,
    pub cells: Vec<CellReport>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn summarize_cell(method: &Method, n_params: usize, levels: &[f64], runs: Vec<SanityReport>) -> CellReport {
    let mut mean_bms = Vec::new();
    let mut reached = Vec::new();
    for li in 0..levels.len() {
        let hits: Vec<f64> = runs.iter().filter_map(|r| r.bms[li]).map(|b| b as f64).collect();
        reached.push(hits.len());
        mean_bms.push(mean(hits.into_iter()));
    }
    CellReport {
        method: method.label(),
        n_params,
        repetitions: runs.len(),
        mean_l2: mean(runs.iter().map(|r| r.standardized_l2)).unwrap_or(f64::NAN),
        mean_ks: mean(runs.iter().map(|r| r.best_statistic)).unwrap_or(f64::NAN),
        mean_bms,
        reached,
        runs,
    }
}

/// Run every (method, parameter count) cell `repetitions` times. When
/// `out_dir` is given, each finished cell is appended to `cells.csv` and the
/// tables are written at the end.
pub fn run_experiment_suite(spec: &ExperimentSpec, base: &CalibrationConfig, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    spec.validate()?;
    base.validate()?;
    let mut partial = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("cells.csv"))?));
            w.write_record(["method", "n_params", "mean_l2", "mean_ks"])?;
            w.flush()?;
            Some(w)
        }
        None => None,
    };
    let mut cells = Vec::new();
    for method in &spec.method_matrix {
        for n in spec.counts() {
            let mut runs = Vec::with_capacity(spec.repetitions);
            for rep in 0..spec.repetitions {
                let cfg = cell_config(base, *method, n, rep);
                let theta = spec.true_vector_for(&base.ranges, base.master_seed, n, rep);
                let (report, _) = sanity_check(&theta, &cfg, &spec.success_levels)?;
                runs.push(report);
            }
            let cell = summarize_cell(method, n, &spec.success_levels, runs);
            info!("{} n={}: mean KS {:.6}, mean L2 {:.4}", cell.method, n, cell.mean_ks, cell.mean_l2);
            if let Some(w) = partial.as_mut() {
                w.write_record([cell.method.clone(), n.to_string(), cell.mean_l2.to_string(), cell.mean_ks.to_string()])?;
                w.flush()?;
            }
            cells.push(cell);
        }
    }
    let report = ExperimentReport {
        success_levels: spec.success_levels.clone(),
        cells,
    };
    if let Some(dir) = out_dir {
        report.write_table2(File::create(dir.join("table2.csv"))?)?;
        report.write_table3(File::create(dir.join("table3.csv"))?)?;
    }
    Ok(report)
}

impl ExperimentReport {
    fn methods(&self) -> Vec<&str> {
        let mut m: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !m.contains(&c.method.as_str()) {
                m.push(&c.method);
            }
        }
        m
    }

    fn counts(&self) -> Vec<usize> {
        let mut n: Vec<usize> = self.cells.iter().map(|c| c.n_params).collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    pub fn cell(&self, method: &str, n_params: usize) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.method == method && c.n_params == n_params)
    }

    /// Mean standardised L2 and mean KS, one row per method and metric, one
    /// column per parameter count.
    pub fn write_table2<W: Write>(&self, w: W) -> Result<()> {
        let counts = self.counts();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["method".to_string(), "metric".to_string()];
        header.extend(counts.iter().map(|n| n.to_string()));
        out.write_record(&header)?;
        for m in self.methods() {
            for (metric, get) in [("L2", (|c: &CellReport| c.mean_l2) as fn(&CellReport) -> f64), ("KS", |c| c.mean_ks)] {
                let mut row = vec![m.to_string(), metric.to_string()];
                row.extend(counts.iter().map(|&n| self.cell(m, n).map_or(String::new(), |c| get(c).to_string())));
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Mean batches to success per method and parameter count; `NR` where no
    /// repetition reached the level.
    pub fn write_table3<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["method".to_string(), "n_params".to_string()];
        header.extend(self.success_levels.iter().map(|l| format!("{l}%")));
        out.write_record(&header)?;
        for m in self.methods() {
            for n in self.counts() {
                if let Some(c) = self.cell(m, n) {
                    let mut row = vec![m.to_string(), n.to_string()];
                    row.extend(c.mean_bms.iter().map(|b| b.map_or("NR".to_string(), |v| v.to_string())));
                    out.write_record(&row)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn l2_examples() {
        let r = ParameterRanges::default_ranges();
        let t = ParameterVector::reference();
        assert_eq!(standardized_l2(&t, &t, &r).unwrap(), 0.0);
        let mut p = t.0.clone();
        p[3] = 0.0;
        let mut q = t.0.clone();
        q[3] = 41.0;
        assert_eq!(standardized_l2(&p, &q, &r).unwrap(), 1.0);
        let mut p = t.0.clone();
        p[0] += 0.25;
        p[4] += 20.5;
        let mut q = t.0.clone();
        q[0] -= 0.25;
        let expect = (0.5f64 * 0.5 + 0.5 * 0.5).sqrt();
        assert!((standardized_l2(&p, &q, &r).unwrap() - expect).abs() < 1e-12);
        assert!(standardized_l2(&p[..3], &q, &r).is_err());
    }

    #[test]
    fn bms_examples() {
        assert_eq!(bms(&[0.05, 0.03, 0.01], 97.0), Some(2));
        assert_eq!(bms(&[0.5, 0.4], 98.5), None);
        for l in DEFAULT_SUCCESS_LEVELS {
            assert_eq!(bms(&[0.0, 0.0], l), Some(1));
        }
    }

    #[test]
    fn method_labels() {
        let labels: Vec<String> = Method::all().iter().map(Method::label).collect();
        assert_eq!(labels.len(), 8);
        assert_eq!(labels[0], "Random");
        assert_eq!(labels[1], "DT Random");
        assert_eq!(labels[6], "XGBoost Sobol");
    }

    #[test]
    fn spec_validation() {
        ExperimentSpec::default().validate().unwrap();
        assert!(ExperimentSpec::from_json(r#"{"params_to_calibrate": [2, 3]}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"repetitions": 0}"#).is_err());
        assert!(ExperimentSpec::from_json(r#"{"extra": 0}"#).is_err());
        let s = ExperimentSpec::from_json(r#"{"params_to_calibrate": [1, 2, 3], "repetitions": 2}"#).unwrap();
        assert_eq!(s.counts(), vec![1, 2, 3]);
    }

    #[test]
    fn perturbation_touches_only_calibrated_components() {
        let spec = ExperimentSpec::default();
        let r = ParameterRanges::default_ranges();
        let v = spec.true_vector_for(&r, 3, 2, 0);
        assert_eq!(&v[2..], &ParameterVector::reference()[2..]);
        assert_ne!(&v[..2], &ParameterVector::reference()[..2]);
        assert!(r.contains(&v));
        assert_eq!(v, spec.true_vector_for(&r, 3, 2, 0));
        assert_ne!(v, spec.true_vector_for(&r, 3, 2, 1));
        let w = spec.true_vector_for(&r, 3, 5, 0);
        assert_eq!(&w[..2], &v[..2]);
    }

    fn vec7() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..1.0f64, 7)
    }

    proptest! {
        #[test]
        fn l2_is_a_metric(a in vec7(), b in vec7(), c in vec7()) {
            let r = ParameterRanges::default_ranges();
            let d = |x: &[f64], y: &[f64]| standardized_l2(x, y, &r).unwrap();
            prop_assert!(d(&a, &b) >= 0.0);
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
            if a != b {
                prop_assert!(d(&a, &b) > 0.0);
            }
        }

        #[test]
        fn bms_is_monotone_in_level(mut trace in prop::collection::vec(0.0..0.1f64, 1..40), l1 in 90.0..99.9f64, l2 in 90.0..99.9f64) {
            for i in 1..trace.len() {
                trace[i] = trace[i].min(trace[i - 1]);
            }
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            match (bms(&trace, lo), bms(&trace, hi)) {
                (Some(a), Some(b)) => prop_assert!(b >= a),
                (None, Some(_)) => prop_assert!(false, "stricter level reached first"),
                _ => {}
            }
        }
    }
}
