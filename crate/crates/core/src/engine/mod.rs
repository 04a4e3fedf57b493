//! The calibration loop: draw a mini-batch from the candidate pool,
//! simulate and label it, grow the ground-truth database, optionally retrain
//! a surrogate and rebuild the pool, and stop on threshold or budget.

mod config;
mod db;

use std::io::Write;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abm::{reference_seed, simulate, validate_params};
use crate::error::{Error, Result};
use crate::ks::{evaluate_candidate, ks_critical_value, Label};
use crate::params::ParameterVector;
use crate::rng::derive_seed;
use crate::sampling::{draw_minibatch, reinitialize_pool_epsilon_greedy, CandidatePool, PoolSource, SearchSpace};
use crate::series::EpidemicSeries;
use crate::surrogate::{fit_and_validate, is_confident, SurrogateClassifier};

pub use config::{CalibrationConfig, SeedStrategy};
pub use db::{best_candidate, GroundTruthDb, LabeledSample};

const TAG_POOL: u64 = 1;
const TAG_DRAW: u64 = 2;
const TAG_SIM: u64 = 3;
const TAG_TRAIN: u64 = 4;
const TAG_REINIT: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    KsThresholdMet,
    MaxBudgetExhausted,
}

/// Per-batch bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub batch_index: u64,
    pub evaluations: usize,
    pub best_statistic: f64,
    pub positives: usize,
    pub surrogate_f1: Option<f64>,
    pub pool_reinitialized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub best_vector: ParameterVector,
    pub best_statistic: f64,
    pub evaluations_used: usize,
    pub batches_used: usize,
    /// Running minimum of the statistic after each batch.
    pub best_statistic_trace: Vec<f64>,
    pub terminated_by: Termination,
    pub critical_value: f64,
    pub batches: Vec<BatchRecord>,
}

impl CalibrationResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialize")
    }

    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["batch", "evaluations", "best_statistic"])?;
        for b in &self.batches {
            out.write_record([
                (b.batch_index + 1).to_string(),
                b.evaluations.to_string(),
                b.best_statistic.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Configuration and code version written beside a run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: CalibrationConfig,
}

impl RunManifest {
    pub fn new(config: CalibrationConfig) -> Self {
        Self {
            version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            config,
        }
    }
}

/// Seed of the simulation for `slot` of batch `batch_index`.
pub fn sample_seed(cfg: &CalibrationConfig, batch_index: u64, slot: usize) -> u64 {
    match cfg.seed_strategy {
        SeedStrategy::Common => reference_seed(cfg.master_seed),
        SeedStrategy::PerSample => derive_seed(&[cfg.master_seed, TAG_SIM, batch_index, slot as u64]),
    }
}

fn evaluate_one(
    v: &ParameterVector,
    reference: &EpidemicSeries,
    cfg: &CalibrationConfig,
    batch_index: u64,
    slot: usize,
    critical_value: f64,
) -> LabeledSample {
    let seed = sample_seed(cfg, batch_index, slot);
    let outcome = validate_params(v)
        .and_then(|p| simulate(&p, &cfg.sim, seed))
        .and_then(|sim| evaluate_candidate::<f64>(reference, &sim, cfg.alpha));
    let (statistic, label) = match outcome {
        Ok(o) => (o.statistic, o.label),
        Err(e) => {
            debug!("candidate {v:?} failed: {e}");
            (1.0, Label::Negative)
        }
    };
    debug_assert!(critical_value.is_finite());
    LabeledSample {
        vector: v.clone(),
        statistic,
        label,
        batch_index,
        seed_used: seed,
    }
}

fn check_reference(reference: &EpidemicSeries, cfg: &CalibrationConfig) -> Result<f64> {
    if reference.len() != cfg.sim.horizon_steps as usize {
        return Err(Error::ConfigInvalid(format!(
            "reference has {} points but the horizon is {}",
            reference.len(),
            cfg.sim.horizon_steps
        )));
    }
    if reference.total() == 0 {
        return Err(Error::AllZeroSeries);
    }
    ks_critical_value::<f64>(cfg.alpha, reference.len(), reference.len())
}

/// Simulate and label every vector of a batch. Per-sample failures become
/// `Negative` with statistic 1. Runs on the current rayon pool.
pub fn evaluate_minibatch(
    batch: &[ParameterVector],
    reference: &EpidemicSeries,
    cfg: &CalibrationConfig,
    batch_index: u64,
) -> Result<Vec<LabeledSample>> {
    let cv = check_reference(reference, cfg)?;
    Ok(batch
        .par_iter()
        .enumerate()
        .map(|(slot, v)| evaluate_one(v, reference, cfg, batch_index, slot, cv))
        .collect())
}

/// Sequential twin of [`evaluate_minibatch`].
pub fn evaluate_minibatch_serial(
    batch: &[ParameterVector],
    reference: &EpidemicSeries,
    cfg: &CalibrationConfig,
    batch_index: u64,
) -> Result<Vec<LabeledSample>> {
    let cv = check_reference(reference, cfg)?;
    Ok(batch
        .iter()
        .enumerate()
        .map(|(slot, v)| evaluate_one(v, reference, cfg, batch_index, slot, cv))
        .collect())
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct CalibrationRun {
    pub result: CalibrationResult,
    pub db: GroundTruthDb,
    pub surrogate: Option<SurrogateClassifier>,
}

pub struct Calibrator {
    cfg: CalibrationConfig,
    reference: EpidemicSeries,
    space: SearchSpace,
    planted: Vec<ParameterVector>,
}

impl Calibrator {
    pub fn new(cfg: CalibrationConfig, reference: EpidemicSeries) -> Result<Self> {
        cfg.validate()?;
        check_reference(&reference, &cfg)?;
        let space = cfg.search_space()?;
        Ok(Self {
            cfg,
            reference,
            space,
            planted: Vec::new(),
        })
    }

    /// Put `v` at the front of the initial pool.
    pub fn plant(&mut self, v: ParameterVector) -> Result<()> {
        if !self.cfg.ranges.contains(&v) {
            return Err(Error::ConfigInvalid(format!("planted vector {v:?} is out of range")));
        }
        self.planted.push(v);
        Ok(())
    }

    fn fresh_pool(&self, source: &mut PoolSource, k: u64, db: &GroundTruthDb) -> Result<CandidatePool> {
        let seed = derive_seed(&[self.cfg.master_seed, TAG_POOL, k]);
        let mut pool = match source {
            PoolSource::Random => {
                crate::sampling::generate_pool_random(self.cfg.pool_size, &self.space, seed, self.cfg.sampler_kind)?
            }
            PoolSource::Sobol(gen) => {
                crate::sampling::generate_pool_sobol(self.cfg.pool_size, &self.space, gen, self.cfg.sampler_kind)?
            }
        };
        pool.exclude(db.keys());
        Ok(pool)
    }

    pub fn run(&self) -> Result<CalibrationRun> {
        let cfg = &self.cfg;
        let critical_value = check_reference(&self.reference, cfg)?;
        let n_free = self.space.dimension();
        let mut source = PoolSource::for_kind(cfg.sampler_kind, n_free)?;
        let mut refills = 0u64;
        let mut pool = self.fresh_pool(&mut source, refills, &GroundTruthDb::new())?;
        for v in self.planted.iter().rev() {
            pool.plant(v.clone());
        }

        let mut db = GroundTruthDb::new();
        let mut surrogate = None;
        let mut batches = Vec::new();
        let mut trace = Vec::new();
        let mut best = f64::INFINITY;
        let mut batch_index = 0u64;
        let terminated_by = loop {
            while pool.len() < cfg.batch_size {
                refills += 1;
                let mut extra = self.fresh_pool(&mut source, refills, &db)?;
                for v in pool.vectors() {
                    extra.plant(v.clone());
                }
                pool = extra;
            }
            // The planted vectors go first, untouched by the random draw.
            let batch = if batch_index == 0 && !self.planted.is_empty() {
                let head = self.planted.len().min(cfg.batch_size);
                let mut b: Vec<_> = pool.vectors()[..head].to_vec();
                let mut rest = CandidatePool::from_vectors(pool.vectors()[head..].to_vec(), pool.origin());
                b.extend(draw_minibatch(
                    &mut rest,
                    cfg.batch_size - head,
                    derive_seed(&[cfg.master_seed, TAG_DRAW, batch_index]),
                )?);
                pool = rest;
                b
            } else {
                draw_minibatch(&mut pool, cfg.batch_size, derive_seed(&[cfg.master_seed, TAG_DRAW, batch_index]))?
            };

            let samples = evaluate_minibatch(&batch, &self.reference, cfg, batch_index)?;
            let positives = samples.iter().filter(|s| s.label.is_positive()).count();
            for s in samples {
                best = best.min(s.statistic);
                db.push(s)?;
            }
            trace.push(best);

            let mut record = BatchRecord {
                batch_index,
                evaluations: db.len(),
                best_statistic: best,
                positives,
                surrogate_f1: None,
                pool_reinitialized: false,
            };
            let (pos, neg) = db.class_counts();
            if cfg.sampler_kind.is_surrogate_assisted() && pos > 0 && neg > 0 && db.len() >= 5 {
                let train_seed = derive_seed(&[cfg.master_seed, TAG_TRAIN, batch_index]);
                match fit_and_validate(
                    cfg.surrogate_kind,
                    &db.training_set()?,
                    &cfg.surrogate,
                    cfg.ranges.as_slice(),
                    cfg.train_ratio,
                    train_seed,
                ) {
                    Ok((model, report)) => {
                        record.surrogate_f1 = Some(report.f1);
                        if is_confident(&report, db.len(), cfg.batch_size, n_free, cfg.f1_threshold) {
                            let mut fresh = reinitialize_pool_epsilon_greedy(
                                &model,
                                &mut source,
                                cfg.pool_size,
                                cfg.epsilon_positive,
                                cfg.pool_oversample,
                                &self.space,
                                derive_seed(&[cfg.master_seed, TAG_REINIT, batch_index]),
                            )?;
                            fresh.exclude(db.keys());
                            pool = fresh;
                            record.pool_reinitialized = true;
                        }
                        surrogate = Some(model);
                    }
                    Err(e) => debug!("batch {batch_index}: surrogate not trained: {e}"),
                }
            }
            debug!("batch {batch_index}: {record:?}");
            batches.push(record);
            batch_index += 1;

            if db.len() >= cfg.abm_min_budget && best <= cfg.ks_threshold {
                break Termination::KsThresholdMet;
            }
            if db.len() >= cfg.abm_max_budget {
                break Termination::MaxBudgetExhausted;
            }
        };

        let (best_vector, best_statistic) = best_candidate(&db)?;
        info!(
            "calibration finished after {} evaluations: {terminated_by:?}, best statistic {best_statistic:.6}",
            db.len()
        );
        Ok(CalibrationRun {
            result: CalibrationResult {
                best_vector,
                best_statistic,
                evaluations_used: db.len(),
                batches_used: batches.len(),
                best_statistic_trace: trace,
                terminated_by,
                critical_value,
                batches,
            },
            db,
            surrogate,
        })
    }
}

pub fn run_calibration(cfg: &CalibrationConfig, reference: &EpidemicSeries) -> Result<CalibrationResult> {
    Ok(Calibrator::new(cfg.clone(), reference.clone())?.run()?.result)
}

/// Reference series produced by `true_vector` under the run's reference seed.
pub fn reference_series(true_vector: &ParameterVector, cfg: &CalibrationConfig) -> Result<EpidemicSeries> {
    simulate(&validate_params(true_vector)?, &cfg.sim, reference_seed(cfg.master_seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SamplerKind;
    use crate::surrogate::SurrogateKind;

    fn small() -> CalibrationConfig {
        let mut cfg = CalibrationConfig::desk();
        cfg.batch_size = 10;
        cfg.abm_min_budget = 20;
        cfg.abm_max_budget = 60;
        cfg.pool_size = 500;
        cfg.params_to_calibrate = vec![1, 7];
        cfg
    }

    #[test]
    fn self_comparison_is_zero() {
        let cfg = small();
        let truth = ParameterVector::reference();
        let reference = reference_series(&truth, &cfg).unwrap();
        let s = evaluate_minibatch(&[truth], &reference, &cfg, 3).unwrap();
        assert_eq!(s[0].statistic, 0.0);
        assert_eq!(s[0].label, Label::Positive);
    }

    #[test]
    fn failing_samples_are_absorbed() {
        let cfg = small();
        let reference = reference_series(&ParameterVector::reference(), &cfg).unwrap();
        let bad = ParameterVector(vec![2.0; 7]);
        let s = evaluate_minibatch(&[bad], &reference, &cfg, 0).unwrap();
        assert_eq!((s[0].statistic, s[0].label), (1.0, Label::Negative));
    }

    #[test]
    fn unattainable_threshold_uses_the_whole_budget() {
        let mut cfg = small();
        cfg.ks_threshold = -1.0;
        let reference = reference_series(&ParameterVector::reference(), &cfg).unwrap();
        let r = run_calibration(&cfg, &reference).unwrap();
        assert_eq!(r.terminated_by, Termination::MaxBudgetExhausted);
        assert_eq!(r.evaluations_used, 60);
        assert_eq!(r.batches_used, 6);
        assert!(r.best_statistic_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn degenerate_budgets_run_one_batch() {
        let mut cfg = small();
        cfg.abm_min_budget = 10;
        cfg.abm_max_budget = 10;
        let reference = reference_series(&ParameterVector::reference(), &cfg).unwrap();
        let r = run_calibration(&cfg, &reference).unwrap();
        assert_eq!((r.batches_used, r.evaluations_used), (1, 10));
    }

    #[test]
    fn planted_optimum_terminates_at_min_budget() {
        let cfg = small();
        let truth = ParameterVector::reference();
        let reference = reference_series(&truth, &cfg).unwrap();
        let mut cal = Calibrator::new(cfg.clone(), reference).unwrap();
        cal.plant(truth.clone()).unwrap();
        let run = cal.run().unwrap();
        assert_eq!(run.result.terminated_by, Termination::KsThresholdMet);
        assert_eq!(run.result.evaluations_used, cfg.abm_min_budget);
        assert_eq!(run.result.best_vector, truth);
        assert_eq!(run.result.best_statistic, 0.0);
    }

    #[test]
    fn surrogate_run_is_replayable() {
        let mut cfg = small().with_method(SamplerKind::SurrogateSobol, SurrogateKind::DecisionTree);
        cfg.f1_threshold = 0.0;
        let reference = reference_series(&ParameterVector::reference(), &cfg).unwrap();
        let a = Calibrator::new(cfg.clone(), reference.clone()).unwrap().run().unwrap();
        let b = Calibrator::new(cfg, reference).unwrap().run().unwrap();
        assert_eq!(a.result, b.result);
        assert_eq!(a.db, b.db);
        assert!(a.result.batches.iter().any(|r| r.pool_reinitialized), "{:?}", a.result);
    }
}
