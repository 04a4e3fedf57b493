use serde::{Deserialize, Serialize};

use crate::abm::SimConfig;
use crate::error::{Error, Result};
use crate::ks::ks_coefficient;
use crate::params::{ParameterRanges, ParameterVector, N_PARAMS};
use crate::sampling::{SamplerKind, SearchSpace};
use crate::surrogate::{SurrogateHyper, SurrogateKind};

/// How candidate simulations are seeded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedStrategy {
    /// Every candidate runs with the reference simulation's seed, so
    /// candidates differ only through their parameters.
    #[default]
    Common,
    /// Each candidate gets a seed derived from `(master_seed, batch, slot)`.
    PerSample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub sampler_kind: SamplerKind,
    pub surrogate_kind: SurrogateKind,
    pub abm_min_budget: usize,
    pub abm_max_budget: usize,
    pub batch_size: usize,
    pub ks_threshold: f64,
    pub alpha: f64,
    pub epsilon_positive: f64,
    pub ranges: ParameterRanges,
    pub sim: SimConfig,
    pub master_seed: u64,
    /// 1-based indices of the searched parameters.
    pub params_to_calibrate: Vec<usize>,
    /// Values of the parameters that are not searched.
    pub pinned_vector: ParameterVector,
    pub pool_size: usize,
    pub pool_oversample: usize,
    pub train_ratio: f64,
    pub f1_threshold: f64,
    pub surrogate: SurrogateHyper,
    pub seed_strategy: SeedStrategy,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            sampler_kind: SamplerKind::Random,
            surrogate_kind: SurrogateKind::None,
            abm_min_budget: 500,
            abm_max_budget: 2500,
            batch_size: 50,
            ks_threshold: 0.005,
            alpha: 0.01,
            epsilon_positive: 0.9,
            ranges: ParameterRanges::default_ranges(),
            sim: SimConfig::default(),
            master_seed: 0,
            params_to_calibrate: (1..=N_PARAMS).collect(),
            pinned_vector: ParameterVector::reference(),
            pool_size: 10_000,
            pool_oversample: 2,
            train_ratio: 0.8,
            f1_threshold: 0.9,
            surrogate: SurrogateHyper::default(),
            seed_strategy: SeedStrategy::Common,
        }
    }
}

impl CalibrationConfig {
    /// Population 300, horizon 2000, budgets 200/1000, batch 25.
    pub fn desk() -> Self {
        Self {
            abm_min_budget: 200,
            abm_max_budget: 1000,
            batch_size: 25,
            sim: SimConfig {
                population_size: 300,
                ..SimConfig::default()
            },
            ..Self::default()
        }
    }

    /// Population 500, horizon 2000, budgets 500/2500, batch 50.
    pub fn paper() -> Self {
        Self::default()
    }

    /// Set the sampler and the matching surrogate; `None` for plain samplers.
    pub fn with_method(mut self, sampler: SamplerKind, surrogate: SurrogateKind) -> Self {
        self.sampler_kind = sampler;
        self.surrogate_kind = surrogate;
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.abm_min_budget > self.abm_max_budget {
            return bad(format!(
                "abm_min_budget {} exceeds abm_max_budget {}",
                self.abm_min_budget, self.abm_max_budget
            ));
        }
        if self.abm_max_budget < self.batch_size
            || self.abm_max_budget % self.batch_size != 0
            || self.abm_min_budget % self.batch_size != 0
        {
            return bad(format!(
                "budgets ({}, {}) must be positive multiples of batch_size {}",
                self.abm_min_budget, self.abm_max_budget, self.batch_size
            ));
        }
        if self.sampler_kind.is_surrogate_assisted() == (self.surrogate_kind == SurrogateKind::None) {
            return bad(format!(
                "sampler {:?} is incompatible with surrogate {:?}",
                self.sampler_kind, self.surrogate_kind
            ));
        }
        if !self.ks_threshold.is_finite() {
            return bad("ks_threshold must be finite".into());
        }
        ks_coefficient(self.alpha).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.epsilon_positive) {
            return bad(format!("epsilon_positive {} outside [0,1]", self.epsilon_positive));
        }
        if self.pool_size < self.batch_size || self.pool_oversample == 0 {
            return bad("pool_size must be >= batch_size and pool_oversample >= 1".into());
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return bad(format!("train_ratio {} outside (0,1)", self.train_ratio));
        }
        if self.ranges.len() != N_PARAMS {
            return bad(format!("ranges must have {N_PARAMS} entries"));
        }
        self.sim.validate().map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        self.search_space()?;
        Ok(())
    }

    pub fn search_space(&self) -> Result<SearchSpace> {
        if self.params_to_calibrate.iter().any(|&i| i == 0) {
            return Err(Error::ConfigInvalid("params_to_calibrate is 1-based".into()));
        }
        let free = self.params_to_calibrate.iter().map(|i| i - 1).collect();
        SearchSpace::new(self.ranges.clone(), free, self.pinned_vector.0.clone())
            .map_err(|e| Error::ConfigInvalid(e.to_string()))
    }
}
