//! Parameter vectors and their admissible ranges.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of calibratable model parameters.
pub const N_PARAMS: usize = 7;

/// Upper bound, in days, of the two duration parameters.
pub const MAX_DURATION_DAYS: f64 = 41.0;

/// Display names, in canonical order.
pub const PARAM_NAMES: [&str; N_PARAMS] = [
    "transmission_probability",
    "reinfection_probability",
    "death_probability",
    "infection_period",
    "detection_time",
    "speed",
    "interaction_radius",
];

/// Reference parameter values used for the sanity-check protocol.
pub const REFERENCE_TRUE_VALUES: [f64; N_PARAMS] = [0.639, 0.129, 0.44, 30.0, 14.0, 0.002, 0.012];

/// Ordered parameter values in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn reference() -> Self {
        Self(REFERENCE_TRUE_VALUES.to_vec())
    }

    /// Exact bit pattern, used for duplicate detection at full precision.
    pub fn bit_key(&self) -> Vec<u64> {
        self.0.iter().map(|v| v.to_bits()).collect()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParameterVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Open interval `(low, high)` per parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct ParameterRanges {
    ranges: Vec<(f64, f64)>,
}

impl ParameterRanges {
    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(lo, hi)) in ranges.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::BadRange(format!(
                    "range {} is ({lo}, {hi}); need finite low < high",
                    i + 1
                )));
            }
        }
        Ok(Self { ranges })
    }

    /// (0,1) for the probabilities and spatial parameters, (0,41) days for
    /// the two durations.
    pub fn default_ranges() -> Self {
        let mut ranges = vec![(0.0, 1.0); N_PARAMS];
        ranges[3] = (0.0, MAX_DURATION_DAYS);
        ranges[4] = (0.0, MAX_DURATION_DAYS);
        Self { ranges }
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn get(&self, i: usize) -> (f64, f64) {
        self.ranges[i]
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn width(&self, i: usize) -> f64 {
        let (lo, hi) = self.ranges[i];
        hi - lo
    }

    /// Whether every entry of `v` lies strictly inside its interval.
    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.ranges.len()
            && v
                .iter()
                .zip(&self.ranges)
                .all(|(&x, &(lo, hi))| x > lo && x < hi)
    }
}

impl Default for ParameterRanges {
    fn default() -> Self {
        Self::default_ranges()
    }
}

impl TryFrom<Vec<(f64, f64)>> for ParameterRanges {
    type Error = Error;

    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ParameterRanges> for Vec<(f64, f64)> {
    fn from(r: ParameterRanges) -> Self {
        r.ranges
    }
}
