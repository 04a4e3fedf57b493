//! Two-sample Kolmogorov–Smirnov comparison of epidemic curves.
//!
//! A series of infected counts becomes a distribution over time by a
//! cumulative sum normalised by the total mass. Two such curves are
//! compared pointwise on their shared step grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::EpidemicSeries;

/// Binary calibration label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

/// Normalised cumulative infected mass; non-decreasing, ends at one.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesCdf<F> {
    values: Vec<F>,
}

impl<F: Scalar> TimeSeriesCdf<F> {
    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest pointwise gap; both CDFs must share a grid.
    pub fn sup_distance(&self, other: &Self) -> Result<F> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(F::zero(), |acc, (&a, &b)| acc.max((a - b).abs())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsOutcome<F> {
    pub statistic: F,
    pub label: Label,
    pub critical_value: F,
}

/// Cumulative sum divided by total. Partial sums are accumulated exactly in
/// integers, so the last value is exactly one.
pub fn to_cdf<F: Scalar>(series: &EpidemicSeries) -> Result<TimeSeriesCdf<F>> {
    let total = series.total();
    if total == 0 {
        return Err(Error::AllZeroSeries);
    }
    let denom = F::from_u64(total).expect("u64 converts to float");
    let mut acc = 0u64;
    let values = series
        .counts
        .iter()
        .map(|&c| {
            acc += c as u64;
            F::from_u64(acc).expect("u64 converts to float") / denom
        })
        .collect();
    Ok(TimeSeriesCdf { values })
}

pub fn ks_statistic<F: Scalar>(real: &EpidemicSeries, sim: &EpidemicSeries) -> Result<F> {
    if real.len() != sim.len() {
        return Err(Error::LengthMismatch(real.len(), sim.len()));
    }
    to_cdf::<F>(real)?.sup_distance(&to_cdf(sim)?)
}

/// Large-sample two-sample coefficients `c(alpha)`.
const KS_COEFFICIENTS: [(f64, f64); 1] = [(0.01, 1.628)];

pub fn ks_coefficient(alpha: f64) -> Result<f64> {
    KS_COEFFICIENTS
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .map(|&(_, c)| c)
        .ok_or(Error::UnsupportedAlpha(alpha))
}

/// `c(alpha) * sqrt((n + m) / (n m))`.
pub fn ks_critical_value<F: Scalar>(alpha: f64, n: usize, m: usize) -> Result<F> {
    let c = ks_coefficient(alpha)?;
    if n == 0 || m == 0 {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let (nf, mf) = (n as f64, m as f64);
    let cv = c * ((nf + mf) / (nf * mf)).sqrt();
    if cv >= 1.0 {
        log::warn!("critical value {cv:.4} >= 1 for n={n}, m={m}: every comparison labels positive");
    }
    Ok(F::from_f64_lossy(cv))
}

/// Compare a simulated curve against the reference and label it. A
/// simulated series with no infections is maximally dissimilar.
pub fn evaluate_candidate<F: Scalar>(
    real: &EpidemicSeries,
    sim: &EpidemicSeries,
    alpha: f64,
) -> Result<KsOutcome<F>> {
    if real.len() != sim.len() {
        return Err(Error::LengthMismatch(real.len(), sim.len()));
    }
    let real_cdf = to_cdf::<F>(real)?;
    let critical_value = ks_critical_value::<F>(alpha, real.len(), sim.len())?;
    let statistic = match to_cdf::<F>(sim) {
        Ok(sim_cdf) => real_cdf.sup_distance(&sim_cdf)?,
        Err(Error::AllZeroSeries) => {
            return Ok(KsOutcome {
                statistic: F::one(),
                label: Label::Negative,
                critical_value,
            })
        }
        Err(e) => return Err(e),
    };
    let label = if statistic <= critical_value {
        Label::Positive
    } else {
        Label::Negative
    };
    Ok(KsOutcome {
        statistic,
        label,
        critical_value,
    })
}
