//! Calibration of agent-based epidemic models by simulation, Kolmogorov-Smirnov
//! labelling and surrogate-guided candidate sampling.
//!
//! The statistical kernels ([`ks`], [`sobol::scale_point`]) are generic over
//! [`scalar::Scalar`]; the aliases below fix them to `f64`, which is what the
//! simulator, surrogates and engine use.

pub mod abm;
pub mod engine;
pub mod error;
pub mod harness;
pub mod ks;
pub mod params;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod series;
pub mod sobol;
pub mod surrogate;

pub use engine::{CalibrationConfig, CalibrationResult, Calibrator, GroundTruthDb, LabeledSample};
pub use error::{Error, Result};
pub use params::{ParameterRanges, ParameterVector};
pub use series::EpidemicSeries;

pub type TimeSeriesCdf64 = ks::TimeSeriesCdf<f64>;
pub type KsOutcome64 = ks::KsOutcome<f64>;

pub fn ks_statistic64(real: &EpidemicSeries, sim: &EpidemicSeries) -> Result<f64> {
    ks::ks_statistic::<f64>(real, sim)
}
