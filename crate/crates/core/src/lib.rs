//! Finite-blocklength probabilistic amplitude shaping, split-step WDM fiber
//! simulation and exponentially-weighted energy dispersion analysis.
//!
//! The numerical core is generic over the floating-point type through
//! [`Real`]; the aliases below pin the common `f64` and `f32` instantiations.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod error;
pub mod metrics;
pub mod scalar;
pub mod shaping;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SymbolSequence64 = shaping::SymbolSequence<f64>;
pub type SymbolSequence32 = shaping::SymbolSequence<f32>;
pub type EnergySeries64 = metrics::EnergySeries<f64>;
pub type EnergySeries32 = metrics::EnergySeries<f32>;
pub type WeightedEnergySeries64 = metrics::WeightedEnergySeries<f64>;
pub type WeightedEnergySeries32 = metrics::WeightedEnergySeries<f32>;
pub type MetricResult64 = metrics::MetricResult<f64>;
pub type MetricResult32 = metrics::MetricResult<f32>;
pub type Waveform64 = channel::Waveform<f64>;
pub type Waveform32 = channel::Waveform<f32>;
pub type RxResult64 = channel::RxResult<f64>;
pub type RxResult32 = channel::RxResult<f32>;
