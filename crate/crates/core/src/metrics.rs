//! Symbol-energy statistics.
//!
//! The exponentially-weighted energy of symbol `i` is
//! `G_i = sum_l lambda^|l| * |X_{i+l}|^2`, truncated to `|l| <= L` where
//! `lambda^L` first drops below `epsilon`. EEDI is the ratio of the sample
//! variance to the sample mean of `G_i` over the indices whose window is
//! fully supported by the sequence. EDI is the same ratio for flat windows
//! of odd width `W`.

use std::ops::Range;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Per-symbol energies `|X_i|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries<T> {
    values: Vec<T>,
}

impl<T: Real> EnergySeries<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidParameter("energies must be finite and non-negative".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Scales every energy by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self { values: self.values.iter().map(|&v| v * factor).collect() }
    }
}

/// `G_i` for every index of the source series. Only
/// [`interior`](Self::interior) carries the full two-sided window.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnergySeries<T> {
    values: Vec<T>,
    lambda: T,
    truncation: usize,
    interior: Range<usize>,
}

impl<T: Real> WeightedEnergySeries<T> {
    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// One-sided truncation length `L`.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn interior(&self) -> Range<usize> {
        self.interior.clone()
    }

    pub fn interior_values(&self) -> &[T] {
        &self.values[self.interior.clone()]
    }

    pub fn all_values(&self) -> &[T] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Eedi,
    Edi,
    Kurtosis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricParameter {
    Lambda(f64),
    Window(usize),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricResult<T> {
    pub value: T,
    pub kind: MetricKind,
    pub parameter: MetricParameter,
    pub n_samples: usize,
}

impl<T: Real> MetricResult<T> {
    /// JSON shape used by the `metrics` subcommand.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::json!({
            "metric": self.kind,
            "value": self.value.as_f64(),
            "n_samples": self.n_samples,
        });
        match self.parameter {
            MetricParameter::Lambda(l) => obj["lambda"] = l.into(),
            MetricParameter::Window(w) => obj["W"] = w.into(),
            MetricParameter::None => {}
        }
        obj
    }
}

pub fn symbol_energies<T: Real>(symbols: &[Complex<T>]) -> Result<EnergySeries<T>> {
    if symbols.is_empty() {
        return Err(Error::EmptyInput);
    }
    EnergySeries::new(symbols.iter().map(|s| s.re * s.re + s.im * s.im).collect())
}

/// `L = ceil(ln epsilon / ln lambda)`, and 0 for `lambda == 0`.
pub fn truncation_length(lambda: f64, epsilon: f64) -> Result<usize> {
    check_lambda(lambda)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if lambda >= 1.0 {
        return Err(Error::InvalidParameter(
            "lambda = 1 has no finite truncation; EEDI is 0 by definition".into(),
        ));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    Ok((epsilon.ln() / lambda.ln()).ceil() as usize)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(())
}

/// Two-sided truncated exponential window via a forward and a backward
/// sliding recursion, `G_i = F_i + B_i - e_i`, where
/// `F_i = lambda F_{i-1} + e_i - lambda^{L+1} e_{i-L-1}` and symmetrically for `B`.
pub fn weighted_energy<T: Real>(
    energies: &EnergySeries<T>,
    lambda: T,
    epsilon: f64,
) -> Result<WeightedEnergySeries<T>> {
    let l = truncation_length(lambda.as_f64(), epsilon)?;
    let e = energies.values();
    let n = e.len();
    let needed = 2 * l + 1;
    if n < needed {
        return Err(Error::InsufficientLength { len: n, needed });
    }

    let drop_weight = lambda.powi((l + 1) as i32);
    let mut forward = vec![T::zero(); n];
    let mut acc = T::zero();
    for i in 0..n {
        acc = lambda * acc + e[i];
        if i > l {
            acc = acc - drop_weight * e[i - l - 1];
        }
        forward[i] = acc;
    }

    let mut values = forward;
    acc = T::zero();
    for i in (0..n).rev() {
        acc = lambda * acc + e[i];
        if i + l + 1 < n {
            acc = acc - drop_weight * e[i + l + 1];
        }
        values[i] = values[i] + acc - e[i];
    }

    Ok(WeightedEnergySeries { values, lambda, truncation: l, interior: l..n - l })
}

/// Sample mean and unbiased sample variance (two-pass).
fn mean_and_variance<T: Real>(xs: &[T]) -> (T, T) {
    let n = T::of_usize(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    let ss: T = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - T::one()))
}

fn dispersion_index<T: Real>(xs: &[T]) -> Result<T> {
    let (mean, var) = mean_and_variance(xs);
    if mean <= T::zero() {
        return Err(Error::Degenerate("mean energy is zero".into()));
    }
    Ok(var / mean)
}

/// EEDI computed from an energy series.
pub fn eedi_from_energies<T: Real>(
    energies: &EnergySeries<T>,
    lambda: T,
    epsilon: f64,
) -> Result<MetricResult<T>> {
    check_lambda(lambda.as_f64())?;
    let e = energies.values();
    if e.iter().all(|&v| v == T::zero()) {
        return Err(Error::Degenerate("all-zero signal".into()));
    }
    if lambda == T::one() {
        if e.len() < 2 {
            return Err(Error::InsufficientLength { len: e.len(), needed: 2 });
        }
        return Ok(MetricResult {
            value: T::zero(),
            kind: MetricKind::Eedi,
            parameter: MetricParameter::Lambda(1.0),
            n_samples: e.len(),
        });
    }
    let l = truncation_length(lambda.as_f64(), epsilon)?;
    if e.len() < 2 * l + 2 {
        return Err(Error::InsufficientLength { len: e.len(), needed: 2 * l + 2 });
    }
    let g = weighted_energy(energies, lambda, epsilon)?;
    let interior = g.interior_values();
    Ok(MetricResult {
        value: dispersion_index(interior)?,
        kind: MetricKind::Eedi,
        parameter: MetricParameter::Lambda(lambda.as_f64()),
        n_samples: interior.len(),
    })
}

pub fn eedi<T: Real>(symbols: &[Complex<T>], lambda: T, epsilon: f64) -> Result<MetricResult<T>> {
    eedi_from_energies(&symbol_energies(symbols)?, lambda, epsilon)
}

/// Flat-window sums `E_i` over every fully supported window of width `window`.
pub fn windowed_energy<T: Real>(energies: &EnergySeries<T>, window: usize) -> Result<Vec<T>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidParameter(format!("EDI window {window} must be odd and positive")));
    }
    let e = energies.values();
    if e.len() < window + 1 {
        return Err(Error::InsufficientLength { len: e.len(), needed: window + 1 });
    }
    Ok(e.windows(window).map(|w| w.iter().copied().sum()).collect())
}

pub fn edi_from_energies<T: Real>(energies: &EnergySeries<T>, window: usize) -> Result<MetricResult<T>> {
    let sums = windowed_energy(energies, window)?;
    Ok(MetricResult {
        value: dispersion_index(&sums)?,
        kind: MetricKind::Edi,
        parameter: MetricParameter::Window(window),
        n_samples: sums.len(),
    })
}

pub fn edi<T: Real>(symbols: &[Complex<T>], window: usize) -> Result<MetricResult<T>> {
    edi_from_energies(&symbol_energies(symbols)?, window)
}

/// `mean(|X|^4) / mean(|X|^2)^2`.
pub fn kurtosis<T: Real>(symbols: &[Complex<T>]) -> Result<MetricResult<T>> {
    if symbols.len() < 2 {
        return Err(Error::InsufficientLength { len: symbols.len(), needed: 2 });
    }
    let energies = symbol_energies(symbols)?;
    let n = T::of_usize(energies.len());
    let m2 = energies.values().iter().copied().sum::<T>() / n;
    if m2 <= T::zero() {
        return Err(Error::Degenerate("all-zero signal".into()));
    }
    let m4 = energies.values().iter().map(|&e| e * e).sum::<T>() / n;
    Ok(MetricResult {
        value: m4 / (m2 * m2),
        kind: MetricKind::Kurtosis,
        parameter: MetricParameter::None,
        n_samples: energies.len(),
    })
}

/// Number of integer offsets `l` with `lambda^|l| >= threshold`.
pub fn effective_window_count(lambda: f64, threshold: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} outside [0, 1)")));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!("threshold {threshold} outside (0, 1]")));
    }
    if lambda == 0.0 {
        return Ok(1);
    }
    let reach = (threshold.ln() / lambda.ln() + 1e-12).floor() as usize;
    Ok(2 * reach + 1)
}
