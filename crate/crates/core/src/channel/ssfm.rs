use num_complex::Complex;

use super::fft::{frequencies_ghz, FftPair};
use super::{LinkConfig, Waveform};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `exp(j beta2/2 w^2 z - alpha/2 z)` on the FFT grid, with `w` in rad/ps.
pub fn dispersion_operator<T: Real>(
    len: usize,
    sample_rate_ghz: f64,
    beta2_ps2_per_km: f64,
    alpha_per_km: f64,
    length_km: f64,
) -> Vec<Complex<T>> {
    let amplitude = (-alpha_per_km / 2.0 * length_km).exp();
    frequencies_ghz(len, sample_rate_ghz)
        .into_iter()
        .map(|f| {
            let omega = 2.0 * std::f64::consts::PI * f * 1e-3;
            let phase = beta2_ps2_per_km / 2.0 * omega * omega * length_km;
            Complex::new(T::of(amplitude * phase.cos()), T::of(amplitude * phase.sin()))
        })
        .collect()
}

/// Symmetric split-step propagator for one span, with the linear operators
/// and transform plans precomputed for a fixed field length.
///
/// Consecutive half linear steps are merged, so a span of `S` steps costs
/// `S + 1` transform pairs.
pub struct SplitStep<T: Real> {
    fft: FftPair<T>,
    half_step: Vec<Complex<T>>,
    full_step: Vec<Complex<T>>,
    steps: usize,
    nonlinear_length_km: f64,
    gamma: f64,
    len: usize,
}

impl<T: Real> SplitStep<T> {
    pub fn new(len: usize, sample_rate_ghz: f64, link: &LinkConfig) -> Self {
        let steps = link.steps_per_span();
        let h = link.span_length_km / steps as f64;
        let alpha = link.alpha_per_km();
        let beta2 = link.beta2_ps2_per_km();
        // inverse-transform normalisation folded into the operators
        let norm = 1.0 / len as f64;
        let scaled = |op: Vec<Complex<T>>| -> Vec<Complex<T>> {
            op.into_iter().map(|c| c * T::of(norm)).collect()
        };
        // power integral over a step, referenced to the step midpoint
        let nonlinear_length_km =
            if alpha > 0.0 { 2.0 / alpha * (alpha * h / 2.0).sinh() } else { h };
        Self {
            fft: FftPair::new(len),
            half_step: scaled(dispersion_operator(len, sample_rate_ghz, beta2, alpha, h / 2.0)),
            full_step: scaled(dispersion_operator(len, sample_rate_ghz, beta2, alpha, h)),
            steps,
            nonlinear_length_km,
            gamma: link.gamma_per_w_km,
            len,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn linear(&self, field: &mut [Complex<T>], op: &[Complex<T>], scratch: &mut [Complex<T>]) {
        self.fft.forward(field, scratch);
        for (x, h) in field.iter_mut().zip(op) {
            *x = *x * *h;
        }
        self.fft.inverse(field, scratch);
    }

    fn nonlinear(&self, field: &mut [Complex<T>]) {
        if self.gamma == 0.0 {
            return;
        }
        let k = T::of(self.gamma * self.nonlinear_length_km);
        for x in field.iter_mut() {
            let (s, c) = (k * x.norm_sqr()).sin_cos();
            *x = *x * Complex::new(c, s);
        }
    }

    pub fn propagate_span(&self, field: &mut Waveform<T>) -> Result<()> {
        if field.len() != self.len {
            return Err(Error::Config(format!(
                "propagator built for {} samples, field has {}",
                self.len,
                field.len()
            )));
        }
        let mut scratch = self.fft.scratch();
        let data = &mut field.samples;
        for step in 0..self.steps {
            let op = if step == 0 { &self.half_step } else { &self.full_step };
            self.linear(data, op, &mut scratch);
            self.nonlinear(data);
        }
        self.linear(data, &self.half_step, &mut scratch);
        if !field.is_finite() {
            return Err(Error::NumericOverflow(
                "non-finite field after span; reduce launch power or step size".into(),
            ));
        }
        Ok(())
    }
}

/// Propagates `field` over one span of `link`.
pub fn ssfm_span<T: Real>(field: &Waveform<T>, link: &LinkConfig) -> Result<Waveform<T>> {
    link.validate()?;
    let mut out = field.clone();
    SplitStep::new(field.len(), field.sample_rate_ghz, link).propagate_span(&mut out)?;
    Ok(out)
}
