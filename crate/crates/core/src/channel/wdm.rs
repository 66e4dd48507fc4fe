use num_complex::Complex;

use super::Waveform;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sums the channel waveforms, shifting channel `k` of `K` to
/// `(k - (K-1)/2) * spacing`. The central channel stays at baseband.
pub fn build_wdm<T: Real>(channels: &[Waveform<T>], spacing_ghz: f64) -> Result<Waveform<T>> {
    let first = channels
        .first()
        .ok_or_else(|| Error::Config("no channels to multiplex".into()))?;
    if channels.len() % 2 == 0 {
        return Err(Error::Config(format!("{} channels, expected an odd count", channels.len())));
    }
    let (len, fs) = (first.len(), first.sample_rate_ghz);
    if channels.iter().any(|c| c.len() != len || c.sample_rate_ghz != fs) {
        return Err(Error::Config("channel waveforms differ in length or sample rate".into()));
    }

    let half = (channels.len() - 1) as f64 / 2.0;
    let mut out = vec![Complex::new(T::zero(), T::zero()); len];
    for (k, channel) in channels.iter().enumerate() {
        let cycles_per_sample = (k as f64 - half) * spacing_ghz / fs;
        for (n, (acc, &s)) in out.iter_mut().zip(&channel.samples).enumerate() {
            if cycles_per_sample == 0.0 {
                *acc = *acc + s;
                continue;
            }
            // reduce the phase modulo one cycle before scaling to radians
            let turns = (cycles_per_sample * n as f64).rem_euclid(1.0);
            let phase = 2.0 * std::f64::consts::PI * turns;
            let carrier = Complex::new(T::of(phase.cos()), T::of(phase.sin()));
            *acc = *acc + s * carrier;
        }
    }
    Ok(Waveform::new(out, fs))
}
