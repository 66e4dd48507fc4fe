use std::f64::consts::PI;

use num_complex::Complex;

use super::fft::FftPair;
use super::Waveform;
use crate::scalar::Real;

/// Unit-energy root-raised-cosine taps spanning `span_symbols` symbol
/// periods (`span_symbols * sps + 1` taps, centred).
pub fn rrc_taps(sps: usize, rolloff: f64, span_symbols: usize) -> Vec<f64> {
    let len = span_symbols * sps + 1;
    let center = (len - 1) as f64 / 2.0;
    let b = rolloff;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let t = (i as f64 - center) / sps as f64;
            if t.abs() < 1e-12 {
                1.0 - b + 4.0 * b / PI
            } else if b > 0.0 && (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-12 {
                b / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
            } else {
                let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
                let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
                num / den
            }
        })
        .collect();
    let norm = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    for h in &mut taps {
        *h /= norm;
    }
    taps
}

/// RRC pulse shaper and matched filter. Filtering is circular so that
/// periodic sequences stay periodic; pulse `k` is centred on sample `k * sps`.
#[derive(Debug, Clone)]
pub struct RrcFilter {
    taps: Vec<f64>,
    sps: usize,
}

impl RrcFilter {
    pub fn new(sps: usize, rolloff: f64, span_symbols: usize) -> Self {
        assert!(sps >= 2, "samples per symbol must be at least 2");
        assert!((0.0..=1.0).contains(&rolloff), "roll-off must lie in [0, 1]");
        Self { taps: rrc_taps(sps, rolloff, span_symbols), sps }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.sps
    }

    /// DFT of the circularly centred impulse response at length `len`. The
    /// taps are symmetric, so the response is real.
    pub fn frequency_response<T: Real>(&self, len: usize) -> Vec<Complex<T>> {
        let mut h = vec![Complex::new(0.0f64, 0.0); len];
        let center = (self.taps.len() - 1) / 2;
        for (j, &tap) in self.taps.iter().enumerate() {
            let idx = (j as isize - center as isize).rem_euclid(len as isize) as usize;
            h[idx].re += tap;
        }
        let fft = FftPair::<f64>::new(len);
        let mut scratch = fft.scratch();
        fft.forward(&mut h, &mut scratch);
        h.into_iter().map(|c| Complex::new(T::of(c.re), T::zero())).collect()
    }

    /// Upsamples by `sps` and applies the pulse.
    pub fn shape<T: Real>(&self, symbols: &[Complex<T>], sample_rate_ghz: f64) -> Waveform<T> {
        let len = symbols.len() * self.sps;
        let mut samples = vec![Complex::new(T::zero(), T::zero()); len];
        for (k, &s) in symbols.iter().enumerate() {
            samples[k * self.sps] = s;
        }
        if len > 0 {
            let fft = FftPair::<T>::new(len);
            fft.filter(&mut samples, &self.frequency_response(len));
        }
        Waveform::new(samples, sample_rate_ghz)
    }

    /// Matched filtering at the full sample rate.
    pub fn matched<T: Real>(&self, samples: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = samples.to_vec();
        if !out.is_empty() {
            let response = self.frequency_response(out.len());
            FftPair::<T>::new(out.len()).filter(&mut out, &response);
        }
        out
    }

    /// Samples `k * sps + offset` (circularly) for every symbol slot.
    pub fn downsample<T: Real>(&self, samples: &[Complex<T>], offset: isize) -> Vec<Complex<T>> {
        let n = samples.len() as isize;
        (0..samples.len() / self.sps)
            .map(|k| samples[((k * self.sps) as isize + offset).rem_euclid(n) as usize])
            .collect()
    }
}

/// Upsample and filter with a unit-energy RRC pulse.
pub fn rrc_shape<T: Real>(
    symbols: &[Complex<T>],
    sps: usize,
    rolloff: f64,
    span_symbols: usize,
    symbol_rate_gbd: f64,
) -> Waveform<T> {
    RrcFilter::new(sps, rolloff, span_symbols).shape(symbols, sps as f64 * symbol_rate_gbd)
}
