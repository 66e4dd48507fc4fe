use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Forward/inverse transform pair of one length. The inverse is unnormalised.
pub(crate) struct FftPair<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> FftPair<T> {
    pub(crate) fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) }
    }

    pub(crate) fn scratch(&self) -> Vec<Complex<T>> {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![Complex::new(T::zero(), T::zero()); len]
    }

    pub(crate) fn forward(&self, data: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        self.forward.process_with_scratch(data, scratch);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        self.inverse.process_with_scratch(data, scratch);
    }

    /// Applies a frequency-domain multiplier, folding in the 1/N of the inverse.
    pub(crate) fn filter(&self, data: &mut [Complex<T>], response: &[Complex<T>]) {
        let mut scratch = self.scratch();
        self.forward(data, &mut scratch);
        let norm = T::one() / T::of_usize(data.len());
        for (x, h) in data.iter_mut().zip(response) {
            *x = *x * *h * norm;
        }
        self.inverse(data, &mut scratch);
    }
}

/// FFT bin frequencies in GHz, in natural FFT order.
pub(crate) fn frequencies_ghz(len: usize, sample_rate_ghz: f64) -> Vec<f64> {
    let df = sample_rate_ghz / len as f64;
    (0..len)
        .map(|k| if k < len.div_ceil(2) { k as f64 * df } else { (k as f64 - len as f64) * df })
        .collect()
}
