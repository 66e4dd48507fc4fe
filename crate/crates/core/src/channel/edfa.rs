use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{db_to_linear, Waveform, PLANCK, SPEED_OF_LIGHT};
use crate::error::Result;
use crate::scalar::Real;

/// Total ASE power over the simulation bandwidth,
/// `(G - 1) h nu n_sp B` with `n_sp = NF / 2`.
pub fn ase_power_w(gain_db: f64, noise_figure_db: f64, center_wavelength_nm: f64, bandwidth_ghz: f64) -> f64 {
    let gain = db_to_linear(gain_db);
    let n_sp = db_to_linear(noise_figure_db) / 2.0;
    let nu = SPEED_OF_LIGHT / (center_wavelength_nm * 1e-9);
    (gain - 1.0) * PLANCK * nu * n_sp * bandwidth_ghz * 1e9
}

/// Amplifies by `gain_db` and adds circular white Gaussian ASE. `None` for
/// the noise figure amplifies without noise.
pub fn edfa<T: Real>(
    field: &Waveform<T>,
    gain_db: f64,
    noise_figure_db: Option<f64>,
    center_wavelength_nm: f64,
    seed: u64,
) -> Result<Waveform<T>> {
    let mut out = field.clone();
    out.scale(db_to_linear(gain_db).sqrt());
    if let Some(nf) = noise_figure_db {
        let p_ase = ase_power_w(gain_db, nf, center_wavelength_nm, field.sample_rate_ghz);
        let sigma = (p_ase / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut out.samples {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *s = *s + Complex::new(T::of(sigma * re), T::of(sigma * im));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fft::{frequencies_ghz, FftPair};

    fn tone_field(len: usize) -> Waveform<f64> {
        // narrowband signal near DC; the upper half of the band stays empty
        let samples = (0..len)
            .map(|n| Complex::from_polar(1e-3, 2.0 * std::f64::consts::PI * 4.0 * n as f64 / len as f64))
            .collect();
        Waveform::new(samples, 256.0)
    }

    #[test]
    fn noiseless_is_pure_scaling() {
        let x = tone_field(64);
        let y = edfa(&x, 15.2, None, 1550.0, 1).unwrap();
        let g = db_to_linear(15.2).sqrt();
        for (a, b) in x.samples.iter().zip(&y.samples) {
            assert!((a * g - b).norm() < 1e-15);
        }
    }

    #[test]
    fn same_seed_same_output() {
        let x = tone_field(256);
        let a = edfa(&x, 15.2, Some(6.0), 1550.0, 7).unwrap();
        let b = edfa(&x, 15.2, Some(6.0), 1550.0, 7).unwrap();
        let c = edfa(&x, 15.2, Some(6.0), 1550.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_density_matches_formula() {
        let len = 1 << 20;
        let x = tone_field(len);
        let y = edfa(&x, 15.2, Some(6.0), 1550.0, 11).unwrap();
        let mut spectrum = y.samples.clone();
        let fft = FftPair::<f64>::new(len);
        fft.forward(&mut spectrum, &mut fft.scratch());
        // periodogram in the signal-free band |f| > 64 GHz, W per Hz
        let freqs = frequencies_ghz(len, 256.0);
        let fs_hz = 256e9;
        let (sum, count) = spectrum
            .iter()
            .zip(&freqs)
            .filter(|(_, f)| f.abs() > 64.0)
            .fold((0.0, 0usize), |(s, c), (x, _)| (s + x.norm_sqr() / (len as f64 * fs_hz), c + 1));
        let measured = sum / count as f64;
        let expected = ase_power_w(15.2, 6.0, 1550.0, 256.0) / fs_hz;
        assert!((measured / expected - 1.0).abs() < 0.05, "{measured} vs {expected}");
    }
}
