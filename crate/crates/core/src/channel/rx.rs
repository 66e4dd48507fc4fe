use num_complex::Complex;

use super::fft::FftPair;
use super::ssfm::dispersion_operator;
use super::{LinkConfig, RrcFilter, Waveform, WdmConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Reported SNR when the residual error vanishes numerically.
pub const SNR_CAP_DB: f64 = 99.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RxResult<T> {
    /// Central-channel samples after guard removal.
    pub recovered_symbols: Vec<Complex<T>>,
    pub effective_snr_db: f64,
    /// Least-squares complex gain between transmitted and received symbols.
    pub scale: Complex<f64>,
    /// Sample offset chosen for downsampling.
    pub sampling_offset: isize,
}

/// `sum |a X|^2 / sum |Y - a X|^2` in dB with `a = sum Y X* / sum |X|^2`,
/// capped at [`SNR_CAP_DB`]. Returns the estimate and `a`.
pub fn effective_snr_db<T: Real>(received: &[Complex<T>], sent: &[Complex<T>]) -> Result<(f64, Complex<f64>)> {
    if received.len() != sent.len() || received.is_empty() {
        return Err(Error::Config(format!(
            "{} received symbols for {} transmitted",
            received.len(),
            sent.len()
        )));
    }
    let to64 = |c: &Complex<T>| Complex::new(c.re.as_f64(), c.im.as_f64());
    let mut cross = Complex::new(0.0, 0.0);
    let mut tx_energy = 0.0;
    for (y, x) in received.iter().zip(sent) {
        let (y, x) = (to64(y), to64(x));
        cross += y * x.conj();
        tx_energy += x.norm_sqr();
    }
    if tx_energy == 0.0 {
        return Err(Error::Degenerate("transmitted symbols carry no energy".into()));
    }
    let a = cross / tx_energy;
    let mut signal = 0.0;
    let mut error = 0.0;
    for (y, x) in received.iter().zip(sent) {
        let ax = a * to64(x);
        signal += ax.norm_sqr();
        error += (to64(y) - ax).norm_sqr();
    }
    let snr = if error <= signal * 10f64.powf(-SNR_CAP_DB / 10.0) {
        SNR_CAP_DB
    } else {
        (10.0 * (signal / error).log10()).min(SNR_CAP_DB)
    };
    Ok((snr, a))
}

/// Ideal chromatic dispersion compensation of the whole link, matched RRC
/// filtering, downsampling at the best integer sample offset, and effective
/// SNR against the transmitted central-channel symbols.
pub fn rx_central_channel<T: Real>(
    field: &Waveform<T>,
    wdm: &WdmConfig,
    link: &LinkConfig,
    tx_central: &[Complex<T>],
) -> Result<RxResult<T>> {
    let sps = wdm.samples_per_symbol;
    if field.len() != tx_central.len() * sps {
        return Err(Error::Config(format!(
            "field has {} samples, expected {} symbols x {} sps",
            field.len(),
            tx_central.len(),
            sps
        )));
    }
    if tx_central.len() <= 2 * wdm.guard_symbols {
        return Err(Error::Config(format!(
            "{} symbols leave nothing after discarding {} guard symbols per end",
            tx_central.len(),
            wdm.guard_symbols
        )));
    }

    let len = field.len();
    let filter = RrcFilter::new(sps, wdm.rolloff, wdm.rrc_span_symbols);
    let cdc = dispersion_operator::<T>(
        len,
        field.sample_rate_ghz,
        -link.beta2_ps2_per_km(),
        0.0,
        link.total_length_km(),
    );
    let response: Vec<Complex<T>> = cdc
        .iter()
        .zip(filter.frequency_response::<T>(len))
        .map(|(c, h)| c * h)
        .collect();
    let mut samples = field.samples.clone();
    FftPair::<T>::new(len).filter(&mut samples, &response);

    let keep = wdm.guard_symbols..tx_central.len() - wdm.guard_symbols;
    let sent = &tx_central[keep.clone()];
    let span = sps as isize;
    let mut best: Option<(f64, isize, Vec<Complex<T>>)> = None;
    for offset in -span..=span {
        let y = filter.downsample(&samples, offset);
        let y = y[keep.clone()].to_vec();
        let (mut cross, mut power) = (Complex::new(0.0, 0.0), 0.0);
        for (a, b) in y.iter().zip(sent) {
            let a = Complex::new(a.re.as_f64(), a.im.as_f64());
            cross += a * Complex::new(b.re.as_f64(), -b.im.as_f64());
            power += a.norm_sqr();
        }
        let score = if power > 0.0 { cross.norm_sqr() / power } else { 0.0 };
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, offset, y));
        }
    }
    let (_, offset, recovered) = best.expect("offset search is non-empty");
    let (snr, scale) = effective_snr_db(&recovered, sent)?;
    Ok(RxResult { recovered_symbols: recovered, effective_snr_db: snr, scale, sampling_offset: offset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn symbols(len: usize, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|_| Complex::new((2 * rng.random_range(0..4) - 3) as f64, (2 * rng.random_range(0..4) - 3) as f64))
            .collect()
    }

    #[test]
    fn noiseless_is_capped() {
        let x = symbols(100, 1);
        assert_eq!(effective_snr_db(&x, &x).unwrap().0, SNR_CAP_DB);
        let rot = Complex::from_polar(2.0, std::f64::consts::FRAC_PI_4);
        let y: Vec<_> = x.iter().map(|s| s * rot).collect();
        let (snr, a) = effective_snr_db(&y, &x).unwrap();
        assert_eq!(snr, SNR_CAP_DB);
        assert!((a - rot).norm() < 1e-12);
    }

    #[test]
    fn awgn_estimate() {
        let x = symbols(100_000, 2);
        let es = x.iter().map(|s| s.norm_sqr()).sum::<f64>() / x.len() as f64;
        let sigma = (es / 10.0 / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y: Vec<_> = x
            .iter()
            .map(|s| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                s + Complex::new(sigma * re, sigma * im)
            })
            .collect();
        let (snr, _) = effective_snr_db(&y, &x).unwrap();
        assert!((snr - 10.0).abs() < 0.1, "{snr}");
    }

    #[test]
    fn length_mismatch() {
        let x = symbols(10, 4);
        assert!(effective_snr_db(&x[..5], &x).is_err());
        let wdm = WdmConfig { guard_symbols: 2, ..WdmConfig::reference(0.0) };
        let field = Waveform::new(vec![Complex::new(0.0, 0.0); 79], 256.0);
        assert!(rx_central_channel(&field, &wdm, &LinkConfig::reference(1), &x).is_err());
    }
}
