//! Single-polarisation multi-span WDM fiber link.
//!
//! Fields are complex envelopes in sqrt(W). Time is measured in ps,
//! frequency in GHz, distance in km.

mod edfa;
mod fft;
mod rrc;
mod rx;
mod ssfm;
mod wdm;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::shaping::{derive_seed, SymbolSequence};

pub use edfa::{ase_power_w, edfa};
pub use rrc::{rrc_shape, rrc_taps, RrcFilter};
pub use rx::{effective_snr_db, rx_central_channel, RxResult, SNR_CAP_DB};
pub use ssfm::{dispersion_operator, ssfm_span, SplitStep};
pub use wdm::build_wdm;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;

pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn default_wavelength() -> f64 {
    1550.0
}

fn default_step() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

fn default_rrc_span() -> usize {
    128
}

fn default_guard() -> usize {
    512
}

fn invalid(path: &str, message: impl Into<String>) -> Error {
    Error::Validation { path: path.to_string(), message: message.into() }
}

/// Fiber span and amplifier parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub span_length_km: f64,
    pub num_spans: usize,
    pub loss_db_per_km: f64,
    pub dispersion_ps_per_nm_km: f64,
    pub gamma_per_w_km: f64,
    pub noise_figure_db: f64,
    #[serde(default = "default_wavelength")]
    pub center_wavelength_nm: f64,
    #[serde(default = "default_step")]
    pub step_size_km: f64,
    /// When false the amplifiers only restore gain and add no ASE.
    #[serde(default = "default_true")]
    pub amplifier_noise: bool,
}

impl LinkConfig {
    /// 80 km spans of standard single-mode fiber with 6 dB noise-figure EDFAs.
    pub fn reference(num_spans: usize) -> Self {
        Self {
            span_length_km: 80.0,
            num_spans,
            loss_db_per_km: 0.19,
            dispersion_ps_per_nm_km: 17.0,
            gamma_per_w_km: 1.37,
            noise_figure_db: 6.0,
            center_wavelength_nm: default_wavelength(),
            step_size_km: default_step(),
            amplifier_noise: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_at("link")
    }

    pub fn validate_at(&self, prefix: &str) -> Result<()> {
        let p = |f: &str| format!("{prefix}.{f}");
        if !(self.span_length_km > 0.0 && self.span_length_km.is_finite()) {
            return Err(invalid(&p("span_length_km"), "must be positive"));
        }
        if !(self.loss_db_per_km >= 0.0 && self.loss_db_per_km.is_finite()) {
            return Err(invalid(&p("loss_db_per_km"), "must be non-negative"));
        }
        if !self.dispersion_ps_per_nm_km.is_finite() {
            return Err(invalid(&p("dispersion_ps_per_nm_km"), "must be finite"));
        }
        if !(self.gamma_per_w_km >= 0.0 && self.gamma_per_w_km.is_finite()) {
            return Err(invalid(&p("gamma_per_w_km"), "must be non-negative"));
        }
        if !self.noise_figure_db.is_finite() {
            return Err(invalid(&p("noise_figure_db"), "must be finite"));
        }
        if !(self.center_wavelength_nm > 0.0) {
            return Err(invalid(&p("center_wavelength_nm"), "must be positive"));
        }
        if !(self.step_size_km > 0.0 && self.step_size_km <= self.span_length_km) {
            return Err(invalid(&p("step_size_km"), "must be positive and at most span_length_km"));
        }
        let ratio = self.span_length_km / self.step_size_km;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio {
            return Err(invalid(&p("step_size_km"), "must divide span_length_km"));
        }
        Ok(())
    }

    pub fn steps_per_span(&self) -> usize {
        (self.span_length_km / self.step_size_km).round().max(1.0) as usize
    }

    /// Field attenuation coefficient alpha in 1/km (power decays as exp(-alpha z)).
    pub fn alpha_per_km(&self) -> f64 {
        self.loss_db_per_km * 10f64.ln() / 10.0
    }

    /// Group-velocity dispersion `beta2 = -D lambda^2 / (2 pi c)` in ps^2/km.
    pub fn beta2_ps2_per_km(&self) -> f64 {
        // c in nm/ps
        let c = SPEED_OF_LIGHT * 1e-3;
        -self.dispersion_ps_per_nm_km * self.center_wavelength_nm.powi(2)
            / (2.0 * std::f64::consts::PI * c)
    }

    pub fn span_loss_db(&self) -> f64 {
        self.loss_db_per_km * self.span_length_km
    }

    pub fn total_length_km(&self) -> f64 {
        self.span_length_km * self.num_spans as f64
    }

    /// Carrier frequency in Hz.
    pub fn carrier_hz(&self) -> f64 {
        SPEED_OF_LIGHT / (self.center_wavelength_nm * 1e-9)
    }
}

/// Wavelength-multiplexing and transmitter parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdmConfig {
    pub num_channels: usize,
    pub symbol_rate_gbd: f64,
    pub channel_spacing_ghz: f64,
    pub rolloff: f64,
    pub samples_per_symbol: usize,
    pub launch_power_dbm: f64,
    #[serde(default = "default_rrc_span")]
    pub rrc_span_symbols: usize,
    /// Received symbols discarded at each end before SNR estimation.
    #[serde(default = "default_guard")]
    pub guard_symbols: usize,
}

impl WdmConfig {
    /// 5 x 32 GBd channels on a 50 GHz grid with 10% roll-off.
    pub fn reference(launch_power_dbm: f64) -> Self {
        Self {
            num_channels: 5,
            symbol_rate_gbd: 32.0,
            channel_spacing_ghz: 50.0,
            rolloff: 0.1,
            samples_per_symbol: 8,
            launch_power_dbm,
            rrc_span_symbols: default_rrc_span(),
            guard_symbols: default_guard(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_at("wdm")
    }

    pub fn validate_at(&self, prefix: &str) -> Result<()> {
        let p = |f: &str| format!("{prefix}.{f}");
        if self.num_channels == 0 || self.num_channels % 2 == 0 {
            return Err(invalid(&p("num_channels"), "must be odd"));
        }
        if !(self.symbol_rate_gbd > 0.0) {
            return Err(invalid(&p("symbol_rate_gbd"), "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(invalid(&p("rolloff"), "must lie in [0, 1]"));
        }
        if self.samples_per_symbol < 2 {
            return Err(invalid(&p("samples_per_symbol"), "must be at least 2"));
        }
        if self.num_channels > 1
            && (1.0 + self.rolloff) * self.symbol_rate_gbd > self.channel_spacing_ghz
        {
            return Err(invalid(&p("channel_spacing_ghz"), "channels overlap spectrally"));
        }
        if self.samples_per_symbol as f64 * self.symbol_rate_gbd
            <= self.num_channels as f64 * self.channel_spacing_ghz
        {
            return Err(invalid(&p("samples_per_symbol"), "simulation bandwidth does not cover the WDM spectrum"));
        }
        if !self.launch_power_dbm.is_finite() {
            return Err(invalid(&p("launch_power_dbm"), "must be finite"));
        }
        if self.rrc_span_symbols == 0 {
            return Err(invalid(&p("rrc_span_symbols"), "must be positive"));
        }
        Ok(())
    }

    pub fn sample_rate_ghz(&self) -> f64 {
        self.samples_per_symbol as f64 * self.symbol_rate_gbd
    }

    /// Carrier offset of channel `k` relative to the central channel, GHz.
    pub fn channel_offset_ghz(&self, k: usize) -> f64 {
        (k as f64 - (self.num_channels as f64 - 1.0) / 2.0) * self.channel_spacing_ghz
    }

    pub fn central_index(&self) -> usize {
        self.num_channels / 2
    }

    pub fn launch_power_w(&self) -> f64 {
        dbm_to_watt(self.launch_power_dbm)
    }
}

/// Sampled optical field.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    pub samples: Vec<Complex<T>>,
    pub sample_rate_ghz: f64,
}

impl<T: Real> Waveform<T> {
    pub fn new(samples: Vec<Complex<T>>, sample_rate_ghz: f64) -> Self {
        Self { samples, sample_rate_ghz }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of `|sample|^2`, W.
    pub fn power_w(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr().as_f64()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr().as_f64()).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        let f = T::of(factor);
        for s in &mut self.samples {
            *s = *s * f;
        }
    }

    /// Rescales to the given mean power.
    pub fn set_power_dbm(&mut self, dbm: f64) {
        let p = self.power_w();
        if p > 0.0 {
            self.scale((dbm_to_watt(dbm) / p).sqrt());
        }
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|s| s.re.is_finite() && s.im.is_finite())
    }
}

/// Repeats [`ssfm_span`] and [`edfa`] for every span. Each amplifier draws
/// its ASE from a seed derived from `seed` and the span index.
pub fn propagate_link<T: Real>(field: &Waveform<T>, link: &LinkConfig, seed: u64) -> Result<Waveform<T>> {
    link.validate()?;
    let stepper = SplitStep::new(field.len(), field.sample_rate_ghz, link);
    let mut out = field.clone();
    let noise_figure = link.amplifier_noise.then_some(link.noise_figure_db);
    for span in 0..link.num_spans {
        stepper.propagate_span(&mut out)?;
        out = edfa(&out, link.span_loss_db(), noise_figure, link.center_wavelength_nm, derive_seed(seed, span as u64))?;
    }
    Ok(out)
}

/// Pulse-shapes every channel at the configured launch power and
/// multiplexes them onto the WDM grid.
pub fn transmit<T: Real>(channels: &[SymbolSequence<T>], wdm: &WdmConfig) -> Result<Waveform<T>> {
    wdm.validate()?;
    if channels.len() != wdm.num_channels {
        return Err(Error::Config(format!(
            "{} symbol streams for {} channels",
            channels.len(),
            wdm.num_channels
        )));
    }
    let filter = RrcFilter::new(wdm.samples_per_symbol, wdm.rolloff, wdm.rrc_span_symbols);
    let shaped: Vec<Waveform<T>> = channels
        .iter()
        .map(|c| {
            let mut w = filter.shape(&c.symbols, wdm.sample_rate_ghz());
            w.set_power_dbm(wdm.launch_power_dbm);
            w
        })
        .collect();
    build_wdm(&shaped, wdm.channel_spacing_ghz)
}

/// End-to-end run: transmit all channels, propagate, and evaluate the
/// central channel. `seed` drives the amplifier noise only.
pub fn simulate<T: Real>(
    channels: &[SymbolSequence<T>],
    link: &LinkConfig,
    wdm: &WdmConfig,
    seed: u64,
) -> Result<RxResult<T>> {
    let tx = transmit(channels, wdm)?;
    let rx = propagate_link(&tx, link, seed)?;
    rx_central_channel(&rx, wdm, link, &channels[wdm.central_index()].symbols)
}
