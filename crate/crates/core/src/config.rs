//! Experiment configuration: TOML text with one table per concern.
//!
//! Unknown keys are rejected, missing required keys are reported by their
//! dotted path, and `section.key=value` overrides are applied before
//! validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::analysis::{LambdaGrid, SweepPlan};
use crate::channel::{LinkConfig, WdmConfig};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_EPSILON;
use crate::shaping::AmplitudeAlphabet;

/// Environment variable consulted for the output directory when the config
/// leaves it unset.
pub const OUTPUT_DIR_ENV: &str = "EEDI_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapingSection {
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_probabilities")]
    pub probabilities: Vec<f64>,
    pub blocklengths: Vec<usize>,
    pub symbols_per_channel: usize,
    pub seeds: Vec<u64>,
}

fn default_levels() -> Vec<f64> {
    vec![1.0, 3.0, 5.0, 7.0]
}

fn default_probabilities() -> Vec<f64> {
    vec![0.4, 0.3, 0.2, 0.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_edi_windows")]
    pub edi_windows: Vec<usize>,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self { lambdas: default_lambdas(), epsilon: default_epsilon(), edi_windows: default_edi_windows() }
    }
}

fn default_lambdas() -> Vec<f64> {
    vec![0.9, 0.99]
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_edi_windows() -> Vec<usize> {
    vec![101]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_grid_lo")]
    pub grid_lo: f64,
    #[serde(default = "default_grid_hi")]
    pub grid_hi: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    /// Distances for the forgetting-factor-vs-distance study; empty means
    /// only the configured link.
    #[serde(default)]
    pub distances_km: Vec<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            grid_lo: default_grid_lo(),
            grid_hi: default_grid_hi(),
            grid_step: default_grid_step(),
            distances_km: Vec::new(),
        }
    }
}

fn default_grid_lo() -> f64 {
    0.6
}

fn default_grid_hi() -> f64 {
    1.0
}

fn default_grid_step() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub directory: Option<String>,
    /// Also write the received central-channel symbols of `simulate`.
    #[serde(default)]
    pub write_symbols: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub shaping: ShapingSection,
    pub link: LinkConfig,
    pub wdm: WdmConfig,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub run: RunSection,
}

/// Known keys per table; `true` marks required keys.
const SCHEMA: &[(&str, &[(&str, bool)])] = &[
    (
        "shaping",
        &[
            ("levels", false),
            ("probabilities", false),
            ("blocklengths", true),
            ("symbols_per_channel", true),
            ("seeds", true),
        ],
    ),
    (
        "link",
        &[
            ("span_length_km", true),
            ("num_spans", true),
            ("loss_db_per_km", true),
            ("dispersion_ps_per_nm_km", true),
            ("gamma_per_w_km", true),
            ("noise_figure_db", true),
            ("center_wavelength_nm", false),
            ("step_size_km", false),
            ("amplifier_noise", false),
        ],
    ),
    (
        "wdm",
        &[
            ("num_channels", true),
            ("symbol_rate_gbd", true),
            ("channel_spacing_ghz", true),
            ("rolloff", true),
            ("samples_per_symbol", true),
            ("launch_power_dbm", true),
            ("rrc_span_symbols", false),
            ("guard_symbols", false),
        ],
    ),
    ("metrics", &[("lambdas", false), ("epsilon", false), ("edi_windows", false)]),
    ("analysis", &[("grid_lo", false), ("grid_hi", false), ("grid_step", false), ("distances_km", false)]),
    ("output", &[("directory", false), ("write_symbols", false)]),
    ("run", &[("workers", false)]),
];

const REQUIRED_TABLES: &[&str] = &["shaping", "link", "wdm"];

fn check_schema(root: &Table) -> Result<()> {
    for (name, value) in root {
        let Some((_, keys)) = SCHEMA.iter().find(|(t, _)| t == name) else {
            return Err(Error::UnknownKey(name.clone()));
        };
        let Value::Table(table) = value else {
            return Err(Error::Validation { path: name.clone(), message: "expected a table".into() });
        };
        for key in table.keys() {
            if !keys.iter().any(|(k, _)| k == key) {
                return Err(Error::UnknownKey(format!("{name}.{key}")));
            }
        }
        for (key, required) in keys.iter() {
            if *required && !table.contains_key(*key) {
                return Err(Error::Validation {
                    path: format!("{name}.{key}"),
                    message: "required field is missing".into(),
                });
            }
        }
    }
    for table in REQUIRED_TABLES {
        if !root.contains_key(*table) {
            return Err(Error::Validation { path: table.to_string(), message: "required table is missing".into() });
        }
    }
    Ok(())
}

/// Parses `value` as a TOML value, falling back to a plain string.
fn parse_override_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Applies one `dotted.path=value` override.
pub fn apply_override(root: &mut Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override `{assignment}` is not of the form key=value")))?;
    let parts: Vec<&str> = path.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("override path `{path}` is malformed")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("override path `{path}` crosses a non-table value")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_override_value(raw.trim()));
    Ok(())
}

impl ExperimentConfig {
    pub fn from_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        check_schema(&root)?;
        let config: Self = Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn alphabet(&self) -> Result<AmplitudeAlphabet> {
        AmplitudeAlphabet::new(self.shaping.levels.clone(), self.shaping.probabilities.clone())
    }

    pub fn grid(&self) -> LambdaGrid {
        LambdaGrid { lo: self.analysis.grid_lo, hi: self.analysis.grid_hi, step: self.analysis.grid_step }
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        Ok(SweepPlan {
            alphabet: self.alphabet()?,
            blocklengths: self.shaping.blocklengths.clone(),
            seeds: self.shaping.seeds.clone(),
            symbols_per_channel: self.shaping.symbols_per_channel,
            link: self.link.clone(),
            wdm: self.wdm.clone(),
            lambdas: self.metrics.lambdas.clone(),
            epsilon: self.metrics.epsilon,
            edi_windows: self.metrics.edi_windows.clone(),
        })
    }

    /// Output directory: config value, then the environment, then `results`.
    pub fn output_dir(&self) -> String {
        self.output
            .directory
            .clone()
            .or_else(|| std::env::var(OUTPUT_DIR_ENV).ok())
            .unwrap_or_else(|| "results".to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| Error::Validation { path: path.into(), message: message.into() };
        self.alphabet().map_err(|e| bad("shaping.probabilities", &e.to_string()))?;
        let s = &self.shaping;
        if s.blocklengths.is_empty() || s.blocklengths.contains(&0) {
            return Err(bad("shaping.blocklengths", "must be a non-empty list of positive integers"));
        }
        if s.seeds.is_empty() {
            return Err(bad("shaping.seeds", "must not be empty"));
        }
        if s.symbols_per_channel <= 2 * self.wdm.guard_symbols {
            return Err(bad("shaping.symbols_per_channel", "must exceed twice wdm.guard_symbols"));
        }
        self.link.validate_at("link")?;
        if self.link.num_spans == 0 {
            return Err(bad("link.num_spans", "must be at least 1"));
        }
        self.wdm.validate_at("wdm")?;
        let m = &self.metrics;
        if m.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(bad("metrics.lambdas", "values must lie in [0, 1]"));
        }
        if !(m.epsilon > 0.0 && m.epsilon < 1.0) {
            return Err(bad("metrics.epsilon", "must lie in (0, 1)"));
        }
        if m.edi_windows.iter().any(|&w| w == 0 || w % 2 == 0) {
            return Err(bad("metrics.edi_windows", "windows must be odd and positive"));
        }
        self.grid().validate()?;
        for &d in &self.analysis.distances_km {
            let spans = d / self.link.span_length_km;
            if !(d > 0.0) || (spans - spans.round()).abs() > 1e-9 {
                return Err(bad("analysis.distances_km", "distances must be positive whole numbers of spans"));
            }
        }
        Ok(())
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    load_config_with_overrides(path, &[])
}

pub fn load_config_with_overrides(path: impl AsRef<Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_str_with_overrides(&text, overrides)
}
