//! Experiment configuration files.
//!
//! Configs are TOML. Top-level keys `seed` and `trials`, then the sections
//! `[array]`, `[grid]`, `[scenario]`, `[measurement]`, `[omp]` and one
//! `[[algorithms]]` table per estimator. Unknown keys are rejected. A run
//! manifest written by the CLI is also a valid config: its `[config]`
//! table is the fully resolved configuration of that run.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::{AngleGrid, ArrayGeometry};
use crate::harness::{
    AlgorithmKind, AlgorithmSpec, ExperimentConfig, MeasurementSpec, OmpSettings,
};
use crate::sensing::MeasurementKind;
use crate::synth::NoiseLevel;

/// Seed used when neither the config nor the command line sets one.
pub const DEFAULT_SEED: u64 = 20_170_417;

/// Trial count used when the config does not set one.
pub const DEFAULT_TRIALS: usize = 200;

const PRESETS: &[(&str, &str)] = &[
    ("simulation1", include_str!("../presets/simulation1.toml")),
    ("simulation2", include_str!("../presets/simulation2.toml")),
    ("simulation3", include_str!("../presets/simulation3.toml")),
    ("simulation4", include_str!("../presets/simulation4.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    pub array: ArraySection,
    #[serde(default)]
    pub grid: GridSection,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub omp: OmpSection,
    pub algorithms: Vec<AlgorithmSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub sensors: usize,
    #[serde(default = "half_wavelength")]
    pub spacing: f64,
}

fn half_wavelength() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            start_deg: -90.0,
            stop_deg: 90.0,
            step_deg: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub doas_deg: Vec<f64>,
    /// 0-based source indices; omitted means all sources independent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence_groups: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub noiseless: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub kind: MeasurementKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self {
            kind: MeasurementKind::Identity,
            rows: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmpSection {
    #[serde(default)]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
}

impl Default for OmpSection {
    fn default() -> Self {
        Self {
            tolerance: 0.0,
            sparsity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub name: AlgorithmKind,
    pub snapshots: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal_loading: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSection {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub timestamp_unix: u64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub manifest: ManifestSection,
    pub config: ConfigFile,
}

/// A config problem, anchored to a line of the source when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.origin, l, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

/// A parsed config with every default filled in, plus the experiment it
/// describes.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub file: ConfigFile,
    pub experiment: ExperimentConfig,
}

impl ResolvedConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("config serializes")
    }
}

struct Source<'a> {
    origin: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn error(&self, key: Option<&str>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            origin: self.origin.to_string(),
            line: key.and_then(|k| line_of_key(self.text, k)),
            message: message.into(),
        }
    }
}

/// 1-based line of the first `key = ...` assignment or `[key]` header.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            let header = t.trim_start_matches('[').trim_end().trim_end_matches(']');
            (t.starts_with('[') && header == key)
                || t.strip_prefix(key)
                    .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Load from a file path or, when no such file exists, a preset name.
pub fn load(spec: &str, overrides: Overrides) -> Result<ResolvedConfig, ConfigError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: spec.to_string(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        return parse(spec, &text, overrides);
    }
    match preset(spec) {
        Some(text) => parse(&format!("preset {spec}"), text, overrides),
        None => Err(ConfigError {
            origin: spec.to_string(),
            line: None,
            message: format!(
                "no such file, and not a preset (known presets: {})",
                preset_names().collect::<Vec<_>>().join(", ")
            ),
        }),
    }
}

/// Parse config (or manifest) text.
pub fn parse(
    origin: &str,
    text: &str,
    overrides: Overrides,
) -> Result<ResolvedConfig, ConfigError> {
    let src = Source { origin, text };
    let is_manifest = text
        .parse::<toml::Table>()
        .map(|t| t.contains_key("manifest") && t.contains_key("config"))
        .unwrap_or(false);
    let file = if is_manifest {
        toml::from_str::<ManifestFile>(text).map(|m| m.config)
    } else {
        toml::from_str::<ConfigFile>(text)
    }
    .map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        let message = e.message().trim();
        let message = match line.and_then(|l| key_on_line(text, l)) {
            Some(key) if !message.contains(&format!("`{key}`")) => {
                format!("key `{key}`: {message}")
            }
            _ => message.to_string(),
        };
        ConfigError {
            origin: origin.to_string(),
            line,
            message,
        }
    })?;
    resolve(&src, file, overrides)
}

/// The bare key assigned on a 1-based line, if any.
fn key_on_line(text: &str, line: usize) -> Option<&str> {
    let (key, _) = text.lines().nth(line.checked_sub(1)?)?.split_once('=')?;
    let key = key.trim().trim_matches('"');
    (!key.is_empty() && !key.starts_with('[')).then_some(key)
}

fn resolve(
    src: &Source<'_>,
    mut file: ConfigFile,
    overrides: Overrides,
) -> Result<ResolvedConfig, ConfigError> {
    if let Some(seed) = overrides.seed {
        file.seed = Some(seed);
    }
    if let Some(trials) = overrides.trials {
        file.trials = Some(trials);
    }
    let seed = *file.seed.get_or_insert(DEFAULT_SEED);
    if seed > i64::MAX as u64 {
        return Err(src.error(Some("seed"), format!("seed must not exceed {}", i64::MAX)));
    }
    let trials = *file.trials.get_or_insert(DEFAULT_TRIALS);

    let geometry = ArrayGeometry::new(file.array.sensors, file.array.spacing)
        .map_err(|e| src.error(Some("sensors"), e.to_string()))?;
    let grid = AngleGrid::uniform(file.grid.start_deg, file.grid.stop_deg, file.grid.step_deg)
        .map_err(|e| src.error(Some("grid"), e.to_string()))?;

    let noise_levels = match (&file.scenario.snr_db, file.scenario.noiseless) {
        (Some(_), true) => {
            return Err(src.error(
                Some("noiseless"),
                "set either snr_db or noiseless = true, not both",
            ))
        }
        (None, true) => vec![NoiseLevel::Noiseless],
        (None, false) => {
            return Err(src.error(
                Some("scenario"),
                "scenario needs snr_db or noiseless = true",
            ))
        }
        (Some(list), false) => {
            if let Some(bad) = list.iter().find(|v| !v.is_finite()) {
                return Err(src.error(
                    Some("snr_db"),
                    format!("SNR values must be finite, got {bad}"),
                ));
            }
            list.iter().map(|&v| NoiseLevel::SnrDb(v)).collect()
        }
    };

    let n = geometry.n_sensors();
    let rows = match file.measurement.kind {
        MeasurementKind::Identity => {
            if let Some(r) = file.measurement.rows {
                if r != n {
                    return Err(src.error(
                        Some("rows"),
                        format!("identity measurement needs rows = {n}, got {r}"),
                    ));
                }
            }
            n
        }
        MeasurementKind::ComplexGaussian => file.measurement.rows.ok_or_else(|| {
            src.error(
                Some("measurement"),
                "complex-gaussian measurement needs rows",
            )
        })?,
    };
    file.measurement.rows = Some(rows);

    let algorithms: Vec<AlgorithmSpec> = file
        .algorithms
        .iter_mut()
        .map(|a| {
            if a.name == AlgorithmKind::Capon {
                a.diagonal_loading.get_or_insert(0.0);
            } else if a.diagonal_loading.is_some() {
                return Err(src.error(
                    Some("diagonal_loading"),
                    format!("diagonal_loading applies to capon only, not {}", a.name),
                ));
            }
            Ok(AlgorithmSpec {
                kind: a.name,
                snapshots: a.snapshots,
                diagonal_loading: a.diagonal_loading.unwrap_or(0.0),
            })
        })
        .collect::<Result<_, _>>()?;

    let experiment = ExperimentConfig {
        geometry,
        grid,
        doas_deg: file.scenario.doas_deg.clone(),
        coherence_groups: file.scenario.coherence_groups.clone(),
        noise_levels,
        algorithms,
        measurement: MeasurementSpec {
            kind: file.measurement.kind,
            rows,
            seed: file.measurement.seed,
        },
        omp: OmpSettings {
            sparsity: file.omp.sparsity,
            tolerance: file.omp.tolerance,
        },
        n_trials: trials,
        master_seed: seed,
    };
    experiment.validate().map_err(|e| {
        let msg = e.to_string();
        src.error(Some(key_for_message(&msg)), msg)
    })?;
    Ok(ResolvedConfig { file, experiment })
}

/// Best-guess key for a validation message, used only to anchor the line.
fn key_for_message(msg: &str) -> &'static str {
    const KEYS: &[(&str, &str)] = &[
        ("trials", "trials"),
        ("SNR", "snr_db"),
        ("diagonal_loading", "diagonal_loading"),
        ("coherence", "coherence_groups"),
        ("DOA", "doas_deg"),
        ("source", "doas_deg"),
        ("sparsity", "sparsity"),
        ("tolerance", "tolerance"),
        ("measurement", "rows"),
        ("snapshot", "snapshots"),
        ("algorithm", "algorithms"),
    ];
    KEYS.iter()
        .find(|(needle, _)| msg.contains(needle))
        .map(|(_, k)| *k)
        .unwrap_or("scenario")
}
