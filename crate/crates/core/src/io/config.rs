//! Experiment configuration: a TOML document with documented defaults.
//!
//! ```toml
//! weights = "fc1.npy"          # or ["fc1.npy", "fc2.npy"]
//! sparsity = 0.9               # default 0.0
//! weight_bits = 8              # default 8
//! activation_bits = 8          # default 8
//! rows_per_section = 128       # default 128
//! order = "sorted"             # default; or "unsorted-identity" / "unsorted-shuffled"
//! shuffle_seed = 0             # default 0, used by the shuffled baseline
//! resolution = 10              # default: fixed 10-bit ADCs ...
//! # profile = [10,10,10,10,10,9,9,8]   # ... or one resolution per column
//! out = "report.json"
//!
//! [activations]                # default: gaussian, sigma 1.0, one column
//! file = "x.npy"               # or sigma/shape/seed for synthetic inputs
//!
//! [energy]
//! model = "flash"              # default; or "linear" / "table"
//! e0 = 1.0
//! e_drive = 0.0
//! e_mux = 0.0
//! # [energy.table]             # required when model = "table"
//! # "10" = 50.0
//! ```
//!
//! Parsing is strict by default: unknown keys are errors that name the key.
//! In lenient mode they become warnings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::energy::{AdcEnergyModel, EnergyModel};
use crate::error::{Error, Result};
use crate::mapper::SectionOrder;
use crate::quant::{QuantConfig, MAX_BITS};
use crate::xbar::MAX_RESOLUTION;

/// Where activations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationSource {
    File { path: PathBuf },
    Gaussian {
        sigma: f64,
        /// `[feature, batch]`; defaults to `[f, 1]` at run time.
        shape: Option<Vec<usize>>,
        seed: u64,
    },
}

impl Default for ActivationSource {
    fn default() -> Self {
        ActivationSource::Gaussian {
            sigma: 1.0,
            shape: None,
            seed: 0,
        }
    }
}

/// Row order under study; the comparison baseline derives from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderMode {
    /// Sorted mapping compared against the unsorted-identity baseline.
    Sorted,
    /// Sorted mapping compared against the unsorted-identity baseline.
    UnsortedIdentity,
    /// Sorted mapping compared against a seeded shuffled baseline.
    UnsortedShuffled,
}

/// ADC resolutions: one shared value or one per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileSpec {
    Fixed(u8),
    PerColumn(Vec<u8>),
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub weights: Vec<PathBuf>,
    pub activations: ActivationSource,
    pub sparsity: f64,
    pub weight_bits: u8,
    pub activation_bits: u8,
    pub rows_per_section: usize,
    pub order: OrderMode,
    pub shuffle_seed: u64,
    pub profile: ProfileSpec,
    pub energy: EnergyModel,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            weights: Vec::new(),
            activations: ActivationSource::default(),
            sparsity: 0.0,
            weight_bits: 8,
            activation_bits: 8,
            rows_per_section: 128,
            order: OrderMode::Sorted,
            shuffle_seed: 0,
            profile: ProfileSpec::Fixed(10),
            energy: EnergyModel::default(),
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn quant_config(&self) -> Result<QuantConfig> {
        QuantConfig::new(self.weight_bits, self.activation_bits)
    }

    /// Per-column resolutions, fixed specs expanded to `weight_bits` entries.
    pub fn resolutions(&self) -> Vec<u8> {
        match &self.profile {
            ProfileSpec::Fixed(r) => vec![*r; self.weight_bits as usize],
            ProfileSpec::PerColumn(rs) => rs.clone(),
        }
    }

    /// Baseline order implied by [`OrderMode`].
    pub fn baseline_order(&self) -> SectionOrder {
        match self.order {
            OrderMode::Sorted | OrderMode::UnsortedIdentity => SectionOrder::UnsortedIdentity,
            OrderMode::UnsortedShuffled => SectionOrder::UnsortedShuffled {
                seed: self.shuffle_seed,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::Config("missing required key `weights`".into()));
        }
        self.quant_config()?;
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::Config(format!(
                "`sparsity` must be in [0, 1], got {}",
                self.sparsity
            )));
        }
        if self.rows_per_section == 0 {
            return Err(Error::Config("`rows_per_section` must be at least 1".into()));
        }
        let resolutions = self.resolutions();
        if resolutions.len() != self.weight_bits as usize {
            return Err(Error::Config(format!(
                "`profile` lists {} resolutions but `weight_bits` is {}",
                resolutions.len(),
                self.weight_bits
            )));
        }
        if let Some(&r) = resolutions.iter().find(|&&r| r > MAX_RESOLUTION) {
            return Err(Error::Config(format!(
                "ADC resolution {r} exceeds {MAX_RESOLUTION}"
            )));
        }
        self.energy
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if let ActivationSource::Gaussian { sigma, shape, .. } = &self.activations {
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(Error::Config(format!(
                    "activation `sigma` must be positive, got {sigma}"
                )));
            }
            if let Some(shape) = shape {
                if shape.len() != 2 {
                    return Err(Error::Config(format!(
                        "activation `shape` must be [feature, batch], got {shape:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parses a config file. Returns the config and any lenient-mode warnings.
pub fn load_config(path: &Path, strict: bool) -> Result<(ExperimentConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| super::named_io(path, e))?;
    parse_config(&text, strict)
}

/// Allowed keys per table, used for unknown-key diagnostics.
const TOP_KEYS: &[&str] = &[
    "weights",
    "activations",
    "sparsity",
    "weight_bits",
    "activation_bits",
    "rows_per_section",
    "order",
    "shuffle_seed",
    "resolution",
    "profile",
    "energy",
    "out",
];
const ACTIVATION_KEYS: &[&str] = &["file", "sigma", "shape", "seed"];
const ENERGY_KEYS: &[&str] = &["model", "e0", "e_drive", "e_mux", "table"];

pub fn parse_config(text: &str, strict: bool) -> Result<(ExperimentConfig, Vec<String>)> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;

    let mut warnings = Vec::new();
    check_keys(&table, TOP_KEYS, "", strict, &mut warnings)?;
    if let Some(Value::Table(t)) = table.get("activations") {
        check_keys(t, ACTIVATION_KEYS, "activations.", strict, &mut warnings)?;
    }
    if let Some(Value::Table(t)) = table.get("energy") {
        check_keys(t, ENERGY_KEYS, "energy.", strict, &mut warnings)?;
    }

    let mut cfg = ExperimentConfig::default();

    if let Some(v) = table.get("weights") {
        cfg.weights = match v {
            Value::String(s) => vec![PathBuf::from(s)],
            Value::Array(items) => items
                .iter()
                .map(|item| match item {
                    Value::String(s) => Ok(PathBuf::from(s)),
                    other => Err(type_err("weights", "string", other)),
                })
                .collect::<Result<Vec<_>>>()?,
            other => return Err(type_err("weights", "string or array of strings", other)),
        };
    }
    if let Some(v) = table.get("sparsity") {
        cfg.sparsity = as_float("sparsity", v)?;
    }
    if let Some(v) = table.get("weight_bits") {
        cfg.weight_bits = as_small_int("weight_bits", v, i64::from(MAX_BITS))? as u8;
    }
    if let Some(v) = table.get("activation_bits") {
        cfg.activation_bits = as_small_int("activation_bits", v, i64::from(MAX_BITS))? as u8;
    }
    if let Some(v) = table.get("rows_per_section") {
        cfg.rows_per_section = as_small_int("rows_per_section", v, i64::MAX)? as usize;
    }
    if let Some(v) = table.get("order") {
        cfg.order = match as_str("order", v)? {
            "sorted" => OrderMode::Sorted,
            "unsorted-identity" | "identity" => OrderMode::UnsortedIdentity,
            "unsorted-shuffled" | "shuffled" => OrderMode::UnsortedShuffled,
            other => {
                return Err(Error::Config(format!(
                    "`order` must be sorted, unsorted-identity, or unsorted-shuffled; got {other:?}"
                )))
            }
        };
    }
    if let Some(v) = table.get("shuffle_seed") {
        cfg.shuffle_seed = as_small_int("shuffle_seed", v, i64::MAX)? as u64;
    }
    match (table.get("resolution"), table.get("profile")) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "`resolution` and `profile` are mutually exclusive".into(),
            ))
        }
        (Some(v), None) => {
            cfg.profile =
                ProfileSpec::Fixed(as_small_int("resolution", v, i64::from(MAX_RESOLUTION))? as u8);
        }
        (None, Some(v)) => {
            let Value::Array(items) = v else {
                return Err(type_err("profile", "array of integers", v));
            };
            let rs = items
                .iter()
                .map(|item| {
                    as_small_int("profile", item, i64::from(MAX_RESOLUTION)).map(|r| r as u8)
                })
                .collect::<Result<Vec<_>>>()?;
            cfg.profile = ProfileSpec::PerColumn(rs);
        }
        (None, None) => {}
    }
    if let Some(v) = table.get("out") {
        cfg.out = Some(PathBuf::from(as_str("out", v)?));
    }
    if let Some(v) = table.get("activations") {
        let Value::Table(t) = v else {
            return Err(type_err("activations", "table", v));
        };
        cfg.activations = parse_activations(t)?;
    }
    if let Some(v) = table.get("energy") {
        let Value::Table(t) = v else {
            return Err(type_err("energy", "table", v));
        };
        cfg.energy = parse_energy(t)?;
    }

    cfg.validate()?;
    Ok((cfg, warnings))
}

fn parse_activations(t: &toml::Table) -> Result<ActivationSource> {
    let has_file = t.contains_key("file");
    let has_synth = t.contains_key("sigma") || t.contains_key("shape") || t.contains_key("seed");
    if has_file && has_synth {
        return Err(Error::Config(
            "`activations` must give either `file` or a synthetic spec, not both".into(),
        ));
    }
    if has_file {
        return Ok(ActivationSource::File {
            path: PathBuf::from(as_str("activations.file", t.get("file").expect("checked"))?),
        });
    }
    let mut sigma = 1.0;
    let mut shape = None;
    let mut seed = 0;
    if let Some(v) = t.get("sigma") {
        sigma = as_float("activations.sigma", v)?;
    }
    if let Some(v) = t.get("shape") {
        let Value::Array(items) = v else {
            return Err(type_err("activations.shape", "array of integers", v));
        };
        shape = Some(
            items
                .iter()
                .map(|item| as_small_int("activations.shape", item, i64::MAX).map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    if let Some(v) = t.get("seed") {
        seed = as_small_int("activations.seed", v, i64::MAX)? as u64;
    }
    Ok(ActivationSource::Gaussian { sigma, shape, seed })
}

fn parse_energy(t: &toml::Table) -> Result<EnergyModel> {
    let kind = match t.get("model") {
        Some(v) => as_str("energy.model", v)?.to_string(),
        None => "flash".to_string(),
    };
    let e0 = match t.get("e0") {
        Some(v) => as_float("energy.e0", v)?,
        None => 1.0,
    };
    let adc = match kind.as_str() {
        "flash" => AdcEnergyModel::Flash { e0 },
        "linear" => AdcEnergyModel::Linear { e0 },
        "table" => {
            let Some(Value::Table(entries)) = t.get("table") else {
                return Err(Error::Config(
                    "energy model `table` needs an `energy.table` section".into(),
                ));
            };
            let mut map = BTreeMap::new();
            for (k, v) in entries {
                let r: u8 = k.parse().map_err(|_| {
                    Error::Config(format!("energy.table key {k:?} is not a resolution"))
                })?;
                map.insert(r, as_float(&format!("energy.table.{k}"), v)?);
            }
            AdcEnergyModel::Table { entries: map }
        }
        other => {
            return Err(Error::Config(format!(
                "`energy.model` must be flash, linear, or table; got {other:?}"
            )))
        }
    };
    let mut model = EnergyModel {
        adc,
        ..EnergyModel::default()
    };
    if let Some(v) = t.get("e_drive") {
        model.e_drive = as_float("energy.e_drive", v)?;
    }
    if let Some(v) = t.get("e_mux") {
        model.e_mux = as_float("energy.e_mux", v)?;
    }
    Ok(model)
}

fn check_keys(
    table: &toml::Table,
    allowed: &[&str],
    prefix: &str,
    strict: bool,
    warnings: &mut Vec<String>,
) -> Result<()> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            let msg = format!("unknown config key `{prefix}{key}`");
            if strict {
                return Err(Error::Config(msg));
            }
            warnings.push(msg);
        }
    }
    Ok(())
}

fn type_err(key: &str, want: &str, got: &Value) -> Error {
    Error::Config(format!("`{key}` must be a {want}, got {}", got.type_str()))
}

fn as_str<'v>(key: &str, v: &'v Value) -> Result<&'v str> {
    v.as_str().ok_or_else(|| type_err(key, "string", v))
}

fn as_float(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(type_err(key, "number", other)),
    }
}

fn as_small_int(key: &str, v: &Value, max: i64) -> Result<i64> {
    let i = v
        .as_integer()
        .ok_or_else(|| type_err(key, "integer", v))?;
    if i < 0 || i > max {
        return Err(Error::Config(format!("`{key}` must be in 0..={max}, got {i}")));
    }
    Ok(i)
}
