//! Report documents: the JSON record a simulation run leaves behind.
//!
//! Top-level keys are stable: `config`, `sorted`, `baseline`, `comparison`,
//! `errors`, `version`, `timestamp`. Everything except the timestamp is a
//! pure function of the config (and seeds), so reports are diffable.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{compare, Comparison, EnergyReport};
use crate::error::{Error, Result};

use super::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Max |simulated - exact| in integer accumulator units.
    pub max_abs: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerErrors {
    pub layer: String,
    pub sorted: ErrorMetrics,
    pub baseline: ErrorMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerComparison {
    pub layer: String,
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonBlock {
    /// Comparison of energy totals summed over all layers.
    pub aggregate: Comparison,
    pub per_layer: Vec<LayerComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub config: ExperimentConfig,
    pub sorted: Vec<EnergyReport>,
    pub baseline: Vec<EnergyReport>,
    pub comparison: ComparisonBlock,
    pub errors: Vec<LayerErrors>,
    pub version: String,
    pub timestamp: String,
}

impl ReportDocument {
    /// Assembles a report from per-layer results; layer names parallel the
    /// report vectors.
    pub fn new(
        config: ExperimentConfig,
        layers: Vec<String>,
        sorted: Vec<EnergyReport>,
        baseline: Vec<EnergyReport>,
        errors: Vec<LayerErrors>,
    ) -> Result<Self> {
        if layers.len() != sorted.len() || layers.len() != baseline.len() {
            return Err(Error::Compare(format!(
                "{} layers vs {} sorted / {} baseline reports",
                layers.len(),
                sorted.len(),
                baseline.len()
            )));
        }
        let per_layer = layers
            .iter()
            .zip(sorted.iter().zip(&baseline))
            .map(|(layer, (s, b))| {
                Ok(LayerComparison {
                    layer: layer.clone(),
                    comparison: compare(s, b)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let aggregate = aggregate_comparison(&sorted, &baseline);
        Ok(Self {
            config,
            sorted,
            baseline,
            comparison: ComparisonBlock {
                aggregate,
                per_layer,
            },
            errors,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        })
    }

    /// Equality modulo the timestamp, for reproducibility checks.
    pub fn content_eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.sorted == other.sorted
            && self.baseline == other.baseline
            && self.comparison == other.comparison
            && self.errors == other.errors
            && self.version == other.version
    }
}

fn ratio_or_zero(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Comparison of summed totals across layers.
pub fn aggregate_comparison(sorted: &[EnergyReport], baseline: &[EnergyReport]) -> Comparison {
    let adc_s: f64 = sorted.iter().map(|r| r.adc_energy).sum();
    let adc_b: f64 = baseline.iter().map(|r| r.adc_energy).sum();
    let conv_s: u64 = sorted.iter().map(|r| r.total_conversions).sum();
    let conv_b: u64 = baseline.iter().map(|r| r.total_conversions).sum();
    let sec_s: usize = sorted.iter().map(|r| r.sections_programmed).sum();
    let sec_b: usize = baseline.iter().map(|r| r.sections_programmed).sum();
    Comparison {
        savings_fraction: if adc_b == 0.0 { 0.0 } else { 1.0 - adc_s / adc_b },
        conversion_ratio: ratio_or_zero(conv_s as f64, conv_b as f64),
        section_ratio: ratio_or_zero(sec_s as f64, sec_b as f64),
    }
}

pub fn write_report(doc: &ReportDocument, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| Error::Format(format!("report serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| super::named_io(path, e))?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ReportDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| super::named_io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad report document: {e}")))
}
