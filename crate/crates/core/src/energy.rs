//! ADC conversion counting and energy accounting.
//!
//! Conversion counts come from the mapping alone: a column converts once per
//! section per inference iff it holds at least one weight bit and its ADC is
//! not pruned. The default cost model is a Flash ADC, whose comparator count
//! (and hence energy) doubles per resolution bit. Driver and permutation-mux
//! overheads are linear parametric counters defaulting to zero; absolute pJ
//! calibration is supplied by the user as a resolution->energy table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapper::VectorMapping;
use crate::xbar::{AdcProfile, ConversionLog};

/// Per-conversion ADC cost model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AdcEnergyModel {
    /// `E(r) = e0 * 2^r` for `r >= 1`; a Flash ADC needs `2^r` comparators.
    Flash { e0: f64 },
    /// `E(r) = e0 * r`.
    Linear { e0: f64 },
    /// Explicit per-resolution energies; must cover every used resolution.
    Table { entries: BTreeMap<u8, f64> },
}

impl AdcEnergyModel {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            AdcEnergyModel::Flash { e0 } | AdcEnergyModel::Linear { e0 } => {
                e0.is_finite() && *e0 >= 0.0
            }
            AdcEnergyModel::Table { entries } => {
                entries.values().all(|e| e.is_finite() && *e >= 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("ADC energies must be finite and >= 0".into()))
        }
    }
}

/// Full energy model: ADC cost plus driver and mux overheads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub adc: AdcEnergyModel,
    /// Energy per nonzero gathered activation row-drive.
    pub e_drive: f64,
    /// Energy per permutation mux per inference.
    pub e_mux: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            adc: AdcEnergyModel::Flash { e0: 1.0 },
            e_drive: 0.0,
            e_mux: 0.0,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        self.adc.validate()?;
        if !(self.e_drive.is_finite() && self.e_drive >= 0.0)
            || !(self.e_mux.is_finite() && self.e_mux >= 0.0)
        {
            return Err(Error::InvalidConfig(
                "driver and mux energies must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Energy of a single conversion at resolution `r`. Resolution 0 (pruned ADC)
/// costs nothing in every model.
pub fn adc_conversion_energy(resolution: u8, model: &AdcEnergyModel) -> Result<f64> {
    if resolution == 0 {
        return Ok(0.0);
    }
    match model {
        AdcEnergyModel::Flash { e0 } => Ok(e0 * 2f64.powi(i32::from(resolution))),
        AdcEnergyModel::Linear { e0 } => Ok(e0 * f64::from(resolution)),
        AdcEnergyModel::Table { entries } => entries.get(&resolution).copied().ok_or_else(|| {
            Error::Model(format!("energy table has no entry for resolution {resolution}"))
        }),
    }
}

/// Per-section slice of an [`EnergyReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionEnergy {
    pub conversions: u64,
    pub adc_energy: f64,
}

/// Echo of the configuration a report was produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReportConfig {
    pub rows_per_section: usize,
    pub bits: u8,
    pub order: String,
    pub profile: Vec<u8>,
    pub full_scale: i64,
    pub model: EnergyModel,
}

/// Conversion counts and energy totals for one vector mapping and one
/// inference pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total_conversions: u64,
    pub conversions_per_column: Vec<u64>,
    pub adc_energy: f64,
    pub driver_energy: f64,
    pub mux_energy: f64,
    pub sections_programmed: usize,
    pub per_section: Vec<SectionEnergy>,
    pub config: EnergyReportConfig,
}

impl EnergyReport {
    pub fn total_energy(&self) -> f64 {
        self.adc_energy + self.driver_energy + self.mux_energy
    }
}

/// Turns a conversion log into an [`EnergyReport`].
///
/// The log must be consistent with `mapping` and `profile`; `x_codes` (the
/// unpermuted activation codes, sign irrelevant) feeds the driver counter:
/// every nonzero code gathered into a section costs one row-drive.
pub fn account(
    log: &ConversionLog,
    mapping: &VectorMapping,
    x_codes: &[i64],
    model: &EnergyModel,
    profile: &AdcProfile,
) -> Result<EnergyReport> {
    model.validate()?;
    if log.sections.len() != mapping.section_count() {
        return Err(Error::Accounting(format!(
            "log covers {} sections, mapping has {}",
            log.sections.len(),
            mapping.section_count()
        )));
    }
    if profile.columns() != mapping.bits as usize {
        return Err(Error::Accounting(format!(
            "profile covers {} columns, mapping has {} bit columns",
            profile.columns(),
            mapping.bits
        )));
    }
    if x_codes.len() != mapping.feature_size {
        return Err(Error::Accounting(format!(
            "{} activation codes for feature size {}",
            x_codes.len(),
            mapping.feature_size
        )));
    }

    let columns = profile.columns();
    let mut total_conversions = 0u64;
    let mut conversions_per_column = vec![0u64; columns];
    let mut adc_energy = 0.0;
    let mut per_section = Vec::with_capacity(log.sections.len());
    for (section, entries) in mapping.sections.iter().zip(&log.sections) {
        if entries.len() != columns {
            return Err(Error::Accounting(format!(
                "log section covers {} columns, expected {columns}",
                entries.len()
            )));
        }
        let mut sec_conversions = 0u64;
        let mut sec_energy = 0.0;
        for (j, entry) in entries.iter().enumerate() {
            let active = section.active_mask[j];
            let r = profile.resolutions()[j];
            if entry.active != active
                || entry.resolution != r
                || entry.performed != (active && r > 0)
            {
                return Err(Error::Accounting(format!(
                    "log entry for column {j} disagrees with mapping/profile"
                )));
            }
            if entry.performed {
                sec_conversions += 1;
                conversions_per_column[j] += 1;
                sec_energy += adc_conversion_energy(r, &model.adc)?;
            }
        }
        total_conversions += sec_conversions;
        adc_energy += sec_energy;
        per_section.push(SectionEnergy {
            conversions: sec_conversions,
            adc_energy: sec_energy,
        });
    }

    let gathered = crate::mapper::permute_activations(x_codes, mapping)?;
    let driven = gathered.iter().filter(|&&x| x != 0).count();

    Ok(EnergyReport {
        total_conversions,
        conversions_per_column,
        adc_energy,
        driver_energy: model.e_drive * driven as f64,
        mux_energy: model.e_mux * mapping.feature_size as f64,
        sections_programmed: mapping.section_count(),
        per_section,
        config: EnergyReportConfig {
            rows_per_section: mapping.rows_per_section(),
            bits: mapping.bits,
            order: mapping.order.to_string(),
            profile: profile.resolutions().to_vec(),
            full_scale: profile.full_scale(),
            model: model.clone(),
        },
    })
}

/// Sorted-vs-baseline summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `1 - sorted_adc_energy / baseline_adc_energy` (0 when the baseline is 0).
    pub savings_fraction: f64,
    /// `sorted_conversions / baseline_conversions` (0 when the baseline is 0).
    pub conversion_ratio: f64,
    /// `sorted_sections / baseline_sections` (0 when the baseline is 0).
    pub section_ratio: f64,
}

/// Compares two reports produced under the same energy model, section height,
/// and bit width. Profiles may differ (that is the unfixed-resolution study).
pub fn compare(sorted: &EnergyReport, baseline: &EnergyReport) -> Result<Comparison> {
    if sorted.config.model != baseline.config.model {
        return Err(Error::Compare("energy models differ".into()));
    }
    if sorted.config.rows_per_section != baseline.config.rows_per_section
        || sorted.config.bits != baseline.config.bits
    {
        return Err(Error::Compare(format!(
            "geometry differs: {}x{} bits vs {}x{} bits",
            sorted.config.rows_per_section,
            sorted.config.bits,
            baseline.config.rows_per_section,
            baseline.config.bits
        )));
    }
    let frac = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    Ok(Comparison {
        savings_fraction: if baseline.adc_energy == 0.0 {
            0.0
        } else {
            1.0 - sorted.adc_energy / baseline.adc_energy
        },
        conversion_ratio: frac(
            sorted.total_conversions as f64,
            baseline.total_conversions as f64,
        ),
        section_ratio: frac(
            sorted.sections_programmed as f64,
            baseline.sections_programmed as f64,
        ),
    })
}
