//! Shared per-layer machinery for the commands: loading, quantizing,
//! mapping, simulating, and layer-level energy accounting.

use std::path::Path;

use swsim::energy::{account, EnergyModel, EnergyReport, EnergyReportConfig};
use swsim::io::{load_tensor, synthetic_gaussian, ActivationSource, ExperimentConfig};
use swsim::mapper::{build_matrix_mapping, MatrixMapping, SectionConfig, SectionOrder};
use swsim::quant::{prune_magnitude, quantize, QuantizedTensor};
use swsim::xbar::{conversion_log, simulate_matmul, AdcProfile, SimResult};

use crate::{CliError, Phase};

/// One weight tensor, pruned and quantized.
pub struct Layer {
    pub name: String,
    pub qw: QuantizedTensor,
    pub feature_size: usize,
    pub out_rows: usize,
    pub nnz: usize,
    /// Zero-mean max-likelihood std of the original float weights.
    pub sigma_hat: f64,
}

pub fn layer_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Loads, prunes, and quantizes every weight file in the config.
pub fn load_layers(cfg: &ExperimentConfig) -> Result<Vec<Layer>, CliError> {
    cfg.weights
        .iter()
        .map(|path| {
            let t = load_tensor(path).validation()?;
            let sigma_hat = {
                let n = t.len().max(1);
                (t.values().iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt()
            };
            let pruned = prune_magnitude(&t, cfg.sparsity).validation()?;
            let qw = quantize(&pruned, cfg.weight_bits).validation()?;
            let (out_rows, feature_size) = qw.as_matrix().validation()?;
            Ok(Layer {
                name: layer_name(path),
                nnz: qw.nnz(),
                qw,
                feature_size,
                out_rows,
                sigma_hat,
            })
        })
        .collect()
}

/// Loads or synthesizes the activation tensor and quantizes it.
pub fn load_activations(
    cfg: &ExperimentConfig,
    feature_size: usize,
) -> Result<QuantizedTensor, CliError> {
    let t = match &cfg.activations {
        ActivationSource::File { path } => load_tensor(path).validation()?,
        ActivationSource::Gaussian { sigma, shape, seed } => {
            let shape = shape.clone().unwrap_or_else(|| vec![feature_size, 1]);
            synthetic_gaussian(*sigma, &shape, *seed).validation()?
        }
    };
    let qx = quantize(&t, cfg.activation_bits).validation()?;
    let rows = match qx.shape().len() {
        1 => qx.shape()[0],
        2 => qx.shape()[0],
        _ => 0,
    };
    if rows != feature_size {
        return Err(CliError::Validation(anyhow::anyhow!(
            "activation feature dimension {rows} does not match weight feature size {feature_size}"
        )));
    }
    Ok(qx)
}

/// Signed activation codes per batch column.
pub fn x_columns(qx: &QuantizedTensor) -> Vec<Vec<i64>> {
    let (f, batch) = match qx.shape().len() {
        1 => (qx.shape()[0], 1),
        _ => (qx.shape()[0], qx.shape()[1]),
    };
    (0..batch)
        .map(|c| (0..f).map(|i| qx.signed_code(i * batch + c)).collect())
        .collect()
}

/// Sums per-vector energy reports over all output rows and batch columns.
/// Conversions and energies cover the whole batch; `sections_programmed`
/// counts each section once (programming is offline).
pub fn account_layer(
    mapping: &MatrixMapping,
    x_cols: &[Vec<i64>],
    model: &EnergyModel,
    profile: &AdcProfile,
) -> Result<EnergyReport, CliError> {
    let order = mapping
        .rows
        .first()
        .map_or_else(|| "sorted".to_string(), |vm| vm.order.to_string());
    let mut total = EnergyReport {
        total_conversions: 0,
        conversions_per_column: vec![0; profile.columns()],
        adc_energy: 0.0,
        driver_energy: 0.0,
        mux_energy: 0.0,
        sections_programmed: 0,
        per_section: Vec::new(),
        config: EnergyReportConfig {
            rows_per_section: mapping.config.rows_per_section,
            bits: mapping.bits,
            order,
            profile: profile.resolutions().to_vec(),
            full_scale: profile.full_scale(),
            model: model.clone(),
        },
    };

    for vm in &mapping.rows {
        let log = conversion_log(vm, profile).runtime()?;
        total.sections_programmed += vm.section_count();
        let mut row_sections =
            vec![swsim::energy::SectionEnergy { conversions: 0, adc_energy: 0.0 }; vm.section_count()];
        for x in x_cols {
            let rep = account(&log, vm, x, model, profile).runtime()?;
            total.total_conversions += rep.total_conversions;
            for (t, c) in total
                .conversions_per_column
                .iter_mut()
                .zip(&rep.conversions_per_column)
            {
                *t += c;
            }
            total.adc_energy += rep.adc_energy;
            total.driver_energy += rep.driver_energy;
            total.mux_energy += rep.mux_energy;
            for (slot, sec) in row_sections.iter_mut().zip(&rep.per_section) {
                slot.conversions += sec.conversions;
                slot.adc_energy += sec.adc_energy;
            }
        }
        total.per_section.extend(row_sections);
    }
    Ok(total)
}

/// Results of simulating one layer under one order.
pub struct MappingRun {
    pub sim: SimResult,
    pub report: EnergyReport,
}

pub fn run_mapping(
    layer: &Layer,
    order: SectionOrder,
    rows_per_section: usize,
    qx: &QuantizedTensor,
    x_cols: &[Vec<i64>],
    model: &EnergyModel,
    profile: &AdcProfile,
) -> Result<MappingRun, CliError> {
    let cfg = SectionConfig::new(rows_per_section, order).validation()?;
    let mapping = build_matrix_mapping(&layer.qw, &cfg).runtime()?;
    let sim = simulate_matmul(&mapping, &layer.qw, qx, profile).runtime()?;
    let report = account_layer(&mapping, x_cols, model, profile)?;
    Ok(MappingRun { sim, report })
}

/// The ADC profile a config describes, bound to this run's full scale.
pub fn build_profile(cfg: &ExperimentConfig, resolutions: Vec<u8>) -> Result<AdcProfile, CliError> {
    let fs = AdcProfile::full_scale_for(cfg.rows_per_section, cfg.activation_bits);
    AdcProfile::new(resolutions, fs).validation()
}
