//! `swsim simulate`: sorted vs baseline under one ADC profile, with a full
//! report document.

use std::path::PathBuf;

use swsim::io::{write_report, ErrorMetrics, ExperimentConfig, LayerErrors, ReportDocument};
use swsim::mapper::SectionOrder;
use swsim::xbar::AdcProfile;

use crate::opts::CommonArgs;
use crate::pipeline::{
    load_activations, load_layers, run_mapping, x_columns, Layer, MappingRun,
};
use crate::{CliError, CmdResult, Phase};

pub fn run(args: &CommonArgs) -> CmdResult {
    let cfg = args.resolve()?;
    let resolutions = cfg.resolutions();
    run_with_profiles(&cfg, resolutions.clone(), resolutions, "report.json")
}

/// Shared body for `simulate` (equal profiles) and `compare` (sorted profile
/// vs fixed-resolution baseline).
pub fn run_with_profiles(
    cfg: &ExperimentConfig,
    sorted_resolutions: Vec<u8>,
    baseline_resolutions: Vec<u8>,
    default_out: &str,
) -> CmdResult {
    let layers = load_layers(cfg)?;
    let fs = AdcProfile::full_scale_for(cfg.rows_per_section, cfg.activation_bits);
    let sorted_profile = AdcProfile::new(sorted_resolutions, fs).validation()?;
    let baseline_profile = AdcProfile::new(baseline_resolutions, fs).validation()?;

    let mut names = Vec::new();
    let mut sorted_reports = Vec::new();
    let mut baseline_reports = Vec::new();
    let mut errors = Vec::new();
    for layer in &layers {
        let (s, b) = simulate_layer(cfg, layer, &sorted_profile, &baseline_profile)?;
        println!(
            "layer {}: max_abs error {} (sorted) / {} (baseline)",
            layer.name, s.sim.max_abs_error, b.sim.max_abs_error
        );
        let cmp = swsim::energy::compare(&s.report, &b.report).runtime()?;
        println!(
            "layer {}: ADC savings {:.2}% ({} vs {} conversions)",
            layer.name,
            cmp.savings_fraction * 100.0,
            s.report.total_conversions,
            b.report.total_conversions
        );
        names.push(layer.name.clone());
        errors.push(LayerErrors {
            layer: layer.name.clone(),
            sorted: ErrorMetrics {
                max_abs: s.sim.max_abs_error,
                rmse: s.sim.rmse,
            },
            baseline: ErrorMetrics {
                max_abs: b.sim.max_abs_error,
                rmse: b.sim.rmse,
            },
        });
        sorted_reports.push(s.report);
        baseline_reports.push(b.report);
    }

    let doc = ReportDocument::new(
        cfg.clone(),
        names,
        sorted_reports,
        baseline_reports,
        errors,
    )
    .runtime()?;
    let degenerate = doc.baseline.iter().map(|r| r.adc_energy).sum::<f64>() == 0.0;
    println!(
        "aggregate ADC savings: {:.2}%{}",
        doc.comparison.aggregate.savings_fraction * 100.0,
        if degenerate {
            " (degenerate: baseline ADC energy is 0)"
        } else {
            ""
        }
    );

    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_out));
    write_report(&doc, &out).runtime()?;
    println!("wrote report to {}", out.display());
    Ok(())
}

fn simulate_layer(
    cfg: &ExperimentConfig,
    layer: &Layer,
    sorted_profile: &AdcProfile,
    baseline_profile: &AdcProfile,
) -> Result<(MappingRun, MappingRun), CliError> {
    let qx = load_activations(cfg, layer.feature_size)?;
    let x_cols = x_columns(&qx);
    let sorted = run_mapping(
        layer,
        SectionOrder::Sorted,
        cfg.rows_per_section,
        &qx,
        &x_cols,
        &cfg.energy,
        sorted_profile,
    )?;
    let baseline = run_mapping(
        layer,
        cfg.baseline_order(),
        cfg.rows_per_section,
        &qx,
        &x_cols,
        &cfg.energy,
        baseline_profile,
    )?;
    Ok((sorted, baseline))
}
