//! `swsim analyze`: per-section active-column structure of the sorted
//! mapping, next to what a Gaussian weight model predicts for it.
//!
//! Emits one CSV row per (layer, output row, section, column) with the
//! empirical active flag and the model probability that the column is active
//! in a section drawn from the same magnitude band.

use std::io::Write;
use std::path::PathBuf;

use swsim::mapper::{build_matrix_mapping, SectionConfig, SectionOrder};
use swsim::theory::{expected_active_probability, GaussianWeightModel, MagnitudeInterval};

use crate::opts::CommonArgs;
use crate::pipeline::{load_layers, Layer};
use crate::{CmdResult, Phase};

pub fn run(args: &CommonArgs) -> CmdResult {
    let cfg = args.resolve()?;
    let layers = load_layers(&cfg)?;

    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("analyze.csv"));
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&out).runtime()?);
    writeln!(
        csv,
        "layer,row,section,rows,lo_code,hi_code,column,significance,active,p_active_model"
    )
    .runtime()?;

    for layer in &layers {
        analyze_layer(&cfg, layer, &mut csv)?;
    }
    println!("wrote per-section statistics to {}", out.display());
    Ok(())
}

fn analyze_layer(
    cfg: &swsim::io::ExperimentConfig,
    layer: &Layer,
    csv: &mut impl Write,
) -> CmdResult {
    let sorted_cfg =
        SectionConfig::new(cfg.rows_per_section, SectionOrder::Sorted).validation()?;
    let baseline_cfg =
        SectionConfig::new(cfg.rows_per_section, cfg.baseline_order()).validation()?;
    let sorted = build_matrix_mapping(&layer.qw, &sorted_cfg).runtime()?;
    let baseline = build_matrix_mapping(&layer.qw, &baseline_cfg).runtime()?;

    // The Gaussian model needs a positive sigma; an all-zero layer has no
    // active columns to explain anyway.
    let model = GaussianWeightModel::new(layer.sigma_hat.max(1e-12)).validation()?;
    let scale = layer.qw.scale();
    let bits = layer.qw.bits();

    let mut sections_total = 0usize;
    let mut active_total = 0usize;
    for (row_idx, vm) in sorted.rows.iter().enumerate() {
        for (sec_idx, section) in vm.sections.iter().enumerate() {
            sections_total += 1;
            active_total += section.active_columns();
            let codes: Vec<u32> = section
                .row_source_indices
                .iter()
                .map(|&i| layer.qw.magnitudes()[row_idx * layer.feature_size + i])
                .collect();
            let lo_code = codes.iter().copied().min().unwrap_or(0);
            let hi_code = codes.iter().copied().max().unwrap_or(0);
            let interval = MagnitudeInterval::from_code_range(lo_code, hi_code, scale)
                .runtime()?;
            for (column, &active) in section.active_mask.iter().enumerate() {
                let p = expected_active_probability(
                    &model,
                    &interval,
                    section.rows(),
                    column,
                    bits,
                    scale,
                )
                .unwrap_or(f64::NAN);
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{:.6}",
                    layer.name,
                    row_idx,
                    sec_idx,
                    section.rows(),
                    lo_code,
                    hi_code,
                    column,
                    1u32 << (bits as usize - 1 - column),
                    u8::from(active),
                    p
                )
                .runtime()?;
            }
        }
    }

    let baseline_sections: usize = baseline.rows.iter().map(|vm| vm.section_count()).sum();
    let baseline_active: usize = baseline
        .rows
        .iter()
        .map(|vm| vm.total_active_columns())
        .sum();
    let mean = |active: usize, sections: usize| {
        if sections == 0 {
            0.0
        } else {
            active as f64 / sections as f64
        }
    };
    println!(
        "layer {}: sigma_hat {:.4}, scale {:.6}",
        layer.name, layer.sigma_hat, scale
    );
    println!(
        "  mean active columns/section: {:.2} sorted ({} sections) vs {:.2} baseline ({} sections)",
        mean(active_total, sections_total),
        sections_total,
        mean(baseline_active, baseline_sections),
        baseline_sections
    );
    Ok(())
}
