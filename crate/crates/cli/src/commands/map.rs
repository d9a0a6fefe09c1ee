//! `swsim map`: mapping inspection without simulation.

use swsim::mapper::{
    build_matrix_mapping, permutation_overhead, OverheadConstants, SectionConfig, SectionOrder,
};
use swsim::xbar::conversion_log;

use crate::opts::CommonArgs;
use crate::pipeline::{build_profile, load_layers};
use crate::{CmdResult, Phase};

pub fn run(args: &CommonArgs) -> CmdResult {
    let cfg = args.resolve()?;
    let layers = load_layers(&cfg)?;
    let profile = build_profile(&cfg, cfg.resolutions())?;

    let mut summaries = Vec::new();
    for layer in &layers {
        let sorted_cfg =
            SectionConfig::new(cfg.rows_per_section, SectionOrder::Sorted).validation()?;
        let baseline_cfg =
            SectionConfig::new(cfg.rows_per_section, cfg.baseline_order()).validation()?;
        let sorted = build_matrix_mapping(&layer.qw, &sorted_cfg).runtime()?;
        let baseline = build_matrix_mapping(&layer.qw, &baseline_cfg).runtime()?;

        let count_sections = |mm: &swsim::mapper::MatrixMapping| -> usize {
            mm.rows.iter().map(|vm| vm.section_count()).sum()
        };
        let conversions = |mm: &swsim::mapper::MatrixMapping| -> Result<Vec<u64>, crate::CliError> {
            let mut per_column = vec![0u64; profile.columns()];
            for vm in &mm.rows {
                let log = conversion_log(vm, &profile).runtime()?;
                for (slot, n) in per_column
                    .iter_mut()
                    .zip(log.performed_per_column(profile.columns()))
                {
                    *slot += n;
                }
            }
            Ok(per_column)
        };

        let sections_sorted = count_sections(&sorted);
        let sections_baseline = count_sections(&baseline);
        let per_column_sorted = conversions(&sorted)?;
        let per_column_baseline = conversions(&baseline)?;
        let conv_sorted: u64 = per_column_sorted.iter().sum();
        let conv_baseline: u64 = per_column_baseline.iter().sum();
        let overhead = permutation_overhead(
            layer.feature_size,
            sections_sorted.max(1),
            &OverheadConstants::default(),
        );

        println!(
            "layer {}: {} x {} weights, nnz {}, sparsity {:.2}",
            layer.name,
            layer.out_rows,
            layer.feature_size,
            layer.nnz,
            cfg.sparsity
        );
        println!(
            "  sections: {} sorted vs {} baseline ({})",
            sections_sorted,
            sections_baseline,
            cfg.baseline_order()
        );
        println!(
            "  conversions/inference: {} sorted vs {} baseline",
            conv_sorted, conv_baseline
        );
        println!(
            "  active columns per column index (sorted):   {:?}",
            per_column_sorted
        );
        println!(
            "  active columns per column index (baseline): {:?}",
            per_column_baseline
        );
        println!(
            "  permutation overhead: {} muxes, {} memory cells, {} time units",
            overhead.mux_count, overhead.memory_cells, overhead.time_units
        );

        summaries.push(serde_json::json!({
            "layer": layer.name,
            "out_rows": layer.out_rows,
            "feature_size": layer.feature_size,
            "nnz": layer.nnz,
            "sections_sorted": sections_sorted,
            "sections_baseline": sections_baseline,
            "conversions_sorted": conv_sorted,
            "conversions_baseline": conv_baseline,
            "per_column_sorted": per_column_sorted,
            "per_column_baseline": per_column_baseline,
            "mux_count": overhead.mux_count,
            "memory_cells": overhead.memory_cells,
            "time_units": overhead.time_units,
        }));
    }

    if let Some(out) = &cfg.out {
        let text = serde_json::to_string_pretty(&serde_json::Value::Array(summaries))
            .expect("JSON summary");
        std::fs::write(out, text + "\n").runtime()?;
        println!("wrote mapping summary to {}", out.display());
    }
    Ok(())
}
