//! `swsim sweep`: sparsity x rows x profile grid, one CSV row per cell.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use swsim::io::{load_tensor, ExperimentConfig, ProfileSpec};
use swsim::mapper::SectionOrder;
use swsim::quant::{prune_magnitude, quantize, FloatTensor};
use swsim::xbar::AdcProfile;

use crate::opts::CommonArgs;
use crate::pipeline::{layer_name, load_activations, run_mapping, x_columns, Layer};
use crate::{CliError, CmdResult, Phase};

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Comma-separated sparsity grid (overrides --sparsity for the sweep)
    #[arg(long, default_value = "0.0,0.5,0.9")]
    pub sparsity_grid: String,

    /// Comma-separated rows-per-section grid (overrides --rows)
    #[arg(long, default_value = "128")]
    pub rows_grid: String,

    /// ADC profile per grid point, e.g. "10" or "10,10,10,10,10,9,9,8";
    /// repeatable. Defaults to the configured profile.
    #[arg(long)]
    pub profile_grid: Vec<String>,
}

struct Cell {
    sparsity: f64,
    rows: usize,
    resolutions: Vec<u8>,
}

pub fn run(args: &SweepArgs) -> CmdResult {
    let base = args.common.resolve()?;

    let sparsities = parse_f64_list(&args.sparsity_grid, "--sparsity-grid")?;
    let rows_list = parse_usize_list(&args.rows_grid, "--rows-grid")?;
    let profiles: Vec<Vec<u8>> = if args.profile_grid.is_empty() {
        vec![base.resolutions()]
    } else {
        args.profile_grid
            .iter()
            .map(|spec| expand_profile(spec, base.weight_bits))
            .collect::<Result<_, _>>()?
    };

    // Tensors load once; every cell re-prunes and re-quantizes.
    let tensors: Vec<(String, FloatTensor)> = base
        .weights
        .iter()
        .map(|path| Ok((layer_name(path), load_tensor(path).validation()?)))
        .collect::<Result<_, CliError>>()?;

    let mut cells = Vec::new();
    for &sparsity in &sparsities {
        for &rows in &rows_list {
            for resolutions in &profiles {
                cells.push(Cell {
                    sparsity,
                    rows,
                    resolutions: resolutions.clone(),
                });
            }
        }
    }

    let rows_out: Vec<Vec<String>> = cells
        .par_iter()
        .map(|cell| sweep_cell(&base, &tensors, cell))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();

    let out = base.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&out).runtime()?);
    writeln!(
        csv,
        "layer,sparsity,rows_per_section,profile,baseline_order,sections_sorted,\
         sections_baseline,conversions_sorted,conversions_baseline,adc_energy_sorted,\
         adc_energy_baseline,savings_fraction,conversion_ratio,section_ratio,\
         max_abs_error_sorted,rmse_sorted"
    )
    .runtime()?;
    for row in &rows_out {
        writeln!(csv, "{}", row.join(",")).runtime()?;
    }
    println!("wrote {} sweep rows to {}", rows_out.len(), out.display());
    Ok(())
}

fn sweep_cell(
    base: &ExperimentConfig,
    tensors: &[(String, FloatTensor)],
    cell: &Cell,
) -> Result<Vec<Vec<String>>, CliError> {
    let mut cfg = base.clone();
    cfg.sparsity = cell.sparsity;
    cfg.rows_per_section = cell.rows;
    cfg.profile = ProfileSpec::PerColumn(cell.resolutions.clone());
    cfg.validate().validation()?;

    let fs = AdcProfile::full_scale_for(cfg.rows_per_section, cfg.activation_bits);
    let profile = AdcProfile::new(cell.resolutions.clone(), fs).validation()?;
    let profile_tag = cell
        .resolutions
        .iter()
        .map(u8::to_string)
        .collect::<Vec<_>>()
        .join("-");

    let mut rows = Vec::new();
    for (name, tensor) in tensors {
        let pruned = prune_magnitude(tensor, cfg.sparsity).validation()?;
        let qw = quantize(&pruned, cfg.weight_bits).validation()?;
        let (out_rows, feature_size) = qw.as_matrix().validation()?;
        let layer = Layer {
            name: name.clone(),
            nnz: qw.nnz(),
            qw,
            feature_size,
            out_rows,
            sigma_hat: 0.0,
        };
        let qx = load_activations(&cfg, feature_size)?;
        let x_cols = x_columns(&qx);
        let sorted = run_mapping(
            &layer,
            SectionOrder::Sorted,
            cfg.rows_per_section,
            &qx,
            &x_cols,
            &cfg.energy,
            &profile,
        )?;
        let baseline = run_mapping(
            &layer,
            cfg.baseline_order(),
            cfg.rows_per_section,
            &qx,
            &x_cols,
            &cfg.energy,
            &profile,
        )?;
        let cmp = swsim::energy::compare(&sorted.report, &baseline.report).runtime()?;
        rows.push(vec![
            name.clone(),
            format!("{}", cell.sparsity),
            cell.rows.to_string(),
            profile_tag.clone(),
            cfg.baseline_order().to_string(),
            sorted.report.sections_programmed.to_string(),
            baseline.report.sections_programmed.to_string(),
            sorted.report.total_conversions.to_string(),
            baseline.report.total_conversions.to_string(),
            format!("{}", sorted.report.adc_energy),
            format!("{}", baseline.report.adc_energy),
            format!("{:.6}", cmp.savings_fraction),
            format!("{:.6}", cmp.conversion_ratio),
            format!("{:.6}", cmp.section_ratio),
            format!("{}", sorted.sim.max_abs_error),
            format!("{}", sorted.sim.rmse),
        ]);
    }
    Ok(rows)
}

fn parse_f64_list(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| CliError::Validation(anyhow::anyhow!("bad value {tok:?} in {flag}")))
        })
        .collect()
}

fn parse_usize_list(text: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| CliError::Validation(anyhow::anyhow!("bad value {tok:?} in {flag}")))
        })
        .collect()
}

fn expand_profile(spec: &str, bits: u8) -> Result<Vec<u8>, CliError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let values: Vec<u8> = parts
        .iter()
        .map(|tok| {
            tok.parse::<u8>().map_err(|_| {
                CliError::Validation(anyhow::anyhow!("bad resolution {tok:?} in --profile-grid"))
            })
        })
        .collect::<Result<_, _>>()?;
    if values.len() == 1 {
        Ok(vec![values[0]; bits as usize])
    } else if values.len() == bits as usize {
        Ok(values)
    } else {
        Err(CliError::Validation(anyhow::anyhow!(
            "profile {spec:?} lists {} resolutions but weight_bits is {bits}",
            values.len()
        )))
    }
}
