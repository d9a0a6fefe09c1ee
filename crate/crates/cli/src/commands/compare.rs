//! `swsim compare`: sorted mapping under the configured (possibly
//! per-column) profile against the baseline at fixed resolution.
//!
//! The baseline runs every column at `max(profile)`, so a reduced-resolution
//! sorted profile is measured against the flat-resolution hardware it
//! replaces; with a fixed profile this coincides with `simulate`.

use crate::opts::CommonArgs;
use crate::{CliError, CmdResult};

use super::simulate::run_with_profiles;

pub fn run(args: &CommonArgs) -> CmdResult {
    let cfg = args.resolve()?;
    let sorted_resolutions = cfg.resolutions();
    let max_r = *sorted_resolutions
        .iter()
        .max()
        .ok_or_else(|| CliError::Validation(anyhow::anyhow!("profile is empty")))?;
    let baseline_resolutions = vec![max_r; sorted_resolutions.len()];
    println!(
        "sorted profile {:?} vs baseline fixed {max_r}-bit",
        sorted_resolutions
    );
    run_with_profiles(&cfg, sorted_resolutions, baseline_resolutions, "compare.json")
}
