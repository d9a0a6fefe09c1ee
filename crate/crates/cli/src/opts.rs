//! Shared flags and config resolution: flag > config file > default.

use std::path::PathBuf;

use clap::Args;
use swsim::io::{load_config, ActivationSource, ExperimentConfig, OrderMode, ProfileSpec};

use crate::{CliError, Phase};

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Experiment config file (TOML)
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Weight tensor file(s), .npy or .csv; repeatable
    #[arg(long)]
    pub weights: Vec<PathBuf>,

    /// Activation tensor file; default is synthetic N(0,1), one batch column
    #[arg(long)]
    pub activations: Option<PathBuf>,

    /// Magnitude-pruning fraction in [0, 1]
    #[arg(long)]
    pub sparsity: Option<f64>,

    /// Rows per crossbar section
    #[arg(long)]
    pub rows: Option<usize>,

    /// Weight magnitude bits (= crossbar columns)
    #[arg(long)]
    pub bits: Option<u8>,

    /// Activation magnitude bits
    #[arg(long)]
    pub abits: Option<u8>,

    /// ADC resolutions: one integer (fixed) or b comma-separated integers
    #[arg(long)]
    pub profile: Option<String>,

    /// Baseline order: sorted (= default baseline unsorted-identity),
    /// unsorted-identity, or unsorted-shuffled
    #[arg(long)]
    pub order: Option<String>,

    /// Seed for the shuffled baseline and synthetic activations
    #[arg(long)]
    pub seed: Option<u64>,

    /// ADC energy model: flash | linear, optionally with e0 as "flash:0.5"
    #[arg(long)]
    pub energy_model: Option<String>,

    /// Output path (report JSON or CSV, command-dependent)
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,

    /// Strict config validation: unknown keys are errors
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub strict: bool,
}

impl CommonArgs {
    /// Builds the effective config: file values (if any) overridden by flags,
    /// then validated. Lenient-mode warnings go to stderr.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let (cfg, warnings) = load_config(path, self.strict).validation()?;
                for w in warnings {
                    eprintln!("warning: {w}");
                }
                cfg
            }
            None => ExperimentConfig::default(),
        };

        if !self.weights.is_empty() {
            cfg.weights = self.weights.clone();
        }
        if let Some(path) = &self.activations {
            cfg.activations = ActivationSource::File { path: path.clone() };
        }
        if let Some(s) = self.sparsity {
            cfg.sparsity = s;
        }
        if let Some(r) = self.rows {
            cfg.rows_per_section = r;
        }
        if let Some(b) = self.bits {
            cfg.weight_bits = b;
        }
        if let Some(bx) = self.abits {
            cfg.activation_bits = bx;
        }
        if let Some(p) = &self.profile {
            cfg.profile = parse_profile(p)?;
        }
        if let Some(o) = &self.order {
            cfg.order = parse_order(o)?;
        }
        if let Some(seed) = self.seed {
            cfg.shuffle_seed = seed;
            if let ActivationSource::Gaussian { seed: s, .. } = &mut cfg.activations {
                *s = seed;
            }
        }
        if let Some(m) = &self.energy_model {
            cfg.energy.adc = parse_energy_model(m)?;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }

        cfg.validate().validation()?;
        self.init_workers()?;
        Ok(cfg)
    }

    /// Bounds the rayon pool; a second call with the same size is a no-op.
    pub fn init_workers(&self) -> Result<(), CliError> {
        if let Some(n) = self.workers {
            if n == 0 {
                return Err(CliError::Validation(anyhow::anyhow!(
                    "--workers must be at least 1"
                )));
            }
            // Ignore AlreadyInitialized: tests call resolve() repeatedly.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(())
    }
}

fn parse_profile(text: &str) -> Result<ProfileSpec, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let parse_one = |tok: &str| -> Result<u8, CliError> {
        tok.parse::<u8>()
            .map_err(|_| CliError::Validation(anyhow::anyhow!("bad resolution {tok:?} in --profile")))
    };
    if parts.len() == 1 {
        Ok(ProfileSpec::Fixed(parse_one(parts[0])?))
    } else {
        Ok(ProfileSpec::PerColumn(
            parts.into_iter().map(parse_one).collect::<Result<_, _>>()?,
        ))
    }
}

fn parse_order(text: &str) -> Result<OrderMode, CliError> {
    match text {
        "sorted" => Ok(OrderMode::Sorted),
        "unsorted-identity" | "identity" => Ok(OrderMode::UnsortedIdentity),
        "unsorted-shuffled" | "shuffled" => Ok(OrderMode::UnsortedShuffled),
        other => Err(CliError::Validation(anyhow::anyhow!(
            "--order must be sorted, unsorted-identity, or unsorted-shuffled; got {other:?}"
        ))),
    }
}

fn parse_energy_model(text: &str) -> Result<swsim::energy::AdcEnergyModel, CliError> {
    use swsim::energy::AdcEnergyModel;
    let (kind, e0) = match text.split_once(':') {
        Some((kind, e0_str)) => {
            let e0 = e0_str.parse::<f64>().map_err(|_| {
                CliError::Validation(anyhow::anyhow!("bad e0 {e0_str:?} in --energy-model"))
            })?;
            (kind, e0)
        }
        None => (text, 1.0),
    };
    match kind {
        "flash" => Ok(AdcEnergyModel::Flash { e0 }),
        "linear" => Ok(AdcEnergyModel::Linear { e0 }),
        other => Err(CliError::Validation(anyhow::anyhow!(
            "--energy-model must be flash or linear (tables come from config files); got {other:?}"
        ))),
    }
}
