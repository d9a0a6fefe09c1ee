//! `swsim theory`: analytic bit-zero probabilities next to their Monte Carlo
//! estimates.

use clap::{Args, Subcommand};

use swsim::theory::{
    conditional_bit_zero_probability, monte_carlo_bit_stats, section_bit_zero_probability,
    BitPrefixInterval, BitQuery, GaussianWeightModel, MagnitudeInterval,
};

use crate::{CliError, CmdResult, Phase};

#[derive(Args)]
pub struct TheoryArgs {
    #[command(subcommand)]
    query: TheoryQuery,
}

#[derive(Subcommand)]
enum TheoryQuery {
    /// P(next bit = 0) for magnitudes in the prefix interval [lo, lo + 2^-bit]
    #[command(allow_negative_numbers = true)]
    Prefix {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        lo: f64,
        /// Bit position n; the interval width is 2^-n
        #[arg(long)]
        bit: u32,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// P(bit `column` of the quantized code = 0) over a magnitude interval
    #[command(allow_negative_numbers = true)]
    Section {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        /// Column index, 0 = MSB
        #[arg(long)]
        column: usize,
        /// Code width b
        #[arg(long)]
        bits: u8,
        /// Quantizer step (weight units per code)
        #[arg(long)]
        scale: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn run(args: &TheoryArgs) -> CmdResult {
    match &args.query {
        TheoryQuery::Prefix {
            sigma,
            lo,
            bit,
            samples,
            seed,
        } => {
            let model = GaussianWeightModel::new(*sigma).validation()?;
            let prefix = BitPrefixInterval::new(*lo, *bit).validation()?;
            let analytic = conditional_bit_zero_probability(&model, *lo, *bit).runtime()?;
            let mc = monte_carlo_bit_stats(&model, &BitQuery::Prefix(prefix), *samples, *seed)
                .runtime()?;
            print_estimates(analytic, mc, *samples, *seed);
        }
        TheoryQuery::Section {
            sigma,
            lo,
            hi,
            column,
            bits,
            scale,
            samples,
            seed,
        } => {
            let model = GaussianWeightModel::new(*sigma).validation()?;
            let interval = MagnitudeInterval::new(*lo, *hi).validation()?;
            if *column >= *bits as usize {
                return Err(CliError::Validation(anyhow::anyhow!(
                    "--column {column} out of range for {bits} bits"
                )));
            }
            let analytic =
                section_bit_zero_probability(&model, &interval, *column, *bits, *scale)
                    .runtime()?;
            let query = BitQuery::Section {
                interval,
                column: *column,
                bits: *bits,
                scale: *scale,
            };
            let mc = monte_carlo_bit_stats(&model, &query, *samples, *seed).runtime()?;
            print_estimates(analytic, mc, *samples, *seed);
        }
    }
    Ok(())
}

fn print_estimates(analytic: f64, mc: f64, samples: u64, seed: u64) {
    println!("analytic P(bit = 0)              = {analytic:.6}");
    println!("monte carlo (n={samples}, seed={seed}) = {mc:.6}");
    println!("|difference|                     = {:.6}", (analytic - mc).abs());
}
