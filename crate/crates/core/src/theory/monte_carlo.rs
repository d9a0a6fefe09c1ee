//! Monte Carlo validation of the analytic bit statistics.
//!
//! Samples |N(0, sigma)| and rejects draws outside the queried region, so the
//! estimate targets exactly the conditional probability the analytic side
//! computes. Runs single-threaded with a ChaCha stream seeded from `seed`;
//! fixed seeds reproduce bit-identical estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quant::max_code;

use super::{BitPrefixInterval, GaussianWeightModel, MagnitudeInterval};

/// Which bit-zero probability to estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BitQuery {
    /// Next binary digit after a prefix interval: counts `|w| < M`.
    Prefix(BitPrefixInterval),
    /// Bit `column` of the quantized code over a magnitude interval. Samples
    /// whose code would exceed the top code fall outside the discretization
    /// and are rejected, matching the analytic normalization.
    Section {
        interval: MagnitudeInterval,
        column: usize,
        bits: u8,
        scale: f64,
    },
}

/// Empirical bit-zero frequency from rejection sampling.
///
/// `samples` is the number of *accepted* draws to collect; drawing stops
/// early after `1000 * samples` attempts. Zero accepted draws is an error;
/// a partial count (at least one accepted) still yields an estimate.
pub fn monte_carlo_bit_stats(
    model: &GaussianWeightModel,
    query: &BitQuery,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidConfig("need at least one sample".into()));
    }
    if let BitQuery::Section { column, bits, scale, .. } = query {
        if *column >= *bits as usize {
            return Err(Error::InvalidConfig(format!(
                "column {column} out of range for {bits} bits"
            )));
        }
        if !(scale.is_finite() && *scale > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "scale must be positive, got {scale}"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = samples.saturating_mul(1000);
    let mut accepted = 0u64;
    let mut zeros = 0u64;
    for _ in 0..max_attempts {
        if accepted == samples {
            break;
        }
        let draw: f64 = rng.sample(StandardNormal);
        let w = (draw * model.sigma()).abs();
        match query {
            BitQuery::Prefix(prefix) => {
                if w < prefix.lower() || w > prefix.upper() {
                    continue;
                }
                accepted += 1;
                if w < prefix.midpoint() {
                    zeros += 1;
                }
            }
            BitQuery::Section {
                interval,
                column,
                bits,
                scale,
            } => {
                if w < interval.lo() || w > interval.hi() {
                    continue;
                }
                let code = (w / scale).round() as u64;
                if code > u64::from(max_code(*bits)) {
                    continue;
                }
                accepted += 1;
                let significance = 1u64 << (*bits as usize - 1 - column);
                if code & significance == 0 {
                    zeros += 1;
                }
            }
        }
    }
    if accepted == 0 {
        return Err(Error::Numerical(
            "rejection sampling accepted no draws in the queried region".into(),
        ));
    }
    Ok(zeros as f64 / accepted as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{
        conditional_bit_zero_probability, section_bit_zero_probability,
    };

    fn model(sigma: f64) -> GaussianWeightModel {
        GaussianWeightModel::new(sigma).unwrap()
    }

    #[test]
    fn prefix_estimate_matches_analytic() {
        let m = model(1.0);
        let analytic = conditional_bit_zero_probability(&m, 0.0, 1).unwrap();
        let query = BitQuery::Prefix(BitPrefixInterval::new(0.0, 1).unwrap());
        let n = 1_000_000u64;
        let mc = monte_carlo_bit_stats(&m, &query, n, 7).unwrap();
        let stderr = (analytic * (1.0 - analytic) / n as f64).sqrt();
        assert!(
            (mc - analytic).abs() < 3.0 * stderr + 1e-6,
            "mc {mc} vs analytic {analytic}"
        );
    }

    #[test]
    fn section_estimate_matches_analytic() {
        let m = model(1.0);
        let interval = MagnitudeInterval::new(0.0, 1.0).unwrap();
        let analytic =
            section_bit_zero_probability(&m, &interval, 0, 3, 1.0 / 7.0).unwrap();
        let query = BitQuery::Section {
            interval,
            column: 0,
            bits: 3,
            scale: 1.0 / 7.0,
        };
        let mc = monte_carlo_bit_stats(&m, &query, 1_000_000, 11).unwrap();
        assert!((mc - analytic).abs() < 3e-3, "mc {mc} vs analytic {analytic}");
    }

    #[test]
    fn fixed_seed_reproduces_exactly() {
        let m = model(0.7);
        let query = BitQuery::Prefix(BitPrefixInterval::new(0.25, 2).unwrap());
        let a = monte_carlo_bit_stats(&m, &query, 10_000, 42).unwrap();
        let b = monte_carlo_bit_stats(&m, &query, 10_000, 42).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_bit_stats(&m, &query, 10_000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_limit_is_half() {
        // Sigma much wider than the interval: density is locally flat, so
        // the bit-zero frequency approaches 1/2.
        let m = model(10.0);
        let query = BitQuery::Prefix(BitPrefixInterval::new(0.0, 0).unwrap());
        let mc = monte_carlo_bit_stats(&m, &query, 200_000, 3).unwrap();
        assert!((mc - 0.5).abs() < 0.01, "{mc}");
    }

    #[test]
    fn unreachable_region_errors() {
        let m = model(1.0);
        let query = BitQuery::Prefix(BitPrefixInterval::new(50.0, 1).unwrap());
        assert!(matches!(
            monte_carlo_bit_stats(&m, &query, 100, 1),
            Err(Error::Numerical(_))
        ));
        assert!(matches!(
            monte_carlo_bit_stats(&m, &query, 0, 1),
            Err(Error::InvalidConfig(_))
        ));
    }
}
