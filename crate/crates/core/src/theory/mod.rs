//! Gaussian bit statistics behind sorted weight sectioning.
//!
//! Pretrained weights are modeled as `|N(0, sigma)|`. For a magnitude known
//! to lie in a prefix interval `[L, U]` with `U = L + 2^-n`, the next binary
//! digit is 0 exactly when the magnitude falls in the lower half `[L, M]`,
//! so `P(bit = 0) = mass[L, M] / mass[L, U]`. Section-level statistics do the
//! same computation over quantizer rounding cells: the probability that a
//! whole `R`-row section leaves column `p` inactive is `q^R` with `q` the
//! per-row bit-zero probability over the section's magnitude interval.
//!
//! One finding this module makes checkable: the half-mass ratio is *not*
//! monotone in `L` for a Gaussian (it is 0.5155 at `L = 0` but 0.5465 at
//! `L = 0.5` for `sigma = 1`, `n = 1`), so "later sections need every
//! column" holds through the hard high-order-deactivation bound rather than
//! through ratio monotonicity. See `conditional_bit_zero_probability` tests.

mod monte_carlo;
mod normal;

pub use monte_carlo::{monte_carlo_bit_stats, BitQuery};
pub use normal::{erf, erfc, half_normal_mass, std_normal_cdf};

use crate::error::{Error, Result};
use crate::quant::max_code;

/// Zero-mean Gaussian weight model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWeightModel {
    sigma: f64,
}

impl GaussianWeightModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Magnitude band `lo <= |w| <= hi`; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnitudeInterval {
    lo: f64,
    hi: f64,
}

impl MagnitudeInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || lo < 0.0 || hi.is_nan() || hi <= lo {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Magnitude band covered by codes `lo_code..=hi_code` of a quantizer
    /// with step `scale`: the union of their rounding cells.
    pub fn from_code_range(lo_code: u32, hi_code: u32, scale: f64) -> Result<Self> {
        let lo = (f64::from(lo_code) - 0.5).max(0.0) * scale;
        let hi = (f64::from(hi_code) + 0.5) * scale;
        Self::new(lo, hi)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

/// Prefix interval for bit position `n`: magnitudes in `[L, L + 2^-n]`, with
/// the next bit splitting the interval at the midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitPrefixInterval {
    lo: f64,
    bit: u32,
}

impl BitPrefixInterval {
    pub fn new(lo: f64, bit: u32) -> Result<Self> {
        if !(lo.is_finite() && lo >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "prefix lower bound must be >= 0 and finite, got {lo}"
            )));
        }
        Ok(Self { lo, bit })
    }

    pub fn lower(&self) -> f64 {
        self.lo
    }

    pub fn bit(&self) -> u32 {
        self.bit
    }

    /// `U = L + 2^-n`.
    pub fn upper(&self) -> f64 {
        self.lo + (-(self.bit as f64)).exp2()
    }

    /// `M = (L + U) / 2`.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.upper())
    }
}

fn check_mass(mass: f64, what: &str) -> Result<f64> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Numerical(format!(
            "{what} carries no probability mass (got {mass})"
        )));
    }
    Ok(mass)
}

/// `P(a_n = 0)` for a magnitude known to lie in `[L, L + 2^-n]`:
/// `mass[L, M] / mass[L, U]` under the Gaussian model.
pub fn conditional_bit_zero_probability(
    model: &GaussianWeightModel,
    lo: f64,
    bit: u32,
) -> Result<f64> {
    let prefix = BitPrefixInterval::new(lo, bit)?;
    let den = check_mass(
        half_normal_mass(prefix.lower(), prefix.upper(), model.sigma()),
        "prefix interval",
    )?;
    let num = half_normal_mass(prefix.lower(), prefix.midpoint(), model.sigma());
    Ok(num / den)
}

/// `P(bit p of the quantized code = 0)` for a magnitude conditioned on
/// `interval`, brute-forced over all `2^b` codes. The rounding cell of code
/// `m` is `[(m - 0.5) s, (m + 0.5) s)` clipped at 0; magnitudes beyond the
/// top cell are outside the discretization and carry no code mass.
pub fn section_bit_zero_probability(
    model: &GaussianWeightModel,
    interval: &MagnitudeInterval,
    column: usize,
    bits: u8,
    scale: f64,
) -> Result<f64> {
    if column >= bits as usize {
        return Err(Error::InvalidConfig(format!(
            "column {column} out of range for {bits} bits"
        )));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")));
    }
    let significance = 1u32 << (bits as usize - 1 - column);
    let mut total = 0.0;
    let mut zero = 0.0;
    for m in 0..=max_code(bits) {
        let cell_lo = (f64::from(m) - 0.5).max(0.0) * scale;
        let cell_hi = (f64::from(m) + 0.5) * scale;
        let lo = cell_lo.max(interval.lo());
        let hi = cell_hi.min(interval.hi());
        if hi <= lo {
            continue;
        }
        let mass = half_normal_mass(lo, hi, model.sigma());
        total += mass;
        if m & significance == 0 {
            zero += mass;
        }
    }
    check_mass(total, "interval/code intersection")?;
    Ok(zero / total)
}

/// Probability that column `p` is active somewhere in an `R`-row section
/// whose magnitudes are i.i.d. on `interval`: `1 - q^R`.
pub fn expected_active_probability(
    model: &GaussianWeightModel,
    interval: &MagnitudeInterval,
    rows_per_section: usize,
    column: usize,
    bits: u8,
    scale: f64,
) -> Result<f64> {
    if rows_per_section == 0 {
        return Err(Error::InvalidConfig("rows_per_section must be >= 1".into()));
    }
    let q = section_bit_zero_probability(model, interval, column, bits, scale)?;
    Ok(1.0 - q.powf(rows_per_section as f64))
}
