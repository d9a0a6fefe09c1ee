//! Functional simulation of sectioned bit-sliced crossbar dot products.
//!
//! Per section, each column accumulates a signed integer sum of activation
//! codes gated by the column's weight bits. Active columns go through an ADC
//! model, digitized values are shifted by column significance and added, and
//! section partials accumulate into the final dot product. All arithmetic is
//! exact: column sums are integers and quantized values are carried as
//! `code * FS / (2^(r-1) - 1)` rationals, so full-resolution simulation is
//! bit-identical to the integer reference.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mapper::{permute_activations, BitSlicedSection, MatrixMapping, VectorMapping};
use crate::quant::QuantizedTensor;

/// Per-column ADC resolutions plus the shared full-scale range.
///
/// Resolution 0 means the column's ADC is pruned: the column contributes
/// nothing and never converts. Resolution `r >= 1` is a bipolar mid-tread
/// quantizer with `2^(r-1) - 1` positive levels over `[-FS, FS]`; once
/// `2^(r-1) - 1 >= FS` every reachable integer sum is exact and the
/// conversion is the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdcProfile {
    resolutions: Vec<u8>,
    full_scale: i64,
}

/// Largest ADC resolution accepted by profiles.
pub const MAX_RESOLUTION: u8 = 32;

impl AdcProfile {
    pub fn new(resolutions: Vec<u8>, full_scale: i64) -> Result<Self> {
        if resolutions.is_empty() {
            return Err(Error::InvalidConfig("profile must cover at least one column".into()));
        }
        if let Some(&r) = resolutions.iter().find(|&&r| r > MAX_RESOLUTION) {
            return Err(Error::InvalidConfig(format!(
                "ADC resolution {r} exceeds {MAX_RESOLUTION}"
            )));
        }
        if full_scale < 1 {
            return Err(Error::InvalidConfig(format!(
                "full scale must be at least 1, got {full_scale}"
            )));
        }
        Ok(Self {
            resolutions,
            full_scale,
        })
    }

    /// Same resolution for every column.
    pub fn fixed(resolution: u8, columns: u8, full_scale: i64) -> Result<Self> {
        Self::new(vec![resolution; columns as usize], full_scale)
    }

    /// Smallest fixed resolution whose conversions are exact over `[-FS, FS]`.
    pub fn lossless(columns: u8, full_scale: i64) -> Result<Self> {
        let mut r = 1u8;
        while levels(r) < i128::from(full_scale) {
            r += 1;
        }
        Self::fixed(r, columns, full_scale)
    }

    /// Full-scale bound for a section: `R * (2^bx - 1)`.
    pub fn full_scale_for(rows_per_section: usize, activation_bits: u8) -> i64 {
        rows_per_section as i64 * ((1i64 << activation_bits) - 1)
    }

    pub fn resolutions(&self) -> &[u8] {
        &self.resolutions
    }

    pub fn full_scale(&self) -> i64 {
        self.full_scale
    }

    pub fn columns(&self) -> usize {
        self.resolutions.len()
    }

    /// True when column `j` converts without loss.
    pub fn is_lossless(&self, j: usize) -> bool {
        levels(self.resolutions[j]) >= i128::from(self.full_scale)
    }

    fn check_columns(&self, bits: u8) -> Result<()> {
        if self.columns() != bits as usize {
            return Err(Error::Shape(format!(
                "profile covers {} columns but the mapping has {} bit columns",
                self.columns(),
                bits
            )));
        }
        Ok(())
    }
}

/// Positive code count of an `r`-bit bipolar mid-tread ADC: `2^(r-1) - 1`.
fn levels(r: u8) -> i128 {
    if r == 0 {
        0
    } else {
        (1i128 << (r - 1)) - 1
    }
}

fn ratio_int(v: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Quantizes a signed column sum through an `r`-bit ADC with the given full
/// scale. Returns the exact rational reconstruction `code * Δ`.
///
/// `r = 0` drops the column; `r = 1` has a single level at zero; otherwise
/// `Δ = FS / (2^(r-1) - 1)` with round-half-away-from-zero and symmetric
/// clamping (clamping can only fire when `|sum| > FS`, i.e. on misuse).
pub fn adc_quantize(sum: i64, resolution: u8, full_scale: i64) -> BigRational {
    let lv = levels(resolution);
    if lv == 0 {
        return BigRational::zero();
    }
    let fs = i128::from(full_scale);
    if lv >= fs {
        return ratio_int(i128::from(sum));
    }
    // code = round_half_away(sum * levels / FS), done in exact integers.
    let num = i128::from(sum) * lv;
    let code = ((2 * num.abs() + fs) / (2 * fs)) * num.signum();
    let code = code.clamp(-lv, lv);
    BigRational::new(BigInt::from(code * fs), BigInt::from(lv))
}

/// One column's conversion record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnConversion {
    /// Column holds at least one weight bit.
    pub active: bool,
    /// Profile resolution for this column.
    pub resolution: u8,
    /// A conversion actually happened: active and resolution > 0.
    pub performed: bool,
}

/// Conversion records for every (section, column) of one vector mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConversionLog {
    pub sections: Vec<Vec<ColumnConversion>>,
}

impl ConversionLog {
    pub fn total_performed(&self) -> u64 {
        self.sections
            .iter()
            .flatten()
            .filter(|c| c.performed)
            .count() as u64
    }

    /// Performed conversions per column index.
    pub fn performed_per_column(&self, columns: usize) -> Vec<u64> {
        let mut counts = vec![0u64; columns];
        for section in &self.sections {
            for (j, c) in section.iter().enumerate() {
                if c.performed {
                    counts[j] += 1;
                }
            }
        }
        counts
    }
}

/// Builds the conversion log a simulation of `mapping` under `profile` would
/// produce. Conversions depend only on which columns hold weight bits.
pub fn conversion_log(mapping: &VectorMapping, profile: &AdcProfile) -> Result<ConversionLog> {
    profile.check_columns(mapping.bits)?;
    let sections = mapping
        .sections
        .iter()
        .map(|s| {
            s.active_mask
                .iter()
                .zip(profile.resolutions())
                .map(|(&active, &r)| ColumnConversion {
                    active,
                    resolution: r,
                    performed: active && r > 0,
                })
                .collect()
        })
        .collect();
    Ok(ConversionLog { sections })
}

/// Signed per-column sums of one section: `sum[j] = Σ sign_r * bit[r][j] * x[r]`.
///
/// `gathered_x` must cover the section's real and pad rows; pad entries are 0
/// and contribute nothing.
pub fn section_column_sums(section: &BitSlicedSection, gathered_x: &[i64]) -> Result<Vec<i64>> {
    if gathered_x.len() != section.total_rows() {
        return Err(Error::Shape(format!(
            "section has {} rows (incl. pads), got {} activations",
            section.total_rows(),
            gathered_x.len()
        )));
    }
    let columns = section.active_mask.len();
    let mut sums = vec![0i64; columns];
    for (row, bits) in section.bit_matrix.iter().enumerate() {
        let x = i64::from(section.row_signs[row]) * gathered_x[row];
        if x == 0 {
            continue;
        }
        for (j, &bit) in bits.iter().enumerate() {
            if bit == 1 {
                sums[j] += x;
            }
        }
    }
    Ok(sums)
}

/// Simulates one section: converts each active column and shift-adds by
/// column significance. Inactive columns contribute exactly 0 and never
/// convert.
pub fn simulate_section(
    section: &BitSlicedSection,
    gathered_x: &[i64],
    profile: &AdcProfile,
) -> Result<(BigRational, Vec<ColumnConversion>)> {
    if profile.columns() != section.active_mask.len() {
        return Err(Error::Shape(format!(
            "profile covers {} columns, section has {}",
            profile.columns(),
            section.active_mask.len()
        )));
    }
    let sums = section_column_sums(section, gathered_x)?;
    let b = profile.columns();
    let mut acc = BigRational::zero();
    let mut log = Vec::with_capacity(b);
    for (j, &sum) in sums.iter().enumerate() {
        let active = section.active_mask[j];
        let r = profile.resolutions()[j];
        log.push(ColumnConversion {
            active,
            resolution: r,
            performed: active && r > 0,
        });
        if !active || r == 0 {
            continue;
        }
        let significance = BigInt::from(1i128 << (b - 1 - j));
        acc += adc_quantize(sum, r, profile.full_scale()) * significance;
    }
    Ok((acc, log))
}

fn gather_signed(mapping: &VectorMapping, x_signed: &[i64]) -> Result<Vec<i64>> {
    permute_activations(x_signed, mapping)
}

fn simulate_vector_signed(
    mapping: &VectorMapping,
    x_signed: &[i64],
    profile: &AdcProfile,
) -> Result<(BigRational, ConversionLog)> {
    profile.check_columns(mapping.bits)?;
    let gathered = gather_signed(mapping, x_signed)?;
    let r = mapping.rows_per_section();
    let mut acc = BigRational::zero();
    let mut sections = Vec::with_capacity(mapping.section_count());
    for (k, section) in mapping.sections.iter().enumerate() {
        let slice = &gathered[k * r..k * r + section.total_rows()];
        let (partial, log) = simulate_section(section, slice, profile)?;
        acc += partial;
        sections.push(log);
    }
    Ok((acc, ConversionLog { sections }))
}

/// Simulates one weight vector against one activation vector given as
/// (codes, signs). Returns the accumulator in integer units and the
/// conversion log.
pub fn simulate_vector(
    mapping: &VectorMapping,
    x_codes: &[u32],
    x_signs: &[i8],
    profile: &AdcProfile,
) -> Result<(BigRational, ConversionLog)> {
    if x_codes.len() != x_signs.len() {
        return Err(Error::Shape(format!(
            "{} codes vs {} signs",
            x_codes.len(),
            x_signs.len()
        )));
    }
    let signed: Vec<i64> = x_codes
        .iter()
        .zip(x_signs)
        .map(|(&c, &s)| i64::from(s) * i64::from(c))
        .collect();
    simulate_vector_signed(mapping, &signed, profile)
}

/// Simulation output for a weight matrix times an activation matrix.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub out_rows: usize,
    pub batch_cols: usize,
    /// Accumulator values (integer units), row-major `out_rows x batch_cols`.
    pub outputs: Vec<f64>,
    /// Same values in exact arithmetic.
    pub outputs_exact: Vec<BigRational>,
    /// Outputs scaled back to real units by `scale_w * scale_x`.
    pub dequantized: Vec<f64>,
    /// Exact integer reference for the same operands.
    pub reference_exact: Vec<i64>,
    /// Max |simulated - reference| in integer units.
    pub max_abs_error: f64,
    /// Root-mean-square of the same differences.
    pub rmse: f64,
    /// One log per output row; conversions are identical across batch columns.
    pub conversion_logs: Vec<ConversionLog>,
}

/// Activation tensor viewed as `feature x batch`: 1-D becomes one column.
fn activation_dims(qx: &QuantizedTensor) -> Result<(usize, usize)> {
    match qx.shape().len() {
        1 => Ok((qx.shape()[0], 1)),
        2 => Ok((qx.shape()[0], qx.shape()[1])),
        n => Err(Error::Shape(format!("activations must be 1-D or 2-D, got {n}-D"))),
    }
}

/// Exact signed integer reference: `out[r][c] = Σ_i wsign*wmag[r][i] * xsign*xmag[i][c]`.
pub fn exact_reference(qw: &QuantizedTensor, qx: &QuantizedTensor) -> Result<Vec<i64>> {
    let (out_rows, f) = qw.as_matrix()?;
    let (fx, batch) = activation_dims(qx)?;
    if f != fx {
        return Err(Error::Shape(format!(
            "weight feature size {f} != activation feature size {fx}"
        )));
    }
    let mut out = vec![0i64; out_rows * batch];
    for r in 0..out_rows {
        for i in 0..f {
            let w = qw.signed_code(r * f + i);
            if w == 0 {
                continue;
            }
            for c in 0..batch {
                out[r * batch + c] += w * qx.signed_code(i * batch + c);
            }
        }
    }
    Ok(out)
}

/// Runs every (output row, batch column) pair through the sectioned crossbar
/// model and fills a [`SimResult`] including the exact-reference comparison.
///
/// Work is parallelized per output row; results are bit-identical to
/// sequential execution.
pub fn simulate_matmul(
    mapping: &MatrixMapping,
    qw: &QuantizedTensor,
    qx: &QuantizedTensor,
    profile: &AdcProfile,
) -> Result<SimResult> {
    let (f, batch) = activation_dims(qx)?;
    if f != mapping.feature_size {
        return Err(Error::Shape(format!(
            "activation feature size {f} != mapping feature size {}",
            mapping.feature_size
        )));
    }
    profile.check_columns(mapping.bits)?;
    let (w_rows, w_f) = qw.as_matrix()?;
    if w_rows != mapping.rows.len() || w_f != mapping.feature_size {
        return Err(Error::Shape(format!(
            "weight tensor {w_rows}x{w_f} does not match mapping {}x{}",
            mapping.rows.len(),
            mapping.feature_size
        )));
    }

    let columns: Vec<Vec<i64>> = (0..batch)
        .map(|c| (0..f).map(|i| qx.signed_code(i * batch + c)).collect())
        .collect();

    let per_row: Vec<(Vec<BigRational>, ConversionLog)> = mapping
        .rows
        .par_iter()
        .map(|vm| {
            let log = conversion_log(vm, profile)?;
            let outs = columns
                .iter()
                .map(|x| simulate_vector_signed(vm, x, profile).map(|(acc, _)| acc))
                .collect::<Result<Vec<_>>>()?;
            Ok((outs, log))
        })
        .collect::<Result<Vec<_>>>()?;

    let reference_exact = exact_reference(qw, qx)?;
    let mut outputs_exact = Vec::with_capacity(w_rows * batch);
    let mut conversion_logs = Vec::with_capacity(w_rows);
    for (outs, log) in per_row {
        outputs_exact.extend(outs);
        conversion_logs.push(log);
    }

    let outputs: Vec<f64> = outputs_exact
        .iter()
        .map(|v| v.to_f64().unwrap_or(f64::NAN))
        .collect();
    let scale = mapping.rows.first().map_or(1.0, |vm| vm.scale) * qx.scale();
    let dequantized: Vec<f64> = outputs.iter().map(|&v| v * scale).collect();

    let mut max_abs = BigRational::zero();
    let mut sq_sum = BigRational::zero();
    for (sim, &exact) in outputs_exact.iter().zip(&reference_exact) {
        let diff = (sim - ratio_int(i128::from(exact))).abs();
        if diff > max_abs {
            max_abs = diff.clone();
        }
        sq_sum += &diff * &diff;
    }
    let n = outputs_exact.len();
    let rmse = if n == 0 {
        0.0
    } else {
        (sq_sum / ratio_int(n as i128))
            .to_f64()
            .unwrap_or(f64::NAN)
            .sqrt()
    };

    Ok(SimResult {
        out_rows: w_rows,
        batch_cols: batch,
        outputs,
        outputs_exact,
        dequantized,
        reference_exact,
        max_abs_error: max_abs.to_f64().unwrap_or(f64::NAN),
        rmse,
        conversion_logs,
    })
}

/// Worst-case |simulated - exact| for a mapping under a profile, assuming no
/// clamping and no dropped columns: per section, each active lossy column
/// with `r >= 2` contributes `2^(b-1-j) * Δ_j / 2`; exact columns contribute
/// nothing.
pub fn resolution_error_bound(mapping: &VectorMapping, profile: &AdcProfile) -> Result<BigRational> {
    profile.check_columns(mapping.bits)?;
    let b = profile.columns();
    let mut bound = BigRational::zero();
    for section in &mapping.sections {
        for (j, &active) in section.active_mask.iter().enumerate() {
            let r = profile.resolutions()[j];
            if !active || r < 2 || profile.is_lossless(j) {
                continue;
            }
            let delta = BigRational::new(
                BigInt::from(profile.full_scale()),
                BigInt::from(levels(r)),
            );
            let significance = ratio_int(1i128 << (b - 1 - j));
            bound += significance * delta / ratio_int(2);
        }
    }
    Ok(bound)
}
