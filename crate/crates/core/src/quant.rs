//! Fixed-point quantization, bit-slicing, and magnitude pruning.
//!
//! Weights are stored sign/magnitude: a float tensor is scaled by a single
//! per-tensor `scale` so that the largest magnitude maps to the top code
//! `2^b - 1`, and each magnitude code is later sliced into `b` single-bit
//! crossbar columns (column `j` has significance `2^(b-1-j)`, MSB first).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum supported bit width for weights and activations.
pub const MAX_BITS: u8 = 16;

/// Dense float tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl FloatTensor {
    /// Builds a tensor, validating that the shape matches the value count and
    /// that every value is finite.
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::InvalidTensor(format!(
                "shape {:?} implies {} values, got {}",
                shape,
                expected,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidTensor(format!(
                "non-finite value {} at flat index {}",
                values[pos], pos
            )));
        }
        Ok(Self { shape, values })
    }

    /// 1-D tensor from a value list.
    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(vec![n], values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Bit widths for weight and activation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantConfig {
    /// Magnitude bits per weight (`b`); also the number of crossbar columns.
    pub weight_bits: u8,
    /// Magnitude bits per activation (`bx`).
    pub activation_bits: u8,
}

impl QuantConfig {
    pub fn new(weight_bits: u8, activation_bits: u8) -> Result<Self> {
        let cfg = Self {
            weight_bits,
            activation_bits,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_bits(self.weight_bits, "weight_bits")?;
        check_bits(self.activation_bits, "activation_bits")
    }
}

fn check_bits(bits: u8, what: &str) -> Result<()> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::InvalidConfig(format!(
            "{} must be in 1..={}, got {}",
            what, MAX_BITS, bits
        )));
    }
    Ok(())
}

/// Sign/magnitude fixed-point view of a float tensor.
///
/// Each element dequantizes to `sign * magnitude * scale`. Elements with
/// magnitude 0 always carry sign +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedTensor {
    shape: Vec<usize>,
    signs: Vec<i8>,
    magnitudes: Vec<u32>,
    scale: f64,
    bits: u8,
}

impl QuantizedTensor {
    /// Assembles a tensor from raw parts, validating all invariants.
    pub fn from_parts(
        shape: Vec<usize>,
        signs: Vec<i8>,
        magnitudes: Vec<u32>,
        scale: f64,
        bits: u8,
    ) -> Result<Self> {
        check_bits(bits, "bits")?;
        let expected: usize = shape.iter().product();
        if expected != magnitudes.len() || signs.len() != magnitudes.len() {
            return Err(Error::InvalidTensor(format!(
                "shape {:?} vs {} magnitudes / {} signs",
                shape,
                magnitudes.len(),
                signs.len()
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidTensor(format!("scale must be positive, got {scale}")));
        }
        let max_code = max_code(bits);
        for (i, (&m, &sg)) in magnitudes.iter().zip(&signs).enumerate() {
            if m > max_code {
                return Err(Error::InvalidCode(format!(
                    "magnitude {m} at index {i} exceeds {max_code} for {bits} bits"
                )));
            }
            if sg != 1 && sg != -1 {
                return Err(Error::InvalidTensor(format!("sign {sg} at index {i}")));
            }
            if m == 0 && sg != 1 {
                return Err(Error::InvalidTensor(format!(
                    "zero magnitude at index {i} must carry sign +1"
                )));
            }
        }
        Ok(Self {
            shape,
            signs,
            magnitudes,
            scale,
            bits,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn magnitudes(&self) -> &[u32] {
        &self.magnitudes
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Signed integer code of one element (`sign * magnitude`).
    pub fn signed_code(&self, i: usize) -> i64 {
        i64::from(self.signs[i]) * i64::from(self.magnitudes[i])
    }

    /// All signed codes in flat order.
    pub fn signed_codes(&self) -> Vec<i64> {
        (0..self.len()).map(|i| self.signed_code(i)).collect()
    }

    /// Count of nonzero magnitudes.
    pub fn nnz(&self) -> usize {
        self.magnitudes.iter().filter(|&&m| m != 0).count()
    }

    /// Interprets the tensor as a matrix: 1-D becomes a single row.
    pub fn as_matrix(&self) -> Result<(usize, usize)> {
        match self.shape.len() {
            1 => Ok((1, self.shape[0])),
            2 => Ok((self.shape[0], self.shape[1])),
            n => Err(Error::Shape(format!("expected 1-D or 2-D tensor, got {n}-D"))),
        }
    }

    /// Magnitude/sign slices for row `r` of a 2-D (or 1-D) tensor.
    pub fn row(&self, r: usize) -> Result<(&[u32], &[i8])> {
        let (rows, cols) = self.as_matrix()?;
        if r >= rows {
            return Err(Error::Shape(format!("row {r} out of {rows}")));
        }
        let range = r * cols..(r + 1) * cols;
        Ok((&self.magnitudes[range.clone()], &self.signs[range]))
    }
}

/// Largest magnitude code representable in `bits` bits.
pub fn max_code(bits: u8) -> u32 {
    (1u32 << bits) - 1
}

/// Quantizes a float tensor to `b`-bit sign/magnitude codes with a symmetric
/// per-tensor max-abs scale and round-half-away-from-zero.
///
/// An all-zero tensor gets `scale = 1` so the representation stays valid.
pub fn quantize(t: &FloatTensor, bits: u8) -> Result<QuantizedTensor> {
    check_bits(bits, "bits")?;
    let top = max_code(bits);
    let max_abs = t.values().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let scale = if max_abs == 0.0 {
        1.0
    } else {
        max_abs / f64::from(top)
    };
    let mut signs = Vec::with_capacity(t.len());
    let mut magnitudes = Vec::with_capacity(t.len());
    for &v in t.values() {
        // f64::round ties away from zero, which is the rounding rule here.
        let m = ((v.abs() / scale).round() as u32).min(top);
        signs.push(if m == 0 || v >= 0.0 { 1 } else { -1 });
        magnitudes.push(m);
    }
    QuantizedTensor::from_parts(t.shape().to_vec(), signs, magnitudes, scale, bits)
}

/// Reconstructs floats as `sign * magnitude * scale`.
pub fn dequantize(q: &QuantizedTensor) -> FloatTensor {
    let values = (0..q.len())
        .map(|i| f64::from(q.signs[i]) * f64::from(q.magnitudes[i]) * q.scale)
        .collect();
    FloatTensor {
        shape: q.shape.clone(),
        values,
    }
}

/// Expands a magnitude code into its `b` column bits, MSB first: bit `j`
/// carries significance `2^(b-1-j)`.
pub fn bit_slice(m: u32, bits: u8) -> Result<Vec<u8>> {
    check_bits(bits, "bits")?;
    if m > max_code(bits) {
        return Err(Error::InvalidCode(format!(
            "code {m} does not fit in {bits} bits"
        )));
    }
    Ok((0..bits).map(|j| ((m >> (bits - 1 - j)) & 1) as u8).collect())
}

/// Zeroes the `floor(sparsity * N)` smallest-magnitude elements (ties broken
/// by lower flat index first); surviving values are unchanged.
pub fn prune_magnitude(t: &FloatTensor, sparsity: f64) -> Result<FloatTensor> {
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::InvalidConfig(format!(
            "sparsity must be in [0, 1], got {sparsity}"
        )));
    }
    let n = t.len();
    let k = ((sparsity * n as f64).floor() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        t.values()[a]
            .abs()
            .partial_cmp(&t.values()[b].abs())
            .expect("finite values")
            .then(a.cmp(&b))
    });
    let mut values = t.values().to_vec();
    for &i in &order[..k] {
        values[i] = 0.0;
    }
    Ok(FloatTensor {
        shape: t.shape().to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(values: &[f64]) -> FloatTensor {
        FloatTensor::from_vec(values.to_vec()).unwrap()
    }

    #[test]
    fn quantize_hand_example() {
        let q = quantize(&t(&[0.5, -0.25, 0.125, 0.0]), 3).unwrap();
        assert_eq!(q.scale(), 0.5 / 7.0);
        // 0.25 / s = 3.5, which rounds away from zero to 4.
        assert_eq!(q.magnitudes(), &[7, 4, 2, 0]);
        assert_eq!(q.signs(), &[1, -1, 1, 1]);
    }

    #[test]
    fn quantize_all_zero_gets_unit_scale() {
        for b in [1, 8, 16] {
            let q = quantize(&t(&[0.0, 0.0, 0.0]), b).unwrap();
            assert_eq!(q.scale(), 1.0);
            assert!(q.magnitudes().iter().all(|&m| m == 0));
        }
    }

    #[test]
    fn quantize_single_bit_identity() {
        let q = quantize(&t(&[1.0]), 1).unwrap();
        assert_eq!(q.scale(), 1.0);
        assert_eq!(q.magnitudes(), &[1]);
    }

    #[test]
    fn quantize_rejects_bad_bits() {
        assert!(matches!(quantize(&t(&[1.0]), 0), Err(Error::InvalidConfig(_))));
        assert!(matches!(quantize(&t(&[1.0]), 17), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn tensor_rejects_non_finite() {
        assert!(matches!(
            FloatTensor::from_vec(vec![1.0, f64::NAN]),
            Err(Error::InvalidTensor(_))
        ));
        assert!(matches!(
            FloatTensor::from_vec(vec![f64::INFINITY]),
            Err(Error::InvalidTensor(_))
        ));
    }

    #[test]
    fn tiny_negative_rounding_to_zero_flips_sign_positive() {
        // -0.01 rounds to code 0, which must carry sign +1.
        let q = quantize(&t(&[1.0, -0.01]), 1).unwrap();
        assert_eq!(q.magnitudes(), &[1, 0]);
        assert_eq!(q.signs(), &[1, 1]);
    }

    #[test]
    fn dequantize_hand_example() {
        let q = QuantizedTensor::from_parts(
            vec![4],
            vec![1, -1, 1, 1],
            vec![7, 4, 2, 0],
            1.0 / 14.0,
            3,
        )
        .unwrap();
        let d = dequantize(&q);
        let expect = [0.5, -4.0 / 14.0, 2.0 / 14.0, 0.0];
        for (got, want) in d.values().iter().zip(expect) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn dequantize_quantize_fixed_point_on_grid() {
        let q = quantize(&t(&[0.5, -0.25, 0.125, 0.0]), 3).unwrap();
        let d1 = dequantize(&q);
        let q2 = quantize(&d1, 3).unwrap();
        assert_eq!(q.magnitudes(), q2.magnitudes());
        assert_eq!(q.signs(), q2.signs());
        assert_eq!(dequantize(&q2), d1);
    }

    #[test]
    fn bit_slice_examples() {
        assert_eq!(bit_slice(7, 3).unwrap(), vec![1, 1, 1]);
        assert_eq!(bit_slice(2, 3).unwrap(), vec![0, 1, 0]);
        assert_eq!(bit_slice(0, 3).unwrap(), vec![0, 0, 0]);
        assert!(matches!(bit_slice(8, 3), Err(Error::InvalidCode(_))));
    }

    #[test]
    fn prune_examples() {
        let p = prune_magnitude(&t(&[0.5, -0.25, 0.125, 0.0]), 0.5).unwrap();
        assert_eq!(p.values(), &[0.5, -0.25, 0.0, 0.0]);

        let orig = t(&[0.3, -0.1, 0.7]);
        assert_eq!(prune_magnitude(&orig, 0.0).unwrap(), orig);
        assert!(prune_magnitude(&orig, 1.0)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        assert!(matches!(
            prune_magnitude(&orig, 1.5),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn prune_tie_breaks_on_lower_index() {
        let p = prune_magnitude(&t(&[0.5, -0.5, 0.5, 0.5]), 0.5).unwrap();
        assert_eq!(p.values(), &[0.0, 0.0, 0.5, 0.5]);
    }

    proptest! {
        #[test]
        fn reconstruction_error_within_half_step(
            values in proptest::collection::vec(-100.0f64..100.0, 1..64),
            bits in 1u8..=16,
        ) {
            let t = FloatTensor::from_vec(values.clone()).unwrap();
            let q = quantize(&t, bits).unwrap();
            let d = dequantize(&q);
            let top = max_code(bits);
            let mut saw_top = false;
            for (i, (&orig, &rec)) in values.iter().zip(d.values()).enumerate() {
                prop_assert!(q.magnitudes()[i] <= top);
                saw_top |= q.magnitudes()[i] == top;
                prop_assert!(
                    (rec - orig).abs() <= q.scale() / 2.0 + 1e-12,
                    "element {i}: {rec} vs {orig} with scale {}",
                    q.scale()
                );
            }
            if values.iter().any(|&v| v != 0.0) {
                prop_assert!(saw_top, "max-abs element must reach the top code");
            }
        }

        #[test]
        fn bit_slice_round_trip(bits in 1u8..=16, seed in any::<u32>()) {
            let m = seed % (1u32 << bits);
            let slices = bit_slice(m, bits).unwrap();
            let rebuilt: u32 = slices
                .iter()
                .enumerate()
                .map(|(j, &bit)| u32::from(bit) << (bits as usize - 1 - j))
                .sum();
            prop_assert_eq!(rebuilt, m);
        }

        #[test]
        fn prune_counts_and_survivors(
            values in proptest::collection::vec(0.001f64..10.0, 1..64),
            sparsity in 0.0f64..=1.0,
        ) {
            // Strictly positive values: no pre-existing zeros.
            let t = FloatTensor::from_vec(values.clone()).unwrap();
            let p = prune_magnitude(&t, sparsity).unwrap();
            let n = values.len();
            let k = (sparsity * n as f64).floor() as usize;
            let nnz = p.values().iter().filter(|&&v| v != 0.0).count();
            prop_assert_eq!(nnz, n - k);
            for (&orig, &kept) in values.iter().zip(p.values()) {
                prop_assert!(kept == 0.0 || kept == orig);
            }
        }
    }
}
