//! Section layouts for weight vectors on bit-sliced crossbars.
//!
//! A weight vector of feature size `f` is split into sections of `R` rows.
//! Three orders are supported:
//!
//! - `Sorted`: nonzero rows sorted ascending by magnitude, zero rows elided
//!   entirely; `ceil(nnz / R)` sections. This is the sorted-weight-sectioning
//!   layout; it needs the activation permutation recorded in the mapping.
//! - `UnsortedIdentity`: rows in original order, zeros retained;
//!   `ceil(f / R)` sections. Deterministic baseline.
//! - `UnsortedShuffled`: seeded uniform shuffle of all rows, zeros retained.
//!   Randomized baseline, reproducible per seed.
//!
//! The last section of a mapping is padded with explicit all-zero rows up to
//! `R`; pad rows carry no source index and can never activate a column.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quant::{bit_slice, QuantizedTensor};

/// Row placement policy for sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionOrder {
    Sorted,
    UnsortedIdentity,
    UnsortedShuffled { seed: u64 },
}

impl fmt::Display for SectionOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectionOrder::Sorted => write!(f, "sorted"),
            SectionOrder::UnsortedIdentity => write!(f, "unsorted-identity"),
            SectionOrder::UnsortedShuffled { seed } => write!(f, "unsorted-shuffled(seed={seed})"),
        }
    }
}

/// Section geometry and ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionConfig {
    pub rows_per_section: usize,
    pub order: SectionOrder,
}

impl SectionConfig {
    pub fn new(rows_per_section: usize, order: SectionOrder) -> Result<Self> {
        if rows_per_section == 0 {
            return Err(Error::InvalidConfig(
                "rows_per_section must be at least 1".into(),
            ));
        }
        Ok(Self {
            rows_per_section,
            order,
        })
    }
}

/// One crossbar section: up to `R` bit-sliced weight rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSlicedSection {
    /// Original feature index of each real (non-pad) row.
    pub row_source_indices: Vec<usize>,
    /// Sign of each real row.
    pub row_signs: Vec<i8>,
    /// Real rows x `b` bits, MSB column first.
    pub bit_matrix: Vec<Vec<u8>>,
    /// Column j holds at least one set bit.
    pub active_mask: Vec<bool>,
    /// All-zero rows appended to reach `R`.
    pub pad_rows: usize,
}

impl BitSlicedSection {
    /// Real (non-pad) row count.
    pub fn rows(&self) -> usize {
        self.row_source_indices.len()
    }

    /// Real plus pad rows; equals `R` for mappings built here.
    pub fn total_rows(&self) -> usize {
        self.rows() + self.pad_rows
    }

    pub fn active_columns(&self) -> usize {
        self.active_mask.iter().filter(|&&a| a).count()
    }

    /// Index of the most significant active column (smaller = more
    /// significant); `None` when the section holds no set bit.
    pub fn highest_active_column(&self) -> Option<usize> {
        self.active_mask.iter().position(|&a| a)
    }

    /// Largest row magnitude, reassembled from the bit matrix.
    pub fn max_magnitude(&self) -> u32 {
        let b = self.active_mask.len();
        self.bit_matrix
            .iter()
            .map(|bits| {
                bits.iter()
                    .enumerate()
                    .map(|(j, &bit)| u32::from(bit) << (b - 1 - j))
                    .sum()
            })
            .max()
            .unwrap_or(0)
    }
}

/// One weight vector's section layout plus the activation permutation that
/// restores dot-product correctness.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorMapping {
    pub feature_size: usize,
    pub sections: Vec<BitSlicedSection>,
    /// Section-major original indices of all real rows.
    pub permutation: Vec<usize>,
    pub scale: f64,
    pub bits: u8,
    pub order: SectionOrder,
}

impl VectorMapping {
    pub fn section_count(&self) -> usize {
        self.sections.len()
    }

    /// Rows per section, including pads (0 for an empty mapping).
    pub fn rows_per_section(&self) -> usize {
        self.sections.first().map_or(0, BitSlicedSection::total_rows)
    }

    /// Active-column conversions needed for one inference pass.
    pub fn total_active_columns(&self) -> usize {
        self.sections.iter().map(BitSlicedSection::active_columns).sum()
    }
}

/// Mapping for a whole weight matrix: one [`VectorMapping`] per output row.
#[derive(Debug, Clone)]
pub struct MatrixMapping {
    pub rows: Vec<VectorMapping>,
    pub feature_size: usize,
    pub bits: u8,
    pub config: SectionConfig,
}

/// Stable ascending order of the nonzero codes: indices sorted by
/// `(magnitude, original index)`; zero codes are excluded.
pub fn sort_by_magnitude(magnitudes: &[u32]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..magnitudes.len())
        .filter(|&i| magnitudes[i] != 0)
        .collect();
    idx.sort_by_key(|&i| (magnitudes[i], i));
    idx
}

/// Builds the section layout for a 1-D quantized weight vector.
pub fn build_vector_mapping(q: &QuantizedTensor, cfg: &SectionConfig) -> Result<VectorMapping> {
    if q.shape().len() > 1 {
        return Err(Error::Shape(format!(
            "expected a 1-D weight vector, got shape {:?}",
            q.shape()
        )));
    }
    build_mapping_from_parts(
        q.magnitudes(),
        q.signs(),
        q.scale(),
        q.bits(),
        q.len(),
        cfg,
    )
}

pub(crate) fn build_mapping_from_parts(
    magnitudes: &[u32],
    signs: &[i8],
    scale: f64,
    bits: u8,
    feature_size: usize,
    cfg: &SectionConfig,
) -> Result<VectorMapping> {
    let permutation = match cfg.order {
        SectionOrder::Sorted => sort_by_magnitude(magnitudes),
        SectionOrder::UnsortedIdentity => (0..feature_size).collect(),
        SectionOrder::UnsortedShuffled { seed } => {
            let mut idx: Vec<usize> = (0..feature_size).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            idx
        }
    };

    let r = cfg.rows_per_section;
    let mut sections = Vec::with_capacity(permutation.len().div_ceil(r));
    for chunk in permutation.chunks(r) {
        let mut bit_matrix = Vec::with_capacity(chunk.len());
        let mut row_signs = Vec::with_capacity(chunk.len());
        for &src in chunk {
            bit_matrix.push(bit_slice(magnitudes[src], bits)?);
            row_signs.push(signs[src]);
        }
        let active_mask = (0..bits as usize)
            .map(|j| bit_matrix.iter().any(|row| row[j] == 1))
            .collect();
        sections.push(BitSlicedSection {
            row_source_indices: chunk.to_vec(),
            row_signs,
            bit_matrix,
            active_mask,
            pad_rows: r - chunk.len(),
        });
    }

    Ok(VectorMapping {
        feature_size,
        sections,
        permutation,
        scale,
        bits,
        order: cfg.order,
    })
}

/// Builds one [`VectorMapping`] per output row of a weight matrix.
pub fn build_matrix_mapping(q: &QuantizedTensor, cfg: &SectionConfig) -> Result<MatrixMapping> {
    let (out_rows, f) = q.as_matrix()?;
    let rows = (0..out_rows)
        .into_par_iter()
        .map(|r| {
            let (mags, signs) = q.row(r)?;
            build_mapping_from_parts(mags, signs, q.scale(), q.bits(), f, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixMapping {
        rows,
        feature_size: f,
        bits: q.bits(),
        config: *cfg,
    })
}

/// Gathers activation codes into section-major order: real rows take
/// `x[P[k]]`, pad rows take 0. Output length is `sections * R`.
pub fn permute_activations(x: &[i64], mapping: &VectorMapping) -> Result<Vec<i64>> {
    if x.len() != mapping.feature_size {
        return Err(Error::Shape(format!(
            "activation length {} != feature size {}",
            x.len(),
            mapping.feature_size
        )));
    }
    let mut out = Vec::with_capacity(
        mapping.section_count() * mapping.rows_per_section(),
    );
    let mut offset = 0;
    for section in &mapping.sections {
        for k in 0..section.rows() {
            out.push(x[mapping.permutation[offset + k]]);
        }
        out.extend(std::iter::repeat_n(0, section.pad_rows));
        offset += section.rows();
    }
    Ok(out)
}

/// Cost constants for the permutation network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadConstants {
    /// Memory cells per feature (`c_s`).
    pub memory_per_feature: f64,
    /// Time units per `f * L * ceil(log2 f)` step (`c_t`).
    pub time_per_step: f64,
}

impl Default for OverheadConstants {
    fn default() -> Self {
        Self {
            memory_per_feature: 1.0,
            time_per_step: 1.0,
        }
    }
}

/// Estimated cost of the activation permutation network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationOverhead {
    /// One mux per input feature; full permutation in one cycle.
    pub mux_count: u64,
    /// O(f) buffer for the fetched data.
    pub memory_cells: f64,
    /// O(f * L * log f) precompute across `L` crossbars.
    pub time_units: f64,
}

/// Permutation network cost for feature size `f` across `crossbar_count`
/// crossbars: `f` muxes, `c_s * f` memory, `c_t * f * L * ceil(log2 max(f, 2))`
/// time.
pub fn permutation_overhead(
    feature_size: usize,
    crossbar_count: usize,
    constants: &OverheadConstants,
) -> PermutationOverhead {
    let f = feature_size as u64;
    let l = crossbar_count as u64;
    let log_f = u64::from(ceil_log2(feature_size.max(2)));
    PermutationOverhead {
        mux_count: f,
        memory_cells: constants.memory_per_feature * f as f64,
        time_units: constants.time_per_step * (f * l * log_f) as f64,
    }
}

fn ceil_log2(n: usize) -> u32 {
    debug_assert!(n >= 1);
    usize::BITS - (n - 1).leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::quantize;
    use crate::quant::FloatTensor;
    use proptest::prelude::*;

    fn qvec(magnitudes: &[u32], bits: u8) -> QuantizedTensor {
        let signs = magnitudes.iter().map(|_| 1i8).collect();
        QuantizedTensor::from_parts(
            vec![magnitudes.len()],
            signs,
            magnitudes.to_vec(),
            1.0,
            bits,
        )
        .unwrap()
    }

    fn cfg(r: usize, order: SectionOrder) -> SectionConfig {
        SectionConfig::new(r, order).unwrap()
    }

    const EXAMPLE_B: [u32; 8] = [7, 0, 1, 0, 2, 0, 1, 0];

    #[test]
    fn sort_ascending_nonzero_only() {
        assert_eq!(sort_by_magnitude(&EXAMPLE_B), vec![2, 6, 4, 0]);
        assert_eq!(sort_by_magnitude(&[0, 0, 0]), Vec::<usize>::new());
        assert_eq!(sort_by_magnitude(&[3, 3]), vec![0, 1]);
    }

    #[test]
    fn sorted_mapping_example_b() {
        let m = build_vector_mapping(&qvec(&EXAMPLE_B, 3), &cfg(2, SectionOrder::Sorted)).unwrap();
        assert_eq!(m.section_count(), 2);
        assert_eq!(m.sections[0].row_source_indices, vec![2, 6]);
        assert_eq!(m.sections[0].active_mask, vec![false, false, true]);
        assert_eq!(m.sections[1].row_source_indices, vec![4, 0]);
        assert_eq!(m.sections[1].active_mask, vec![true, true, true]);
        assert_eq!(m.permutation, vec![2, 6, 4, 0]);
        assert_eq!(m.sections[1].pad_rows, 0);
    }

    #[test]
    fn unsorted_identity_mapping_example_b() {
        let m = build_vector_mapping(
            &qvec(&EXAMPLE_B, 3),
            &cfg(2, SectionOrder::UnsortedIdentity),
        )
        .unwrap();
        assert_eq!(m.section_count(), 4);
        let masks: Vec<Vec<bool>> = m.sections.iter().map(|s| s.active_mask.clone()).collect();
        assert_eq!(
            masks,
            vec![
                vec![true, true, true],
                vec![false, false, true],
                vec![false, true, false],
                vec![false, false, true],
            ]
        );
        assert_eq!(m.permutation, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn all_zero_vector_elides_every_section() {
        let m = build_vector_mapping(&qvec(&[0, 0, 0], 3), &cfg(4, SectionOrder::Sorted)).unwrap();
        assert_eq!(m.section_count(), 0);
        assert!(m.permutation.is_empty());
    }

    #[test]
    fn last_section_is_padded() {
        let m = build_vector_mapping(&qvec(&[1, 2, 3], 4), &cfg(2, SectionOrder::Sorted)).unwrap();
        assert_eq!(m.section_count(), 2);
        assert_eq!(m.sections[1].rows(), 1);
        assert_eq!(m.sections[1].pad_rows, 1);
        assert_eq!(m.sections[1].total_rows(), 2);
    }

    #[test]
    fn shuffled_is_reproducible_per_seed() {
        let q = qvec(&EXAMPLE_B, 3);
        let a = build_vector_mapping(&q, &cfg(2, SectionOrder::UnsortedShuffled { seed: 9 })).unwrap();
        let b = build_vector_mapping(&q, &cfg(2, SectionOrder::UnsortedShuffled { seed: 9 })).unwrap();
        let c = build_vector_mapping(&q, &cfg(2, SectionOrder::UnsortedShuffled { seed: 10 })).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.permutation, c.permutation);
        assert_eq!(a.section_count(), 4);
    }

    #[test]
    fn permute_example() {
        let m = build_vector_mapping(&qvec(&EXAMPLE_B, 3), &cfg(2, SectionOrder::Sorted)).unwrap();
        let gathered = permute_activations(&[1, 0, 3, 0, 2, 0, 1, 0], &m).unwrap();
        assert_eq!(gathered, vec![3, 1, 2, 1]);
    }

    #[test]
    fn permute_identity_is_identity() {
        let q = qvec(&EXAMPLE_B, 3);
        let m = build_vector_mapping(&q, &cfg(2, SectionOrder::UnsortedIdentity)).unwrap();
        let x: Vec<i64> = (10..18).collect();
        assert_eq!(permute_activations(&x, &m).unwrap(), x);
    }

    #[test]
    fn permute_rejects_length_mismatch() {
        let m = build_vector_mapping(&qvec(&EXAMPLE_B, 3), &cfg(2, SectionOrder::Sorted)).unwrap();
        assert!(matches!(
            permute_activations(&[1, 2, 3], &m),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn permute_scatter_round_trip() {
        let q = qvec(&EXAMPLE_B, 3);
        let m = build_vector_mapping(&q, &cfg(2, SectionOrder::Sorted)).unwrap();
        let x: Vec<i64> = vec![5, 6, 7, 8, 9, 10, 11, 12];
        let gathered = permute_activations(&x, &m).unwrap();
        let mut scattered = vec![0i64; x.len()];
        for (k, &src) in m.permutation.iter().enumerate() {
            scattered[src] = gathered[k];
        }
        for (i, &mag) in EXAMPLE_B.iter().enumerate() {
            if mag != 0 {
                assert_eq!(scattered[i], x[i]);
            }
        }
    }

    #[test]
    fn overhead_formula() {
        let d = OverheadConstants::default();
        let o = permutation_overhead(8, 2, &d);
        assert_eq!(o.mux_count, 8);
        assert_eq!(o.memory_cells, 8.0);
        assert_eq!(o.time_units, 48.0);

        let o1 = permutation_overhead(1, 1, &d);
        assert_eq!(o1.mux_count, 1);
        assert_eq!(o1.memory_cells, 1.0);
        assert_eq!(o1.time_units, 1.0);

        let doubled = OverheadConstants {
            memory_per_feature: 2.0,
            time_per_step: 2.0,
        };
        let o2 = permutation_overhead(8, 2, &doubled);
        assert_eq!(o2.time_units, 2.0 * o.time_units);
        assert_eq!(o2.memory_cells, 2.0 * o.memory_cells);
    }

    #[test]
    fn matrix_mapping_shares_config() {
        let t = FloatTensor::new(vec![2, 4], vec![0.5, -0.25, 0.125, 0.0, 0.1, 0.9, 0.0, -0.7])
            .unwrap();
        let q = quantize(&t, 4).unwrap();
        let mm = build_matrix_mapping(&q, &cfg(2, SectionOrder::Sorted)).unwrap();
        assert_eq!(mm.rows.len(), 2);
        assert_eq!(mm.feature_size, 4);
        assert!(mm.rows.iter().all(|vm| vm.bits == 4 && vm.order == SectionOrder::Sorted));
    }

    proptest! {
        #[test]
        fn section_counts_match_formulas(
            mags in proptest::collection::vec(0u32..16, 0..80),
            r in 1usize..9,
        ) {
            let q = qvec(&mags, 4);
            let nnz = mags.iter().filter(|&&m| m != 0).count();
            let f = mags.len();

            let sorted = build_vector_mapping(&q, &cfg(r, SectionOrder::Sorted)).unwrap();
            prop_assert_eq!(sorted.section_count(), nnz.div_ceil(r));

            let ident = build_vector_mapping(&q, &cfg(r, SectionOrder::UnsortedIdentity)).unwrap();
            prop_assert_eq!(ident.section_count(), f.div_ceil(r));

            let shuf = build_vector_mapping(
                &q,
                &cfg(r, SectionOrder::UnsortedShuffled { seed: 1 }),
            ).unwrap();
            prop_assert_eq!(shuf.section_count(), f.div_ceil(r));
        }

        #[test]
        fn sorted_permutation_is_partial_permutation(
            mags in proptest::collection::vec(0u32..256, 0..80),
            r in 1usize..9,
        ) {
            let q = qvec(&mags, 8);
            let m = build_vector_mapping(&q, &cfg(r, SectionOrder::Sorted)).unwrap();
            let mut seen = std::collections::HashSet::new();
            for &i in &m.permutation {
                prop_assert!(i < mags.len());
                prop_assert!(mags[i] != 0);
                prop_assert!(seen.insert(i), "duplicate index {}", i);
            }
            prop_assert_eq!(seen.len(), mags.iter().filter(|&&v| v != 0).count());
        }

        #[test]
        fn sorted_sections_monotone_and_high_order_inactive(
            mags in proptest::collection::vec(0u32..256, 1..80),
            r in 1usize..9,
        ) {
            let q = qvec(&mags, 8);
            let m = build_vector_mapping(&q, &cfg(r, SectionOrder::Sorted)).unwrap();

            // Ascending magnitude across the section-major row sequence.
            let mut prev = 0u32;
            for &i in &m.permutation {
                prop_assert!(mags[i] >= prev);
                prev = mags[i];
            }

            // Most significant active column moves toward the MSB (or stays)
            // as sections grow in magnitude.
            let tops: Vec<usize> = m
                .sections
                .iter()
                .map(|s| s.highest_active_column().expect("no all-zero sorted section"))
                .collect();
            for w in tops.windows(2) {
                prop_assert!(w[0] >= w[1], "column order {:?}", tops);
            }

            // Columns above each section's max magnitude stay inactive.
            for s in &m.sections {
                let max_m = s.max_magnitude();
                for (j, &active) in s.active_mask.iter().enumerate() {
                    let significance = 1u32 << (8 - 1 - j);
                    if significance > max_m {
                        prop_assert!(!active);
                    }
                }
            }
        }
    }
}
