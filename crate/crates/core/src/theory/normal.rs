//! Error function and standard normal CDF.
//!
//! `erf` uses its Taylor series for |x| <= 2 (alternating series, terms
//! generated by recurrence, truncated below 1e-17 relative) and the
//! continued fraction for `erfc` elsewhere, evaluated with the modified
//! Lentz algorithm. Both routes are exact expansions, not fitted
//! polynomials; the only error sources are truncation and f64 rounding.
//!
//! Stated bound: absolute error <= 1e-13 for `erf`, `erfc` (down to its
//! underflow near x = 27), and `std_normal_cdf`. The unit tests pin values
//! computed with 30-digit arithmetic at 1e-14.

const SQRT_PI: f64 = 1.772_453_850_905_516;
const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Taylor series for erf on |x| <= 2.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x; // x^(2k+1) / k!
    let mut sum = x;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= -x2 / f64::from(k);
        let contrib = term / f64::from(2 * k + 1);
        sum += contrib;
        if contrib.abs() < sum.abs() * 1e-17 + 1e-300 {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// Continued fraction for erfc on x > 2 (A&S 7.1.14), via modified Lentz.
fn erfc_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..=200 {
        let a = f64::from(n) / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x * x).exp() / SQRT_PI / f
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() <= 2.0 {
        erf_series(x)
    } else if x > 0.0 {
        1.0 - erfc_cf(x)
    } else {
        erfc_cf(-x) - 1.0
    }
}

pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 2.0 {
        erfc_cf(x)
    } else if x >= -2.0 {
        1.0 - erf_series(x)
    } else {
        2.0 - erfc_cf(-x)
    }
}

/// Standard normal CDF `Φ(x)`, computed as `erfc(-x/√2)/2` so the lower tail
/// keeps full precision.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Probability that |N(0, sigma)| lands in `[lo, hi]`, halved (the factor 2
/// cancels in every ratio this crate takes). Computed from `erfc` of
/// nonnegative arguments so deep-tail intervals keep relative precision.
pub fn half_normal_mass(lo: f64, hi: f64, sigma: f64) -> f64 {
    debug_assert!(lo >= 0.0 && hi >= lo && sigma > 0.0);
    let scale = sigma * SQRT_2;
    0.5 * (erfc(lo / scale) - erfc(hi / scale))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // reference constants keep their full digits
mod tests {
    use super::*;

    // Reference values computed with 30-digit arithmetic.
    const ERF_POINTS: &[(f64, f64)] = &[
        (0.1, 0.112_462_916_018_284_89),
        (0.5, 0.520_499_877_813_046_54),
        (1.0, 0.842_700_792_949_714_87),
        (1.5, 0.966_105_146_475_310_73),
        (2.0, 0.995_322_265_018_952_73),
        (3.0, 0.999_977_909_503_001_41),
        (4.0, 0.999_999_984_582_742_1),
        (6.0, 0.999_999_999_999_999_98),
    ];

    const ERFC_POINTS: &[(f64, f64)] = &[
        (0.5, 0.479_500_122_186_953_46),
        (1.0, 0.157_299_207_050_285_13),
        (2.0, 4.677_734_981_047_265_8e-3),
        (4.0, 1.541_725_790_028_001_9e-8),
        (6.0, 2.151_973_671_249_891_3e-17),
        (8.0, 1.122_429_717_298_292_7e-29),
        (10.0, 2.088_487_583_762_544_8e-45),
        (20.0, 5.395_865_611_607_900_9e-176),
    ];

    const PHI_POINTS: &[(f64, f64)] = &[
        (-5.0, 2.866_515_718_791_939_1e-7),
        (-3.0, 1.349_898_031_630_094_5e-3),
        (-1.96, 0.024_997_895_148_220_434),
        (-1.0, 0.158_655_253_931_457_05),
        (0.0, 0.5),
        (0.25, 0.598_706_325_682_923_72),
        (0.5, 0.691_462_461_274_013_1),
        (0.75, 0.773_372_647_623_131_8),
        (1.0, 0.841_344_746_068_542_95),
        (1.96, 0.975_002_104_851_779_57),
        (3.0, 0.998_650_101_968_369_91),
        (5.0, 0.999_999_713_348_428_12),
    ];

    #[test]
    fn erf_reference_points() {
        for &(x, want) in ERF_POINTS {
            assert!((erf(x) - want).abs() < 1e-14, "erf({x})");
            assert!((erf(-x) + want).abs() < 1e-14, "erf(-{x})");
        }
        assert_eq!(erf(0.0), 0.0);
    }

    #[test]
    fn erfc_reference_points() {
        for &(x, want) in ERFC_POINTS {
            let got = erfc(x);
            assert!(
                (got - want).abs() <= 1e-14 + want.abs() * 1e-12,
                "erfc({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn phi_reference_points() {
        for &(x, want) in PHI_POINTS {
            assert!((std_normal_cdf(x) - want).abs() < 1e-14, "phi({x})");
        }
    }

    #[test]
    fn erfc_symmetry_identity() {
        for x in [-6.0, -3.0, -1.0, -0.1, 0.0, 0.1, 1.0, 3.0, 6.0] {
            assert!((erfc(x) + erfc(-x) - 2.0).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn cdf_reflection_identity() {
        for x in [0.1, 0.5, 1.0, 2.0, 3.5, 7.0] {
            let s = std_normal_cdf(x) + std_normal_cdf(-x);
            assert!((s - 1.0).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn half_mass_matches_cdf_difference_in_bulk() {
        for (lo, hi, sigma) in [(0.0, 0.5, 1.0), (0.25, 1.0, 0.5), (1.0, 2.0, 2.0)] {
            let direct = std_normal_cdf(hi / sigma) - std_normal_cdf(lo / sigma);
            let via_erfc = half_normal_mass(lo, hi, sigma);
            assert!((direct - via_erfc).abs() < 1e-14);
        }
    }

    #[test]
    fn half_mass_keeps_tail_precision() {
        // Phi differences cancel at lo = 10 sigma; the erfc route does not.
        let m = half_normal_mass(10.0, 10.5, 1.0);
        assert!(m > 0.0 && m < 1e-22);
    }
}
