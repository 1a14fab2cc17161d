//! Standard normal distribution function, survival function and quantile.
//!
//! The distribution function is evaluated through the complementary error
//! function using W. J. Cody's rational Chebyshev approximations (CALERF),
//! whose relative error is below 1e-16 on the whole real line. The quantile
//! starts from Acklam's rational approximation (relative error ~1.2e-9) and
//! is polished with two Halley steps on the distribution function.

use crate::error::{domain, Result};
use crate::scalar::{lit, Real};

const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_6e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_5e3,
    1.857_777_061_846_031_5e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_1e1,
    2.440_246_379_344_441_7e2,
    1.282_616_526_077_372_3e3,
    2.844_236_833_439_170_6e3,
];
const ERF_C: [f64; 9] = [
    5.641_884_969_886_700_9e-1,
    8.883_149_794_388_375_9e0,
    6.611_919_063_714_163e1,
    2.986_351_381_974_001_3e2,
    8.819_522_212_417_690_9e2,
    1.712_047_612_634_070_6e3,
    2.051_078_377_826_071_5e3,
    1.230_339_354_797_997_3e3,
    2.153_115_354_744_038_5e-8,
];
const ERF_D: [f64; 8] = [
    1.574_492_611_070_983_5e1,
    1.176_939_508_913_125e2,
    5.371_811_018_620_098_6e2,
    1.621_389_574_566_690_2e3,
    3.290_799_235_733_459_6e3,
    4.362_619_090_143_247_2e3,
    3.439_367_674_143_721_6e3,
    1.230_339_354_803_749_4e3,
];
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_4e-1,
    3.603_448_999_498_044_4e-1,
    1.257_817_261_112_292_5e-1,
    1.608_378_514_874_227_7e-2,
    6.587_491_615_298_378e-4,
    1.631_538_713_730_209_8e-2,
];
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822_4e0,
    1.872_952_849_923_467_3e0,
    5.279_051_029_514_284_1e-1,
    6.051_834_131_244_131_9e-2,
    2.335_204_976_268_691_9e-3,
];

/// exp(-y^2) with the argument split so that the result keeps full relative
/// precision in the tail.
fn exp_neg_sq<T: Real>(y: T) -> T {
    let sixteen = lit::<T>(16.0);
    let head = (y * sixteen).trunc() / sixteen;
    let del = (y - head) * (y + head);
    (-head * head).exp() * (-del).exp()
}

/// Complementary error function for `x >= 0.46875`.
fn erfc_pos<T: Real>(y: T) -> T {
    if y <= lit(4.0) {
        let mut num = lit::<T>(ERF_C[8]) * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + lit(ERF_C[i])) * y;
            den = (den + lit(ERF_D[i])) * y;
        }
        let r = (num + lit(ERF_C[7])) / (den + lit(ERF_D[7]));
        r * exp_neg_sq(y)
    } else {
        if y >= lit(26.6) {
            return T::zero();
        }
        let ysq = (y * y).recip();
        let mut num = lit::<T>(ERF_P[5]) * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + lit(ERF_P[i])) * ysq;
            den = (den + lit(ERF_Q[i])) * ysq;
        }
        let r = ysq * (num + lit(ERF_P[4])) / (den + lit(ERF_Q[4]));
        let r = (T::FRAC_2_SQRT_PI() * lit(0.5) - r) / y;
        r * exp_neg_sq(y)
    }
}

/// erf(x) for |x| <= 0.46875.
fn erf_small<T: Real>(x: T) -> T {
    let ysq = x * x;
    let mut num = lit::<T>(ERF_A[4]) * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + lit(ERF_A[i])) * ysq;
        den = (den + lit(ERF_B[i])) * ysq;
    }
    x * (num + lit(ERF_A[3])) / (den + lit(ERF_B[3]))
}

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    if x.abs() <= lit(0.46875) {
        T::one() - erf_small(x)
    } else if x > T::zero() {
        erfc_pos(x)
    } else {
        lit::<T>(2.0) - erfc_pos(-x)
    }
}

/// Φ(x) without input checking; NaN propagates.
#[inline]
pub(crate) fn cdf<T: Real>(x: T) -> T {
    lit::<T>(0.5) * erfc(-x * T::FRAC_1_SQRT_2())
}

/// 1 − Φ(x), accurate in the upper tail.
#[inline]
pub(crate) fn sf<T: Real>(x: T) -> T {
    cdf(-x)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf<T: Real>(x: T) -> T {
    let inv_sqrt_2pi = T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI() * lit(0.5);
    inv_sqrt_2pi * (-(x * x) * lit(0.5)).exp()
}

/// Standard normal distribution function Φ(x).
pub fn std_normal_cdf<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return domain(format!("normal cdf needs a finite argument, got {x}"));
    }
    Ok(cdf(x))
}

/// Standard normal survival function 1 − Φ(x).
pub fn std_normal_sf<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return domain(format!("normal survival function needs a finite argument, got {x}"));
    }
    Ok(sf(x))
}

const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn horner<T: Real>(coeffs: &[f64], x: T) -> T {
    coeffs.iter().fold(T::zero(), |acc, &c| acc * x + lit(c))
}

/// Initial quantile guess for p <= 0.5.
fn acklam_lower<T: Real>(p: T) -> T {
    if p < lit(0.02425) {
        let q = (lit::<T>(-2.0) * p.ln()).sqrt();
        horner(&ACKLAM_C, q) / (horner(&ACKLAM_D, q) * q + T::one())
    } else {
        let q = p - lit(0.5);
        let r = q * q;
        horner(&ACKLAM_A, r) * q / (horner(&ACKLAM_B, r) * r + T::one())
    }
}

/// Φ⁻¹(p) for 0 < p <= 0.5; refinement runs on the lower tail where Φ is
/// relatively accurate.
fn quantile_lower<T: Real>(p: T) -> T {
    let mut x = acklam_lower(p);
    let sqrt_2pi = (lit::<T>(2.0) * T::PI()).sqrt();
    for _ in 0..2 {
        let e = cdf(x) - p;
        let u = e * sqrt_2pi * (x * x * lit(0.5)).exp();
        x = x - u / (T::one() + x * u * lit(0.5));
    }
    x
}

/// Φ⁻¹(p) without domain checking (0 < p < 1 assumed).
pub(crate) fn quantile<T: Real>(p: T) -> T {
    let half = lit::<T>(0.5);
    if p == half {
        T::zero()
    } else if p < half {
        quantile_lower(p)
    } else {
        -quantile_lower(T::one() - p)
    }
}

/// z_{1−q} = Φ⁻¹(1 − q), evaluated without forming 1 − q.
pub(crate) fn upper_quantile<T: Real>(q: T) -> T {
    -quantile(q)
}

/// Standard normal quantile Φ⁻¹(p) for p in (0, 1).
pub fn std_normal_quantile<T: Real>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return domain(format!("normal quantile needs p in (0, 1), got {p}"));
    }
    Ok(quantile(p))
}

/// Upper-tail quantile z_{1−q} = Φ⁻¹(1 − q) for q in (0, 1); exact for tiny q.
pub fn std_normal_upper_quantile<T: Real>(q: T) -> Result<T> {
    if !(q > T::zero() && q < T::one()) {
        return domain(format!("upper normal quantile needs q in (0, 1), got {q}"));
    }
    Ok(upper_quantile(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route to Φ: Maclaurin series of erf for moderate x and the
    /// Laplace continued fraction of erfc in the tail.
    fn phi_oracle(x: f64) -> f64 {
        let t = x / std::f64::consts::SQRT_2;
        if t.abs() < 3.0 {
            // erf(t) = 2/√π Σ (-1)^n t^(2n+1) / (n! (2n+1))
            let mut term = t;
            let mut sum = t;
            let mut n = 0.0;
            loop {
                n += 1.0;
                term *= -t * t / n;
                let add = term / (2.0 * n + 1.0);
                sum += add;
                if add.abs() < 1e-18 {
                    break;
                }
            }
            0.5 * (1.0 + 2.0 / std::f64::consts::PI.sqrt() * sum)
        } else {
            let y = t.abs();
            // erfc(y) = exp(-y²)/√π · 1/(y + 1/2/(y + 1/(y + 3/2/(y + ...))))
            let mut frac = y;
            for k in (1..200).rev() {
                frac = y + (k as f64 / 2.0) / frac;
            }
            let erfc = (-y * y).exp() / std::f64::consts::PI.sqrt() / frac;
            if t > 0.0 {
                1.0 - 0.5 * erfc
            } else {
                0.5 * erfc
            }
        }
    }

    // Frozen from a 40-digit mpmath evaluation of ncdf.
    const FROZEN: [(f64, f64); 9] = [
        (-8.0, 6.220_960_574_271_784e-16),
        (-5.5, 1.898_956_246_588_771_9e-8),
        (-3.0, 1.349_898_031_630_094_5e-3),
        (-1.5, 6.680_720_126_885_806e-2),
        (-0.3, 0.382_088_577_811_047_36),
        (0.7, 0.758_036_347_776_926_9),
        (2.2, 0.986_096_552_486_501_4),
        (4.5, 0.999_996_602_326_875_3),
        (7.9, 0.999_999_999_999_998_6),
    ];

    #[test]
    fn cdf_matches_high_precision_values() {
        for (x, want) in FROZEN {
            let got = std_normal_cdf(x).unwrap();
            assert!((got - want).abs() <= 1e-15, "x={x} got={got} want={want}");
            if want < 0.5 {
                assert!(((got - want) / want).abs() < 1e-13, "relative tail error at {x}");
            }
        }
    }

    #[test]
    fn cdf_matches_series_oracle_on_grid() {
        let mut x = -9.0;
        while x <= 9.0 {
            let got = cdf(x);
            let want = phi_oracle(x);
            assert!((got - want).abs() <= 1e-12, "x={x} got={got} oracle={want}");
            x += 0.037;
        }
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(cdf(0.0_f64), 0.5);
        assert!((cdf(1.959964_f64) - 0.975).abs() < 1e-9);
        assert!((phi_oracle(1.959964) - 0.975).abs() < 1e-9);
        for x in [0.1, 0.9, 1.7, 3.3, 6.2] {
            assert!((cdf(x) + cdf(-x) - 1.0_f64).abs() <= 1e-14);
        }
    }

    #[test]
    fn cdf_is_monotone() {
        let mut prev = 0.0;
        let mut x = -10.0;
        while x < 10.0 {
            let v = cdf(x);
            assert!(v >= prev, "non-monotone at {x}");
            prev = v;
            x += 0.001;
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
        assert!(std_normal_sf(f64::NEG_INFINITY).is_err());
    }

    /// Bisection on Φ as an independent inverse.
    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi_oracle(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_reference_points() {
        assert_eq!(std_normal_quantile(0.5_f64).unwrap(), 0.0);
        let q975 = bisect_quantile(0.975);
        let q90 = bisect_quantile(0.9);
        assert!((q975 - 1.959964).abs() < 1e-6);
        assert!((q90 - 1.281552).abs() < 1e-6);
        assert!((std_normal_quantile(0.975_f64).unwrap() - q975).abs() < 1e-10);
        assert!((std_normal_quantile(0.9_f64).unwrap() - q90).abs() < 1e-10);
        // mpmath: sqrt(2)·erfinv(2p − 1)
        assert!((quantile(1e-10_f64) + 6.361_340_902_404_056).abs() < 1e-12);
        assert!((upper_quantile(0.000625_f64) - 3.227_218_425_963_156_4).abs() < 1e-12);
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(std_normal_quantile(p).is_err());
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let mut p = 1e-6_f64;
        while p < 1.0 {
            let x = quantile(p);
            assert!((cdf(x) - p).abs() <= 1e-10 * p.max(1e-3), "p={p}");
            p += 0.000_731;
        }
        let mut x = -6.0_f64;
        while x <= 6.0 {
            assert!((quantile(cdf(x)) - x).abs() < 1e-8, "x={x}");
            x += 0.01;
        }
    }

    #[test]
    fn single_precision_instantiation() {
        assert!((cdf(1.959964_f32) - 0.975).abs() < 1e-6);
        assert!((quantile(0.975_f32) - 1.959964).abs() < 1e-4);
    }
}
