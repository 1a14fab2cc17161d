//! Globally adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};
use crate::scalar::{lit, to_f64, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Integral estimate with its error estimate and the integrand evaluation count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T = f64> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Segment<T> {
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);
    let fc = f(mid);
    let mut k = fc * lit(WGK[7]);
    let mut g = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = half * lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        k = k + s * lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * lit(WG[j / 2]);
        }
    }
    Segment {
        a,
        b,
        value: k * half,
        error: ((k - g) * half).abs(),
    }
}

/// Integrates `f` over [a, b] to absolute tolerance `abs_tol`, bisecting the
/// segment with the largest error estimate until the total estimate meets the
/// tolerance or `max_segments` is reached.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, abs_tol: T, max_segments: usize) -> Result<Quadrature<T>> {
    if b < a {
        let q = integrate(f, b, a, abs_tol, max_segments)?;
        return Ok(Quadrature { value: -q.value, ..q });
    }
    integrate_with_breakpoints(f, &[a, b], abs_tol, max_segments)
}

/// As [`integrate`] over [points[0], points[last]], starting from the segments
/// between consecutive `points`. Breakpoints at jumps or kinks of `f` keep the
/// first pass from stepping over narrow features.
pub fn integrate_with_breakpoints<T: Real, F: Fn(T) -> T>(
    f: F,
    points: &[T],
    abs_tol: T,
    max_segments: usize,
) -> Result<Quadrature<T>> {
    if points.len() < 2 {
        return domain("integration needs at least two points");
    }
    if points.iter().any(|p| !p.is_finite()) {
        return domain(format!("integration limits must be finite, got {points:?}"));
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return domain("breakpoints must be nondecreasing");
    }
    if !(abs_tol > T::zero()) {
        return domain(format!("tolerance must be positive, got {abs_tol}"));
    }
    let (a, b) = (points[0], points[points.len() - 1]);
    let mut heap = BinaryHeap::new();
    let (mut value, mut error) = (T::zero(), T::zero());
    let mut evaluations = 0;
    for w in points.windows(2).filter(|w| w[1] > w[0]) {
        let seg = kronrod(&f, w[0], w[1]);
        value = value + seg.value;
        error = error + seg.error;
        evaluations += 15;
        heap.push(seg);
    }
    while error > abs_tol {
        if heap.len() >= max_segments.max(1) {
            return Err(Error::Numerical {
                message: format!("adaptive quadrature on [{a}, {b}] exhausted {max_segments} segments"),
                estimate: to_f64(value),
                error: to_f64(error),
                evaluations,
            });
        }
        let worst = heap.pop().expect("positive error implies a segment");
        let mid = (worst.a + worst.b) * lit(0.5);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Numerical {
                message: format!("adaptive quadrature cannot bisect [{}, {}] further", worst.a, worst.b),
                estimate: to_f64(value),
                error: to_f64(error),
                evaluations,
            });
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        evaluations += 30;
        value = value - worst.value + left.value + right.value;
        error = error - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap
        .iter()
        .fold((T::zero(), T::zero()), |(v, e), s| (v + s.value, e + s.error));
    Ok(Quadrature {
        value,
        error,
        evaluations,
    })
}
