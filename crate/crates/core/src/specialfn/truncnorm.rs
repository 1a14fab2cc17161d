use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::normal::{cdf, quantile, sf, std_normal_pdf};
use crate::error::{domain, Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// Normal distribution N(mean, sd²) conditioned on (lower, upper).
///
/// Either bound may be infinite. Construction fails when the interval is
/// empty or carries no numerically representable mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncNormParams<T = f64> {
    mean: T,
    sd: T,
    lower: T,
    upper: T,
}

impl<T: Real> TruncNormParams<T> {
    pub fn new(mean: T, sd: T, lower: T, upper: T) -> Result<Self> {
        if !mean.is_finite() || !(sd > T::zero()) || !sd.is_finite() {
            return domain(format!(
                "truncated normal needs finite mean and sd > 0, got mean={mean}, sd={sd}"
            ));
        }
        if lower.is_nan() || upper.is_nan() || !(lower < upper) {
            return domain(format!("truncated normal needs lower < upper, got [{lower}, {upper}]"));
        }
        let params = Self { mean, sd, lower, upper };
        if !(params.mass() > T::zero()) {
            return Err(Error::DegenerateTruncation {
                lower: to_f64(lower),
                upper: to_f64(upper),
            });
        }
        Ok(params)
    }

    /// Truncated to [lower, ∞).
    pub fn lower_truncated(mean: T, sd: T, lower: T) -> Result<Self> {
        Self::new(mean, sd, lower, T::infinity())
    }

    pub fn mean_param(&self) -> T {
        self.mean
    }

    pub fn sd(&self) -> T {
        self.sd
    }

    pub fn lower(&self) -> T {
        self.lower
    }

    pub fn upper(&self) -> T {
        self.upper
    }

    fn standardize(&self, x: T) -> T {
        (x - self.mean) / self.sd
    }

    /// Whether the interval sits in the upper half of the parent normal; if so
    /// probabilities are handled on the survival scale.
    fn upper_side(&self) -> bool {
        self.standardize(self.lower) > T::zero()
    }

    /// P(lower < X < upper) under the untruncated normal.
    pub fn mass(&self) -> T {
        self.parent_mass(self.lower, self.upper)
    }

    fn parent_mass(&self, lo: T, hi: T) -> T {
        let a = self.standardize(lo);
        let b = self.standardize(hi);
        if a > T::zero() {
            sf(a) - sf(b)
        } else {
            cdf(b) - cdf(a)
        }
    }

    /// Probability of (lo, hi) under the truncated law; arguments are clipped
    /// to the support.
    pub fn interval_prob(&self, lo: T, hi: T) -> T {
        let lo = lo.max(self.lower);
        let hi = hi.min(self.upper);
        if !(lo < hi) {
            return T::zero();
        }
        (self.parent_mass(lo, hi) / self.mass()).min(T::one())
    }

    pub fn cdf(&self, x: T) -> T {
        self.interval_prob(self.lower, x)
    }

    pub fn pdf(&self, x: T) -> T {
        if x < self.lower || x > self.upper {
            return T::zero();
        }
        std_normal_pdf(self.standardize(x)) / (self.sd * self.mass())
    }

    /// Analytic mean: mean + sd·(φ(a) − φ(b)) / (Φ(b) − Φ(a)).
    pub fn truncated_mean(&self) -> T {
        let a = self.standardize(self.lower);
        let b = self.standardize(self.upper);
        let pa = if a.is_finite() { std_normal_pdf(a) } else { T::zero() };
        let pb = if b.is_finite() { std_normal_pdf(b) } else { T::zero() };
        self.mean + self.sd * (pa - pb) / self.mass()
    }

    /// One draw by inversion of a single uniform.
    ///
    /// The uniform is mapped onto [Φ(a), Φ(b)] (or the mirrored survival
    /// interval when the support lies in the upper half, which keeps full
    /// precision near tail truncation points).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let a = self.standardize(self.lower);
        let b = self.standardize(self.upper);
        loop {
            let u: f64 = rng.sample(Open01);
            let u = lit::<T>(u);
            let z = if self.upper_side() {
                let (hi, lo) = (sf(a), sf(b));
                -quantile(lo + u * (hi - lo))
            } else {
                let (lo, hi) = (cdf(a), cdf(b));
                quantile(lo + u * (hi - lo))
            };
            let x = self.mean + self.sd * z;
            // Rounding can land exactly on a bound; such draws are redrawn.
            if x > self.lower && x < self.upper {
                return x;
            }
        }
    }
}

/// Draws one value from `params`.
pub fn truncnorm_sample<T: Real, R: Rng + ?Sized>(params: &TruncNormParams<T>, rng: &mut R) -> T {
    params.sample(rng)
}
