//! Harmonic mean test versus the two-trials rule over the distribution of the
//! pre-market result.
//!
//! With θ1 = θ2, σ1 = σ2 and no shrinkage, a post-market trial sized for
//! conditional power against target t has true power
//! 1 − Φ(t·(1 − μ/z1) − μ·z_{1−β}/z1), where μ = θ√n1/(√2σ). The harmonic
//! target z̄2 falls below z_{1−α} exactly when z1 > b, which gives four regions
//! in z1:
//!
//! | region                     | harmonic n2 | harmonic power |
//! |----------------------------|-------------|----------------|
//! | z1 > max(μ, b)             | smaller     | larger         |
//! | b < z1 < μ                 | smaller     | smaller        |
//! | μ < z1 < b                 | larger      | smaller        |
//! | z1 < min(μ, b)             | larger      | larger         |
//!
//! Masses are taken under z1 ~ TN(μ, 1, z_{1−α}, ∞).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::variance_ratio;
use crate::error::{domain, Result};
use crate::evidence::{harmonic_critical_value, harmonic_post_bound, WeightPair};
use crate::quadrature::integrate_with_breakpoints;
use crate::scalar::{lit, Real};
use crate::specialfn::normal::{cdf, quantile, sf, upper_quantile};
use crate::specialfn::TruncNormParams;

const QUAD_TOL: f64 = 1e-9;
const QUAD_SEGMENTS: usize = 20_000;
/// Width of the integrated window above its left end; the rest is added in closed form.
const QUAD_SPAN: f64 = 10.0;

/// Outcome of one harmonic-vs-two-trials comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Superior,
    Inferior,
    InconclusiveSmallerN,
    InconclusiveLargerPower,
}

/// Post-market sizes (before rounding) and true powers under both rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerComparison<T = f64> {
    pub n_harmonic: T,
    pub n_two_trials: T,
    pub power_harmonic: T,
    pub power_two_trials: T,
}

impl<T: Real> PowerComparison<T> {
    pub fn region(&self) -> Region {
        match (
            self.n_harmonic < self.n_two_trials,
            self.power_harmonic > self.power_two_trials,
        ) {
            (true, true) => Region::Superior,
            (true, false) => Region::InconclusiveSmallerN,
            (false, false) => Region::Inferior,
            (false, true) => Region::InconclusiveLargerPower,
        }
    }
}

/// Region masses for one pre-market power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRegions<T = f64> {
    pub power_pre: T,
    /// Mean of the pre-market z-value, z_{1−α} + Φ⁻¹(power_pre).
    pub mu: T,
    /// Pre-market z-value at which both rules need the same n2.
    pub b: T,
    pub p_superior: T,
    pub p_inferior: T,
    pub p_inconclusive_smaller_n: T,
    pub p_inconclusive_larger_power: T,
    /// Largest absolute gap between the closed-form masses and the quadrature
    /// of pointwise comparisons.
    pub quadrature_discrepancy: T,
}

impl<T: Real> ComparisonRegions<T> {
    pub fn p_inconclusive(&self) -> T {
        self.p_inconclusive_smaller_n + self.p_inconclusive_larger_power
    }
}

/// Crossover b = √w1 / √(w²/c_H − w2/z²_{1−α}); unweighted b = 1/√(4/c_H − 1/z²_{1−α}).
pub fn crossover_b_weighted<T: Real>(weights: &WeightPair<T>, alpha: T, gamma: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < lit(0.5)) {
        return domain(format!("α must lie in (0, 0.5), got {alpha}"));
    }
    let c_h = harmonic_critical_value(gamma)?;
    let za = upper_quantile(alpha);
    let den = weights.w() * weights.w() / c_h - weights.w2() / (za * za);
    if !(den > T::zero()) {
        return domain(format!(
            "no crossover: the harmonic target never reaches z_(1-α) for α = {alpha}, γ = {gamma}"
        ));
    }
    Ok(weights.w1().sqrt() / den.sqrt())
}

pub fn crossover_b<T: Real>(alpha: T, gamma: T) -> Result<T> {
    crossover_b_weighted(&WeightPair::unweighted(), alpha, gamma)
}

/// Pre-market p-value below which the harmonic rule needs the smaller trial.
pub fn p1_crossover<T: Real>(alpha: T, gamma: T) -> Result<T> {
    Ok(sf(crossover_b(alpha, gamma)?))
}

/// Sizes both post-market trials for `sizing_power` against the pre-market
/// estimate and evaluates their power at the true effect `theta_over_sigma`.
pub fn compare_powers<T: Real>(
    z1: T,
    theta_over_sigma: T,
    n1: u64,
    weights: &WeightPair<T>,
    alpha: T,
    gamma: T,
    sizing_power: T,
) -> Result<PowerComparison<T>> {
    let za = upper_quantile(alpha);
    if !(z1 > za) {
        return domain(format!(
            "comparison needs a significant pre-market result, z1 = {z1} ≤ {za}"
        ));
    }
    if n1 == 0 {
        return domain("pre-market sample size must be at least 1");
    }
    let (z_bar, _) = harmonic_post_bound(z1, weights, gamma)?;
    let n1r = lit::<T>(n1 as f64);
    let c_h = variance_ratio(z1, z_bar, sizing_power, T::zero())?;
    let c_t = variance_ratio(z1, za, sizing_power, T::zero())?;
    let (n_h, n_t) = (c_h * n1r, c_t * n1r);
    let drift = |n: T| theta_over_sigma * (n * lit(0.5)).sqrt();
    Ok(PowerComparison {
        n_harmonic: n_h,
        n_two_trials: n_t,
        power_harmonic: sf(z_bar - drift(n_h)),
        power_two_trials: sf(za - drift(n_t)),
    })
}

fn check_power<T: Real>(power_pre: T) -> Result<()> {
    if !(power_pre > T::zero() && power_pre < T::one()) {
        return domain(format!("pre-market power must lie in (0, 1), got {power_pre}"));
    }
    Ok(())
}

/// Closed-form region masses, without the quadrature cross-check.
pub fn region_masses<T: Real>(
    power_pre: T,
    weights: &WeightPair<T>,
    alpha: T,
    gamma: T,
) -> Result<ComparisonRegions<T>> {
    check_power(power_pre)?;
    let za = upper_quantile(alpha);
    let mu = za + quantile(power_pre);
    let b = crossover_b_weighted(weights, alpha, gamma)?;
    let tn = TruncNormParams::lower_truncated(mu, T::one(), za)?;
    let inf = T::infinity();
    let (lo, hi) = (mu.min(b), mu.max(b));
    let p_superior = tn.interval_prob(hi, inf);
    let p_larger_power = tn.interval_prob(za, lo);
    let middle = tn.interval_prob(lo, hi);
    let (p_inferior, p_smaller_n) = if mu < b {
        (middle, T::zero())
    } else {
        (T::zero(), middle)
    };
    Ok(ComparisonRegions {
        power_pre,
        mu,
        b,
        p_superior,
        p_inferior,
        p_inconclusive_smaller_n: p_smaller_n,
        p_inconclusive_larger_power: p_larger_power,
        quadrature_discrepancy: T::zero(),
    })
}

/// Region masses by quadrature of pointwise [`compare_powers`] outcomes
/// against the truncated-normal density.
pub fn indicator_masses<T: Real>(power_pre: T, weights: &WeightPair<T>, alpha: T, gamma: T) -> Result<[T; 4]> {
    check_power(power_pre)?;
    let za = upper_quantile(alpha);
    let mu = za + quantile(power_pre);
    let tn = TruncNormParams::lower_truncated(mu, T::one(), za)?;
    // The masses do not depend on n1; n1 = 1 puts the true effect at μ√2.
    let theta = mu * T::SQRT_2();
    let sizing = lit::<T>(0.9);
    let classify = |z1: T| {
        if z1 <= za {
            return None;
        }
        compare_powers(z1, theta, 1, weights, alpha, gamma, sizing)
            .ok()
            .map(|c| c.region())
    };
    let top = za.max(mu) + lit(QUAD_SPAN);
    // Hints only: the integrand is still the pointwise comparison.
    let mut points = vec![za, top];
    let b = crossover_b_weighted(weights, alpha, gamma)?;
    points.extend([mu, b].into_iter().filter(|&x| x > za && x < top));
    points.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    let mut out = [T::zero(); 4];
    for (slot, region) in [
        Region::Superior,
        Region::Inferior,
        Region::InconclusiveSmallerN,
        Region::InconclusiveLargerPower,
    ]
    .into_iter()
    .enumerate()
    {
        let f = |z1: T| {
            if classify(z1) == Some(region) {
                tn.pdf(z1)
            } else {
                T::zero()
            }
        };
        let q = integrate_with_breakpoints(f, &points, lit(QUAD_TOL), QUAD_SEGMENTS)?;
        out[slot] = q.value;
        if classify(top) == Some(region) {
            out[slot] = out[slot] + tn.interval_prob(top, T::infinity());
        }
    }
    Ok(out)
}

/// Region masses for the weighted harmonic rule, cross-checked by quadrature.
pub fn superiority_probabilities_weighted<T: Real>(
    power_pre: T,
    weights: &WeightPair<T>,
    alpha: T,
    gamma: T,
) -> Result<ComparisonRegions<T>> {
    let mut regions = region_masses(power_pre, weights, alpha, gamma)?;
    let q = indicator_masses(power_pre, weights, alpha, gamma)?;
    let closed = [
        regions.p_superior,
        regions.p_inferior,
        regions.p_inconclusive_smaller_n,
        regions.p_inconclusive_larger_power,
    ];
    regions.quadrature_discrepancy = closed
        .iter()
        .zip(q.iter())
        .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    Ok(regions)
}

pub fn superiority_probabilities<T: Real>(power_pre: T, alpha: T, gamma: T) -> Result<ComparisonRegions<T>> {
    superiority_probabilities_weighted(power_pre, &WeightPair::unweighted(), alpha, gamma)
}

/// Evaluates [`superiority_probabilities_weighted`] over a grid in parallel.
pub fn superiority_curve<T: Real>(
    grid: &[T],
    weights: &WeightPair<T>,
    alpha: T,
    gamma: T,
) -> Result<Vec<ComparisonRegions<T>>> {
    grid.par_iter()
        .map(|&p| superiority_probabilities_weighted(p, weights, alpha, gamma))
        .collect()
}

/// Pre-market power above which the harmonic rule is never inferior: Φ(b − z_{1−α}).
pub fn zero_inferior_power<T: Real>(weights: &WeightPair<T>, alpha: T, gamma: T) -> Result<T> {
    let b = crossover_b_weighted(weights, alpha, gamma)?;
    Ok(cdf(b - upper_quantile(alpha)))
}

/// Pre-market power at which P(inferior) = ½, by bisection on the closed form.
pub fn half_inferior_power<T: Real>(weights: &WeightPair<T>, alpha: T, gamma: T) -> Result<T> {
    let mut hi = zero_inferior_power(weights, alpha, gamma)?;
    let mut lo = lit::<T>(1e-12);
    let p_inf = |p: T| region_masses(p, weights, alpha, gamma).map(|r| r.p_inferior);
    if p_inf(lo)? < lit(0.5) {
        return domain("inferior mass never reaches one half");
    }
    for _ in 0..200 {
        let mid = (lo + hi) * lit(0.5);
        if p_inf(mid)? > lit(0.5) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    Ok((lo + hi) * lit(0.5))
}
