//! Post-market sample size.
//!
//! The post-market trial is sized for conditional power 1 − β to detect the
//! (optionally shrunken) pre-market estimate at the method's adaptive level.
//! With target z-value t, the required variance ratio se₁²/se₂² is
//!
//! ```text
//! c = (z_{1−β} + t)² / ((1 − s)² z1²)
//! ```
//!
//! and n2 = c · n1 · σ2²/σ1².

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::evidence::{fisher_bound, harmonic_post_bound, stouffer_bound, Method, PostBound, WeightPair};
use crate::scalar::{ceil_tol, lit, to_f64, Real};
use crate::specialfn::normal::{quantile, sf, upper_quantile};

/// Inputs that drive the sample-size calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignParams<T = f64> {
    /// Per-trial one-sided level.
    pub alpha: T,
    /// Overall level.
    pub gamma: T,
    /// Target conditional power 1 − β.
    pub power: T,
    /// Shrinkage s of the pre-market estimate.
    pub shrinkage: T,
    /// σ2² / σ1².
    pub sd_ratio_sq: T,
    /// Expected dropout proportion.
    pub dropout: T,
}

impl<T: Real> Default for DesignParams<T> {
    fn default() -> Self {
        let alpha = lit::<T>(0.025);
        Self {
            alpha,
            gamma: alpha * alpha,
            power: lit(0.9),
            shrinkage: T::zero(),
            sd_ratio_sq: T::one(),
            dropout: T::zero(),
        }
    }
}

impl<T: Real> DesignParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha < lit(0.5)) {
            return domain(format!("α must lie in (0, 0.5), got {}", self.alpha));
        }
        if !(self.gamma > T::zero() && self.gamma < T::one()) {
            return domain(format!("γ must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.power > T::zero() && self.power < T::one()) {
            return domain(format!("power must lie in (0, 1), got {}", self.power));
        }
        if !(self.shrinkage >= T::zero() && self.shrinkage < T::one()) {
            return domain(format!("shrinkage must lie in [0, 1), got {}", self.shrinkage));
        }
        if !(self.sd_ratio_sq > T::zero()) || !self.sd_ratio_sq.is_finite() {
            return domain(format!("squared SD ratio must be positive, got {}", self.sd_ratio_sq));
        }
        if !(self.dropout >= T::zero() && self.dropout < T::one()) {
            return domain(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        Ok(())
    }
}

/// Variance ratio c needed for conditional power `power` against `target_z`.
///
/// Returns 0 when z_{1−β} + target_z ≤ 0, i.e. when any post-market trial
/// already has the requested power.
pub fn variance_ratio<T: Real>(z1: T, target_z: T, power: T, shrinkage: T) -> Result<T> {
    if !(z1 > T::zero()) || !z1.is_finite() {
        return domain(format!("variance ratio needs z1 > 0, got {z1}"));
    }
    if !(shrinkage < T::one()) || shrinkage.is_nan() {
        return domain(format!("shrinkage must be below 1, got {shrinkage}"));
    }
    if !(power > T::zero() && power < T::one()) {
        return domain(format!("power must lie in (0, 1), got {power}"));
    }
    if !target_z.is_finite() {
        return domain(format!("target z-value must be finite, got {target_z}"));
    }
    let num = quantile(power) + target_z;
    if num <= T::zero() {
        return Ok(T::zero());
    }
    let den = (T::one() - shrinkage) * z1;
    Ok(num * num / (den * den))
}

/// Conditional power 1 − Φ(t − (1 − s) z1 √c) of a post-market trial with
/// variance ratio `c`; the inverse of [`variance_ratio`].
pub fn conditional_power<T: Real>(z1: T, target_z: T, c: T, shrinkage: T) -> T {
    sf(target_z - (T::one() - shrinkage) * z1 * c.sqrt())
}

/// n2 = ⌈c · n1 · σ2²/σ1²⌉, at least 1.
pub fn post_market_n<T: Real>(c: T, n1: u64, sd_ratio_sq: T) -> Result<u64> {
    if !(c >= T::zero()) || !c.is_finite() {
        return domain(format!("variance ratio must be finite and nonnegative, got {c}"));
    }
    if n1 == 0 {
        return domain("pre-market sample size must be at least 1");
    }
    if !(sd_ratio_sq > T::zero()) {
        return domain(format!("squared SD ratio must be positive, got {sd_ratio_sq}"));
    }
    let n = ceil_tol(c * lit(n1 as f64) * sd_ratio_sq);
    Ok(to_f64(n).max(1.0) as u64)
}

/// Per-group n = ⌈2 (z_{power} + z_{1−level})² / d²⌉ for a standardized
/// effect d and one-sided `level`.
pub fn n_from_effect<T: Real>(d: T, level: T, power: T) -> Result<u64> {
    if !(d > T::zero()) || !d.is_finite() {
        return domain(format!("standardized effect must be positive, got {d}"));
    }
    if !(level > T::zero() && level < T::one()) {
        return domain(format!("level must lie in (0, 1), got {level}"));
    }
    if !(power > T::zero() && power < T::one()) {
        return domain(format!("power must lie in (0, 1), got {power}"));
    }
    let s = quantile(power) + upper_quantile(level);
    let n = ceil_tol(lit::<T>(2.0) * s * s / (d * d));
    Ok(to_f64(n).max(1.0) as u64)
}

/// Inflates a total sample size for dropout, rounded up to an even total.
pub fn dropout_adjust<T: Real>(n_total: u64, dropout: T) -> Result<u64> {
    if !(dropout >= T::zero() && dropout < T::one()) {
        return domain(format!("dropout must lie in [0, 1), got {dropout}"));
    }
    let n = to_f64(ceil_tol(lit::<T>(n_total as f64) / (T::one() - dropout))) as u64;
    Ok(n + n % 2)
}

/// Adaptive level p̄2 and the matching z-value the post-market trial must reach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizingTarget<T = f64> {
    pub level: T,
    pub target_z: T,
}

/// Level the post-market trial is sized against under `method`.
///
/// Fisher's criterion can be met by the pre-market trial alone; this is
/// reported as [`Error::NoTrialRequired`] rather than a level of 1.
pub fn sizing_target<T: Real>(
    method: Method,
    z1: T,
    weights: &WeightPair<T>,
    alpha: T,
    gamma: T,
) -> Result<SizingTarget<T>> {
    match method {
        Method::TwoTrials => Ok(SizingTarget {
            level: alpha,
            target_z: upper_quantile(alpha),
        }),
        Method::HarmonicUnweighted | Method::HarmonicWeighted => {
            let w = if method == Method::HarmonicUnweighted {
                WeightPair::unweighted()
            } else {
                *weights
            };
            let (z_bar, level) = harmonic_post_bound(z1, &w, gamma)?;
            Ok(SizingTarget { level, target_z: z_bar })
        }
        Method::Fisher => {
            let p1 = sf(z1);
            match fisher_bound(p1, gamma)? {
                PostBound::Level(level) => Ok(SizingTarget {
                    level,
                    target_z: upper_quantile(level),
                }),
                _ => Err(Error::NoTrialRequired {
                    p1: to_f64(p1),
                    c_f: to_f64(crate::evidence::fisher_critical_value(gamma)?),
                }),
            }
        }
        Method::Stouffer => {
            let level = stouffer_bound(z1, gamma)?;
            Ok(SizingTarget {
                level,
                target_z: T::SQRT_2() * upper_quantile(gamma) - z1,
            })
        }
    }
}

/// Post-market size relative to a pre-market trial of `n1` per group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeSizing<T = f64> {
    pub method: Method,
    pub level: T,
    pub target_z: T,
    pub c: T,
    pub n2_per_group: u64,
    pub n2_total: u64,
    pub n2_total_with_dropout: u64,
}

pub fn size_relative<T: Real>(
    method: Method,
    z1: T,
    n1: u64,
    weights: &WeightPair<T>,
    params: &DesignParams<T>,
) -> Result<RelativeSizing<T>> {
    params.validate()?;
    let target = sizing_target(method, z1, weights, params.alpha, params.gamma)?;
    let c = variance_ratio(z1, target.target_z, params.power, params.shrinkage)?;
    let n2 = post_market_n(c, n1, params.sd_ratio_sq)?;
    Ok(RelativeSizing {
        method,
        level: target.level,
        target_z: target.target_z,
        c,
        n2_per_group: n2,
        n2_total: 2 * n2,
        n2_total_with_dropout: dropout_adjust(2 * n2, params.dropout)?,
    })
}

/// Post-market size from a standardized effect, at the method's adaptive level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSizing<T = f64> {
    pub method: Method,
    pub level: T,
    pub n_per_group: u64,
    pub n_total: u64,
    pub n_total_with_dropout: u64,
}

pub fn size_for_effect<T: Real>(
    method: Method,
    z1: T,
    effect: T,
    weights: &WeightPair<T>,
    params: &DesignParams<T>,
) -> Result<EffectSizing<T>> {
    params.validate()?;
    let target = sizing_target(method, z1, weights, params.alpha, params.gamma)?;
    let n = n_from_effect(effect, target.level, params.power)?;
    Ok(EffectSizing {
        method,
        level: target.level,
        n_per_group: n,
        n_total: 2 * n,
        n_total_with_dropout: dropout_adjust(2 * n, params.dropout)?,
    })
}

/// Relative reduction 1 − n / n_reference.
pub fn reduction(n: u64, n_reference: u64) -> f64 {
    1.0 - n as f64 / n_reference as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfn::normal::cdf;

    const Z975: f64 = 1.959_963_984_540_054;
    const Z90: f64 = 1.281_551_565_544_600_4;

    #[test]
    fn shrinkage_quadruples_c() {
        let c0 = variance_ratio(3.0, Z975, 0.9, 0.0).unwrap();
        let c5 = variance_ratio(3.0, Z975, 0.9, 0.5).unwrap();
        assert!((c5 / c0 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn exactly_powered_original_needs_equal_size() {
        let c = variance_ratio(Z90 + Z975, Z975, 0.9, 0.0).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn suprema_at_truncation_point() {
        let u = WeightPair::unweighted();
        let w = WeightPair::pre_market_60();
        let g = 0.025 * 0.025;
        let z1 = Z975;
        let t = variance_ratio(z1, Z975, 0.9, 0.0).unwrap() * 85.0;
        let hu = variance_ratio(z1, harmonic_post_bound(z1, &u, g).unwrap().0, 0.9, 0.0).unwrap() * 85.0;
        let hw = variance_ratio(z1, harmonic_post_bound(z1, &w, g).unwrap().0, 0.9, 0.0).unwrap() * 85.0;
        // mpmath: 232.498, 295.841, 328.815
        assert!((t - 232.497_861_336_196_8).abs() < 1e-8);
        assert!((hu - 295.840_605_983_126_7).abs() < 1e-8);
        assert!((hw - 328.814_660_162_148_5).abs() < 1e-8);
        assert!((t - 232.0).abs() < 1.0 && (hu - 296.0).abs() < 1.0 && (hw - 329.0).abs() < 1.0);
    }

    #[test]
    fn variance_ratio_domain() {
        assert!(variance_ratio(0.0, Z975, 0.9, 0.0).is_err());
        assert!(variance_ratio(-1.0, Z975, 0.9, 0.0).is_err());
        assert!(variance_ratio(2.0, Z975, 0.9, 1.0).is_err());
        assert_eq!(variance_ratio(8.6, -4.0, 0.9, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn power_self_consistency() {
        for &(z1, t, s) in &[(2.1, Z975, 0.0), (3.7, 1.53, 0.2), (5.0, 2.4, 0.5), (2.5, 1.1, 0.0)] {
            let c = variance_ratio(z1, t, 0.9, s).unwrap();
            assert!((conditional_power(z1, t, c, s) - 0.9).abs() < 1e-10);
        }
    }

    #[test]
    fn absolute_sample_size() {
        assert_eq!(post_market_n(1.0, 85, 1.0).unwrap(), 85);
        assert_eq!(post_market_n(2.2, 85, 1.0).unwrap(), 187);
        assert_eq!(
            post_market_n(1.3, 40, 4.0).unwrap(),
            4 * post_market_n(1.3, 40, 1.0).unwrap()
        );
        assert_eq!(post_market_n(0.0, 40, 1.0).unwrap(), 1);
        assert!(post_market_n(1.0, 0, 1.0).is_err());
    }

    #[test]
    fn effect_based_sizes() {
        // normal-approximation formula: 2(1.2816 + 1.9600)²/0.29² = 249.88
        assert_eq!(n_from_effect(0.29, 0.025, 0.9).unwrap(), 250);
        assert_eq!(n_from_effect(0.29, 0.062_343_825_728_465_59, 0.9).unwrap(), 189);
        assert_eq!(n_from_effect(0.29, 0.083_035_066_929_121_04, 0.9).unwrap(), 170);
        assert!(n_from_effect(0.0, 0.025, 0.9).is_err());
    }

    #[test]
    fn dropout_examples() {
        assert!((dropout_adjust(502, 0.15).unwrap() as i64 - 590).abs() <= 2);
        assert!((dropout_adjust(378, 0.15).unwrap() as i64 - 444).abs() <= 2);
        assert_eq!(dropout_adjust(340, 0.15).unwrap(), 400);
        assert_eq!(dropout_adjust(378, 0.0).unwrap(), 378);
        assert_eq!(dropout_adjust(377, 0.0).unwrap(), 378);
        assert!(dropout_adjust(100, 1.0).is_err());
    }

    #[test]
    fn adaptive_level_crossover() {
        // harmonic c < two-trials c iff p1 below ≈ 0.009
        let u = WeightPair::unweighted();
        let g = 0.025 * 0.025;
        let mut z1 = Z975 + 1e-3;
        while z1 < 6.0 {
            let p1 = 1.0 - cdf(z1);
            let ch = variance_ratio(z1, harmonic_post_bound(z1, &u, g).unwrap().0, 0.9, 0.0).unwrap();
            let ct = variance_ratio(z1, Z975, 0.9, 0.0).unwrap();
            if p1 < 0.0087 {
                assert!(ch < ct, "p1 = {p1}");
            } else if p1 > 0.0089 {
                assert!(ch > ct, "p1 = {p1}");
            }
            z1 += 0.005;
        }
    }

    #[test]
    fn figure_order_of_curves() {
        let params = DesignParams::default();
        let w = WeightPair::pre_market_60();
        let c = |m, z1| size_relative(m, z1, 100, &w, &params).unwrap().c;
        let z_small_p = 4.0;
        assert!(c(Method::HarmonicWeighted, z_small_p) < c(Method::HarmonicUnweighted, z_small_p));
        assert!(c(Method::HarmonicUnweighted, z_small_p) < c(Method::TwoTrials, z_small_p));
        let z_border = 2.0;
        assert!(c(Method::HarmonicWeighted, z_border) > c(Method::HarmonicUnweighted, z_border));
        assert!(c(Method::HarmonicUnweighted, z_border) > c(Method::TwoTrials, z_border));
    }

    #[test]
    fn fisher_refuses_to_size() {
        let params = DesignParams::default();
        let r = size_relative(Method::Fisher, 8.6, 85, &WeightPair::unweighted(), &params);
        assert!(matches!(r, Err(Error::NoTrialRequired { .. })));
        assert!(size_relative(Method::Fisher, 2.5, 85, &WeightPair::unweighted(), &params).is_ok());
    }

    #[test]
    fn params_validation() {
        assert!(DesignParams::<f64>::default().validate().is_ok());
        let bad = DesignParams {
            shrinkage: 1.0,
            ..DesignParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = DesignParams {
            dropout: -0.1,
            ..DesignParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
