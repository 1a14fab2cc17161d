//! Power of the post-market trial at an interim look.
//!
//! The final statistic decomposes as z2 = √f·z2i + √(1−f)·z_r, where z_r is
//! the z-value of the n_r = n2 − n2i patients per group still to come. Given a
//! normal belief τ ~ N(m, v) about the standardized effect θ/σ, z_r is
//! N(m·√(n_r/2), 1 + v·n_r/2), which yields the closed form in
//! [`interim_power`].
//!
//! Beliefs are on the standardized scale, so σ never enters the power.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::{lit, Real};
use crate::specialfn::normal::sf;

pub const DEFAULT_FUTILITY_THRESHOLD: f64 = 0.2;

/// Post-market trial at the interim look.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterimState<T = f64> {
    z2i: T,
    n2i: u64,
    n2: u64,
    sigma: T,
}

impl<T: Real> InterimState<T> {
    /// State with information fraction `f`; n2i = round(f·n2) and f is
    /// recomputed from the counts.
    pub fn new(z2i: T, f: T, n2: u64, sigma: T) -> Result<Self> {
        if !(f > T::zero() && f < T::one()) {
            return domain(format!("information fraction must lie in (0, 1), got {f}"));
        }
        let n2i = (f * lit(n2 as f64)).round().to_u64().unwrap_or(0);
        Self::from_counts(z2i, n2i, n2, sigma)
    }

    /// State with n2i = ⌊n2/2⌋.
    pub fn at_half(z2i: T, n2: u64, sigma: T) -> Result<Self> {
        Self::from_counts(z2i, n2 / 2, n2, sigma)
    }

    pub fn from_counts(z2i: T, n2i: u64, n2: u64, sigma: T) -> Result<Self> {
        if !z2i.is_finite() {
            return domain(format!("interim statistic must be finite, got {z2i}"));
        }
        if n2 < 2 {
            return domain(format!("planned post-market size must be at least 2, got {n2}"));
        }
        if n2i == 0 || n2i >= n2 {
            return domain(format!("interim size must lie in [1, {}], got {n2i}", n2 - 1));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return domain(format!("σ must be positive, got {sigma}"));
        }
        Ok(Self { z2i, n2i, n2, sigma })
    }

    pub fn z2i(&self) -> T {
        self.z2i
    }

    pub fn n2(&self) -> u64 {
        self.n2
    }

    pub fn n2i(&self) -> u64 {
        self.n2i
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Information fraction n2i / n2.
    pub fn fraction(&self) -> T {
        lit::<T>(self.n2i as f64) / lit(self.n2 as f64)
    }

    /// Patients per group still to be enrolled.
    pub fn remaining(&self) -> u64 {
        self.n2 - self.n2i
    }

    /// Interim effect estimate on the θ/σ scale.
    pub fn interim_effect(&self) -> T {
        self.z2i * (lit::<T>(2.0) / lit(self.n2i as f64)).sqrt()
    }
}

/// Normal belief N(mean, variance) about θ/σ; variance 0 is a point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectBelief<T = f64> {
    pub mean: T,
    pub variance: T,
}

impl<T: Real> EffectBelief<T> {
    pub fn new(mean: T, variance: T) -> Result<Self> {
        if !mean.is_finite() {
            return domain(format!("belief mean must be finite, got {mean}"));
        }
        if !(variance >= T::zero()) || !variance.is_finite() {
            return domain(format!(
                "belief variance must be finite and nonnegative, got {variance}"
            ));
        }
        Ok(Self { mean, variance })
    }

    pub fn point(mean: T) -> Result<Self> {
        Self::new(mean, T::zero())
    }
}

/// Which belief about the effect drives the interim power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefKind {
    /// Point mass at the (shrunken) pre-market estimate.
    Conditional,
    /// Interim data alone, flat prior.
    Predictive,
    /// Pre-market and interim data combined.
    InformedPredictive,
}

impl BeliefKind {
    pub fn label(self) -> &'static str {
        match self {
            BeliefKind::Conditional => "CPi",
            BeliefKind::Predictive => "PPi",
            BeliefKind::InformedPredictive => "IPPi",
        }
    }
}

/// Probability that the completed trial ends with z2 > `final_threshold_z`.
pub fn interim_power<T: Real>(state: &InterimState<T>, belief: &EffectBelief<T>, final_threshold_z: T) -> T {
    let f = state.fraction();
    let half_nr = lit::<T>(state.remaining() as f64) * lit(0.5);
    let needed = (final_threshold_z - f.sqrt() * state.z2i) / (T::one() - f).sqrt();
    let num = needed - belief.mean * half_nr.sqrt();
    sf(num / (T::one() + belief.variance * half_nr).sqrt())
}

fn check_n1(n1: u64) -> Result<()> {
    if n1 == 0 {
        return domain("pre-market sample size must be at least 1");
    }
    Ok(())
}

/// Point belief at the pre-market estimate (1 − s)·z1·√(2/n1).
pub fn belief_conditional<T: Real>(z1: T, n1: u64, shrinkage: T) -> Result<EffectBelief<T>> {
    check_n1(n1)?;
    EffectBelief::point((T::one() - shrinkage) * z1 * (lit::<T>(2.0) / lit(n1 as f64)).sqrt())
}

/// Flat-prior posterior from the interim data: N(τ̂2i, 2/n2i).
pub fn belief_predictive<T: Real>(state: &InterimState<T>) -> EffectBelief<T> {
    EffectBelief {
        mean: state.interim_effect(),
        variance: lit::<T>(2.0) / lit(state.n2i as f64),
    }
}

/// Precision-weighted combination of the pre-market and interim estimates.
/// The pre-market estimate enters unshrunken.
pub fn belief_informed_predictive<T: Real>(z1: T, n1: u64, state: &InterimState<T>) -> Result<EffectBelief<T>> {
    check_n1(n1)?;
    let n1r = lit::<T>(n1 as f64);
    let n2i = lit::<T>(state.n2i as f64);
    let tau1 = z1 * (lit::<T>(2.0) / n1r).sqrt();
    EffectBelief::new(
        (n1r * tau1 + n2i * state.interim_effect()) / (n1r + n2i),
        lit::<T>(2.0) / (n1r + n2i),
    )
}

pub fn belief<T: Real>(
    kind: BeliefKind,
    z1: T,
    n1: u64,
    shrinkage: T,
    state: &InterimState<T>,
) -> Result<EffectBelief<T>> {
    match kind {
        BeliefKind::Conditional => belief_conditional(z1, n1, shrinkage),
        BeliefKind::Predictive => Ok(belief_predictive(state)),
        BeliefKind::InformedPredictive => belief_informed_predictive(z1, n1, state),
    }
}

/// Stop for futility iff `power` < `threshold`.
pub fn futility_decision<T: Real>(power: T, threshold: T) -> bool {
    power < threshold
}
