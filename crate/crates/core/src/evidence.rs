//! Combining the evidence of a pre-market (index 1) and a post-market
//! (index 2) trial.
//!
//! Four rules are provided: the two-trials rule, the (weighted) harmonic mean
//! χ²-test, Fisher's criterion and Stouffer's method. Each method also
//! implies an adaptive level p̄2: the largest post-market p-value that still
//! gives overall significance given the pre-market result.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::specialfn::normal::{sf, upper_quantile};
use crate::specialfn::{chi2_upper_quantile, std_normal_cdf};

/// One trial's standardized result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary<T = f64> {
    /// Test statistic θ̂ / se.
    pub z: T,
    /// One-sided p-value 1 − Φ(z).
    pub p: T,
    pub n_per_group: Option<u64>,
    /// Residual standard deviation σ.
    pub sd: Option<T>,
}

impl<T: Real> TrialSummary<T> {
    pub fn from_z(z: T) -> Result<Self> {
        let p = crate::specialfn::std_normal_sf(z)?;
        Ok(Self {
            z,
            p,
            n_per_group: None,
            sd: None,
        })
    }

    pub fn from_p(p: T) -> Result<Self> {
        if !(p > T::zero() && p < T::one()) {
            return domain(format!("p-value must lie in (0, 1), got {p}"));
        }
        Ok(Self {
            z: upper_quantile(p),
            p,
            n_per_group: None,
            sd: None,
        })
    }

    /// Both given; they must agree to 1e-10 on the p scale.
    pub fn from_z_and_p(z: T, p: T) -> Result<Self> {
        let implied = Self::from_z(z)?;
        if (implied.p - p).abs() > lit(1e-10) {
            return domain(format!("z = {z} implies p = {}, inconsistent with p = {p}", implied.p));
        }
        Ok(implied)
    }

    pub fn with_n_per_group(mut self, n: u64) -> Result<Self> {
        if n == 0 {
            return domain("sample size per group must be at least 1");
        }
        self.n_per_group = Some(n);
        Ok(self)
    }

    pub fn with_sd(mut self, sd: T) -> Result<Self> {
        if !(sd > T::zero()) {
            return domain(format!("residual sd must be positive, got {sd}"));
        }
        self.sd = Some(sd);
        Ok(self)
    }

    /// se = √2 σ / √n, when both n and σ are known.
    pub fn standard_error(&self) -> Option<T> {
        let n = self.n_per_group?;
        let sd = self.sd?;
        Some(T::SQRT_2() * sd / lit::<T>(n as f64).sqrt())
    }

    /// θ̂ = z · se.
    pub fn estimate(&self) -> Option<T> {
        self.standard_error().map(|se| self.z * se)
    }
}

/// Trial weights (w1, w2) of the weighted harmonic mean test; w = √w1 + √w2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights<T>", into = "RawWeights<T>")]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct WeightPair<T = f64> {
    w1: T,
    w2: T,
    w: T,
}

#[derive(Serialize, Deserialize)]
struct RawWeights<T> {
    w1: T,
    w2: T,
}

impl<T: Real> TryFrom<RawWeights<T>> for WeightPair<T> {
    type Error = Error;

    fn try_from(raw: RawWeights<T>) -> Result<Self> {
        Self::new(raw.w1, raw.w2)
    }
}

impl<T: Real> From<WeightPair<T>> for RawWeights<T> {
    fn from(w: WeightPair<T>) -> Self {
        RawWeights { w1: w.w1, w2: w.w2 }
    }
}

impl<T: Real> WeightPair<T> {
    pub fn new(w1: T, w2: T) -> Result<Self> {
        if !(w1 > T::zero() && w2 > T::zero()) || !w1.is_finite() || !w2.is_finite() {
            return domain(format!("weights must be positive and finite, got ({w1}, {w2})"));
        }
        Ok(Self {
            w1,
            w2,
            w: w1.sqrt() + w2.sqrt(),
        })
    }

    /// (1, 1): the unweighted test.
    pub fn unweighted() -> Self {
        Self {
            w1: T::one(),
            w2: T::one(),
            w: lit(2.0),
        }
    }

    /// (3, 2): 60% of the weight on the pre-market trial.
    pub fn pre_market_60() -> Self {
        Self::new(lit(3.0), lit(2.0)).expect("constant weights are valid")
    }

    pub fn w1(&self) -> T {
        self.w1
    }

    pub fn w2(&self) -> T {
        self.w2
    }

    pub fn w(&self) -> T {
        self.w
    }

    /// The pair with the roles of the two trials exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            w1: self.w2,
            w2: self.w1,
            w: self.w,
        }
    }
}

impl<T: Real> Default for WeightPair<T> {
    fn default() -> Self {
        Self::unweighted()
    }
}

/// Combination rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TwoTrials,
    HarmonicUnweighted,
    HarmonicWeighted,
    Fisher,
    Stouffer,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::TwoTrials,
        Method::HarmonicUnweighted,
        Method::HarmonicWeighted,
        Method::Fisher,
        Method::Stouffer,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::TwoTrials => "two_trials",
            Method::HarmonicUnweighted => "harmonic_unweighted",
            Method::HarmonicWeighted => "harmonic_weighted",
            Method::Fisher => "fisher",
            Method::Stouffer => "stouffer",
        }
    }

    /// Abbreviation used in tables.
    pub fn short_label(&self) -> &'static str {
        match self {
            Method::TwoTrials => "T",
            Method::HarmonicUnweighted => "H_u",
            Method::HarmonicWeighted => "H_w",
            Method::Fisher => "F",
            Method::Stouffer => "S",
        }
    }

    pub fn is_harmonic(&self) -> bool {
        matches!(self, Method::HarmonicUnweighted | Method::HarmonicWeighted)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Upper bound p̄2 on the post-market p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PostBound<T = f64> {
    /// Overall significance iff p2 ≤ level.
    Level(T),
    /// The pre-market trial alone already meets the criterion (Fisher).
    NoTrialRequired,
    /// No post-market p-value can reach overall significance.
    Unattainable,
}

impl<T: Real> PostBound<T> {
    pub fn level(&self) -> Option<T> {
        match self {
            PostBound::Level(v) => Some(*v),
            _ => None,
        }
    }
}

/// Result of applying one combination rule to a pair of trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinationOutcome<T = f64> {
    pub method: Method,
    pub significant: bool,
    /// Overall one-sided p-value, when the method defines one for these data.
    pub combined_p: Option<T>,
    pub bound_p2: PostBound<T>,
    /// A harmonic method was applied to a non-positive z-value.
    pub direction_violation: bool,
}

/// X² = w² / (w1/z1² + w2/z2²); 0 when either z is 0.
pub fn harmonic_statistic<T: Real>(z1: T, z2: T, weights: &WeightPair<T>) -> T {
    if z1 == T::zero() || z2 == T::zero() {
        return T::zero();
    }
    let w = weights.w();
    w * w / (weights.w1() / (z1 * z1) + weights.w2() / (z2 * z2))
}

/// One-sided p-value p_H = [1 − Φ(X)] / 2, defined for z1, z2 > 0.
pub fn harmonic_pvalue<T: Real>(z1: T, z2: T, weights: &WeightPair<T>) -> Result<T> {
    if !(z1 > T::zero() && z2 > T::zero()) {
        return Err(Error::DirectionViolation {
            z1: to_f64(z1),
            z2: to_f64(z2),
        });
    }
    let x = harmonic_statistic(z1, z2, weights).sqrt();
    Ok(sf(x) * lit(0.5))
}

fn check_gamma_harmonic<T: Real>(gamma: T) -> Result<()> {
    if !(gamma > T::zero() && gamma < lit(0.25)) {
        return domain(format!("harmonic mean test needs 0 < γ < 0.25, got {gamma}"));
    }
    Ok(())
}

/// c_H = χ²₁(1 − 4γ), the critical value of X².
pub fn harmonic_critical_value<T: Real>(gamma: T) -> Result<T> {
    check_gamma_harmonic(gamma)?;
    chi2_upper_quantile(lit::<T>(4.0) * gamma, 1)
}

/// Required post-market z-value z̄2 and the implied level p̄2 = 1 − Φ(z̄2).
pub fn harmonic_post_bound<T: Real>(z1: T, weights: &WeightPair<T>, gamma: T) -> Result<(T, T)> {
    let c_h = harmonic_critical_value(gamma)?;
    if !(z1 > T::zero()) {
        return Err(Error::DirectionViolation {
            z1: to_f64(z1),
            z2: f64::NAN,
        });
    }
    let w = weights.w();
    let denom = w * w / c_h - weights.w1() / (z1 * z1);
    if !(denom > T::zero()) {
        return Err(Error::NecessaryConditionViolated {
            p1: to_f64(sf(z1)),
            p1_bound: to_f64(harmonic_pre_bound(weights, gamma)?),
        });
    }
    let z_bar = weights.w2().sqrt() / denom.sqrt();
    Ok((z_bar, sf(z_bar)))
}

/// Limit of p̄2 as z1 → ∞: the necessary bound on p2.
pub fn harmonic_post_limit<T: Real>(weights: &WeightPair<T>, gamma: T) -> Result<T> {
    let c_h = harmonic_critical_value(gamma)?;
    Ok(sf((weights.w2() * c_h).sqrt() / weights.w()))
}

/// Necessary bound p̄1 = 1 − Φ(√(w1 c_H) / w) on the pre-market p-value.
pub fn harmonic_pre_bound<T: Real>(weights: &WeightPair<T>, gamma: T) -> Result<T> {
    let c_h = harmonic_critical_value(gamma)?;
    Ok(sf((weights.w1() * c_h).sqrt() / weights.w()))
}

/// c_F = exp(−χ²₄(1 − γ) / 2): overall significance iff p1·p2 ≤ c_F.
pub fn fisher_critical_value<T: Real>(gamma: T) -> Result<T> {
    if !(gamma > T::zero() && gamma < T::one()) {
        return domain(format!("Fisher's criterion needs 0 < γ < 1, got {gamma}"));
    }
    Ok((-chi2_upper_quantile(gamma, 4)? * lit(0.5)).exp())
}

/// p̄2 = c_F / p1, or [`PostBound::NoTrialRequired`] once that reaches 1.
pub fn fisher_bound<T: Real>(p1: T, gamma: T) -> Result<PostBound<T>> {
    if !(p1 > T::zero() && p1 < T::one()) {
        return domain(format!("p1 must lie in (0, 1), got {p1}"));
    }
    let c_f = fisher_critical_value(gamma)?;
    let bound = c_f / p1;
    Ok(if bound >= T::one() {
        PostBound::NoTrialRequired
    } else {
        PostBound::Level(bound)
    })
}

/// Fisher's combined p-value P(χ²₄ ≥ −2 log(p1 p2)) = p1p2 (1 − log(p1p2)).
pub fn fisher_pvalue<T: Real>(p1: T, p2: T) -> T {
    let prod = p1 * p2;
    prod * (T::one() - prod.ln())
}

/// p̄2 = 1 − Φ(√2 z_{1−γ} − z1).
pub fn stouffer_bound<T: Real>(z1: T, gamma: T) -> Result<T> {
    if !(gamma > T::zero() && gamma < T::one()) {
        return domain(format!("Stouffer's method needs 0 < γ < 1, got {gamma}"));
    }
    std_normal_cdf(z1 - T::SQRT_2() * upper_quantile(gamma))
}

/// Stouffer's combined p-value 1 − Φ((z1 + z2)/√2).
pub fn stouffer_pvalue<T: Real>(z1: T, z2: T) -> T {
    sf((z1 + z2) / T::SQRT_2())
}

/// Both trials significant at their own one-sided level α.
pub fn two_trials_decision<T: Real>(p1: T, p2: T, alpha: T) -> bool {
    p1 <= alpha && p2 <= alpha
}

/// Applies `method` to the two trials. `alpha` drives the two-trials rule,
/// `gamma` the overall level of the other methods.
pub fn combine<T: Real>(
    method: Method,
    trial1: &TrialSummary<T>,
    trial2: &TrialSummary<T>,
    weights: &WeightPair<T>,
    gamma: T,
    alpha: T,
) -> Result<CombinationOutcome<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return domain(format!("α must lie in (0, 1), got {alpha}"));
    }
    let outcome = match method {
        Method::TwoTrials => CombinationOutcome {
            method,
            significant: two_trials_decision(trial1.p, trial2.p, alpha),
            combined_p: None,
            bound_p2: if trial1.p <= alpha {
                PostBound::Level(alpha)
            } else {
                PostBound::Unattainable
            },
            direction_violation: false,
        },
        Method::HarmonicUnweighted | Method::HarmonicWeighted => {
            let w = if method == Method::HarmonicUnweighted {
                WeightPair::unweighted()
            } else {
                *weights
            };
            let bound_p2 = match harmonic_post_bound(trial1.z, &w, gamma) {
                Ok((_, level)) => PostBound::Level(level),
                Err(Error::NecessaryConditionViolated { .. } | Error::DirectionViolation { .. }) => {
                    PostBound::Unattainable
                }
                Err(e) => return Err(e),
            };
            match harmonic_pvalue(trial1.z, trial2.z, &w) {
                Ok(p) => CombinationOutcome {
                    method,
                    significant: p <= gamma,
                    combined_p: Some(p),
                    bound_p2,
                    direction_violation: false,
                },
                Err(Error::DirectionViolation { .. }) => CombinationOutcome {
                    method,
                    significant: false,
                    combined_p: None,
                    bound_p2,
                    direction_violation: true,
                },
                Err(e) => return Err(e),
            }
        }
        Method::Fisher => {
            let c_f = fisher_critical_value(gamma)?;
            let p = fisher_pvalue(trial1.p, trial2.p);
            CombinationOutcome {
                method,
                significant: trial1.p * trial2.p <= c_f,
                combined_p: Some(p),
                bound_p2: fisher_bound(trial1.p, gamma)?,
                direction_violation: false,
            }
        }
        Method::Stouffer => {
            let p = stouffer_pvalue(trial1.z, trial2.z);
            let z_crit = upper_quantile(gamma);
            CombinationOutcome {
                method,
                significant: (trial1.z + trial2.z) / T::SQRT_2() >= z_crit,
                combined_p: Some(p),
                bound_p2: PostBound::Level(stouffer_bound(trial1.z, gamma)?),
                direction_violation: false,
            }
        }
    };
    Ok(outcome)
}

/// Default overall level γ = α².
pub fn default_gamma<T: Real>(alpha: T) -> T {
    alpha * alpha
}

/// z_{1−α}, exposed for callers building thresholds.
pub fn z_upper<T: Real>(alpha: T) -> Result<T> {
    crate::specialfn::std_normal_upper_quantile(alpha)
}
