//! Combined evidence from a pre-market and a post-market clinical trial.
//!
//! The harmonic mean χ²-test decides approval from both trials together and
//! yields an adaptive significance level for the post-market trial. Around it
//! sit the comparator rules (two-trials, Fisher, Stouffer), post-market sample
//! sizing, interim power and futility, the probability that the harmonic rule
//! beats the two-trials rule, and a reproducible Monte Carlo study.
//!
//! Numerical kernels are generic over [`scalar::Real`]; the aliases below fix
//! the scalar to `f64` or `f32`. The simulation engine runs in `f64` only.

// Coefficient tables keep their published digits; `!(x > 0)` guards also reject NaN.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod casestudy;
pub mod design;
pub mod error;
pub mod evidence;
pub mod figures;
pub mod interim;
pub mod quadrature;
pub mod scalar;
pub mod simulate;
pub mod specialfn;
pub mod superiority;

pub use error::{Error, Result};
pub use evidence::{Method, PostBound};
pub use interim::BeliefKind;
pub use scalar::Real;

pub type TrialSummaryF64 = evidence::TrialSummary<f64>;
pub type TrialSummaryF32 = evidence::TrialSummary<f32>;
pub type WeightPairF64 = evidence::WeightPair<f64>;
pub type WeightPairF32 = evidence::WeightPair<f32>;
pub type CombinationOutcomeF64 = evidence::CombinationOutcome<f64>;
pub type CombinationOutcomeF32 = evidence::CombinationOutcome<f32>;
pub type DesignParamsF64 = design::DesignParams<f64>;
pub type DesignParamsF32 = design::DesignParams<f32>;
pub type InterimStateF64 = interim::InterimState<f64>;
pub type InterimStateF32 = interim::InterimState<f32>;
pub type EffectBeliefF64 = interim::EffectBelief<f64>;
pub type EffectBeliefF32 = interim::EffectBelief<f32>;
pub type ComparisonRegionsF64 = superiority::ComparisonRegions<f64>;
pub type ComparisonRegionsF32 = superiority::ComparisonRegions<f32>;
pub type TruncNormF64 = specialfn::TruncNormParams<f64>;
pub type TruncNormF32 = specialfn::TruncNormParams<f32>;
