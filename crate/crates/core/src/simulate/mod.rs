//! Monte Carlo study of post-market trials sized from a significant
//! pre-market trial.
//!
//! Each replication draws z1 from the pre-market law truncated to
//! significance, sizes the post-market trial per method, looks at half the
//! data, and completes the trial. Every replication owns a ChaCha8 stream
//! keyed by (seed, scenario, method, replication), so results do not depend
//! on how replications are scheduled across threads.

mod report;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{post_market_n, sizing_target, variance_ratio};
use crate::error::{domain, Error, Result};
use crate::evidence::{harmonic_pvalue, Method, WeightPair};
use crate::interim::{belief_informed_predictive, futility_decision, interim_power, InterimState};
use crate::scalar::ceil_tol;
use crate::specialfn::normal::{quantile, sf, upper_quantile};
use crate::specialfn::TruncNormParams;

pub use report::{write_replications_csv, CellSummary, SimulationReport, INTERIM_QUANTILES, SCHEMA_VERSION};

/// True effects and pre-market design of one simulated setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    pub theta1: f64,
    pub theta2: f64,
    /// Pre-market patients per group.
    pub n1: u64,
    pub sigma: f64,
    pub alpha: f64,
    /// Conditional power the post-market trial is sized for.
    pub target_power: f64,
}

impl Scenario {
    pub fn new(label: impl Into<String>, theta1: f64, theta2: f64) -> Self {
        Self {
            label: label.into(),
            theta1,
            theta2,
            n1: 85,
            sigma: 1.0,
            alpha: 0.025,
            target_power: 0.9,
        }
    }

    /// The four settings of the reference study: (0, 0), (.25, .25), (.5, .5), (.5, .25).
    pub fn reference_grid() -> Vec<Scenario> {
        vec![
            Scenario::new("S1", 0.0, 0.0),
            Scenario::new("S2", 0.25, 0.25),
            Scenario::new("S3", 0.5, 0.5),
            Scenario::new("S4", 0.5, 0.25),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 {
            return domain(format!("scenario {}: n1 must be at least 1", self.label));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return domain(format!("scenario {}: σ must be positive", self.label));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return domain(format!("scenario {}: α must lie in (0, 0.5)", self.label));
        }
        if !(self.target_power > 0.0 && self.target_power < 1.0) {
            return domain(format!("scenario {}: target power must lie in (0, 1)", self.label));
        }
        if !(self.theta1.is_finite() && self.theta2.is_finite()) {
            return domain(format!("scenario {}: effects must be finite", self.label));
        }
        Ok(())
    }

    /// Mean of the untruncated pre-market z-value, θ1·√n1/(√2σ).
    pub fn mu(&self) -> f64 {
        self.theta1 * (self.n1 as f64 / 2.0).sqrt() / self.sigma
    }

    /// Power of the pre-market trial, Φ(μ − z_{1−α}).
    pub fn pre_market_power(&self) -> f64 {
        sf(upper_quantile(self.alpha) - self.mu())
    }

    fn pre_market_law(&self) -> Result<TruncNormParams<f64>> {
        TruncNormParams::lower_truncated(self.mu(), 1.0, upper_quantile(self.alpha))
    }

    /// Draws z1 ~ TN(μ, 1, z_{1−α}, ∞).
    pub fn draw_pre_market<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.pre_market_law()?.sample(rng))
    }
}

/// Full study configuration; read from JSON with unknown keys rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub n_sim: u64,
    pub seed: u64,
    pub scenarios: Vec<Scenario>,
    pub methods: Vec<Method>,
    /// Weights of the weighted harmonic method.
    pub weights: WeightPair<f64>,
    pub shrinkage: f64,
    pub interim_fraction: f64,
    pub futility_threshold: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_sim: 10_000,
            seed: 1,
            scenarios: Scenario::reference_grid(),
            methods: vec![Method::HarmonicUnweighted, Method::HarmonicWeighted, Method::TwoTrials],
            weights: WeightPair::pre_market_60(),
            shrinkage: 0.0,
            interim_fraction: 0.5,
            futility_threshold: crate::interim::DEFAULT_FUTILITY_THRESHOLD,
        }
    }
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Domain(format!("invalid configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sim == 0 {
            return domain("n_sim must be at least 1");
        }
        if self.n_sim >= 1 << 40 {
            return domain("n_sim must be below 2^40");
        }
        if self.methods.is_empty() {
            return domain("at least one method is required");
        }
        if self.scenarios.is_empty() {
            return domain("at least one scenario is required");
        }
        if self.scenarios.len() > 1 << 16 {
            return domain("at most 65536 scenarios are supported");
        }
        for m in &self.methods {
            if !matches!(
                m,
                Method::TwoTrials | Method::HarmonicUnweighted | Method::HarmonicWeighted
            ) {
                return Err(Error::Unsupported(format!(
                    "{m} cannot size a post-market trial for every pre-market result"
                )));
            }
        }
        for s in &self.scenarios {
            s.validate()?;
        }
        if !(self.shrinkage >= 0.0 && self.shrinkage < 1.0) {
            return domain(format!("shrinkage must lie in [0, 1), got {}", self.shrinkage));
        }
        if !(self.interim_fraction > 0.0 && self.interim_fraction < 1.0) {
            return domain(format!(
                "interim fraction must lie in (0, 1), got {}",
                self.interim_fraction
            ));
        }
        if !(0.0..=1.0).contains(&self.futility_threshold) {
            return domain(format!(
                "futility threshold must lie in [0, 1], got {}",
                self.futility_threshold
            ));
        }
        Ok(())
    }

    fn weights_for(&self, method: Method) -> WeightPair<f64> {
        if method == Method::HarmonicWeighted {
            self.weights
        } else {
            WeightPair::unweighted()
        }
    }
}

/// One simulated pre-/post-market pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: u64,
    pub z1: f64,
    /// Post-market patients per group.
    pub n2: u64,
    pub c: f64,
    /// z-value the post-market trial must exceed.
    pub threshold_z: f64,
    /// Interim z-value, absent when n2 is too small to split.
    pub z2i: Option<f64>,
    pub z2: f64,
    pub significant: bool,
    /// Informed predictive power at the interim look.
    pub interim_power: Option<f64>,
    pub futility_stop: bool,
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    quantile(rng.sample::<f64, _>(Open01))
}

/// Generator for one replication; independent of scheduling.
pub fn replication_rng(seed: u64, scenario: usize, method: usize, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((scenario as u64) << 48) | ((method as u64) << 40) | replication);
    rng
}

/// Simulates one pre-/post-market pair.
///
/// The final statistic is assembled from the interim look and the remaining
/// patients, z2 = √f·z2i + √(1−f)·z_r, which has the marginal law
/// N(θ2·√(n2/2)/σ, 1).
pub fn run_replication<R: Rng + ?Sized>(
    scenario: &Scenario,
    method: Method,
    config: &SimulationConfig,
    replication: u64,
    rng: &mut R,
) -> Result<ReplicationRecord> {
    let gamma = scenario.alpha * scenario.alpha;
    let weights = config.weights_for(method);
    let z1 = scenario.draw_pre_market(rng)?;
    let target = sizing_target(method, z1, &weights, scenario.alpha, gamma)?;
    let c = variance_ratio(z1, target.target_z, scenario.target_power, config.shrinkage)?;
    let n2 = post_market_n(c, scenario.n1, 1.0)?;
    let drift = |n: u64| scenario.theta2 * (n as f64 / 2.0).sqrt() / scenario.sigma;

    // ⌊f·n2⌋, which is ⌊n2/2⌋ at the default fraction.
    let n2i = (config.interim_fraction * n2 as f64 + 1e-9)
        .floor()
        .min(n2 as f64 - 1.0)
        .max(0.0) as u64;
    let (z2, z2i, power) = if n2 >= 2 && n2i >= 1 {
        let z2i = drift(n2i) + std_normal(rng);
        let rest = drift(n2 - n2i) + std_normal(rng);
        let state = InterimState::from_counts(z2i, n2i, n2, scenario.sigma)?;
        let f = state.fraction();
        let z2 = f.sqrt() * z2i + (1.0 - f).sqrt() * rest;
        let belief = belief_informed_predictive(z1, scenario.n1, &state)?;
        (z2, Some(z2i), Some(interim_power(&state, &belief, target.target_z)))
    } else {
        (drift(n2) + std_normal(rng), None, None)
    };

    let significant = match method {
        Method::TwoTrials => z2 > upper_quantile(scenario.alpha),
        _ => z2 > 0.0 && harmonic_pvalue(z1, z2, &weights)? <= gamma,
    };
    Ok(ReplicationRecord {
        replication,
        z1,
        n2,
        c,
        threshold_z: target.target_z,
        z2i,
        z2,
        significant,
        interim_power: power,
        futility_stop: power.is_some_and(|p| futility_decision(p, config.futility_threshold)),
    })
}

/// All replications of one (scenario, method) cell, in replication order.
pub fn run_cell(
    config: &SimulationConfig,
    scenario_index: usize,
    method_index: usize,
) -> Result<Vec<ReplicationRecord>> {
    let scenario = &config.scenarios[scenario_index];
    let method = config.methods[method_index];
    (0..config.n_sim)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(config.seed, scenario_index, method_index, r);
            run_replication(scenario, method, config, r, &mut rng)
        })
        .collect()
}

/// Runs every (scenario, method) cell and aggregates the report. The
/// per-replication records are returned alongside, grouped like the cells.
pub fn run_study_with_records(config: &SimulationConfig) -> Result<(SimulationReport, Vec<Vec<ReplicationRecord>>)> {
    config.validate()?;
    let mut cells = Vec::new();
    let mut records = Vec::new();
    for (si, scenario) in config.scenarios.iter().enumerate() {
        for (mi, &method) in config.methods.iter().enumerate() {
            let recs = run_cell(config, si, mi)?;
            let analytic = analytic_max_n2(scenario, method, &config.weights_for(method), config.shrinkage)?;
            cells.push(CellSummary::from_records(scenario, method, &recs, analytic));
            records.push(recs);
        }
    }
    Ok((SimulationReport::new(config.clone(), cells), records))
}

pub fn run_study(config: &SimulationConfig) -> Result<SimulationReport> {
    run_study_with_records(config).map(|(r, _)| r)
}

/// Supremum of n2 over significant pre-market results, reached as z1 → z_{1−α}.
pub fn analytic_max_n2(scenario: &Scenario, method: Method, weights: &WeightPair<f64>, shrinkage: f64) -> Result<u64> {
    let za = upper_quantile(scenario.alpha);
    let target = sizing_target(method, za, weights, scenario.alpha, scenario.alpha * scenario.alpha)?;
    let c = variance_ratio(za, target.target_z, scenario.target_power, shrinkage)?;
    post_market_n(c, scenario.n1, 1.0)
}

/// Replications needed for Monte Carlo standard error `target_se` at `expected_power`.
pub fn required_nsim(expected_power: f64, target_se: f64) -> Result<u64> {
    if !(expected_power > 0.0 && expected_power < 1.0) {
        return domain(format!("expected power must lie in (0, 1), got {expected_power}"));
    }
    if !(target_se > 0.0 && target_se < 1.0) {
        return domain(format!("target standard error must lie in (0, 1), got {target_se}"));
    }
    Ok(ceil_tol(expected_power * (1.0 - expected_power) / (target_se * target_se)) as u64)
}

/// Overall rejection rate of `method` when both trials are null and neither is
/// conditioned on significance.
pub fn null_rejection_rate(
    method: Method,
    weights: &WeightPair<f64>,
    alpha: f64,
    n_pairs: u64,
    seed: u64,
) -> Result<f64> {
    if n_pairs == 0 {
        return domain("at least one pair is required");
    }
    let gamma = alpha * alpha;
    let za = upper_quantile(alpha);
    let tag = Method::ALL.iter().position(|m| *m == method).unwrap_or(0);
    const CHUNK: u64 = 1 << 16;
    let chunks = n_pairs.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = replication_rng(seed, 0xffff, tag, k);
            let mut hits = 0u64;
            for _ in (k * CHUNK)..((k + 1) * CHUNK).min(n_pairs) {
                let z1 = std_normal(&mut rng);
                let z2 = std_normal(&mut rng);
                let reject = match method {
                    Method::TwoTrials => z1 > za && z2 > za,
                    Method::HarmonicUnweighted | Method::HarmonicWeighted => {
                        let w = if method == Method::HarmonicWeighted {
                            *weights
                        } else {
                            WeightPair::unweighted()
                        };
                        z1 > 0.0 && z2 > 0.0 && harmonic_pvalue(z1, z2, &w).is_ok_and(|p| p <= gamma)
                    }
                    Method::Fisher => crate::evidence::fisher_pvalue(sf(z1), sf(z2)) <= gamma,
                    Method::Stouffer => crate::evidence::stouffer_pvalue(z1, z2) <= gamma,
                };
                hits += reject as u64;
            }
            hits
        })
        .sum();
    Ok(hits as f64 / n_pairs as f64)
}
