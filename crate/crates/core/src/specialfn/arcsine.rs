use serde::{Deserialize, Serialize};

use super::normal::sf;
use crate::error::{domain, Result};
use crate::scalar::{lit, Real};

/// z-test of two proportions on the variance-stabilized arcsine-square-root
/// scale, where each arm has standard deviation 1/2 per observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcsineTest<T = f64> {
    /// asin(√p_a) − asin(√p_b)
    pub effect: T,
    pub se: T,
    pub z: T,
    /// One-sided p-value 1 − Φ(z) for the alternative p_a > p_b.
    pub p_one_sided: T,
}

/// Test from event counts.
pub fn arcsine_z<T: Real>(events_a: u64, n_a: u64, events_b: u64, n_b: u64) -> Result<ArcsineTest<T>> {
    if n_a == 0 || n_b == 0 {
        return domain("arcsine test needs at least one subject per arm");
    }
    if events_a > n_a || events_b > n_b {
        return domain(format!(
            "event counts must not exceed arm sizes ({events_a}/{n_a}, {events_b}/{n_b})"
        ));
    }
    let pa = lit::<T>(events_a as f64) / lit(n_a as f64);
    let pb = lit::<T>(events_b as f64) / lit(n_b as f64);
    arcsine_z_from_proportions(pa, n_a, pb, n_b)
}

/// Test from proportions, for sources that report only percentages.
pub fn arcsine_z_from_proportions<T: Real>(p_a: T, n_a: u64, p_b: T, n_b: u64) -> Result<ArcsineTest<T>> {
    if n_a == 0 || n_b == 0 {
        return domain("arcsine test needs at least one subject per arm");
    }
    let unit = |p: T| p >= T::zero() && p <= T::one();
    if !unit(p_a) || !unit(p_b) {
        return domain(format!("proportions must lie in [0, 1], got {p_a} and {p_b}"));
    }
    let effect = p_a.sqrt().asin() - p_b.sqrt().asin();
    let inv = |n: u64| T::one() / lit(n as f64);
    let se = lit::<T>(0.5) * (inv(n_a) + inv(n_b)).sqrt();
    let z = effect / se;
    Ok(ArcsineTest {
        effect,
        se,
        z,
        p_one_sided: sf(z),
    })
}

/// Event count implied by a published percentage, rounded to nearest.
pub fn count_from_percent(percent: f64, n: u64) -> u64 {
    (percent / 100.0 * n as f64).round().max(0.0) as u64
}
