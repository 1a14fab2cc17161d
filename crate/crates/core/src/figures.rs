//! Figure-ready curves: adaptive post-market levels and variance ratios as
//! functions of the pre-market p-value, and superiority masses as functions of
//! the pre-market power.

use serde::{Deserialize, Serialize};

use crate::design::{sizing_target, variance_ratio};
use crate::error::{Error, Result};
use crate::evidence::{combine, Method, PostBound, TrialSummary, WeightPair};
use crate::specialfn::normal::upper_quantile;
use crate::superiority::{superiority_curve, ComparisonRegions};

/// Log-spaced grid of `points` values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
        .collect()
}

/// Evenly spaced grid of `points` values from `lo` to `hi`.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Post-market bound under one method at one pre-market p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub p1: f64,
    pub method: Method,
    pub bound: PostBound<f64>,
}

pub fn bound_curve(p1_grid: &[f64], weights: &WeightPair<f64>, alpha: f64, gamma: f64) -> Result<Vec<BoundPoint>> {
    let mut out = Vec::with_capacity(p1_grid.len() * Method::ALL.len());
    for &p1 in p1_grid {
        let t1 = TrialSummary::from_p(p1)?;
        // The bound does not depend on the post-market result.
        let t2 = TrialSummary::from_p(0.5)?;
        for method in Method::ALL {
            let o = combine(method, &t1, &t2, weights, gamma, alpha)?;
            out.push(BoundPoint {
                p1,
                method,
                bound: o.bound_p2,
            });
        }
    }
    Ok(out)
}

/// Variance ratio needed by one method at one pre-market p-value and shrinkage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRatioPoint {
    pub p1: f64,
    pub shrinkage: f64,
    pub method: Method,
    pub c: f64,
}

/// c for the two-trials rule and both harmonic variants, skipping points where
/// the method cannot reach overall significance.
pub fn variance_ratio_curve(
    p1_grid: &[f64],
    shrinkages: &[f64],
    weights: &WeightPair<f64>,
    alpha: f64,
    gamma: f64,
    power: f64,
) -> Result<Vec<VarianceRatioPoint>> {
    let mut out = Vec::new();
    let za = upper_quantile(alpha);
    for &s in shrinkages {
        for &p1 in p1_grid {
            let z1 = upper_quantile(p1);
            for method in [Method::TwoTrials, Method::HarmonicUnweighted, Method::HarmonicWeighted] {
                if method == Method::TwoTrials && z1 <= za {
                    continue;
                }
                let target = match sizing_target(method, z1, weights, alpha, gamma) {
                    Ok(t) => t,
                    Err(Error::NecessaryConditionViolated { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let c = variance_ratio(z1, target.target_z, power, s)?;
                out.push(VarianceRatioPoint {
                    p1,
                    shrinkage: s,
                    method,
                    c,
                });
            }
        }
    }
    Ok(out)
}

pub fn superiority_rows(
    grid: &[f64],
    weights: &WeightPair<f64>,
    alpha: f64,
    gamma: f64,
) -> Result<Vec<ComparisonRegions<f64>>> {
    superiority_curve(grid, weights, alpha, gamma)
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Domain(format!("could not write CSV: {e}"))
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

/// Columns p1, method, bound, status; `bound` is empty when no level applies.
pub fn bound_csv(points: &[BoundPoint]) -> Result<String> {
    to_csv(
        &["p1", "method", "bound", "status"],
        points.iter().map(|p| {
            let (bound, status) = match p.bound {
                PostBound::Level(v) => (v.to_string(), "level"),
                PostBound::NoTrialRequired => ("1".to_string(), "no_trial_required"),
                PostBound::Unattainable => (String::new(), "unattainable"),
            };
            vec![
                p.p1.to_string(),
                p.method.label().to_string(),
                bound,
                status.to_string(),
            ]
        }),
    )
}

pub fn variance_ratio_csv(points: &[VarianceRatioPoint]) -> Result<String> {
    to_csv(
        &["p1", "shrinkage", "method", "c"],
        points.iter().map(|p| {
            vec![
                p.p1.to_string(),
                p.shrinkage.to_string(),
                p.method.label().to_string(),
                p.c.to_string(),
            ]
        }),
    )
}

pub fn superiority_csv(rows: &[ComparisonRegions<f64>]) -> Result<String> {
    to_csv(
        &[
            "power_pre",
            "p_superior",
            "p_inferior",
            "p_inconclusive_smaller_n",
            "p_inconclusive_larger_power",
        ],
        rows.iter().map(|r| {
            vec![
                r.power_pre.to_string(),
                r.p_superior.to_string(),
                r.p_inferior.to_string(),
                r.p_inconclusive_smaller_n.to_string(),
                r.p_inconclusive_larger_power.to_string(),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: f64 = 0.025;
    const G: f64 = A * A;

    #[test]
    fn bound_curve_spot_rows() {
        let w = WeightPair::pre_market_60();
        let pts = bound_curve(&[1e-8, 0.01, 0.03, 0.06], &w, A, G).unwrap();
        let at = |p1: f64, m| pts.iter().find(|p| p.p1 == p1 && p.method == m).unwrap().bound;
        assert_eq!(at(0.01, Method::TwoTrials), PostBound::Level(A));
        assert_eq!(at(0.03, Method::TwoTrials), PostBound::Unattainable);
        assert_eq!(at(1e-8, Method::Fisher), PostBound::NoTrialRequired);
        assert_eq!(at(0.06, Method::HarmonicWeighted), PostBound::Unattainable);
        assert!(matches!(at(0.06, Method::HarmonicUnweighted), PostBound::Level(_)));
    }

    #[test]
    fn variance_ratio_curve_spot_rows() {
        let w = WeightPair::pre_market_60();
        let pts = variance_ratio_curve(&[0.001, 0.02, 0.04], &[0.0, 0.5], &w, A, G, 0.9).unwrap();
        let at = |p1: f64, s: f64, m| {
            pts.iter()
                .find(|p| p.p1 == p1 && p.shrinkage == s && p.method == m)
                .map(|p| p.c)
        };
        let ratio = at(0.001, 0.5, Method::TwoTrials).unwrap() / at(0.001, 0.0, Method::TwoTrials).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);
        assert!(at(0.04, 0.0, Method::TwoTrials).is_none());
        assert!(at(0.04, 0.0, Method::HarmonicUnweighted).is_some());
        assert!(at(0.001, 0.0, Method::HarmonicUnweighted).unwrap() < at(0.001, 0.0, Method::TwoTrials).unwrap());
        assert!(at(0.02, 0.0, Method::HarmonicUnweighted).unwrap() > at(0.02, 0.0, Method::TwoTrials).unwrap());
    }

    #[test]
    fn superiority_spot_rows() {
        let rows = superiority_rows(&[0.166, 0.5, 0.7], &WeightPair::unweighted(), A, G).unwrap();
        assert!((rows[0].p_inferior - 0.5).abs() < 0.005);
        assert_eq!(rows[1].p_inconclusive(), 0.0);
        assert_eq!(rows[2].p_inferior, 0.0);
        let csv = superiority_csv(&rows).unwrap();
        assert!(csv.starts_with("power_pre,p_superior,p_inferior,"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn grids() {
        let g = log_grid(1e-6, 0.1, 6);
        assert!((g[0] - 1e-6).abs() < 1e-18 && (g[5] - 0.1).abs() < 1e-15);
        assert_eq!(linear_grid(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
