use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ReplicationRecord, Scenario, SimulationConfig};
use crate::error::{Error, Result};
use crate::evidence::Method;

pub const SCHEMA_VERSION: u32 = 1;

/// Probabilities at which the interim-power distribution is summarized.
pub const INTERIM_QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Aggregates for one (scenario, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub scenario: String,
    pub method: Method,
    pub n_sim: u64,
    pub rejection_rate: f64,
    /// √(rate·(1 − rate)/n_sim) for the rejection rate.
    pub mc_se: f64,
    pub median_n2: f64,
    pub median_c: f64,
    pub max_n2: u64,
    /// n2 as z1 approaches the significance boundary; no draw can exceed it.
    pub analytic_max_n2: u64,
    pub mean_z1: f64,
    /// Share of replications stopped at the interim look.
    pub futility_stop_rate: f64,
    pub futility_mc_se: f64,
    /// (probability, value) pairs of the informed predictive interim power.
    pub interim_power_quantiles: Vec<(f64, f64)>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn mc_se(rate: f64, n: u64) -> f64 {
    (rate * (1.0 - rate) / n as f64).sqrt()
}

impl CellSummary {
    pub fn from_records(
        scenario: &Scenario,
        method: Method,
        records: &[ReplicationRecord],
        analytic_max_n2: u64,
    ) -> Self {
        let n = records.len() as u64;
        let nf = n as f64;
        let rejection_rate = records.iter().filter(|r| r.significant).count() as f64 / nf;
        let futility_stop_rate = records.iter().filter(|r| r.futility_stop).count() as f64 / nf;
        let n2s = sorted(records.iter().map(|r| r.n2 as f64).collect());
        let cs = sorted(records.iter().map(|r| r.c).collect());
        let powers = sorted(records.iter().filter_map(|r| r.interim_power).collect());
        Self {
            scenario: scenario.label.clone(),
            method,
            n_sim: n,
            rejection_rate,
            mc_se: mc_se(rejection_rate, n),
            median_n2: quantile_sorted(&n2s, 0.5),
            median_c: quantile_sorted(&cs, 0.5),
            max_n2: records.iter().map(|r| r.n2).max().unwrap_or(0),
            analytic_max_n2,
            mean_z1: records.iter().map(|r| r.z1).sum::<f64>() / nf,
            futility_stop_rate,
            futility_mc_se: mc_se(futility_stop_rate, n),
            interim_power_quantiles: INTERIM_QUANTILES
                .iter()
                .map(|&q| (q, quantile_sorted(&powers, q)))
                .collect(),
        }
    }

    /// (metric, value) pairs in a fixed order.
    pub fn metrics(&self) -> Vec<(String, f64)> {
        let mut m = vec![
            ("rejection_rate".to_string(), self.rejection_rate),
            ("mc_se".to_string(), self.mc_se),
            ("median_n2".to_string(), self.median_n2),
            ("median_c".to_string(), self.median_c),
            ("max_n2".to_string(), self.max_n2 as f64),
            ("analytic_max_n2".to_string(), self.analytic_max_n2 as f64),
            ("mean_z1".to_string(), self.mean_z1),
            ("futility_stop_rate".to_string(), self.futility_stop_rate),
            ("futility_mc_se".to_string(), self.futility_mc_se),
        ];
        for (q, v) in &self.interim_power_quantiles {
            m.push((format!("interim_power_q{}", (q * 100.0).round() as u32), *v));
        }
        m
    }
}

/// Versioned result of a full study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub config: SimulationConfig,
    pub cells: Vec<CellSummary>,
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Domain(format!("could not write report: {e}"))
}

impl SimulationReport {
    pub fn new(config: SimulationConfig, cells: Vec<CellSummary>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            cells,
        }
    }

    pub fn cell(&self, scenario: &str, method: Method) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.scenario == scenario && c.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(io_err)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Domain(format!("invalid report: {e}")))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Unsupported(format!(
                "report schema version {}",
                r.schema_version
            )));
        }
        Ok(r)
    }

    /// One row per scenario × method × metric.
    pub fn write_tidy_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario", "method", "metric", "value"])
            .map_err(io_err)?;
        for cell in &self.cells {
            for (metric, value) in cell.metrics() {
                w.write_record([cell.scenario.as_str(), cell.method.label(), &metric, &value.to_string()])
                    .map_err(io_err)?;
            }
        }
        w.flush().map_err(io_err)
    }

    pub fn tidy_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_tidy_csv(&mut buf)?;
        String::from_utf8(buf).map_err(io_err)
    }
}

/// One row per replication, grouped as `records` is (scenario-major, method-minor).
pub fn write_replications_csv<W: Write>(
    config: &SimulationConfig,
    records: &[Vec<ReplicationRecord>],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario",
        "method",
        "replication",
        "z1",
        "n2",
        "c",
        "threshold_z",
        "z2i",
        "z2",
        "significant",
        "interim_power",
        "futility_stop",
    ])
    .map_err(io_err)?;
    let cells = config
        .scenarios
        .iter()
        .flat_map(|s| config.methods.iter().map(move |m| (s, *m)));
    for ((scenario, method), recs) in cells.zip(records) {
        for r in recs {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                scenario.label.clone(),
                method.label().to_string(),
                r.replication.to_string(),
                r.z1.to_string(),
                r.n2.to_string(),
                r.c.to_string(),
                r.threshold_z.to_string(),
                opt(r.z2i),
                r.z2.to_string(),
                r.significant.to_string(),
                opt(r.interim_power),
                r.futility_stop.to_string(),
            ])
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::run_study;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!(quantile_sorted(&[], 0.5).is_nan());
    }

    #[test]
    fn json_and_csv_carry_the_same_numbers() {
        let cfg = SimulationConfig {
            n_sim: 100,
            ..SimulationConfig::default()
        };
        let report = run_study(&cfg).unwrap();
        let back = SimulationReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
        let csv = report.tidy_csv().unwrap();
        let mut rows = csv::Reader::from_reader(csv.as_bytes());
        let mut n = 0;
        for row in rows.records() {
            let row = row.unwrap();
            let method = Method::ALL.iter().copied().find(|m| m.label() == &row[1]).unwrap();
            let cell = report.cell(&row[0], method).unwrap();
            let value: f64 = row[3].parse().unwrap();
            let expect = cell.metrics().into_iter().find(|(k, _)| k == &row[2]).unwrap().1;
            assert!(value == expect || (value.is_nan() && expect.is_nan()));
            n += 1;
        }
        assert_eq!(n, report.cells.len() * report.cells[0].metrics().len());
    }

    #[test]
    fn mc_se_follows_the_rate() {
        let cfg = SimulationConfig {
            n_sim: 100,
            ..SimulationConfig::default()
        };
        for c in run_study(&cfg).unwrap().cells {
            assert_eq!(c.mc_se, (c.rejection_rate * (1.0 - c.rejection_rate) / 100.0).sqrt());
        }
    }

    #[test]
    fn schema_version_is_checked() {
        let cfg = SimulationConfig {
            n_sim: 10,
            ..SimulationConfig::default()
        };
        let json = run_study(&cfg).unwrap().to_json().unwrap();
        let bumped = json.replacen("\"schema_version\": 1", "\"schema_version\": 2", 1);
        assert!(SimulationReport::from_json(&bumped).is_err());
    }
}
