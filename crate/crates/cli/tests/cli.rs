use std::process::{Command, Output};

use condapprove::simulate::SimulationReport;
use condapprove::Method;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condapprove"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let o = run(&a);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn harmonic_combination_of_the_case_study() {
    let v = json(&["combine", "--method", "harmonic", "--z1", "8.6", "--z2", "2.49"]);
    let o = &v["outcomes"][0];
    assert_eq!(o["significant"], true);
    let level = o["bound_p2"]["value"].as_f64().unwrap();
    assert!((level - 0.062).abs() < 0.001, "{level}");
}

#[test]
fn fisher_warns_that_no_trial_is_needed() {
    let o = run(&["combine", "--method", "fisher", "--p1", "0.00001", "--p2", "0.9"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("significant"));
    assert!(out.contains("post-market trial not required"));
}

#[test]
fn two_trials_needs_both_significant() {
    let v = json(&["combine", "--method", "twotrials", "--p1", "0.03", "--p2", "0.001"]);
    assert_eq!(v["outcomes"][0]["significant"], false);
}

#[test]
fn direction_violation_is_an_outcome_not_an_error() {
    let o = run(&["combine", "--method", "harmonic", "--z1", "3", "--z2", "-0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("not significant"));
}

#[test]
fn inconsistent_z_and_p_is_a_usage_error() {
    let o = run(&["combine", "--z1", "2", "--p1", "0.4", "--p2", "0.01"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_flags_exit_with_status_2() {
    assert_eq!(run(&["combine", "--z1", "abc", "--z2", "1"]).status.code(), Some(2));
    assert_eq!(run(&["combine", "--z1", "2"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["design", "--z1", "3"]).status.code(), Some(2));
}

#[test]
fn design_reproduces_the_case_study_savings() {
    let v = json(&["design", "--z1", "8.63", "--effect", "0.29", "--dropout", "0.15"]);
    let rows = v["sizing"].as_array().unwrap();
    let total = |m: &str| {
        rows.iter().find(|r| r["method"] == m).unwrap()["n_total_with_dropout"]
            .as_u64()
            .unwrap()
    };
    let red = |m: &str| {
        rows.iter().find(|r| r["method"] == m).unwrap()["reduction"]
            .as_f64()
            .unwrap()
    };
    assert!(total("two_trials").abs_diff(590) <= 2);
    assert!(total("harmonic_unweighted").abs_diff(444) <= 2);
    assert!(total("harmonic_weighted").abs_diff(400) <= 2);
    assert!((red("harmonic_unweighted") - 0.25).abs() <= 0.01);
    assert!((red("harmonic_weighted") - 0.32).abs() <= 0.01);
}

#[test]
fn design_shrinkage_quadruples_c() {
    let c = |s: &str| {
        let v = json(&[
            "design",
            "--z1",
            "3.2",
            "--n1",
            "85",
            "--method",
            "harmonic",
            "--shrinkage",
            s,
        ]);
        v["sizing"][0]["c"].as_f64().unwrap()
    };
    assert!((c("0.5") / c("0") - 4.0).abs() < 1e-12);
}

#[test]
fn design_refuses_fisher_with_status_3() {
    let o = run(&["design", "--z1", "8.6", "--effect", "0.29", "--method", "fisher"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("post-market trial not required"));
}

#[test]
fn interim_reports_power_and_verdict() {
    let v = json(&["interim", "--z1", "2.5", "--n1", "85", "--z2i", "0.5", "--n2", "150"]);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    for r in results {
        let p = r["power"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(r["futility_stop"].as_bool().unwrap(), p < 0.2);
    }
    let o = run(&[
        "interim", "--z1", "2.5", "--n1", "85", "--z2i", "0.5", "--n2", "150", "--belief", "pp",
    ]);
    assert!(stdout(&o).contains("stop"));
}

#[test]
fn interim_fraction_outside_unit_interval_is_a_usage_error() {
    let o = run(&[
        "interim", "--z1", "2.5", "--n1", "85", "--z2i", "0.5", "--n2", "150", "--f", "1.2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_consistent_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let o = run(&["simulate", "--nsim", "100", "--seed", "5", "--report-dir", &d]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("S4"));

    let report =
        SimulationReport::from_json(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.schema_version, 1);
    assert_eq!(report.config.seed, 5);
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let method = Method::ALL.into_iter().find(|m| m.label() == f[1]).unwrap();
        let cell = report.cell(f[0], method).unwrap();
        let want = cell.metrics().into_iter().find(|(k, _)| k == f[2]).unwrap().1;
        let got: f64 = f[3].parse().unwrap();
        assert!(got == want || (got.is_nan() && want.is_nan()), "{line}");
        rows += 1;
    }
    assert_eq!(rows, 12 * report.cells[0].metrics().len());
    for c in &report.cells {
        assert_eq!(c.n_sim, 100);
        assert_eq!(c.mc_se, (c.rejection_rate * (1.0 - c.rejection_rate) / 100.0).sqrt());
    }
}

#[test]
fn simulate_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"n_sim": 50, "seed": 3, "methods": ["two_trials"]}"#).unwrap();
    let c = cfg.display().to_string();
    let v = json(&["simulate", "--config", &c, "--nsim", "40"]);
    assert_eq!(v["config"]["n_sim"], 40);
    assert_eq!(v["config"]["seed"], 3);
    assert_eq!(v["cells"].as_array().unwrap().len(), 4);

    std::fs::write(&cfg, r#"{"n_sim": 50, "colour": "blue"}"#).unwrap();
    assert_eq!(run(&["simulate", "--config", &c]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--nsim", "0"]).status.code(), Some(2));
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let a = run(&["simulate", "--nsim", "300", "--seed", "9", "--format", "csv"]);
    let b = run(&["simulate", "--nsim", "300", "--seed", "9", "--format", "csv"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["simulate", "--nsim", "300", "--seed", "10", "--format", "csv"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn replications_csv_has_one_row_per_draw() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reps.csv");
    let p = path.display().to_string();
    let o = run(&[
        "simulate",
        "--nsim",
        "25",
        "--methods",
        "harmonic,twotrials",
        "--replications",
        &p,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 2 * 25);
}

#[test]
fn superiority_spot_rows() {
    let v = json(&["superiority", "--powers", "0.166,0.5,0.7"]);
    let rows = v["rows"].as_array().unwrap();
    assert!((rows[0]["p_inferior"].as_f64().unwrap() - 0.5).abs() < 0.005);
    assert_eq!(rows[2]["p_inferior"].as_f64().unwrap(), 0.0);
    assert!((v["crossover_p1"].as_f64().unwrap() - 0.009).abs() < 0.0005);
    assert!((v["zero_inferior_power"].as_f64().unwrap() - 0.661).abs() < 0.003);
    assert_eq!(run(&["superiority", "--powers", "1.5"]).status.code(), Some(2));
}

#[test]
fn figure_csvs_have_headers_and_spot_rows() {
    let o = run(&[
        "figures", "bounds", "--points", "5", "--p1-min", "1e-8", "--p1-max", "0.1", "--format", "csv",
    ]);
    let text = stdout(&o);
    assert!(text.starts_with("p1,method,bound,status\n"));
    assert!(text.contains("fisher,1,no_trial_required"));
    assert!(text.contains("two_trials,,unattainable"));

    let o = run(&["figures", "variance-ratio", "--points", "4", "--format", "csv"]);
    let text = stdout(&o);
    assert!(text.starts_with("p1,shrinkage,method,c\n"));
    let c_at = |s: &str| -> f64 {
        let line = text
            .lines()
            .find(|l| l.starts_with("0.00001,") && l.contains(&format!(",{s},two_trials,")))
            .unwrap();
        line.rsplit(',').next().unwrap().parse().unwrap()
    };
    assert!((c_at("0.5") / c_at("0") - 4.0).abs() < 1e-12);

    let o = run(&["figures", "superiority", "--points", "5", "--format", "csv"]);
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn casestudy_flags_the_p2_discrepancy() {
    let o = run(&["casestudy"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("two-sided"));
    assert!(out.contains("590"));
    let v = json(&["casestudy"]);
    assert!((v["stouffer_bound"].as_f64().unwrap() - 0.999976).abs() < 1e-5);
    assert_eq!(v["fisher_needs_no_trial"], true);
}

#[test]
fn out_flag_writes_the_rendering_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("combine.csv");
    let p = path.display().to_string();
    let o = run(&["combine", "--z1", "3", "--z2", "2", "--format", "csv", "--out", &p]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("method,decision,combined_p,bound_p2,bound_status"));
}

#[test]
fn tables_use_four_significant_digits() {
    let out = stdout(&run(&[
        "combine", "--method", "harmonic", "--z1", "8.6", "--z2", "2.49",
    ]));
    assert!(out.contains("0.06232"), "{out}");
}
