use std::path::PathBuf;

use clap::Args;
use condapprove::casestudy::run_case_study;
use condapprove::design::{reduction, size_for_effect, size_relative, sizing_target, DesignParams};
use condapprove::evidence::{combine as combine_trials, PostBound, TrialSummary, WeightPair};
use condapprove::figures;
use condapprove::interim::{belief, futility_decision, interim_power, BeliefKind, InterimState};
use condapprove::simulate::{run_study, run_study_with_records, write_replications_csv, SimulationConfig};
use condapprove::specialfn::std_normal_sf;
use condapprove::superiority::{crossover_b_weighted, half_inferior_power, superiority_curve, zero_inferior_power};
use condapprove::Method;
use serde_json::{json, Value};

use crate::output::{Cell, Output};
use crate::{AppError, BeliefArg, Ctx, FigureArg, LevelArgs, MethodArg, PreMarketArgs};

type CmdResult = Result<Output, AppError>;

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

fn trial(index: u8, z: Option<f64>, p: Option<f64>) -> Result<TrialSummary<f64>, AppError> {
    let t = match (z, p) {
        (Some(z), Some(p)) => TrialSummary::from_z_and_p(z, p),
        (Some(z), None) => TrialSummary::from_z(z),
        (None, Some(p)) => TrialSummary::from_p(p),
        (None, None) => return Err(usage(format!("one of --z{index} or --p{index} is required"))),
    };
    t.map_err(|e| usage(e.to_string()))
}

fn pre_market(pre: &PreMarketArgs) -> Result<TrialSummary<f64>, AppError> {
    trial(1, pre.z1, pre.p1)
}

struct Levels {
    alpha: f64,
    gamma: f64,
    weights: WeightPair<f64>,
}

impl LevelArgs {
    fn resolve(&self, default_weights: WeightPair<f64>) -> Result<Levels, AppError> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(usage(format!("--alpha must lie in (0, 0.5), got {}", self.alpha)));
        }
        let gamma = self.gamma.unwrap_or(self.alpha * self.alpha);
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(usage(format!("--gamma must lie in (0, 1), got {gamma}")));
        }
        let weights = match self.weights {
            Some((w1, w2)) => WeightPair::new(w1, w2).map_err(|e| usage(e.to_string()))?,
            None => default_weights,
        };
        Ok(Levels {
            alpha: self.alpha,
            gamma,
            weights,
        })
    }
}

fn weights_json(w: &WeightPair<f64>) -> Value {
    json!({ "w1": w.w1(), "w2": w.w2() })
}

fn bound_cells(b: &PostBound<f64>) -> (Cell, Cell) {
    match b {
        PostBound::Level(v) => (Cell::Num(*v), "level".into()),
        PostBound::NoTrialRequired => (Cell::Empty, "no trial required".into()),
        PostBound::Unattainable => (Cell::Empty, "unattainable".into()),
    }
}

pub fn combine(
    pre: &PreMarketArgs,
    z2: Option<f64>,
    p2: Option<f64>,
    method: MethodArg,
    levels: &LevelArgs,
) -> CmdResult {
    let t1 = pre_market(pre)?;
    let t2 = trial(2, z2, p2)?;
    let lv = levels.resolve(WeightPair::pre_market_60())?;
    let outcomes = method
        .methods(&Method::ALL)
        .into_iter()
        .map(|m| combine_trials(m, &t1, &t2, &lv.weights, lv.gamma, lv.alpha))
        .collect::<condapprove::Result<Vec<_>>>()?;

    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for o in &outcomes {
        if o.bound_p2 == PostBound::NoTrialRequired {
            warnings.push(format!(
                "warning: {}: post-market trial not required; p1 alone meets the criterion",
                o.method
            ));
        }
        if o.direction_violation {
            warnings.push(format!(
                "warning: {}: both z-values must be positive for the harmonic test; reported as not significant",
                o.method
            ));
        }
        let (bound, status) = bound_cells(&o.bound_p2);
        let decision = if o.significant {
            "significant"
        } else {
            "not significant"
        };
        rows.push(vec![
            o.method.label().into(),
            decision.into(),
            o.combined_p.into(),
            bound,
            status,
        ]);
    }
    let json = json!({
        "z1": t1.z, "p1": t1.p, "z2": t2.z, "p2": t2.p,
        "alpha": lv.alpha, "gamma": lv.gamma,
        "weights": weights_json(&lv.weights),
        "outcomes": outcomes,
        "warnings": warnings,
    });
    let mut out = Output::new(
        &["method", "decision", "combined_p", "bound_p2", "bound_status"],
        rows,
        json,
    );
    out.notes = warnings;
    Ok(out)
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pre: PreMarketArgs,
    /// `all` sizes the two-trials rule and both harmonic variants.
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    method: MethodArg,
    /// Pre-market patients per group; sizes relative to the pre-market trial.
    #[arg(long)]
    n1: Option<u64>,
    /// Standardized effect θ/σ; sizes from the effect at the adaptive level.
    #[arg(long)]
    effect: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    power: f64,
    #[arg(long, default_value_t = 0.0)]
    shrinkage: f64,
    /// σ2 / σ1.
    #[arg(long, default_value_t = 1.0)]
    sd_ratio: f64,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[command(flatten)]
    levels: LevelArgs,
}

const TABLE_METHODS: [Method; 3] = [Method::TwoTrials, Method::HarmonicUnweighted, Method::HarmonicWeighted];

pub fn design(a: &DesignArgs) -> CmdResult {
    let t1 = pre_market(&a.pre)?;
    if t1.z <= 0.0 {
        return Err(usage(format!("design needs z1 > 0, got {}", t1.z)));
    }
    if a.n1.is_none() && a.effect.is_none() {
        return Err(usage(
            "give --n1 (relative sizing), --effect (effect-based sizing) or both",
        ));
    }
    let lv = a.levels.resolve(WeightPair::pre_market_60())?;
    let params = DesignParams {
        alpha: lv.alpha,
        gamma: lv.gamma,
        power: a.power,
        shrinkage: a.shrinkage,
        sd_ratio_sq: a.sd_ratio * a.sd_ratio,
        dropout: a.dropout,
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    let methods = a.method.methods(&TABLE_METHODS);
    // Savings are only meaningful when the two-trials rule can still succeed.
    let two_trials_viable = t1.p <= lv.alpha;

    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    if let Some(n1) = a.n1 {
        let reference = size_relative(Method::TwoTrials, t1.z, n1, &lv.weights, &params)?.n2_total_with_dropout;
        for &m in &methods {
            let s = size_relative(m, t1.z, n1, &lv.weights, &params)?;
            let red = two_trials_viable.then(|| reduction(s.n2_total_with_dropout, reference));
            rows.push(vec![
                "relative".into(),
                m.label().into(),
                s.level.into(),
                s.c.into(),
                s.n2_per_group.into(),
                s.n2_total.into(),
                s.n2_total_with_dropout.into(),
                red.into(),
            ]);
            let mut v = serde_json::to_value(s).expect("sizing serializes");
            v["basis"] = json!("relative");
            v["reduction"] = json!(red);
            json_rows.push(v);
        }
    }
    if let Some(effect) = a.effect {
        let reference = size_for_effect(Method::TwoTrials, t1.z, effect, &lv.weights, &params)?.n_total_with_dropout;
        for &m in &methods {
            let s = size_for_effect(m, t1.z, effect, &lv.weights, &params)?;
            let red = two_trials_viable.then(|| reduction(s.n_total_with_dropout, reference));
            rows.push(vec![
                "effect".into(),
                m.label().into(),
                s.level.into(),
                Cell::Empty,
                s.n_per_group.into(),
                s.n_total.into(),
                s.n_total_with_dropout.into(),
                red.into(),
            ]);
            let mut v = serde_json::to_value(s).expect("sizing serializes");
            v["basis"] = json!("effect");
            v["reduction"] = json!(red);
            json_rows.push(v);
        }
    }
    let json = json!({
        "z1": t1.z, "p1": t1.p, "n1": a.n1, "effect": a.effect,
        "params": params,
        "weights": weights_json(&lv.weights),
        "sizing": json_rows,
    });
    Ok(Output::new(
        &[
            "basis",
            "method",
            "level",
            "c",
            "n_per_group",
            "n_total",
            "n_total_dropout",
            "reduction",
        ],
        rows,
        json,
    ))
}

#[derive(Debug, Args)]
pub struct InterimArgs {
    #[command(flatten)]
    pre: PreMarketArgs,
    /// Pre-market patients per group.
    #[arg(long)]
    n1: u64,
    /// z-value of the post-market trial at the interim look.
    #[arg(long, allow_negative_numbers = true)]
    z2i: f64,
    /// Information fraction at the look.
    #[arg(long, default_value_t = 0.5)]
    f: f64,
    /// Planned post-market patients per group.
    #[arg(long)]
    n2: u64,
    /// Rule whose final threshold the trial must clear.
    #[arg(long, value_enum, default_value_t = MethodArg::Harmonic)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = BeliefArg::All)]
    belief: BeliefArg,
    /// Stop for futility below this power.
    #[arg(long, default_value_t = condapprove::interim::DEFAULT_FUTILITY_THRESHOLD)]
    threshold: f64,
    /// Shrinkage of the pre-market estimate under the conditional belief.
    #[arg(long, default_value_t = 0.0)]
    shrinkage: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[command(flatten)]
    levels: LevelArgs,
}

pub fn interim(a: &InterimArgs) -> CmdResult {
    let t1 = pre_market(&a.pre)?;
    let lv = a.levels.resolve(WeightPair::pre_market_60())?;
    let method = match a.method.methods(&[]).as_slice() {
        [m] => *m,
        _ => return Err(usage("interim needs a single --method")),
    };
    if !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(usage(format!("--threshold must lie in (0, 1), got {}", a.threshold)));
    }
    let state = InterimState::new(a.z2i, a.f, a.n2, a.sigma).map_err(|e| usage(e.to_string()))?;
    let threshold_z = sizing_target(method, t1.z, &lv.weights, lv.alpha, lv.gamma)?.target_z;
    let kinds = match a.belief {
        BeliefArg::Cp => vec![BeliefKind::Conditional],
        BeliefArg::Pp => vec![BeliefKind::Predictive],
        BeliefArg::Ipp => vec![BeliefKind::InformedPredictive],
        BeliefArg::All => vec![
            BeliefKind::Conditional,
            BeliefKind::Predictive,
            BeliefKind::InformedPredictive,
        ],
    };
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for kind in kinds {
        let b = belief(kind, t1.z, a.n1, a.shrinkage, &state)?;
        let power = interim_power(&state, &b, threshold_z);
        let stop = futility_decision(power, a.threshold);
        let verdict = if stop { "stop" } else { "continue" };
        rows.push(vec![
            kind.label().into(),
            b.mean.into(),
            b.variance.into(),
            power.into(),
            verdict.into(),
        ]);
        json_rows.push(json!({
            "belief": kind, "mean": b.mean, "variance": b.variance, "power": power, "futility_stop": stop,
        }));
    }
    let json = json!({
        "z1": t1.z, "n1": a.n1, "z2i": a.z2i, "n2i": state.n2i(), "n2": a.n2,
        "fraction": state.fraction(), "method": method, "final_threshold_z": threshold_z,
        "futility_threshold": a.threshold, "results": json_rows,
    });
    let mut out = Output::new(&["belief", "mean", "variance", "power", "decision"], rows, json);
    out.notes.push(format!(
        "interim look at {} of {} per group; final z must exceed {:.4} under {}",
        state.n2i(),
        a.n2,
        threshold_z,
        method
    ));
    Ok(out)
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nsim: Option<u64>,
    /// Comma-separated methods (twotrials, harmonic, harmonic-weighted).
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<MethodArg>>,
    #[arg(long)]
    shrinkage: Option<f64>,
    #[arg(long)]
    interim_fraction: Option<f64>,
    #[arg(long)]
    futility_threshold: Option<f64>,
    /// Directory receiving report.json and summary.csv.
    #[arg(long)]
    report_dir: Option<PathBuf>,
    /// Per-replication CSV.
    #[arg(long)]
    replications: Option<PathBuf>,
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), AppError> {
    std::fs::write(path, bytes).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))
}

pub fn simulate(a: &SimulateArgs, ctx: &Ctx) -> CmdResult {
    let mut config = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            SimulationConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => SimulationConfig::default(),
    };
    if let Some(n) = a.nsim {
        config.n_sim = n;
    }
    if let Some(seed) = ctx.seed {
        config.seed = seed;
    }
    if let Some(ms) = &a.methods {
        let mut methods = Vec::new();
        for m in ms {
            methods.extend(m.methods(&[Method::HarmonicUnweighted, Method::HarmonicWeighted, Method::TwoTrials]));
        }
        config.methods = methods;
    }
    if let Some(s) = a.shrinkage {
        config.shrinkage = s;
    }
    if let Some(f) = a.interim_fraction {
        config.interim_fraction = f;
    }
    if let Some(t) = a.futility_threshold {
        config.futility_threshold = t;
    }
    config.validate().map_err(|e| usage(e.to_string()))?;

    let report = match &a.replications {
        Some(path) => {
            let (report, records) = run_study_with_records(&config)?;
            let mut buf = Vec::new();
            write_replications_csv(&config, &records, &mut buf)?;
            write_file(path, &buf)?;
            report
        }
        None => run_study(&config)?,
    };
    let json_text = report.to_json()? + "\n";
    let csv_text = report.tidy_csv()?;
    if let Some(dir) = &a.report_dir {
        std::fs::create_dir_all(dir).map_err(|e| AppError::Io(format!("{}: {e}", dir.display())))?;
        write_file(&dir.join("report.json"), json_text.as_bytes())?;
        write_file(&dir.join("summary.csv"), csv_text.as_bytes())?;
        eprintln!(
            "wrote {} and {}",
            dir.join("report.json").display(),
            dir.join("summary.csv").display()
        );
    }

    let rows = report
        .cells
        .iter()
        .map(|c| {
            vec![
                c.scenario.clone().into(),
                c.method.short_label().into(),
                (100.0 * c.rejection_rate).into(),
                (100.0 * c.mc_se).into(),
                c.median_n2.into(),
                c.median_c.into(),
                c.max_n2.into(),
                c.analytic_max_n2.into(),
                (100.0 * c.futility_stop_rate).into(),
            ]
        })
        .collect();
    let mut out = Output::new(
        &[
            "scenario",
            "method",
            "reject_%",
            "mc_se_%",
            "median_n2",
            "median_c",
            "max_n2",
            "sup_n2",
            "futility_stop_%",
        ],
        rows,
        Value::Null,
    );
    out.json_text = Some(json_text);
    out.csv = Some(csv_text);
    out.notes
        .push(format!("n_sim = {} per cell, seed = {}", config.n_sim, config.seed));
    Ok(out)
}

#[derive(Debug, Args)]
pub struct SuperiorityArgs {
    /// Comma-separated pre-market powers; overrides the grid flags.
    #[arg(long, value_delimiter = ',')]
    powers: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.01)]
    from: f64,
    #[arg(long, default_value_t = 0.99)]
    to: f64,
    #[arg(long, default_value_t = 99)]
    points: usize,
    #[command(flatten)]
    levels: LevelArgs,
}

fn power_grid(powers: &Option<Vec<f64>>, from: f64, to: f64, points: usize) -> Result<Vec<f64>, AppError> {
    let grid = match powers {
        Some(p) => p.clone(),
        None => figures::linear_grid(from, to, points),
    };
    if grid.is_empty() || grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(usage("pre-market powers must lie in (0, 1)"));
    }
    Ok(grid)
}

fn region_rows(rows: &[condapprove::ComparisonRegionsF64]) -> Vec<Vec<Cell>> {
    rows.iter()
        .map(|r| {
            vec![
                r.power_pre.into(),
                r.p_superior.into(),
                r.p_inferior.into(),
                r.p_inconclusive_smaller_n.into(),
                r.p_inconclusive_larger_power.into(),
            ]
        })
        .collect()
}

const REGION_HEADER: [&str; 5] = [
    "power_pre",
    "p_superior",
    "p_inferior",
    "p_inconclusive_smaller_n",
    "p_inconclusive_larger_power",
];

pub fn superiority(a: &SuperiorityArgs) -> CmdResult {
    let lv = a.levels.resolve(WeightPair::unweighted())?;
    let grid = power_grid(&a.powers, a.from, a.to, a.points)?;
    let rows = superiority_curve(&grid, &lv.weights, lv.alpha, lv.gamma)?;
    let b = crossover_b_weighted(&lv.weights, lv.alpha, lv.gamma)?;
    let p1_cross = std_normal_sf(b)?;
    let zero_inf = zero_inferior_power(&lv.weights, lv.alpha, lv.gamma)?;
    let half_inf = half_inferior_power(&lv.weights, lv.alpha, lv.gamma)?;
    let json = json!({
        "alpha": lv.alpha, "gamma": lv.gamma, "weights": weights_json(&lv.weights),
        "crossover_z1": b, "crossover_p1": p1_cross,
        "zero_inferior_power": zero_inf, "half_inferior_power": half_inf,
        "rows": rows,
    });
    let mut out = Output::new(&REGION_HEADER, region_rows(&rows), json);
    out.csv = Some(figures::superiority_csv(&rows)?);
    out.notes.push(format!(
        "harmonic needs the smaller trial iff p1 < {p1_cross:.4} (z1 > {b:.4})"
    ));
    out.notes.push(format!(
        "never inferior above pre-market power {zero_inf:.4}; inferior with probability 1/2 at {half_inf:.4}"
    ));
    Ok(out)
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    #[arg(value_enum)]
    which: FigureArg,
    /// Grid size along the x-axis.
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 1e-5)]
    p1_min: f64,
    #[arg(long, default_value_t = 0.1)]
    p1_max: f64,
    /// Conditional power for the variance-ratio curves.
    #[arg(long, default_value_t = 0.9)]
    power: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5])]
    shrinkages: Vec<f64>,
    #[command(flatten)]
    levels: LevelArgs,
}

pub fn figures(a: &FiguresArgs) -> CmdResult {
    if a.points == 0 {
        return Err(usage("--points must be at least 1"));
    }
    if a.which == FigureArg::Superiority {
        let lv = a.levels.resolve(WeightPair::unweighted())?;
        let grid = figures::linear_grid(0.01, 0.99, a.points);
        let rows = superiority_curve(&grid, &lv.weights, lv.alpha, lv.gamma)?;
        let mut out = Output::new(&REGION_HEADER, region_rows(&rows), json!(rows));
        out.csv = Some(figures::superiority_csv(&rows)?);
        return Ok(out);
    }
    if !(a.p1_min > 0.0 && a.p1_min < a.p1_max && a.p1_max < 1.0) {
        return Err(usage("need 0 < --p1-min < --p1-max < 1"));
    }
    let lv = a.levels.resolve(WeightPair::pre_market_60())?;
    let grid = figures::log_grid(a.p1_min, a.p1_max, a.points);
    match a.which {
        FigureArg::Bounds => {
            let pts = figures::bound_curve(&grid, &lv.weights, lv.alpha, lv.gamma)?;
            let rows = pts
                .iter()
                .map(|p| {
                    let (bound, status) = bound_cells(&p.bound);
                    vec![p.p1.into(), p.method.label().into(), bound, status]
                })
                .collect();
            let mut out = Output::new(&["p1", "method", "bound", "status"], rows, json!(pts));
            out.csv = Some(figures::bound_csv(&pts)?);
            Ok(out)
        }
        FigureArg::VarianceRatio => {
            let pts = figures::variance_ratio_curve(&grid, &a.shrinkages, &lv.weights, lv.alpha, lv.gamma, a.power)?;
            let rows = pts
                .iter()
                .map(|p| vec![p.p1.into(), p.shrinkage.into(), p.method.label().into(), p.c.into()])
                .collect();
            let mut out = Output::new(&["p1", "shrinkage", "method", "c"], rows, json!(pts));
            out.csv = Some(figures::variance_ratio_csv(&pts)?);
            Ok(out)
        }
        FigureArg::Superiority => unreachable!("handled above"),
    }
}

pub fn casestudy() -> CmdResult {
    let r = run_case_study()?;
    let mut rows: Vec<Vec<Cell>> = vec![
        vec![
            "pre-market responders (treatment)".into(),
            format!("{}/{}", r.pre_counts.0, r.pre_market.treatment.n).into(),
        ],
        vec![
            "pre-market responders (placebo)".into(),
            format!("{}/{}", r.pre_counts.1, r.pre_market.placebo.n).into(),
        ],
        vec![
            "post-market responders (treatment)".into(),
            format!("{}/{}", r.post_counts.0, r.post_market.treatment.n).into(),
        ],
        vec![
            "post-market responders (placebo)".into(),
            format!("{}/{}", r.post_counts.1, r.post_market.placebo.n).into(),
        ],
        vec!["z1".into(), r.pre_test.z.into()],
        vec!["p1 (one-sided)".into(), r.pre_test.p_one_sided.into()],
        vec!["z2".into(), r.post_test.z.into()],
        vec!["p2 (one-sided)".into(), r.post_test.p_one_sided.into()],
        vec!["p2 (two-sided)".into(), r.post_p_two_sided.into()],
    ];
    for o in &r.outcomes {
        let decision = if o.significant {
            "significant"
        } else {
            "not significant"
        };
        rows.push(vec![format!("{}: decision", o.method).into(), decision.into()]);
        let bound: Cell = match o.bound_p2 {
            PostBound::Level(v) => v.into(),
            PostBound::NoTrialRequired => "post-market trial not required".into(),
            PostBound::Unattainable => "unattainable".into(),
        };
        rows.push(vec![format!("{}: bound p2", o.method).into(), bound]);
    }
    for s in &r.sizing {
        let m = s.sizing.method;
        rows.push(vec![format!("{m}: level").into(), s.sizing.level.into()]);
        rows.push(vec![
            format!("{m}: total n with dropout").into(),
            s.sizing.n_total_with_dropout.into(),
        ]);
        rows.push(vec![format!("{m}: reduction").into(), s.reduction.into()]);
    }
    let json = serde_json::to_value(&r).expect("report serializes");
    let mut out = Output::new(&["quantity", "value"], rows, json);
    out.notes = r.notes.iter().map(|n| format!("note: {n}")).collect();
    Ok(out)
}
