use condapprove::design::{size_relative, variance_ratio};
use condapprove::evidence::{combine, harmonic_post_bound};
use condapprove::interim::{belief, interim_power};
use condapprove::simulate::{run_study, SimulationConfig, SimulationReport};
use condapprove::{
    BeliefKind, DesignParamsF32, DesignParamsF64, InterimStateF32, InterimStateF64, Method, PostBound, TrialSummaryF32,
    TrialSummaryF64, WeightPairF32, WeightPairF64,
};

#[test]
fn f32_and_f64_agree_to_single_precision() {
    let (t1, t2) = (
        TrialSummaryF64::from_z(3.1).unwrap(),
        TrialSummaryF64::from_z(2.2).unwrap(),
    );
    let (s1, s2) = (
        TrialSummaryF32::from_z(3.1).unwrap(),
        TrialSummaryF32::from_z(2.2).unwrap(),
    );
    let w64 = WeightPairF64::pre_market_60();
    let w32 = WeightPairF32::pre_market_60();
    for m in Method::ALL {
        let a = combine(m, &t1, &t2, &w64, 0.025 * 0.025, 0.025).unwrap();
        let b = combine(m, &s1, &s2, &w32, 0.025_f32 * 0.025, 0.025).unwrap();
        assert_eq!(a.significant, b.significant, "{m}");
        if let (PostBound::Level(x), PostBound::Level(y)) = (a.bound_p2, b.bound_p2) {
            assert!((x - y as f64).abs() < 1e-5 * x.max(1e-3), "{m}: {x} vs {y}");
        }
    }

    let r64 = size_relative(Method::HarmonicUnweighted, 3.1, 85, &w64, &DesignParamsF64::default()).unwrap();
    let r32 = size_relative(
        Method::HarmonicUnweighted,
        3.1_f32,
        85,
        &w32,
        &DesignParamsF32::default(),
    )
    .unwrap();
    assert!((r64.c - r32.c as f64).abs() < 1e-5);
    assert_eq!(r64.n2_per_group, r32.n2_per_group);

    let s64 = InterimStateF64::at_half(0.8, 120, 1.0).unwrap();
    let s32 = InterimStateF32::at_half(0.8, 120, 1.0).unwrap();
    let b64 = belief(BeliefKind::InformedPredictive, 3.1, 85, 0.0, &s64).unwrap();
    let b32 = belief(BeliefKind::InformedPredictive, 3.1_f32, 85, 0.0, &s32).unwrap();
    let p64 = interim_power(&s64, &b64, 1.9);
    let p32 = interim_power(&s32, &b32, 1.9_f32);
    assert!((p64 - p32 as f64).abs() < 1e-5);
}

#[test]
fn sizing_at_the_bound_delivers_the_target_power() {
    // A trial sized for power 0.9 at z̄2 has conditional power 0.9 when the
    // true standardized effect equals the pre-market estimate.
    let w = WeightPairF64::unweighted();
    let z1 = 2.8;
    let (z_bar, _) = harmonic_post_bound(z1, &w, 0.025 * 0.025).unwrap();
    let c = variance_ratio(z1, z_bar, 0.9, 0.0).unwrap();
    let expected_z2 = z1 * c.sqrt();
    let power = 1.0 - condapprove::specialfn::std_normal_cdf(z_bar - expected_z2).unwrap();
    assert!((power - 0.9).abs() < 1e-10);
}

#[test]
fn report_survives_a_json_round_trip() {
    let cfg = SimulationConfig {
        n_sim: 200,
        seed: 11,
        ..SimulationConfig::default()
    };
    let report = run_study(&cfg).unwrap();
    let text = report.to_json().unwrap();
    assert!(text.contains("\"schema_version\": 1"));
    assert_eq!(SimulationReport::from_json(&text).unwrap(), report);
}

#[test]
fn configuration_rejects_unknown_keys() {
    assert!(SimulationConfig::from_json(r#"{"n_sim": 10}"#).is_ok());
    assert!(SimulationConfig::from_json(r#"{"n_sims": 10}"#).is_err());
}
