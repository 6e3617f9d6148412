use mcf_core::io::{from_json, parse_config, to_canonical_json};
use mcf_core::verify::*;
use proptest::prelude::*;

#[test]
fn bowl_gates_measure_the_two_laws() {
    let small = gate_bowl_small_w(1e-10);
    assert!(small.passed, "{small:?}");
    assert!(small.measured.unwrap() < 1e-4);
    // w²|P̃ − w²/2 + log w| → w²|K| with K ≈ −0.65, far above the bound
    let far = gate_bowl_far_field(1e-10);
    assert!(!far.passed);
    let m = far.measured.unwrap();
    assert!(m > 0.6 * 200.0 * 200.0 && m < 0.7 * 200.0 * 200.0, "{m}");
}

#[test]
fn sphere_curvature_converges_at_fourth_order_inside() {
    let p = sphere_curvature_order(101).unwrap();
    assert!(p > 3.5, "order {p}");
}

#[test]
fn supersolution_gate_passes_by_default() {
    let cfg = parse_config("", &[]).unwrap();
    let prof = mcf_core::soliton::solve_bowl(2, cfg.soliton.w_max, cfg.soliton.rel_tol).unwrap();
    let g = gate_supersolution(&prof, &cfg);
    assert!(g.passed, "{g:?}");
    let bad = parse_config("", &["supersolution.theta_plus=1.0".into()]).unwrap();
    assert!(!gate_supersolution(&prof, &bad).passed);
}

#[test]
fn report_groups_gates_by_criterion() {
    let cfg = parse_config("", &[]).unwrap();
    let report = VerifyReport { gates: gates_geometry(cfg.outputs.seed, &cfg.verify) };
    assert_eq!(report.criteria(), vec![(10, true)]);
    assert!(report.passed() && report.failures().is_empty());
    let back: VerifyReport = from_json(&to_canonical_json(&report).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn verify_section_is_validated() {
    let err = parse_config("[verify]\npair_nodes = 10\n", &[]).unwrap_err();
    assert!(err.to_string().contains("verify.pair_nodes"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn geometry_tolerances_hold_for_any_seed(seed in any::<u64>()) {
        let (charts, ratio) = geometry_samples(seed, 8).unwrap();
        prop_assert!(charts < 1e-12, "chart round trip {charts:e}");
        prop_assert!(ratio < 1e-10, "ratio scaling {ratio:e}");
    }
}
