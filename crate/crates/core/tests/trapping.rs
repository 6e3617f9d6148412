use std::sync::{Arc, OnceLock};

use mcf_core::barriers::{construct_barriers, BarrierConfig, BarrierPair, Sign};
use mcf_core::evolve::{
    barrier_initial_state, evolve, lambda_values, make_initial_data, ordered_pair_test, PatchedProfile, SolverConfig,
};
use mcf_core::geometry::{curvatures, FlowParams};
use mcf_core::soliton::{solve_bowl, SolitonProfile};

struct Setup {
    params: FlowParams,
    profile: Arc<SolitonProfile>,
    pair: BarrierPair,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let params = FlowParams::new(2, 2.0, 1.0).unwrap();
        let profile = Arc::new(solve_bowl(2, 2000.0, 1e-10).unwrap());
        let pair = construct_barriers(&params, profile.clone(), &BarrierConfig::default()).unwrap();
        Setup { params, profile, pair }
    })
}

fn config(s: &Setup, window: f64) -> SolverConfig {
    SolverConfig { tau_end: s.pair.constants.tau0 + window, ..Default::default() }
}

#[test]
fn patched_profile_matches_its_two_formulas() {
    let s = setup();
    let p = &s.params;
    let k = &s.pair.constants;
    let patched = PatchedProfile::new(*p, k.tau0, k.R1, &s.profile);
    let (g, n) = (p.gamma, p.nf());
    let eps = (-2.0 * g * k.tau0).exp();
    let h = (g + 1.0) / 2.0;
    let exterior = |phi: f64| -p.c() * (phi * phi + n - 1.0).powf(-h);
    let c0 = p.a() - p.c() * (k.R1 * k.R1 * eps + n - 1.0).powf(-h);
    assert!((patched.c0 - c0).abs() < 1e-12 * c0.abs().max(1.0), "{} vs {c0}", patched.c0);
    // both pieces agree at the corner
    let corner = k.R1 * (-g * k.tau0).exp();
    let inner = -p.a() + c0;
    assert!((inner - exterior(corner)).abs() < 1e-12, "jump {}", inner - exterior(corner));
    for &phi in &[1.5 * corner, 3.0 * corner, 1.0, 5.0, 15.0] {
        let got = patched.lambda(phi);
        let want = exterior(phi);
        assert!((got - want).abs() < 1e-10 * want.abs(), "φ = {phi}: {got} vs {want}");
    }
    let below = patched.lambda(corner * (1.0 - 1e-9));
    let above = patched.lambda(corner * (1.0 + 1e-9));
    assert!((below - above).abs() < 1e-9, "jump {}", below - above);
}

#[test]
fn initial_data_lies_strictly_between_the_barriers() {
    let s = setup();
    let cfg = config(s, 5.0);
    let init = make_initial_data(&s.params, &s.pair, &s.profile, &cfg).unwrap();
    assert!(init.margin_upper > 0.0 && init.margin_lower > 0.0);
    let cfg_b = BarrierConfig::default();
    assert!(init.barrier_gap < cfg_b.gap_eps, "gap {} ≥ ε", init.barrier_gap);
    // the widest point is the tip, where λ± = −c±(n−1)^{−(γ+1)/2} to leading order
    let tip_gap = 2.0 * cfg_b.eps_c * s.params.a();
    assert!((init.barrier_gap - tip_gap).abs() < 1e-2 * tip_gap, "gap {} vs {tip_gap}", init.barrier_gap);
    assert!(init.r1_condition < (s.params.gamma + 0.5) * s.params.a_tilde);
    let lam = lambda_values(&init.state).unwrap();
    for (i, (&x, &l)) in init.state.nodes.iter().zip(&lam).enumerate() {
        let up = s.pair.upper.value(x, init.state.time).unwrap();
        let lo = s.pair.lower.value(x, init.state.time).unwrap();
        assert!(lo < l && l < up, "node {i}: {lo} < {l} < {up}");
    }
    let curv = curvatures(&init.state, &s.params).unwrap();
    assert_eq!(curv.record.nonconvex_nodes, 0);
}

#[test]
fn default_run_stays_trapped_and_convex() {
    let s = setup();
    let cfg = config(s, 5.0);
    let init = make_initial_data(&s.params, &s.pair, &s.profile, &cfg).unwrap();
    let traj = evolve(&init.state, &s.params, &cfg, Some(&s.pair)).unwrap();
    assert!(traj.trapped(), "margins {:?}", traj.margins.iter().map(|m| m.relative).collect::<Vec<_>>());
    for r in &traj.records {
        assert_eq!(r.nonconvex_nodes, 0, "t = {}", r.t);
        assert!(r.ratio_max <= 1.05 * init.ratio_bound.max(1.0), "ratio {} at t = {}", r.ratio_max, r.t);
    }
}

fn pair_config(s: &Setup) -> SolverConfig {
    SolverConfig { nodes: 801, ..config(s, 2.0) }
}

#[test]
fn shifted_copy_stays_above() {
    let s = setup();
    let cfg = pair_config(s);
    let a = make_initial_data(&s.params, &s.pair, &s.profile, &cfg).unwrap().state;
    let mut b = a.clone();
    // B = A + δλ̄ with λ̄ = −(φ² + n − 1)^{−(γ+1)/2} shifted up by δ|λ̄|
    let delta = 1e-3;
    let h = (s.params.gamma + 1.0) / 2.0;
    let lbar = |x: f64| -(x * x + s.params.nf() - 1.0).powf(-h);
    let base = lbar(0.0);
    b.encoding.offset -= delta * base;
    for (w, &x) in b.values.iter_mut().zip(&b.nodes) {
        *w -= delta * (lbar(x) - base) / b.encoding.scale;
    }
    let report = ordered_pair_test(&a, &b, &s.params, &cfg).unwrap();
    assert!(report.initial_gap > 0.0);
    assert!(report.passed, "min gap {:e} tol {:e}", report.min_gap, report.tol);
}

#[test]
fn sampled_barriers_stay_ordered() {
    let s = setup();
    let cfg = pair_config(s);
    let mut grid_cfg = cfg.clone();
    grid_cfg.chart = mcf_core::geometry::Chart::LambdaOfPhi;
    let nodes = grid_cfg.grid(s.params.gamma);
    let tau0 = s.pair.constants.tau0;
    let lo = barrier_initial_state(&s.pair, Sign::Lower, tau0, nodes.clone()).unwrap();
    let up = barrier_initial_state(&s.pair, Sign::Upper, tau0, nodes).unwrap();
    let report = ordered_pair_test(&lo, &up, &s.params, &cfg).unwrap();
    assert!(report.passed, "min gap {:e} tol {:e}", report.min_gap, report.tol);
}

#[test]
fn identical_data_has_zero_gap() {
    let s = setup();
    let cfg = pair_config(s);
    let a = make_initial_data(&s.params, &s.pair, &s.profile, &cfg).unwrap().state;
    let report = ordered_pair_test(&a, &a, &s.params, &cfg).unwrap();
    assert_eq!(report.initial_gap, 0.0);
    assert!(report.passed && report.min_gap.abs() <= report.tol);
}
