//! Control runs for the exponent fit: the shrinking sphere, the `γ = 1`
//! borderline case and the linear-growth (Type-III) cone.

use serde::{Deserialize, Serialize};

use crate::error::{McfError, Result};
use crate::evolve::{evolve, step, Boundary, PatchedProfile, SolverConfig, Trajectory};
use crate::formal::exterior_y;
use crate::geometry::{curvatures, Chart, Encoding, FlowParams, FlowState};
use crate::numerics::{geomspace, LineFit};
use crate::soliton::SolitonProfile;

use super::fit_loglog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereControl {
    /// Slope of `log sup|h|` against `log(T − t)`; exactly `−1/2`.
    pub fit: LineFit,
    pub decades: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Shrink the lower cap of the unit sphere in `X(r)` with exact Dirichlet
/// data at `r = r_b` and fit the curvature against the time to extinction.
pub fn sphere_blowup_control(n: u32, nodes: usize, r_b: f64) -> Result<SphereControl> {
    let params = FlowParams::new(n, 1.0, 1.0)?;
    let nf = n as f64;
    let extinction = 1.0 / (2.0 * nf);
    let radius = move |t: f64| (1.0 - 2.0 * nf * t).max(0.0).sqrt();
    let r: Vec<f64> = (0..nodes).map(|i| r_b * i as f64 / (nodes - 1) as f64).collect();
    let x = r.iter().map(|r| -(1.0 - r * r).sqrt()).collect();
    let mut st = FlowState::new(Chart::XOfRUnscaled, 0.0, r, x)?;
    let cfg = SolverConfig { chart: Chart::XOfRUnscaled, tol: 1e-7, dtau: 1e-6, dtau_max: 1e-3, ..Default::default() };
    let bc = move |t: f64| Boundary::Dirichlet(-(radius(t).powi(2) - r_b * r_b).max(0.0).sqrt());
    // stop while the cap still holds a quarter circle's worth of resolution
    let last_gap = 2.0 * r_b * r_b / nf;
    let targets: Vec<f64> = geomspace(0.5 * extinction, last_gap, 25).into_iter().map(|g| extinction - g).collect();
    let mut dt = cfg.dtau;
    let mut samples = Vec::with_capacity(targets.len());
    for target in targets {
        while st.time < target - 1e-15 {
            let out = step(&st, dt, target - st.time, &params, &cfg, &bc)?;
            dt = out.dt_next;
            st = out.state;
        }
        samples.push((extinction - st.time, curvatures(&st, &params)?.record.sup_h));
    }
    let (gap, h): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let (fit, decades) = fit_loglog(&gap, &h, 10, 1.5)?;
    Ok(SphereControl { fit, decades, samples })
}

/// Patched bowl/exterior data at `τ₀` evolved without barriers.
pub fn patched_run(
    params: &FlowParams,
    profile: &SolitonProfile,
    tau0: f64,
    r1: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let patched = PatchedProfile::new(*params, tau0, r1, profile);
    if cfg.phi_max <= 10.0 * patched.corner {
        return Err(McfError::Range {
            field: "solver.phi_max".into(),
            reason: format!("must exceed 10·R₁e^(−γτ₀) = {}", 10.0 * patched.corner),
        });
    }
    let state = patched.smoothed_state(cfg)?;
    evolve(&state, params, cfg, None)
}

/// `γ = 0`: start from the cone-like `y = C₁(φ²+n−1)^{1/2}` at `τ = 0`.
pub fn linear_growth_run(n: u32, a_tilde: f64, cfg: &SolverConfig) -> Result<Trajectory> {
    let params = FlowParams::linear_growth_control(n, a_tilde)?;
    if cfg.chart != Chart::YOfPhi {
        return Err(McfError::Range { field: "solver.chart".into(), reason: "the linear-growth control runs in Y_OF_PHI".into() });
    }
    let nodes = cfg.grid(params.gamma);
    let c1 = params.c1();
    let y: Vec<f64> = nodes.iter().map(|&x| exterior_y(x, c1, &params)[0]).collect();
    let offset = y[0];
    let mut state = FlowState::new(Chart::YOfPhi, 0.0, nodes, y.iter().map(|v| v - offset).collect())?;
    state.encoding = Encoding { offset, scale: 1.0 };
    evolve(&state, &params, cfg, None)
}
