//! Initial data patched from the interior and exterior formal solutions.

use serde::{Deserialize, Serialize};

use crate::barriers::{BarrierPair, Sign};
use crate::error::{McfError, Result};
use crate::formal::lambda_bar_increment;
use crate::geometry::{curvatures, Chart, Encoding, FlowParams, FlowState};
use crate::soliton::{f_of_z, SolitonProfile};

use super::SolverConfig;

/// The unsmoothed two-piece profile `λ̂₀` at `τ₀`, stored as
/// `λ̂₀ = offset + e^{−2γτ₀} w(φ)` with `offset = λ̂₀(0)`.
#[derive(Debug, Clone)]
pub struct PatchedProfile<'a> {
    pub params: FlowParams,
    pub tau0: f64,
    pub r1: f64,
    /// `C₀ = A − c(R₁²e^{−2γτ₀} + n−1)^{−(γ+1)/2}`.
    pub c0: f64,
    pub offset: f64,
    pub eps: f64,
    /// Corner location `R₁e^{−γτ₀}`.
    pub corner: f64,
    f_r1: f64,
    profile: &'a SolitonProfile,
}

impl<'a> PatchedProfile<'a> {
    pub fn new(params: FlowParams, tau0: f64, r1: f64, profile: &'a SolitonProfile) -> Self {
        let g = params.gamma;
        let eps = (-2.0 * g * tau0).exp();
        let corner = r1 * (-g * tau0).exp();
        let c0 = -params.c() * lambda_bar_increment(corner, &params);
        let f_r1 = f_of_z(profile, r1, params.a(), g)[0];
        let offset = -params.a() + c0 - eps * f_r1;
        Self { params, tau0, r1, c0, offset, eps, corner, f_r1, profile }
    }

    /// `(λ̂₀(φ) − offset)/ε`.
    pub fn scaled(&self, phi: f64) -> f64 {
        let phi = phi.abs();
        let z = phi * (self.params.gamma * self.tau0).exp();
        if z <= self.r1 {
            f_of_z(self.profile, z, self.params.a(), self.params.gamma)[0]
        } else {
            let p = &self.params;
            -p.c() * (lambda_bar_increment(phi, p) - lambda_bar_increment(self.corner, p)) / self.eps + self.f_r1
        }
    }

    pub fn lambda(&self, phi: f64) -> f64 {
        self.offset + self.eps * self.scaled(phi)
    }

    /// The profile sampled on the `λ`-chart grid of `cfg` with its corner
    /// smoothed. No barrier or convexity checks.
    pub fn smoothed_state(&self, cfg: &SolverConfig) -> Result<FlowState> {
        let mut grid_cfg = cfg.clone();
        grid_cfg.chart = Chart::LambdaOfPhi;
        let nodes = grid_cfg.grid(self.params.gamma);
        let mut values: Vec<f64> = nodes.iter().map(|&x| self.scaled(x)).collect();
        smooth_corner(&nodes, &mut values, &|x| self.scaled(x), self.corner, SMOOTHING * self.corner);
        let mut state = FlowState::new(Chart::LambdaOfPhi, self.tau0, nodes, values)?;
        state.encoding = Encoding { offset: self.offset, scale: self.eps };
        Ok(state)
    }
}

/// Smoothing radius relative to the corner location.
const SMOOTHING: f64 = 0.05;

/// Replace `values` near `corner` by the convolution of `f` with a
/// compactly supported bump of the given radius.
///
/// The convolution is blended in with a smooth cutoff that equals one on
/// `|φ − corner| ≤ radius` and vanishes beyond `2·radius`. `f` is evaluated
/// evenly (`f(|φ|)`), and each side of the corner is integrated separately.
pub fn smooth_corner(nodes: &[f64], values: &mut [f64], f: &dyn Fn(f64) -> f64, corner: f64, radius: f64) {
    const HALF: usize = 200;
    let bump = |s: f64| {
        let u = s / radius;
        if u.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - u * u)).exp()
        }
    };
    let simpson = |a: f64, b: f64, g: &dyn Fn(f64) -> f64| {
        if b <= a {
            return 0.0;
        }
        let h = (b - a) / (2 * HALF) as f64;
        let mut acc = g(a) + g(b);
        for k in 1..2 * HALF {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(a + k as f64 * h);
        }
        acc * h / 3.0
    };
    let norm = simpson(-radius, radius, &bump);
    let cutoff = |d: f64| {
        let t = (2.0 - d / radius).clamp(0.0, 1.0);
        if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            let a = (-1.0 / t).exp();
            let b = (-1.0 / (1.0 - t)).exp();
            a / (a + b)
        }
    };
    for (x, v) in nodes.iter().zip(values.iter_mut()) {
        let d = (x - corner).abs();
        if d >= 2.0 * radius {
            continue;
        }
        let g = |s: f64| f((x - s).abs()) * bump(s);
        // the kink of f(x − s) sits at s = x − corner
        let k = (x - corner).clamp(-radius, radius);
        let conv = (simpson(-radius, k, &g) + simpson(k, radius, &g)) / norm;
        let chi = cutoff(d);
        *v = (1.0 - chi) * *v + chi * conv;
    }
}

/// Smoothed initial data with its admissibility diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub state: FlowState,
    pub c0: f64,
    pub corner: f64,
    pub smoothing_radius: f64,
    /// `min(λ⁺ − λ̂₀)` and `min(λ̂₀ − λ⁻)` over the grid.
    pub margin_upper: f64,
    pub margin_lower: f64,
    /// `sup |λ⁺ − λ⁻|` at `τ₀`.
    pub barrier_gap: f64,
    /// `C = max 𝕽` over the grid.
    pub ratio_bound: f64,
    /// `𝕽` at the outer grid node.
    pub edge_ratio: f64,
    /// `100·C·R₁⁻⁴`, required below `(γ+½)Ã`.
    pub r1_condition: f64,
}

/// Patch, smooth and check initial data at `τ₀` on the grid of `cfg`, in
/// the `λ` chart.
pub fn make_initial_data(
    params: &FlowParams,
    pair: &BarrierPair,
    profile: &SolitonProfile,
    cfg: &SolverConfig,
) -> Result<InitialData> {
    let k = &pair.constants;
    let patched = PatchedProfile::new(*params, k.tau0, k.R1, profile);
    if cfg.phi_max <= 10.0 * patched.corner {
        return Err(McfError::Range {
            field: "solver.phi_max".into(),
            reason: format!("must exceed 10·R₁e^(−γτ₀) = {}", 10.0 * patched.corner),
        });
    }
    let state = patched.smoothed_state(cfg)?;
    let radius = SMOOTHING * patched.corner;

    let eps = patched.eps;
    let mut margin_upper = f64::INFINITY;
    let mut margin_lower = f64::INFINITY;
    let mut gap = 0.0f64;
    let mut worst = (0usize, Sign::Upper);
    for (i, (&x, &w)) in state.nodes.iter().zip(&state.values).enumerate() {
        let up = pair.upper.scaled_value(x, k.tau0, patched.offset)?;
        let lo = pair.lower.scaled_value(x, k.tau0, patched.offset)?;
        let (mu, ml) = (eps * (up - w), eps * (w - lo));
        if mu < margin_upper {
            margin_upper = mu;
            if mu <= ml.min(margin_lower) {
                worst = (i, Sign::Upper);
            }
        }
        if ml < margin_lower {
            margin_lower = ml;
            if ml <= margin_upper {
                worst = (i, Sign::Lower);
            }
        }
        gap = gap.max(eps * (up - lo).abs());
    }
    if !(margin_upper > 0.0 && margin_lower > 0.0) {
        return Err(McfError::Escape(format!(
            "initial data touches the {} barrier at node {} (margins {margin_upper:e}, {margin_lower:e}); \
             use a larger τ₀ or a smaller barriers.eps_c",
            worst.1.name(),
            worst.0
        )));
    }

    let gap_eps = pair.certificate.config.gap_eps;
    if gap >= gap_eps {
        return Err(McfError::Escape(format!(
            "barrier gap {gap} is not below barriers.gap_eps = {gap_eps}; use a smaller barriers.eps_c"
        )));
    }

    let curv = curvatures(&state, params)?;
    if curv.record.nonconvex_nodes > 0 {
        return Err(McfError::InvalidInput(format!(
            "initial data is not strictly convex at {} nodes",
            curv.record.nonconvex_nodes
        )));
    }
    let ratio_bound = curv.record.ratio_max;
    let last = curv.kappa1.len() - 1;
    let edge_ratio = curv.kappan[last] / curv.kappa1[last];
    let r1_condition = 100.0 * ratio_bound * k.R1.powi(-4);
    if r1_condition >= (params.gamma + 0.5) * params.a_tilde {
        return Err(McfError::Range {
            field: "barriers.r1".into(),
            reason: format!(
                "100·C·R₁⁻⁴ = {r1_condition} must stay below (γ+½)Ã = {}",
                (params.gamma + 0.5) * params.a_tilde
            ),
        });
    }
    Ok(InitialData {
        state,
        c0: patched.c0,
        corner: patched.corner,
        smoothing_radius: radius,
        margin_upper,
        margin_lower,
        barrier_gap: gap,
        ratio_bound,
        edge_ratio,
        r1_condition,
    })
}

/// A patched barrier sampled at time `tau` in the `λ` chart, with its
/// crossing corner smoothed like the initial data.
pub fn barrier_initial_state(pair: &BarrierPair, sign: Sign, tau: f64, nodes: Vec<f64>) -> Result<FlowState> {
    let b = pair.barrier(sign);
    let params = b.interior.params;
    let offset = b.value(0.0, tau)?;
    let eps = (-2.0 * params.gamma * tau).exp();
    let f = |x: f64| b.scaled_value(x, tau, offset).unwrap_or(f64::NAN);
    let mut values: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
    // locate the single crossing of the patch on [R₂, R₁] by bisection
    let (mut lo, mut hi) = (pair.constants.R2, pair.constants.R1);
    let g_lo = b.crossing(lo, tau)?;
    if g_lo * b.crossing(hi, tau)? < 0.0 {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if b.crossing(mid, tau)? * g_lo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let corner = 0.5 * (lo + hi) * (-params.gamma * tau).exp();
        smooth_corner(&nodes, &mut values, &f, corner, SMOOTHING * corner);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(McfError::Numerical(format!("{} barrier undefined at node {i}", sign.name())));
    }
    let mut st = FlowState::new(Chart::LambdaOfPhi, tau, nodes, values)?;
    st.encoding = Encoding { offset, scale: eps };
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_leaves_smooth_functions_nearly_unchanged() {
        let nodes: Vec<f64> = (0..401).map(|i| i as f64 * 0.01).collect();
        let f = |x: f64| x * x;
        let mut v: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
        smooth_corner(&nodes, &mut v, &f, 2.0, 0.1);
        // x² convolved with an even bump shifts by the bump's second moment only
        for (x, y) in nodes.iter().zip(&v) {
            assert!((y - f(*x)).abs() < 0.1 * 0.1, "{x}: {y}");
        }
    }

    #[test]
    fn smoothing_rounds_a_corner() {
        let nodes: Vec<f64> = (0..401).map(|i| i as f64 * 0.01).collect();
        let f = |x: f64| (x - 2.0).abs();
        let mut v: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
        smooth_corner(&nodes, &mut v, &f, 2.0, 0.1);
        let i = 200;
        assert!(v[i] > 0.0 && v[i] < 0.1);
        // unchanged far away
        assert_eq!(v[0], 2.0);
        assert_eq!(v[400], 2.0);
        // convex combination of convex pieces stays convex
        for j in 1..400 {
            assert!(v[j + 1] - 2.0 * v[j] + v[j - 1] > -1e-12, "node {j}");
        }
    }
}
