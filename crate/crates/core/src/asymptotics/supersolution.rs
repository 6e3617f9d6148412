//! Tip supersolution `q⁺ = Q + L⁺/s` for the gradient equation near the tip,
//! with `s = e^{2γτ}/(2γ)` and `Q(z) = P̃′((γ+1)Ãz)`.

use serde::{Deserialize, Serialize};

use crate::error::{McfError, Result};
use crate::geometry::FlowParams;
use crate::numerics::{geomspace, integrate, DenseSolution, OdeOptions, OdeSystem};
use crate::soliton::SolitonProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupersolutionConfig {
    /// Width of `Σ_η = {0 ≤ z ≤ √(ηs)}`.
    pub eta: f64,
    /// `θ⁺`; `None` picks `−(C₁ + 2)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_plus: Option<f64>,
    pub s_min: f64,
    pub s_max: f64,
    pub z_nodes: usize,
    pub s_nodes: usize,
}

impl Default for SupersolutionConfig {
    fn default() -> Self {
        Self { eta: 0.05, theta_plus: None, s_min: 1.0, s_max: 1e4, z_nodes: 400, s_nodes: 50 }
    }
}

impl SupersolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let range = |field: &str, reason: String| Err(McfError::Range { field: format!("supersolution.{field}"), reason });
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return range("eta", format!("must be positive, got {}", self.eta));
        }
        if !(self.s_min > 0.0 && self.s_max > self.s_min) {
            return range("s_max", format!("need 0 < s_min < s_max, got {} and {}", self.s_min, self.s_max));
        }
        if self.z_nodes < 10 || self.s_nodes < 2 {
            return range("z_nodes", "grid too coarse".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport {
    pub eta: f64,
    pub theta_plus: f64,
    /// `sup_z |((γ−1)/2γ) Q′(z)|`
    pub c1: f64,
    /// `min ℬ[Q + L⁺/s]` over the grid on `Σ_η` with `z > 0`.
    pub min_b: f64,
    /// `min (s/z)·ℬ`, comparable with `−θ⁺ + ((γ−1)/2γ)Q′`.
    pub min_scaled_b: f64,
    pub worst_z: f64,
    pub worst_s: f64,
    /// `min_z (−θ⁺ + ((γ−1)/2γ)Q′(z))` on `[0, √(η s_max)]`.
    pub leading_min: f64,
    pub certified: bool,
}

impl SupersolutionReport {
    pub fn ensure(&self) -> Result<()> {
        if self.certified {
            return Ok(());
        }
        Err(McfError::Certification(format!(
            "ℬ[Q + L⁺/s] = {:e} at z = {}, s = {}; use a smaller eta or a larger −θ⁺",
            self.min_b, self.worst_z, self.worst_s
        )))
    }
}

/// `Q`, `Q′`, `Q″` at `z`.
fn q_jet(profile: &SolitonProfile, k: f64, z: f64) -> [f64; 3] {
    let [_, pw, pww] = profile.eval(k * z);
    [pw, k * pww, k * k * profile.third_derivative(k * z)]
}

/// `L′/(1+Q²) + ((n−1)/z − 2QQ′/(1+Q²)²) L = θ z²/2`.
struct Corrector<'a> {
    profile: &'a SolitonProfile,
    k: f64,
    n1: f64,
    theta: f64,
}

impl Corrector<'_> {
    fn m(&self, z: f64) -> (f64, f64) {
        let [q, q1, q2] = q_jet(self.profile, self.k, z);
        let d = 1.0 + q * q;
        let m = self.n1 / z - 2.0 * q * q1 / (d * d);
        let dm = -self.n1 / (z * z) - 2.0 * (q1 * q1 + q * q2) / (d * d) + 8.0 * q * q * q1 * q1 / (d * d * d);
        (m, dm)
    }
}

impl OdeSystem<1> for Corrector<'_> {
    fn rhs(&self, z: f64, y: &[f64; 1]) -> [f64; 1] {
        let q = q_jet(self.profile, self.k, z)[0];
        [(1.0 + q * q) * (0.5 * self.theta * z * z - self.m(z).0 * y[0])]
    }

    fn rhs_derivative(&self, z: f64, y: &[f64; 1], f: &[f64; 1]) -> [f64; 1] {
        let [q, q1, _] = q_jet(self.profile, self.k, z);
        let (m, dm) = self.m(z);
        let inner = 0.5 * self.theta * z * z - m * y[0];
        [2.0 * q * q1 * inner + (1.0 + q * q) * (self.theta * z - dm * y[0] - m * f[0])]
    }
}

/// `sup_z |((γ−1)/2γ) Q′(z)|`; `Q′ = k P̃″` with `P̃″ → 1/(n−1)` at infinity.
pub fn transport_bound(profile: &SolitonProfile, params: &FlowParams) -> f64 {
    let k = (params.gamma + 1.0) * params.a_tilde;
    let g = (params.gamma - 1.0) / (2.0 * params.gamma);
    let pww = |w: f64| profile.eval(w)[2];
    let grid = &profile.w_grid;
    let i = (0..grid.len()).max_by(|&a, &b| pww(grid[a]).total_cmp(&pww(grid[b]))).unwrap_or(0);
    // refine the tabulated maximum by ternary search on its neighbouring cells
    let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    for _ in 0..200 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if pww(a) < pww(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let sup = [pww(0.5 * (lo + hi)), pww(grid[i]), profile.far_field(profile.w_max)[2], 1.0 / (profile.n as f64 - 1.0)]
        .into_iter()
        .fold(0.0, f64::max);
    g.abs() * k * sup
}

fn solve_corrector(c: &Corrector, z_end: f64) -> Result<DenseSolution<1>> {
    let z0: f64 = 1e-4;
    let nf = c.n1 + 1.0;
    let l0 = c.theta * z0.powi(3) / (2.0 * (nf + 2.0));
    let opts = OdeOptions { rel_tol: 1e-10, abs_tol: 1e-14, initial_step: z0 * 0.1, max_step: 0.05, max_steps: 5_000_000 };
    integrate(c, z0, [l0], z_end, &opts)
}

/// `∂_z(q_z/(1+q²) + (n−1)q/z)` from the jet of `q`.
fn flux_derivative(n1: f64, z: f64, q: f64, q1: f64, q2: f64) -> f64 {
    let d = 1.0 + q * q;
    q2 / d - 2.0 * q * q1 * q1 / (d * d) + n1 * (q1 / z - q / (z * z))
}

pub fn tip_supersolution_check(
    profile: &SolitonProfile,
    params: &FlowParams,
    cfg: &SupersolutionConfig,
) -> Result<SupersolutionReport> {
    cfg.validate()?;
    if profile.n != params.n {
        return Err(McfError::InvalidInput(format!("bowl for n = {} used with n = {}", profile.n, params.n)));
    }
    let k = (params.gamma + 1.0) * params.a_tilde;
    let g = (params.gamma - 1.0) / (2.0 * params.gamma);
    let n1 = params.nf() - 1.0;
    let c1 = transport_bound(profile, params);
    let theta = cfg.theta_plus.unwrap_or(-(c1 + 2.0));
    let corrector = Corrector { profile, k, n1, theta };
    let z_end = (cfg.eta * cfg.s_max).sqrt();
    let sol = solve_corrector(&corrector, z_end * (1.0 + 1e-9))?;

    let mut rep = SupersolutionReport {
        eta: cfg.eta,
        theta_plus: theta,
        c1,
        min_b: f64::INFINITY,
        min_scaled_b: f64::INFINITY,
        worst_z: f64::NAN,
        worst_s: f64::NAN,
        leading_min: f64::INFINITY,
        certified: false,
    };
    for j in 1..=cfg.z_nodes {
        let z = z_end * j as f64 / cfg.z_nodes as f64;
        rep.leading_min = rep.leading_min.min(-theta + g * q_jet(profile, k, z)[1]);
    }
    for s in geomspace(cfg.s_min, cfg.s_max, cfg.s_nodes) {
        let z_max = (cfg.eta * s).sqrt();
        for j in 1..=cfg.z_nodes {
            let z = z_max * j as f64 / cfg.z_nodes as f64;
            let [q, q1, q2] = q_jet(profile, k, z);
            let l = if z <= sol.t_min() {
                theta * z.powi(3) / (2.0 * (params.nf() + 2.0))
            } else {
                sol.eval(z)[0][0]
            };
            let l1 = corrector.rhs(z, &[l])[0];
            let l2 = corrector.rhs_derivative(z, &[l], &[l1])[0];
            let (p, p1, p2) = (q + l / s, q1 + l1 / s, q2 + l2 / s);
            let b = -l / (s * s) + g * z / s * p1 - (flux_derivative(n1, z, p, p1, p2) - flux_derivative(n1, z, q, q1, q2));
            if b < rep.min_b {
                rep.min_b = b;
                rep.worst_z = z;
                rep.worst_s = s;
            }
            rep.min_scaled_b = rep.min_scaled_b.min(b * s / z);
        }
    }
    rep.certified = rep.min_b > 0.0;
    Ok(rep)
}
