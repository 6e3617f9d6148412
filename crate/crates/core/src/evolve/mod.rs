//! Time stepping of the radial flow PDE, initial data between the barriers,
//! trapping diagnostics and the ordered-pair comparison test.

pub mod initial;
pub mod run;
pub mod scheme;

use serde::{Deserialize, Serialize};

use crate::error::{McfError, Result};
use crate::geometry::Chart;

pub use initial::{barrier_initial_state, make_initial_data, smooth_corner, InitialData, PatchedProfile};
pub use run::{evolve, lambda_to_y, lambda_values, ordered_pair_test, snapshot_schedule, OrderedPairReport, TrapMargin, Trajectory};
pub use scheme::{single_step, step, Boundary, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FarFieldBc {
    /// Dirichlet value pinned to the exterior formal profile; the constant is
    /// refitted at every output time.
    DirichletFormal,
    /// Zero slope of `y/(φ²+n−1)^{(γ+1)/2}` at the outer edge.
    NeumannPowerlaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub chart: Chart,
    /// Outer edge of the grid (`φ`, or `r` for the unscaled chart).
    pub phi_max: f64,
    pub nodes: usize,
    /// Inner length scale of the `sinh` grid; `0` picks `e^{−γ τ_end}`.
    pub grid_scale: f64,
    pub dtau: f64,
    pub dtau_min: f64,
    pub dtau_max: f64,
    /// Step-size safety factor after an accepted step.
    pub safety: f64,
    /// Mixed absolute/relative tolerance on the step-doubling estimate.
    pub tol: f64,
    pub adaptive: bool,
    pub far_field_bc: FarFieldBc,
    /// End time (`τ`, or `t` for the unscaled chart).
    pub tau_end: f64,
    /// Number of output snapshots, equispaced in `log(2t+1)`.
    pub snapshots: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            chart: Chart::YOfPhi,
            phi_max: 20.0,
            nodes: 2001,
            grid_scale: 0.0,
            dtau: 1e-3,
            dtau_min: 1e-9,
            dtau_max: 0.05,
            safety: 0.9,
            tol: 1e-4,
            adaptive: true,
            far_field_bc: FarFieldBc::DirichletFormal,
            tau_end: 8.0,
            snapshots: 41,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let range = |field: &str, reason: String| McfError::Range { field: format!("solver.{field}"), reason };
        if !matches!(self.chart, Chart::LambdaOfPhi | Chart::YOfPhi | Chart::XOfRUnscaled) {
            return Err(range("chart", format!("{} is not an evolution chart", self.chart.name())));
        }
        if self.nodes < 201 {
            return Err(range("nodes", format!("need at least 201 nodes, got {}", self.nodes)));
        }
        if !(self.phi_max > 0.0 && self.phi_max.is_finite()) {
            return Err(range("phi_max", format!("must be positive, got {}", self.phi_max)));
        }
        if !(self.grid_scale >= 0.0 && self.grid_scale < self.phi_max) {
            return Err(range("grid_scale", format!("must lie in [0, phi_max), got {}", self.grid_scale)));
        }
        if !(self.dtau_min > 0.0 && self.dtau_min <= self.dtau && self.dtau <= self.dtau_max) {
            return Err(range(
                "dtau",
                format!(
                    "need 0 < dtau_min ≤ dtau ≤ dtau_max, got {} ≤ {} ≤ {}",
                    self.dtau_min, self.dtau, self.dtau_max
                ),
            ));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(range("safety", format!("must lie in (0, 1], got {}", self.safety)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(range("tol", format!("must lie in (0, 1), got {}", self.tol)));
        }
        if !self.tau_end.is_finite() {
            return Err(range("tau_end", "must be finite".into()));
        }
        if self.snapshots < 2 {
            return Err(range("snapshots", format!("need at least 2, got {}", self.snapshots)));
        }
        Ok(())
    }

    /// Grid nodes: uniform for the unscaled chart, `φ_s sinh(ξ)` otherwise.
    pub fn grid(&self, gamma: f64) -> Vec<f64> {
        if self.chart == Chart::XOfRUnscaled {
            return crate::numerics::linspace(0.0, self.phi_max, self.nodes);
        }
        let scale = if self.grid_scale > 0.0 { self.grid_scale } else { (-gamma * self.tau_end).exp().min(1.0) };
        sinh_grid(self.phi_max, self.nodes, scale)
    }
}

/// `φ_i = s·sinh(ξ_i)` with `ξ` uniform on `[0, asinh(φ_max/s)]`; the first
/// and last nodes are exactly `0` and `φ_max`.
pub fn sinh_grid(phi_max: f64, nodes: usize, scale: f64) -> Vec<f64> {
    let xi_max = (phi_max / scale).asinh();
    let mut g: Vec<f64> =
        (0..nodes).map(|i| scale * (xi_max * i as f64 / (nodes - 1) as f64).sinh()).collect();
    g[nodes - 1] = phi_max;
    g
}
