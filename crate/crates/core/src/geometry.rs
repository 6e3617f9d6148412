//! Coordinate charts for rotationally symmetric graphs, the parabolic
//! rescalings between them, and pointwise principal curvatures.
//!
//! The hypersurface is `{ r = u(x) }` in `ℝ^{n+1}` with `r` the distance to
//! the `x`-axis. Charts:
//!
//! * `UOfX` – `u(x, t)`, nodes `x` starting at the tip;
//! * `XOfRUnscaled` – the inverse graph `x = X(r, t)`, smooth and even at the tip;
//! * `YOfPhi` – `y(φ, τ)` with `τ = log √(2t+1)`, `y = x (2t+1)^{-(γ+1)/2}`, `φ = r (2t+1)^{-1/2}`;
//! * `YOfZ` – `y(z, τ)` with `z = φ e^{γτ}`;
//! * `LambdaOfPhi` – `λ = −1/y` over `φ`.

use serde::{Deserialize, Serialize};

use crate::error::{McfError, Result};
use crate::numerics::{derivatives, MonotoneCubic};

/// Dimension, growth exponent and tip constant, plus the matched constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowParams {
    pub n: u32,
    pub gamma: f64,
    pub a_tilde: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self { n: 2, gamma: 2.0, a_tilde: 1.0 }
    }
}

impl FlowParams {
    pub fn new(n: u32, gamma: f64, a_tilde: f64) -> Result<Self> {
        let p = Self { n, gamma, a_tilde };
        p.validate()?;
        Ok(p)
    }

    /// `γ = 0` parameters, used only for the linear-growth (Type-III) control run.
    pub fn linear_growth_control(n: u32, a_tilde: f64) -> Result<Self> {
        let p = Self { n, gamma: 0.0, a_tilde };
        p.validate_nonnegative()?;
        Ok(p)
    }

    /// Checks shared by the main runs and the `γ = 0` control.
    pub fn validate_nonnegative(&self) -> Result<()> {
        if self.n < 2 {
            return Err(McfError::Range { field: "n".into(), reason: format!("n ≥ 2 required, got {}", self.n) });
        }
        if !(self.a_tilde > 0.0) || !self.a_tilde.is_finite() {
            return Err(McfError::Range {
                field: "a_tilde".into(),
                reason: format!("tip constant must satisfy Ã > 0, got {}", self.a_tilde),
            });
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(McfError::Range {
                field: "gamma".into(),
                reason: format!("growth exponent must satisfy γ > 0, got {}", self.gamma),
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_nonnegative()?;
        if !(self.gamma > 0.0) {
            return Err(McfError::Range {
                field: "gamma".into(),
                reason: format!("growth exponent must satisfy γ > 0, got {}", self.gamma),
            });
        }
        Ok(())
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `(γ+1)/2`
    pub fn half_exponent(&self) -> f64 {
        0.5 * (self.gamma + 1.0)
    }

    /// `A = 1/Ã`, the tip value of `−λ`.
    pub fn a(&self) -> f64 {
        1.0 / self.a_tilde
    }

    /// `c = A (n−1)^{(γ+1)/2}`, the exterior constant in the `λ` chart.
    pub fn c(&self) -> f64 {
        self.a() * (self.nf() - 1.0).powf(self.half_exponent())
    }

    /// `C₁ = Ã (n−1)^{−(γ+1)/2}`, the exterior constant in the `y` chart.
    pub fn c1(&self) -> f64 {
        self.a_tilde * (self.nf() - 1.0).powf(-self.half_exponent())
    }

    /// Mean curvature prefactor at the tip: `H_tip = (γ+1) Ã (2t+1)^{(γ−1)/2}`.
    pub fn tip_mean_curvature_prefactor(&self) -> f64 {
        (self.gamma + 1.0) * self.a_tilde
    }
}

/// Rescaled time `τ = log √(2t+1)`.
pub fn tau_of_t(t: f64) -> f64 {
    0.5 * (2.0 * t + 1.0).ln()
}

pub fn t_of_tau(tau: f64) -> f64 {
    0.5 * (2.0 * tau).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Chart {
    UOfX,
    YOfPhi,
    LambdaOfPhi,
    YOfZ,
    XOfRUnscaled,
}

impl Chart {
    pub fn is_unscaled(self) -> bool {
        matches!(self, Chart::UOfX | Chart::XOfRUnscaled)
    }

    /// Charts whose node 0 sits on the symmetry axis.
    pub fn is_radial(self) -> bool {
        !matches!(self, Chart::UOfX)
    }

    pub fn name(self) -> &'static str {
        match self {
            Chart::UOfX => "U_OF_X",
            Chart::YOfPhi => "Y_OF_PHI",
            Chart::LambdaOfPhi => "LAMBDA_OF_PHI",
            Chart::YOfZ => "Y_OF_Z",
            Chart::XOfRUnscaled => "X_OF_R_UNSCALED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AxisPolicy {
    /// Values are even about node 0.
    EvenReflection,
    /// Node 0 is not a symmetry axis (e.g. the tip of the `u(x)` chart).
    None,
}

/// Affine encoding of stored samples: `actual = offset + scale · stored`.
///
/// The `λ` chart stores `e^{2γτ}(λ + A)` so the O(e^{−2γτ}) tip structure is
/// kept at full relative precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub offset: f64,
    pub scale: f64,
}

impl Default for Encoding {
    fn default() -> Self {
        Self { offset: 0.0, scale: 1.0 }
    }
}

/// Samples of the profile at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub chart: Chart,
    /// `t` for unscaled charts, `τ` otherwise.
    pub time: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub axis: AxisPolicy,
    #[serde(default)]
    pub encoding: Encoding,
}

impl FlowState {
    pub fn new(chart: Chart, time: f64, nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let axis = if chart.is_radial() { AxisPolicy::EvenReflection } else { AxisPolicy::None };
        let s = Self { chart, time, nodes, values, axis, encoding: Encoding::default() };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if self.nodes.len() != self.values.len() {
            return Err(McfError::InvalidInput(format!(
                "{} nodes but {} values",
                self.nodes.len(),
                self.values.len()
            )));
        }
        if let Some(i) = self.nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(McfError::NonMonotone { node: i + 1 });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Decoded sample `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.encoding.offset + self.encoding.scale * self.values[i]
    }

    pub fn decoded(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// Unscaled time `t` of this snapshot.
    pub fn t(&self) -> f64 {
        if self.chart.is_unscaled() {
            self.time
        } else {
            t_of_tau(self.time)
        }
    }

    /// Resample onto new nodes by monotone cubic interpolation (decoded values).
    pub fn resample(&self, nodes: Vec<f64>) -> Result<FlowState> {
        let interp = MonotoneCubic::new(self.nodes.clone(), self.decoded())?;
        let values = nodes.iter().map(|&x| interp.eval(x)).collect();
        let mut s = FlowState::new(self.chart, self.time, nodes, values)?;
        s.axis = self.axis;
        Ok(s)
    }
}

/// Canonical point cloud `(r, X)` at unscaled time `t`.
fn to_canonical(state: &FlowState, params: &FlowParams) -> Result<(f64, Vec<(f64, f64)>)> {
    state.check()?;
    let t = state.t();
    let s = 2.0 * t + 1.0;
    let gam = params.gamma;
    let vals = state.decoded();
    let pts: Vec<(f64, f64)> = match state.chart {
        Chart::XOfRUnscaled => state.nodes.iter().copied().zip(vals).collect(),
        Chart::UOfX => vals.into_iter().zip(state.nodes.iter().copied()).collect(),
        Chart::YOfPhi => state
            .nodes
            .iter()
            .zip(&vals)
            .map(|(&phi, &y)| (phi * s.sqrt(), y * s.powf(0.5 * (gam + 1.0))))
            .collect(),
        Chart::LambdaOfPhi => state
            .nodes
            .iter()
            .zip(&vals)
            .map(|(&phi, &lam)| (phi * s.sqrt(), -s.powf(0.5 * (gam + 1.0)) / lam))
            .collect(),
        Chart::YOfZ => state
            .nodes
            .iter()
            .zip(&vals)
            .map(|(&z, &y)| {
                let phi = z * (-gam * state.time).exp();
                (phi * s.sqrt(), y * s.powf(0.5 * (gam + 1.0)))
            })
            .collect(),
    };
    Ok((t, pts))
}

fn from_canonical(t: f64, pts: &[(f64, f64)], target: Chart, params: &FlowParams) -> Result<FlowState> {
    let s = 2.0 * t + 1.0;
    let tau = tau_of_t(t);
    let gam = params.gamma;
    let sy = s.powf(-0.5 * (gam + 1.0));
    let (time, nodes, values): (f64, Vec<f64>, Vec<f64>) = match target {
        Chart::XOfRUnscaled => (t, pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect()),
        Chart::UOfX => (t, pts.iter().map(|p| p.1).collect(), pts.iter().map(|p| p.0).collect()),
        Chart::YOfPhi => (
            tau,
            pts.iter().map(|p| p.0 / s.sqrt()).collect(),
            pts.iter().map(|p| p.1 * sy).collect(),
        ),
        Chart::LambdaOfPhi => (
            tau,
            pts.iter().map(|p| p.0 / s.sqrt()).collect(),
            pts.iter().map(|p| -1.0 / (p.1 * sy)).collect(),
        ),
        Chart::YOfZ => {
            let ez = (gam * tau).exp();
            (
                tau,
                pts.iter().map(|p| p.0 / s.sqrt() * ez).collect(),
                pts.iter().map(|p| p.1 * sy).collect(),
            )
        }
    };
    FlowState::new(target, time, nodes, values)
}

/// Change chart, keeping the same sample points on the hypersurface.
///
/// Fails with [`McfError::NonMonotone`] when the target abscissa is not
/// strictly increasing (profile cannot be inverted).
pub fn convert(state: &FlowState, target: Chart, params: &FlowParams) -> Result<FlowState> {
    let (t, pts) = to_canonical(state, params)?;
    from_canonical(t, &pts, target, params)
}

/// Unscaled `u(x)` or `X(r)` at time `t` → `y(φ, τ)` (or `y(z, τ)` when `to_z`).
pub fn rescale_forward(state: &FlowState, params: &FlowParams, to_z: bool) -> Result<FlowState> {
    if !state.chart.is_unscaled() {
        return Err(McfError::Chart { expected: "U_OF_X or X_OF_R_UNSCALED".into(), found: state.chart.name().into() });
    }
    if state.time < 0.0 {
        return Err(McfError::InvalidInput(format!("t = {} must be ≥ 0", state.time)));
    }
    convert(state, if to_z { Chart::YOfZ } else { Chart::YOfPhi }, params)
}

/// Inverse of [`rescale_forward`]; `target` is one of the unscaled charts.
pub fn rescale_backward(state: &FlowState, target: Chart, params: &FlowParams) -> Result<FlowState> {
    if !target.is_unscaled() {
        return Err(McfError::Chart { expected: "U_OF_X or X_OF_R_UNSCALED".into(), found: target.name().into() });
    }
    convert(state, target, params)
}

/// Tip and sup-norm curvature data for one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureRecord {
    pub t: f64,
    pub kappa1_tip: f64,
    pub kappan_tip: f64,
    pub sup_h: f64,
    pub argmax_node: usize,
    pub ratio_max: f64,
    /// Interior nodes with `κ_n ≤ 0` (non-convex sample); zero for convex data.
    pub nonconvex_nodes: usize,
}

/// Per-node principal curvatures (rotational `κ₁ = … = κ_{n−1}` and meridian `κ_n`).
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    pub kappa1: Vec<f64>,
    pub kappan: Vec<f64>,
    /// `|h| = ((n−1) κ₁² + κ_n²)^{1/2}`
    pub h_norm: Vec<f64>,
    pub record: CurvatureRecord,
}

fn radial_curvatures(r: &[f64], xr: &[f64], xrr: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut k1 = Vec::with_capacity(r.len());
    let mut kn = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        let q = 1.0 + xr[i] * xr[i];
        kn.push(xrr[i] / q.powf(1.5));
        if r[i] == 0.0 {
            k1.push(xrr[i]);
        } else {
            k1.push(xr[i] / (r[i] * q.sqrt()));
        }
    }
    (k1, kn)
}

/// Principal curvatures of a sampled profile.
///
/// `X_OF_R_UNSCALED` uses the smooth even chart directly. `U_OF_X` mixes the
/// two charts node by node: the `u(x)` formulas where the profile is shallow
/// (`|u_x| ≤ 1`), the inverted chart near the tip where `u_x` blows up.
/// `Y_OF_PHI`/`LAMBDA_OF_PHI` states are handled through the chain rule so the
/// unscaled coordinates never have to be formed.
pub fn curvatures(state: &FlowState, params: &FlowParams) -> Result<CurvatureProfile> {
    state.check()?;
    if state.len() < 5 {
        return Err(McfError::InvalidInput(format!(
            "curvature needs at least 5 nodes, got {}",
            state.len()
        )));
    }
    let n1 = params.nf() - 1.0;
    let (k1, kn) = match state.chart {
        Chart::XOfRUnscaled => {
            // the offset carries no slope: differentiate the encoded values
            let sc = state.encoding.scale;
            let (mut d1, mut d2) = derivatives(&state.nodes, &state.values, true);
            d1.iter_mut().chain(d2.iter_mut()).for_each(|v| *v *= sc);
            radial_curvatures(&state.nodes, &d1, &d2)
        }
        Chart::UOfX => {
            let u = state.decoded();
            let x = &state.nodes;
            let (u1, u2) = derivatives(x, &u, false);
            // inverted chart X(r), r = u, even about the tip
            let inv_ok = u.windows(2).all(|w| w[1] > w[0]);
            let inv = if inv_ok { Some(derivatives(&u, x, u[0] == 0.0)) } else { None };
            let mut k1 = Vec::with_capacity(u.len());
            let mut kn = Vec::with_capacity(u.len());
            for i in 0..u.len() {
                let steep = u1[i].abs() > 1.0 || u[i] == 0.0;
                match (&inv, steep) {
                    (Some((x1, x2)), true) => {
                        let q = 1.0 + x1[i] * x1[i];
                        kn.push(x2[i] / q.powf(1.5));
                        k1.push(if u[i] == 0.0 { x2[i] } else { x1[i] / (u[i] * q.sqrt()) });
                    }
                    _ => {
                        let q = 1.0 + u1[i] * u1[i];
                        if u[i] == 0.0 {
                            return Err(McfError::ZeroCurvature { node: i });
                        }
                        k1.push(1.0 / (u[i] * q.sqrt()));
                        kn.push(-u2[i] / q.powf(1.5));
                    }
                }
            }
            (k1, kn)
        }
        Chart::YOfPhi | Chart::LambdaOfPhi | Chart::YOfZ => {
            let s = 2.0 * state.t() + 1.0;
            let gam = params.gamma;
            let mut phi = state.nodes.clone();
            if state.chart == Chart::YOfZ {
                let e = (-gam * state.time).exp();
                phi.iter_mut().for_each(|v| *v *= e);
            }
            // derivatives of the stored (encoded) values, then decode
            let (v1, v2) = derivatives(&phi, &state.values, true);
            let sc = state.encoding.scale;
            let (y1, y2): (Vec<f64>, Vec<f64>) = if state.chart == Chart::LambdaOfPhi {
                (0..phi.len())
                    .map(|i| {
                        let lam = state.value(i);
                        let l1 = sc * v1[i];
                        let l2 = sc * v2[i];
                        (l1 / (lam * lam), l2 / (lam * lam) - 2.0 * l1 * l1 / (lam * lam * lam))
                    })
                    .unzip()
            } else {
                (v1.iter().map(|v| sc * v).collect(), v2.iter().map(|v| sc * v).collect())
            };
            let r: Vec<f64> = phi.iter().map(|p| p * s.sqrt()).collect();
            let xr: Vec<f64> = y1.iter().map(|v| v * s.powf(0.5 * gam)).collect();
            let xrr: Vec<f64> = y2.iter().map(|v| v * s.powf(0.5 * (gam - 1.0))).collect();
            radial_curvatures(&r, &xr, &xrr)
        }
    };
    let h_norm: Vec<f64> = k1.iter().zip(&kn).map(|(a, b)| (n1 * a * a + b * b).sqrt()).collect();
    let (argmax, sup_h) = h_norm
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    // the tip is the first node in every chart
    let tip = 0;
    let nonconvex = (1..kn.len().saturating_sub(1)).filter(|&i| kn[i] <= 0.0).count();
    let ratio_max = k1
        .iter()
        .zip(&kn)
        .filter(|(a, _)| **a != 0.0)
        .map(|(a, b)| b / a)
        .fold(f64::NEG_INFINITY, f64::max);
    let record = CurvatureRecord {
        t: state.t(),
        kappa1_tip: k1[tip],
        kappan_tip: kn[tip],
        sup_h,
        argmax_node: argmax,
        ratio_max,
        nonconvex_nodes: nonconvex,
    };
    Ok(CurvatureProfile { kappa1: k1, kappan: kn, h_norm, record })
}

/// Pointwise principal-curvature ratio `𝕽 = κ_n / κ₁`.
pub fn ratio_r(state: &FlowState, params: &FlowParams) -> Result<Vec<f64>> {
    let prof = curvatures(state, params)?;
    prof.kappa1
        .iter()
        .zip(&prof.kappan)
        .enumerate()
        .map(|(i, (a, b))| {
            if *a == 0.0 || !a.is_finite() {
                Err(McfError::ZeroCurvature { node: i })
            } else {
                Ok(b / a)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> FlowParams {
        FlowParams::new(2, 2.0, 1.0).unwrap()
    }

    #[test]
    fn derived_constants_are_matched() {
        for (n, g, at) in [(2, 2.0, 1.0), (3, 0.5, 2.5), (7, 3.0, 0.3)] {
            let p = FlowParams::new(n, g, at).unwrap();
            assert!((p.a() * p.a_tilde - 1.0).abs() < 1e-15);
            let lhs = p.c1() * ((n - 1) as f64).powf(p.half_exponent());
            assert!((lhs - at).abs() < 1e-13 * at);
        }
    }

    #[test]
    fn parameter_validation_names_the_constraint() {
        let e = FlowParams::new(2, -1.0, 1.0).unwrap_err().to_string();
        assert!(e.contains("γ > 0"), "{e}");
        assert!(FlowParams::new(1, 1.0, 1.0).is_err());
        assert!(FlowParams::new(2, 1.0, 0.0).is_err());
        assert!(FlowParams::new(2, 0.0, 1.0).is_err());
        assert!(FlowParams::linear_growth_control(2, 1.0).is_ok());
    }

    #[test]
    fn rescaling_at_t_zero_is_identity() {
        let p = params();
        let st = FlowState::new(Chart::XOfRUnscaled, 0.0, vec![0.0, 1.0, 2.0], vec![1.0, 1.5, 3.0]).unwrap();
        let y = rescale_forward(&st, &p, false).unwrap();
        assert_eq!(y.time, 0.0);
        assert_eq!(y.nodes, st.nodes);
        assert_eq!(y.values, st.values);
    }

    #[test]
    fn rescaling_at_tau_one() {
        let p = params();
        let t = (std::f64::consts::E.powi(2) - 1.0) / 2.0;
        let x = std::f64::consts::E.powf(p.gamma + 1.0);
        let st = FlowState::new(Chart::UOfX, t, vec![x, x + 1.0], vec![0.5, 1.0]).unwrap();
        let y = rescale_forward(&st, &p, false).unwrap();
        assert!((y.time - 1.0).abs() < 1e-15);
        assert!((y.values[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_monotone_profile_is_rejected() {
        let p = params();
        let st = FlowState::new(Chart::XOfRUnscaled, 1.0, vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 3.0]).unwrap();
        assert!(matches!(convert(&st, Chart::UOfX, &p), Err(McfError::NonMonotone { .. })));
    }

    fn convex_profile(n: usize, a: f64, b: f64, t: f64) -> FlowState {
        let r: Vec<f64> = (0..n).map(|i| 5.0 * i as f64 / (n - 1) as f64).collect();
        let x = r.iter().map(|v| a + b * v * v + 0.1 * v.powi(4)).collect();
        FlowState::new(Chart::XOfRUnscaled, t, r, x).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn chart_round_trips(a in 0.5f64..3.0, b in 0.1f64..2.0, t in 0.0f64..50.0, gi in 0usize..5, hi in 0usize..5) {
            let p = FlowParams::new(3, 1.5, 1.0).unwrap();
            let charts = [Chart::UOfX, Chart::YOfPhi, Chart::LambdaOfPhi, Chart::YOfZ, Chart::XOfRUnscaled];
            let base = convex_profile(1000, a, b, t);
            let from = convert(&base, charts[gi], &p).unwrap();
            let to = convert(&from, charts[hi], &p).unwrap();
            let back = convert(&to, charts[gi], &p).unwrap();
            for (u, v) in from.values.iter().zip(&back.values) {
                prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(1e-300));
            }
            for (u, v) in from.nodes.iter().zip(&back.nodes) {
                prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(1e-300) );
            }
        }
    }

    fn sphere_u_chart(radius: f64, n: usize) -> FlowState {
        // lower hemisphere sampled uniformly in the polar angle
        // tip at x = 0, centre at x = R
        let nodes: Vec<f64> = (0..n)
            .map(|i| {
                let th = std::f64::consts::FRAC_PI_2 * i as f64 / (n - 1) as f64;
                2.0 * radius * (0.5 * th).sin().powi(2)
            })
            .collect();
        let u = nodes.iter().map(|x| (x * (2.0 * radius - x)).max(0.0).sqrt()).collect();
        FlowState::new(Chart::UOfX, 0.0, nodes, u).unwrap()
    }

    #[test]
    fn hemisphere_is_umbilic() {
        let p = params();
        let st = sphere_u_chart(2.0, 10_000);
        let c = curvatures(&st, &p).unwrap();
        // last node has u_x = 0 exactly: skip the one-sided end stencil
        for i in 0..st.len() - 1 {
            assert!((c.kappa1[i] - 0.5).abs() < 1e-8, "κ₁ node {i}: {}", c.kappa1[i]);
            // second differences at h ≈ 3e-4 carry ~1e-8 of round-off
            assert!((c.kappan[i] - 0.5).abs() < 2e-8, "κ_n node {i}: {}", c.kappan[i]);
        }
        let r = ratio_r(&st, &p).unwrap();
        assert!(r[..r.len() - 1].iter().all(|v| (v - 1.0).abs() < 1e-7));
    }

    #[test]
    fn paraboloid_vertex_curvature() {
        let p = params();
        let rho = 3.0;
        let r: Vec<f64> = (0..401).map(|i| i as f64 * 0.01).collect();
        let x = r.iter().map(|v| v * v / (2.0 * rho)).collect();
        let st = FlowState::new(Chart::XOfRUnscaled, 0.0, r, x).unwrap();
        let c = curvatures(&st, &p).unwrap();
        assert!((c.record.kappa1_tip - 1.0 / rho).abs() < 1e-12);
        assert!((c.record.kappan_tip - 1.0 / rho).abs() < 1e-12);
        assert!(c.record.sup_h >= c.record.kappa1_tip);
        assert_eq!(c.record.nonconvex_nodes, 0);
    }

    #[test]
    fn flat_segment_has_zero_ratio() {
        let p = params();
        let x: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 * 0.1).collect();
        let u = x.iter().map(|v| 2.0 + 0.3 * v).collect();
        let st = FlowState::new(Chart::UOfX, 0.0, x, u).unwrap();
        let r = ratio_r(&st, &p).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn too_few_nodes() {
        let p = params();
        let st = FlowState::new(Chart::XOfRUnscaled, 0.0, vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 4.0, 9.0]).unwrap();
        assert!(curvatures(&st, &p).is_err());
    }

    #[test]
    fn nonconvex_sample_is_flagged() {
        let p = params();
        let r: Vec<f64> = (0..100).map(|i| i as f64 * 0.05).collect();
        let x = r.iter().map(|v| v * v - 0.05 * v.powi(4)).collect();
        let st = FlowState::new(Chart::XOfRUnscaled, 0.0, r, x).unwrap();
        assert!(curvatures(&st, &p).unwrap().record.nonconvex_nodes > 0);
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let p = params();
        let base = convex_profile(1500, 1.0, 0.7, 0.0);
        let r0 = ratio_r(&base, &p).unwrap();
        for s in [0.25, 3.0, 17.0] {
            let scaled = FlowState::new(
                Chart::XOfRUnscaled,
                0.0,
                base.nodes.iter().map(|v| v * s).collect(),
                base.values.iter().map(|v| v * s).collect(),
            )
            .unwrap();
            let r1 = ratio_r(&scaled, &p).unwrap();
            for (a, b) in r0.iter().zip(&r1) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }
}
