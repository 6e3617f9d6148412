//! Linearly implicit Euler step with frozen coefficients.
//!
//! Samples are stored encoded, `q = o + s·w`, with `s = e^{−2γτ}` in the
//! rescaled charts. Every chart is written as
//!
//! ```text
//! w_τ = a w_xx + (b + (n−1)/x) w_x + c w + d
//! ```
//!
//! with `a`, `b` frozen at the old state and `c`, `d` exact. All terms are
//! implicit; the exact factor `g = s_old/s_new` carries the encoding across
//! the step. The drift is centered where diffusion controls the cell and
//! second-order upwind elsewhere, which adds one upper band to the solve.

use crate::error::{McfError, Result};
use crate::geometry::{Chart, FlowParams, FlowState};
use crate::numerics::solve_banded_upper2;

use super::SolverConfig;

/// Outer boundary condition in decoded units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// `q_N = value`.
    Dirichlet(f64),
    /// `q_N = ρ q_{N−1}`.
    Ratio(f64),
}

/// Result of an accepted step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FlowState,
    pub dt_taken: f64,
    /// Suggested next step.
    pub dt_next: f64,
    /// Step-doubling estimate in `λ` units (`X` units in the unscaled chart);
    /// `0` for fixed steps.
    pub lte: f64,
    /// Normalised estimate compared against `tol`.
    pub error_norm: f64,
    pub rejections: usize,
}

struct Coeffs {
    a: Vec<f64>,
    b: Vec<f64>,
    c: f64,
    d: f64,
}

fn centered_d1(x: &[f64], w: &[f64], i: usize) -> f64 {
    let (hm, hp) = (x[i] - x[i - 1], x[i + 1] - x[i]);
    (-hp / (hm * (hm + hp))) * w[i - 1] + ((hp - hm) / (hm * hp)) * w[i] + (hm / (hp * (hm + hp))) * w[i + 1]
}

fn coefficients(state: &FlowState, params: &FlowParams, s_new: f64) -> Result<Coeffs> {
    let x = &state.nodes;
    let w = &state.values;
    let m = x.len();
    let (o, s) = (state.encoding.offset, state.encoding.scale);
    let g1 = params.gamma + 1.0;
    let mut a = vec![1.0; m];
    let mut b = vec![0.0; m];
    // e^{γτ}·s turns the stored slope into the scale-free one inside D
    let slope_scale = match state.chart {
        Chart::XOfRUnscaled => s,
        _ => (params.gamma * state.time).exp() * s,
    };
    for i in 1..m - 1 {
        let wx = centered_d1(x, w, i);
        let p = slope_scale * wx;
        match state.chart {
            Chart::LambdaOfPhi => {
                let lam = o + s * w[i];
                if !(lam < 0.0) {
                    return Err(McfError::Numerical(format!(
                        "λ = {lam:e} ≥ 0 at node {i}; the λ chart is invalid here"
                    )));
                }
                let l2 = lam * lam;
                let dd = 1.0 / (1.0 + p * p / (l2 * l2));
                if !dd.is_finite() {
                    return Err(McfError::Numerical(format!(
                        "diffusion coefficient overflow at node {i}; switch to the Y_OF_PHI chart"
                    )));
                }
                a[i] = dd;
                b[i] = x[i] - 2.0 * dd * s * wx / lam;
            }
            Chart::YOfPhi => {
                a[i] = 1.0 / (1.0 + p * p);
                b[i] = x[i];
            }
            Chart::XOfRUnscaled => {
                a[i] = 1.0 / (1.0 + p * p);
            }
            other => {
                return Err(McfError::Chart { expected: "an evolution chart".into(), found: other.name().into() })
            }
        }
        if !a[i].is_finite() || !b[i].is_finite() {
            return Err(McfError::Numerical(format!(
                "coefficient blow-up at node {i} (e^{{2γτ}}λ_φ²/λ⁴ overflow); switch chart"
            )));
        }
    }
    let (c, d) = match state.chart {
        Chart::LambdaOfPhi => (g1, g1 * o / s_new),
        Chart::YOfPhi => (-g1, -g1 * o / s_new),
        _ => (0.0, 0.0),
    };
    Ok(Coeffs { a, b, c, d })
}

/// One linearly implicit Euler step of size `dt` with outer condition `bc`
/// (evaluated at the new time).
pub fn single_step(state: &FlowState, dt: f64, params: &FlowParams, bc: Boundary) -> Result<FlowState> {
    let m = state.len();
    if m < 5 {
        return Err(McfError::InvalidInput(format!("need at least 5 nodes, got {m}")));
    }
    if state.nodes[0] != 0.0 {
        return Err(McfError::InvalidInput("first node must be the axis".into()));
    }
    let s_old = state.encoding.scale;
    let s_new = match state.chart {
        Chart::XOfRUnscaled => s_old,
        _ => s_old * (-2.0 * params.gamma * dt).exp(),
    };
    let g = s_old / s_new;
    let o = state.encoding.offset;
    let k = self::coefficients(state, params, s_new)?;
    let x = &state.nodes;
    let w = &state.values;
    let n1 = params.nf() - 1.0;

    let mut lo = vec![0.0; m];
    let mut di = vec![0.0; m];
    let mut up = vec![0.0; m];
    let mut up2 = vec![0.0; m];
    let mut rhs = vec![0.0; m];

    // axis: (n−1)w_x/x → (n−1)w_xx, w_xx(0) = 2(w_1 − w_0)/h²
    let h0 = x[1];
    let ax = 2.0 * (k.a[0] + n1) / (h0 * h0);
    di[0] = 1.0 + dt * (ax - k.c);
    up[0] = -dt * ax;
    rhs[0] = g * w[0] + dt * k.d;

    for i in 1..m - 1 {
        let (hm, hp) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        let hs = hm + hp;
        let (mut l, mut dg, mut u) = (2.0 / (hm * hs), -2.0 / (hm * hp), 2.0 / (hp * hs));
        l *= k.a[i];
        dg *= k.a[i];
        u *= k.a[i];
        let cl = -hp / (hm * hs);
        let cd = (hp - hm) / (hm * hp);
        let cu = hm / (hp * hs);
        let rad = n1 / x[i];
        l += rad * cl;
        dg += rad * cd;
        u += rad * cu;
        let bi = k.b[i];
        if bi.abs() * 0.5 * hs <= 2.0 * k.a[i] || i + 2 >= m || bi < 0.0 {
            l += bi * cl;
            dg += bi * cd;
            u += bi * cu;
        } else {
            // drift-dominated: second-order upwind from nodes i, i+1, i+2
            let h2 = x[i + 2] - x[i + 1];
            let hh = hp + h2;
            dg += bi * (-(hp + hh) / (hp * hh));
            u += bi * (hh / (hp * h2));
            up2[i] = -dt * bi * (-hp / (hh * h2));
        }
        lo[i] = -dt * l;
        di[i] = 1.0 - dt * (dg + k.c);
        up[i] = -dt * u;
        rhs[i] = g * w[i] + dt * k.d;
    }

    let last = m - 1;
    di[last] = 1.0;
    match bc {
        Boundary::Dirichlet(q) => rhs[last] = (q - o) / s_new,
        Boundary::Ratio(rho) => {
            lo[last] = -rho;
            rhs[last] = (rho - 1.0) * o / s_new;
        }
    }
    solve_banded_upper2(&lo, &di, &up, &up2, &mut rhs)?;
    if let Some(i) = rhs.iter().position(|v| !v.is_finite()) {
        return Err(McfError::Numerical(format!("non-finite value at node {i} after the implicit solve")));
    }
    let mut out = state.clone();
    out.time = state.time + dt;
    out.values = rhs;
    out.encoding.scale = s_new;
    Ok(out)
}

/// Advance by one accepted step.
///
/// Adaptive mode compares one step of `dt` with two of `dt/2` and keeps the
/// finer result; a step whose normalised estimate exceeds `cfg.tol` is
/// rejected and retried with `dt/2`. `bc` maps the new time to the outer
/// condition. `dt` is clipped to `dt_cap`, which callers use to land on
/// output times.
pub fn step(
    state: &FlowState,
    dt: f64,
    dt_cap: f64,
    params: &FlowParams,
    cfg: &SolverConfig,
    bc: &dyn Fn(f64) -> Boundary,
) -> Result<StepOutcome> {
    let mut dt = dt.min(cfg.dtau_max).min(dt_cap);
    if !cfg.adaptive {
        let st = single_step(state, dt, params, bc(state.time + dt))?;
        return Ok(StepOutcome { state: st, dt_taken: dt, dt_next: cfg.dtau, lte: 0.0, error_norm: 0.0, rejections: 0 });
    }
    let mut rejections = 0;
    loop {
        let t0 = state.time;
        let coarse = single_step(state, dt, params, bc(t0 + dt));
        let fine = single_step(state, 0.5 * dt, params, bc(t0 + 0.5 * dt))
            .and_then(|h| single_step(&h, 0.5 * dt, params, bc(t0 + dt)));
        let attempt = match (coarse, fine) {
            (Ok(c), Ok(f)) => {
                // shape error relative to the axis, plus the relative error of the axis value
                let d0 = c.values[0] - f.values[0];
                let (w0, q0) = (f.values[0], f.value(0));
                let mut norm = f.encoding.scale * d0.abs() / q0.abs().max(f64::MIN_POSITIVE);
                let mut diff = 0.0f64;
                for (i, (a, b)) in c.values.iter().zip(&f.values).enumerate() {
                    let d = a - b;
                    // λ = −1/y converts y-chart errors to λ units
                    let sens = if f.chart == Chart::YOfPhi { f.value(i).powi(-2) } else { 1.0 };
                    diff = diff.max(d.abs() * sens);
                    norm = norm.max((d - d0).abs() / (1.0 + (b - w0).abs()));
                }
                Some((f, norm, diff))
            }
            _ => None,
        };
        match attempt {
            Some((f, norm, diff)) if norm <= cfg.tol => {
                let grow = if norm > 0.0 { cfg.safety * (cfg.tol / norm).sqrt() } else { 2.0 };
                let dt_next = (dt * grow.clamp(0.5, 2.0)).clamp(cfg.dtau_min, cfg.dtau_max);
                let lte = diff * f.encoding.scale;
                return Ok(StepOutcome { state: f, dt_taken: dt, dt_next, lte, error_norm: norm, rejections });
            }
            other => {
                rejections += 1;
                if dt * 0.5 < cfg.dtau_min {
                    let what = match other {
                        Some((_, norm, _)) => format!("error estimate {norm:e} > tol {:e}", cfg.tol),
                        None => "the implicit solve failed".to_string(),
                    };
                    return Err(McfError::StepFailure(format!(
                        "at time {t0}: {what} with dt = {dt:e} at the minimum step"
                    )));
                }
                dt *= 0.5;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Encoding;

    fn sphere_state(nodes: usize, r0: f64, rb: f64) -> FlowState {
        let x: Vec<f64> = (0..nodes).map(|i| rb * i as f64 / (nodes - 1) as f64).collect();
        let v: Vec<f64> = x.iter().map(|r| -(r0 * r0 - r * r).sqrt()).collect();
        FlowState::new(Chart::XOfRUnscaled, 0.0, x, v).unwrap()
    }

    #[test]
    fn encoding_is_carried_exactly_when_nothing_moves() {
        // a constant state in the y chart with o = 0 only decays by the reaction term
        let p = FlowParams::new(2, 2.0, 1.0).unwrap();
        let x = super::super::sinh_grid(5.0, 101, 0.1);
        let mut st = FlowState::new(Chart::YOfPhi, 1.0, x, vec![1.0; 101]).unwrap();
        st.encoding = Encoding { offset: 0.0, scale: (-4.0f64).exp() };
        let q0 = st.value(10);
        let dt = 1e-3;
        let out = single_step(&st, dt, &p, Boundary::Ratio(1.0)).unwrap();
        // backward Euler on q_τ = −3q
        let want = q0 / (1.0 + 3.0 * dt);
        assert!((out.value(10) - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn sphere_radius_follows_exact_law() {
        let p = FlowParams::new(2, 1.0, 1.0).unwrap();
        let (r0, rb) = (1.0, 0.5);
        let n = p.nf();
        let mut st = sphere_state(201, r0, rb);
        let exact = move |t: f64| (r0 * r0 - 2.0 * n * t).sqrt();
        let bc = move |t: f64| Boundary::Dirichlet(-(exact(t).powi(2) - rb * rb).sqrt());
        let cfg = SolverConfig { chart: Chart::XOfRUnscaled, tol: 1e-6, dtau: 1e-5, dtau_max: 1e-2, ..Default::default() };
        let t_end = 0.1;
        let mut dt = cfg.dtau;
        while st.time < t_end - 1e-15 {
            let out = step(&st, dt, t_end - st.time, &p, &cfg, &bc).unwrap();
            dt = out.dt_next;
            st = out.state;
        }
        let r = -st.value(0);
        assert!((r - exact(t_end)).abs() < 5e-4, "R = {r}, exact {}", exact(t_end));
    }
}
