//! Trajectories: stepping to output times, far-field refits, trapping
//! margins and the ordered-pair comparison.

use serde::{Deserialize, Serialize};

use crate::barriers::BarrierPair;
use crate::error::{McfError, Result};
use crate::formal::{exterior_y, lambda_bar};
use crate::geometry::{curvatures, t_of_tau, tau_of_t, Chart, CurvatureRecord, Encoding, FlowParams, FlowState};

use super::scheme::{step, Boundary};
use super::{FarFieldBc, SolverConfig};

/// Stored values are re-centred on the axis once `|w₀|` exceeds this.
const RECENTER: f64 = 1e3;

/// Distance to both barriers at one output time, in `λ` units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapMargin {
    pub tau: f64,
    /// `min(λ⁺ − λ)` over the grid.
    pub upper: f64,
    /// `min(λ − λ⁻)` over the grid.
    pub lower: f64,
    /// Smallest margin relative to the local gap `λ⁺ − λ⁻`.
    pub relative: f64,
    /// `10×` the largest accepted step-doubling estimate so far.
    pub tol: f64,
    pub trapped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: FlowParams,
    pub config: SolverConfig,
    pub snapshots: Vec<FlowState>,
    pub records: Vec<CurvatureRecord>,
    pub margins: Vec<TrapMargin>,
    /// Far-field constant (`c`, `C₁`) in force at each snapshot.
    pub far_constants: Vec<f64>,
    /// Largest step-doubling estimate in `λ` units.
    pub max_lte: f64,
    pub steps: usize,
    pub rejections: usize,
}

impl Trajectory {
    /// `τ` of every snapshot (`t` is converted for the unscaled chart).
    pub fn taus(&self) -> Vec<f64> {
        self.snapshots
            .iter()
            .map(|s| if s.chart.is_unscaled() { tau_of_t(s.time) } else { s.time })
            .collect()
    }

    pub fn trapped(&self) -> bool {
        self.margins.iter().all(|m| m.trapped)
    }

    /// Trapping tolerance: `10×` the largest local truncation estimate.
    pub fn trap_tolerance(&self) -> f64 {
        10.0 * self.max_lte
    }
}

/// Output times from `start` to `end`, equispaced in `log(2t+1)`.
pub fn snapshot_schedule(start: f64, end: f64, count: usize, unscaled: bool) -> Result<Vec<f64>> {
    if !(end > start) {
        return Err(McfError::InvalidInput(format!("end time {end} must exceed start time {start}")));
    }
    if count < 2 {
        return Err(McfError::InvalidInput("need at least two output times".into()));
    }
    let (a, b) = if unscaled { (tau_of_t(start), tau_of_t(end)) } else { (start, end) };
    let mut out: Vec<f64> = (0..count)
        .map(|k| {
            let tau = a + (b - a) * k as f64 / (count - 1) as f64;
            if unscaled {
                t_of_tau(tau)
            } else {
                tau
            }
        })
        .collect();
    out[0] = start;
    out[count - 1] = end;
    Ok(out)
}

/// Re-encode a `λ`-chart state in the `y = −1/λ` chart, keeping the scale.
pub fn lambda_to_y(state: &FlowState) -> Result<FlowState> {
    if state.chart != Chart::LambdaOfPhi {
        return Err(McfError::Chart { expected: "LAMBDA_OF_PHI".into(), found: state.chart.name().into() });
    }
    let l0 = state.value(0);
    let w0 = state.values[0];
    let values = (0..state.len()).map(|i| (state.values[i] - w0) / (state.value(i) * l0)).collect();
    let mut out = state.clone();
    out.chart = Chart::YOfPhi;
    out.values = values;
    out.encoding = Encoding { offset: -1.0 / l0, scale: state.encoding.scale };
    Ok(out)
}

/// Decoded `λ` samples of a `λ`- or `y`-chart state.
pub fn lambda_values(state: &FlowState) -> Result<Vec<f64>> {
    match state.chart {
        Chart::LambdaOfPhi => Ok(state.decoded()),
        Chart::YOfPhi => Ok(state.decoded().iter().map(|y| -1.0 / y).collect()),
        other => Err(McfError::Chart { expected: "LAMBDA_OF_PHI or Y_OF_PHI".into(), found: other.name().into() }),
    }
}

/// Profile `p(x, time)` whose multiples are the far-field formal solutions.
fn far_profile(chart: Chart, x: f64, time: f64, params: &FlowParams) -> f64 {
    match chart {
        Chart::LambdaOfPhi => lambda_bar(x, params)[0],
        Chart::YOfPhi => exterior_y(x, 1.0, params)[0],
        // C₁(r² + (n−1)(2t+1))^{(γ+1)/2} is the exterior profile in unscaled variables
        _ => (x * x + (params.nf() - 1.0) * (2.0 * time + 1.0)).powf(params.half_exponent()),
    }
}

fn fit_far_constant(state: &FlowState, params: &FlowParams) -> f64 {
    let i = state.len() - 2;
    state.value(i) / far_profile(state.chart, state.nodes[i], state.time, params)
}

fn recenter(state: &mut FlowState) {
    let w0 = state.values[0];
    if w0.abs() > RECENTER {
        state.encoding.offset += state.encoding.scale * w0;
        state.values.iter_mut().for_each(|v| *v -= w0);
    }
}

fn trap_margin(state: &FlowState, pair: &BarrierPair, tol: f64) -> Result<TrapMargin> {
    let tau = state.time;
    let lam = lambda_values(state)?;
    let (mut upper, mut lower, mut relative) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for (&x, &l) in state.nodes.iter().zip(&lam) {
        let up = pair.upper.value(x, tau)?;
        let lo = pair.lower.value(x, tau)?;
        upper = upper.min(up - l);
        lower = lower.min(l - lo);
        let gap = up - lo;
        if gap > 0.0 {
            relative = relative.min(((up - l) / gap).min((l - lo) / gap));
        }
    }
    Ok(TrapMargin { tau, upper, lower, relative, tol, trapped: upper >= -tol && lower >= -tol })
}

/// Evolve `initial` to `cfg.tau_end`, recording snapshots at
/// [`snapshot_schedule`] times. With `barriers`, trapping margins are
/// recorded at every output time.
pub fn evolve(
    initial: &FlowState,
    params: &FlowParams,
    cfg: &SolverConfig,
    barriers: Option<&BarrierPair>,
) -> Result<Trajectory> {
    cfg.validate()?;
    params.validate_nonnegative()?;
    let mut state = match (initial.chart, cfg.chart) {
        (a, b) if a == b => initial.clone(),
        (Chart::LambdaOfPhi, Chart::YOfPhi) => lambda_to_y(initial)?,
        (a, b) => return Err(McfError::Chart { expected: b.name().into(), found: a.name().into() }),
    };
    state.check()?;
    if barriers.is_some() && state.chart == Chart::XOfRUnscaled {
        return Err(McfError::InvalidInput("trapping margins need a rescaled chart".into()));
    }
    let unscaled = state.chart.is_unscaled();
    let schedule = snapshot_schedule(state.time, cfg.tau_end, cfg.snapshots, unscaled)?;

    let m = state.len();
    let (x_last, x_prev) = (state.nodes[m - 1], state.nodes[m - 2]);
    let chart = state.chart;
    let mut far_c = fit_far_constant(&state, params);
    let mut traj = Trajectory {
        params: *params,
        config: cfg.clone(),
        snapshots: Vec::with_capacity(schedule.len()),
        records: Vec::with_capacity(schedule.len()),
        margins: Vec::new(),
        far_constants: Vec::with_capacity(schedule.len()),
        max_lte: 0.0,
        steps: 0,
        rejections: 0,
    };
    let emit = |traj: &mut Trajectory, st: &FlowState, far_c: f64| -> Result<()> {
        traj.records.push(curvatures(st, params)?.record);
        if let Some(pair) = barriers {
            let tol = traj.trap_tolerance();
            traj.margins.push(trap_margin(st, pair, tol)?);
        }
        traj.snapshots.push(st.clone());
        traj.far_constants.push(far_c);
        Ok(())
    };
    emit(&mut traj, &state, far_c)?;

    let mut dt = cfg.dtau;
    for &target in &schedule[1..] {
        while state.time < target {
            let remaining = target - state.time;
            if remaining <= 1e-12 * target.abs().max(1.0) {
                state.time = target;
                break;
            }
            let c_now = far_c;
            let bc = move |time: f64| {
                let pl = far_profile(chart, x_last, time, params);
                match cfg.far_field_bc {
                    FarFieldBc::DirichletFormal => Boundary::Dirichlet(c_now * pl),
                    FarFieldBc::NeumannPowerlaw => Boundary::Ratio(pl / far_profile(chart, x_prev, time, params)),
                }
            };
            let out = step(&state, dt, remaining, params, cfg, &bc)?;
            traj.steps += 1;
            traj.rejections += out.rejections;
            traj.max_lte = traj.max_lte.max(out.lte);
            dt = out.dt_next;
            state = out.state;
            if !unscaled {
                recenter(&mut state);
            }
        }
        if cfg.far_field_bc == FarFieldBc::DirichletFormal {
            far_c = fit_far_constant(&state, params);
        }
        emit(&mut traj, &state, far_c)?;
    }
    Ok(traj)
}

/// Outcome of evolving an ordered pair with identical configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedPairReport {
    pub initial_gap: f64,
    /// `min(λ_B − λ_A)` over all snapshots and nodes.
    pub min_gap: f64,
    pub gaps: Vec<(f64, f64)>,
    pub tol: f64,
    pub passed: bool,
}

/// Evolve `a ≤ b` side by side and check that the ordering persists up to
/// `10×` the larger local truncation estimate.
pub fn ordered_pair_test(
    a: &FlowState,
    b: &FlowState,
    params: &FlowParams,
    cfg: &SolverConfig,
) -> Result<OrderedPairReport> {
    if a.nodes != b.nodes || a.chart != b.chart || a.time != b.time {
        return Err(McfError::InvalidInput("ordered pair must share chart, grid and start time".into()));
    }
    let gap_of = |sa: &FlowState, sb: &FlowState| -> Result<f64> {
        let la = lambda_values(sa)?;
        let lb = lambda_values(sb)?;
        Ok(la.iter().zip(&lb).map(|(x, y)| y - x).fold(f64::INFINITY, f64::min))
    };
    let initial_gap = gap_of(a, b)?;
    if initial_gap < 0.0 {
        return Err(McfError::InvalidInput(format!("pair is not ordered initially (min gap {initial_gap:e})")));
    }
    let (ta, tb) = rayon::join(|| evolve(a, params, cfg, None), || evolve(b, params, cfg, None));
    let (ta, tb) = (ta?, tb?);
    let gaps = ta
        .snapshots
        .iter()
        .zip(&tb.snapshots)
        .map(|(sa, sb)| Ok((sa.time, gap_of(sa, sb)?)))
        .collect::<Result<Vec<_>>>()?;
    let min_gap = gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let tol = 10.0 * ta.max_lte.max(tb.max_lte);
    Ok(OrderedPairReport { initial_gap, min_gap, gaps, tol, passed: min_gap >= -tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_is_geometric_in_2t_plus_1() {
        let s = snapshot_schedule(0.0, 100.0, 5, true).unwrap();
        let r: Vec<f64> = s.windows(2).map(|w| (2.0 * w[1] + 1.0) / (2.0 * w[0] + 1.0)).collect();
        for q in &r {
            assert!((q - r[0]).abs() < 1e-12 * r[0]);
        }
        assert!(snapshot_schedule(2.0, 1.0, 5, false).is_err());
    }

    #[test]
    fn lambda_to_y_matches_direct_inversion() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let w: Vec<f64> = x.iter().map(|v| v * v).collect();
        let mut st = FlowState::new(Chart::LambdaOfPhi, 1.0, x, w).unwrap();
        st.encoding = Encoding { offset: -1.0, scale: 1e-3 };
        let y = lambda_to_y(&st).unwrap();
        for i in 0..st.len() {
            let want = -1.0 / st.value(i);
            assert!((y.value(i) - want).abs() < 1e-14 * want.abs());
        }
    }
}
