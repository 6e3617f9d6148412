//! Measurements of the long-time behaviour of computed trajectories: blow-up
//! exponent, tip convergence to the bowl, exterior growth and the curvature
//! ratio bound.

pub mod controls;
pub mod supersolution;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::BarrierConstants;
use crate::error::{McfError, Result};
use crate::evolve::{lambda_to_y, Trajectory};
use crate::geometry::{curvatures, Chart, CurvatureRecord, FlowParams, FlowState};
use crate::numerics::{fit_line, LineFit};
use crate::soliton::SolitonProfile;

pub use controls::{linear_growth_run, patched_run, sphere_blowup_control, SphereControl};
pub use supersolution::{tip_supersolution_check, SupersolutionConfig, SupersolutionReport};

/// Relative slack for "the tip carries the largest curvature": `|h|` is flat
/// near the tip, so neighbouring nodes may exceed it by round-off.
pub const TIP_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Fraction of the snapshots, counted from the end, used for the fit.
    pub fit_fraction: f64,
    pub min_snapshots: usize,
    pub min_decades: f64,
    pub z_star: f64,
    pub min_tip_nodes: usize,
    /// Band `[lo, hi]` as fractions of the outer grid edge.
    pub band: [f64; 2],
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { fit_fraction: 0.6, min_snapshots: 10, min_decades: 1.5, z_star: 2.0, min_tip_nodes: 30, band: [0.3, 0.6] }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let range = |field: &str, reason: String| Err(McfError::Range { field: format!("analysis.{field}"), reason });
        if !(self.fit_fraction > 0.0 && self.fit_fraction <= 1.0) {
            return range("fit_fraction", format!("must lie in (0, 1], got {}", self.fit_fraction));
        }
        if self.min_snapshots < 3 {
            return range("min_snapshots", format!("need at least 3, got {}", self.min_snapshots));
        }
        if !(self.z_star > 0.0) {
            return range("z_star", format!("must be positive, got {}", self.z_star));
        }
        if !(0.0 < self.band[0] && self.band[0] < self.band[1] && self.band[1] <= 1.0) {
            return range("band", format!("need 0 < lo < hi ≤ 1, got {:?}", self.band));
        }
        Ok(())
    }
}

/// Log–log fit of `sup|h|` against `2t+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub fit: LineFit,
    /// `(γ−1)/2`
    pub target_slope: f64,
    pub snapshots_used: usize,
    pub decades: f64,
    /// `H_tip/(2t+1)^{(γ−1)/2}` at the last snapshot, with `H_tip = (n−1)κ₁ + κ_n`.
    pub prefactor: f64,
    /// `(γ+1)Ã`
    pub prefactor_target: f64,
    pub prefactor_rel_error: f64,
    /// Index of the first snapshot from which the tip carries `sup|h|`
    /// (within [`TIP_SLACK`]) at every later snapshot.
    pub localized_from: Option<usize>,
    pub argmax_nodes: Vec<usize>,
}

/// `|h|` at the tip node of a record.
pub fn tip_h(rec: &CurvatureRecord, params: &FlowParams) -> f64 {
    ((params.nf() - 1.0) * rec.kappa1_tip.powi(2) + rec.kappan_tip.powi(2)).sqrt()
}

/// Whether the tip carries the largest `|h|` of a record.
pub fn tip_is_max(rec: &CurvatureRecord, params: &FlowParams) -> bool {
    rec.argmax_node == 0 || rec.sup_h <= (1.0 + TIP_SLACK) * tip_h(rec, params)
}

/// Least-squares slope of `log y` against `log x`, with a minimum span check.
pub fn fit_loglog(x: &[f64], y: &[f64], min_points: usize, min_decades: f64) -> Result<(LineFit, f64)> {
    if x.len() < min_points {
        return Err(McfError::InvalidInput(format!("need at least {min_points} samples for the fit, got {}", x.len())));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let span = (lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - lx.iter().cloned().fold(f64::INFINITY, f64::min))
        / std::f64::consts::LN_10;
    if span < min_decades {
        return Err(McfError::InvalidInput(format!(
            "fit window spans {span:.2} decades, need at least {min_decades}; run longer or use more snapshots"
        )));
    }
    let fit = fit_line(&lx, &ly).ok_or_else(|| McfError::Numerical("degenerate log–log fit".into()))?;
    Ok((fit, span))
}

pub fn fit_blowup_exponent(traj: &Trajectory, cfg: &AnalysisConfig) -> Result<BlowupFit> {
    cfg.validate()?;
    let p = &traj.params;
    let recs = &traj.records;
    let used = ((recs.len() as f64 * cfg.fit_fraction).ceil() as usize).min(recs.len());
    let window = &recs[recs.len() - used..];
    let x: Vec<f64> = window.iter().map(|r| 2.0 * r.t + 1.0).collect();
    let y: Vec<f64> = window.iter().map(|r| r.sup_h).collect();
    let (fit, decades) = fit_loglog(&x, &y, cfg.min_snapshots, cfg.min_decades)?;
    let last = recs.last().unwrap();
    let target_slope = 0.5 * (p.gamma - 1.0);
    let h_tip = (p.nf() - 1.0) * last.kappa1_tip + last.kappan_tip;
    let prefactor = h_tip / (2.0 * last.t + 1.0).powf(target_slope);
    let prefactor_target = p.tip_mean_curvature_prefactor();
    let localized_from = (0..recs.len()).find(|&i| recs[i..].iter().all(|r| tip_is_max(r, p)));
    Ok(BlowupFit {
        fit,
        target_slope,
        snapshots_used: used,
        decades,
        prefactor,
        prefactor_target,
        prefactor_rel_error: (prefactor - prefactor_target).abs() / prefactor_target,
        localized_from,
        argmax_nodes: recs.iter().map(|r| r.argmax_node).collect(),
    })
}

/// A snapshot in the `y` chart.
pub fn y_snapshot(state: &FlowState) -> Result<FlowState> {
    match state.chart {
        Chart::YOfPhi => Ok(state.clone()),
        Chart::LambdaOfPhi => lambda_to_y(state),
        other => Err(McfError::Chart { expected: "Y_OF_PHI or LAMBDA_OF_PHI".into(), found: other.name().into() }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipErrorCurve {
    pub z_star: f64,
    /// `(τ, sup_{z ≤ Z*} |e^{2γτ}(y(z) − y(0)) − P̃(kz)/k|)` with `k = (γ+1)Ã`.
    pub points: Vec<(f64, f64)>,
    /// `sup_{z ≤ Z*} P̃(kz)/k`.
    pub target_sup: f64,
}

impl TipErrorCurve {
    pub fn final_relative(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.1 / self.target_sup)
    }
}

pub fn tip_profile_error(traj: &Trajectory, profile: &SolitonProfile, cfg: &AnalysisConfig) -> Result<TipErrorCurve> {
    cfg.validate()?;
    let p = &traj.params;
    let k = (p.gamma + 1.0) * p.a_tilde;
    if k * cfg.z_star > profile.w_max {
        return Err(McfError::Range {
            field: "analysis.z_star".into(),
            reason: format!("(γ+1)Ã·Z* = {} exceeds the tabulated bowl (w_max = {})", k * cfg.z_star, profile.w_max),
        });
    }
    let target = |z: f64| profile.eval(k * z)[0] / k;
    let points = traj
        .snapshots
        .par_iter()
        .map(|snap| {
            let y = y_snapshot(snap)?;
            let tau = y.time;
            let ez = (p.gamma * tau).exp();
            // e^{2γτ}(y − y(0)) = e^{2γτ}·scale·(w − w₀)
            let amp = (2.0 * p.gamma * tau).exp() * y.encoding.scale;
            let mut count = 0;
            let mut err = 0.0f64;
            for (&phi, &w) in y.nodes.iter().zip(&y.values) {
                let z = phi * ez;
                if z > cfg.z_star {
                    break;
                }
                count += 1;
                err = err.max((amp * (w - y.values[0]) - target(z)).abs());
            }
            if count < cfg.min_tip_nodes {
                return Err(McfError::Range {
                    field: "solver.nodes".into(),
                    reason: format!(
                        "only {count} nodes resolve z ≤ {} at τ = {tau:.3}; need {}; refine the grid near the axis",
                        cfg.z_star, cfg.min_tip_nodes
                    ),
                });
            }
            Ok((tau, err))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TipErrorCurve { z_star: cfg.z_star, points, target_sup: target(cfg.z_star) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub tau: f64,
    pub c1_fit: f64,
    /// `sup_band |y/(φ²+n−1)^{(γ+1)/2} − C₁|/C₁`
    pub dispersion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub band: [f64; 2],
    pub points: Vec<GrowthPoint>,
    /// Bracket for `C₁` implied by the barriers, `[1/c⁻, 1/c⁺]`.
    pub bracket: Option<[f64; 2]>,
}

impl GrowthReport {
    pub fn in_bracket(&self) -> Option<bool> {
        self.bracket.map(|[lo, hi]| self.points.iter().all(|g| lo <= g.c1_fit && g.c1_fit <= hi))
    }
}

/// `C₁` bracket from `λ⁻ ≤ λ ≤ λ⁺` in the exterior.
pub fn growth_bracket(k: &BarrierConstants) -> [f64; 2] {
    let (a, b) = (1.0 / k.c_minus, 1.0 / k.c_plus);
    [a.min(b), a.max(b)]
}

/// Fit `y ≈ C₁(φ²+n−1)^{(γ+1)/2}` on the band `[lo, hi]` (absolute `φ`).
pub fn band_fit(state: &FlowState, params: &FlowParams, band: [f64; 2]) -> Result<GrowthPoint> {
    let y = y_snapshot(state)?;
    let edge = *y.nodes.last().unwrap();
    if band[1] > edge {
        return Err(McfError::Range {
            field: "analysis.band".into(),
            reason: format!("band end {} lies beyond the grid edge {edge}", band[1]),
        });
    }
    let h = params.half_exponent();
    let samples: Vec<(f64, f64)> = (0..y.len())
        .filter(|&i| y.nodes[i] >= band[0] && y.nodes[i] <= band[1])
        .map(|i| ((y.nodes[i].powi(2) + params.nf() - 1.0).powf(h), y.value(i)))
        .collect();
    if samples.len() < 3 {
        return Err(McfError::Range {
            field: "analysis.band".into(),
            reason: format!("band {band:?} holds only {} nodes", samples.len()),
        });
    }
    let c1 = samples.iter().map(|(g, v)| g * v).sum::<f64>() / samples.iter().map(|(g, _)| g * g).sum::<f64>();
    let dispersion = samples.iter().map(|(g, v)| (v / g - c1).abs() / c1).fold(0.0, f64::max);
    Ok(GrowthPoint { tau: y.time, c1_fit: c1, dispersion })
}

pub fn exterior_growth(traj: &Trajectory, cfg: &AnalysisConfig, constants: Option<&BarrierConstants>) -> Result<GrowthReport> {
    cfg.validate()?;
    let edge = traj.snapshots.first().and_then(|s| s.nodes.last().copied()).unwrap_or(0.0);
    let band = [cfg.band[0] * edge, cfg.band[1] * edge];
    let points = traj.snapshots.par_iter().map(|s| band_fit(s, &traj.params, band)).collect::<Result<Vec<_>>>()?;
    Ok(GrowthReport { band, points, bracket: constants.map(growth_bracket) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainPoint {
    pub tau: f64,
    /// `max κ_n/(2t+1)^{(γ−1)/2}` over `z ≥ R₁`.
    pub kappan_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub initial_max: f64,
    pub run_max: f64,
    /// `run_max ≤ 1.05·initial_max`
    pub bounded: bool,
    /// `C·R₁⁻⁴` with `C = initial_max`.
    pub chain_bound: f64,
    /// `(γ+1)Ã`
    pub chain_target: f64,
    pub chain: Vec<ChainPoint>,
    /// `max κ_n/(2t+1)^{(γ−1)/2}` on `z ≥ R₁` over all snapshots.
    pub outer_max: f64,
    /// `κ_n ≤ C R₁⁻⁴ (2t+1)^{(γ−1)/2}` at every snapshot.
    pub first_link: bool,
    /// `κ_n < (γ+1)Ã (2t+1)^{(γ−1)/2}` at every snapshot.
    pub second_link: bool,
}

pub fn ratio_principle(traj: &Trajectory, r1: f64) -> Result<RatioReport> {
    let p = &traj.params;
    let initial_max = traj.records.first().map_or(f64::NAN, |r| r.ratio_max);
    let run_max = traj.records.iter().map(|r| r.ratio_max).fold(f64::NEG_INFINITY, f64::max);
    let chain_bound = initial_max * r1.powi(-4);
    let chain_target = p.tip_mean_curvature_prefactor();
    let chain = traj
        .snapshots
        .par_iter()
        .map(|snap| {
            let y = y_snapshot(snap)?;
            let curv = curvatures(&y, p)?;
            let ez = (p.gamma * y.time).exp();
            let s = (2.0 * y.time).exp();
            let kn = (0..y.len())
                .filter(|&i| y.nodes[i] * ez >= r1)
                .map(|i| curv.kappan[i])
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(ChainPoint { tau: y.time, kappan_scaled: kn / s.powf(0.5 * (p.gamma - 1.0)) })
        })
        .collect::<Result<Vec<_>>>()?;
    let outer_max = chain.iter().map(|c| c.kappan_scaled).fold(f64::NEG_INFINITY, f64::max);
    Ok(RatioReport {
        initial_max,
        run_max,
        bounded: run_max <= 1.05 * initial_max,
        chain_bound,
        chain_target,
        chain,
        outer_max,
        first_link: outer_max <= chain_bound,
        second_link: outer_max < chain_target,
    })
}

/// Trend of the second half of a curve: least-squares slope against `τ`,
/// the largest residual as noise band, and whether the curve decreases
/// (non-positive slope, no step up by more than twice the band).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailTrend {
    pub slope: f64,
    pub noise: f64,
    pub decreasing: bool,
}

pub fn tail_trend(points: &[(f64, f64)]) -> Option<TailTrend> {
    let tail = &points[points.len() / 2..];
    let (x, y): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
    let fit = fit_line(&x, &y)?;
    let noise = x.iter().zip(&y).map(|(a, b)| (b - fit.intercept - fit.slope * a).abs()).fold(0.0, f64::max);
    let steps_ok = y.windows(2).all(|w| w[1] <= w[0] + 2.0 * noise);
    Some(TailTrend { slope: fit.slope, noise, decreasing: fit.slope <= 0.0 && steps_ok })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub blowup: BlowupFit,
    pub tip_error: TipErrorCurve,
    pub tip_trend: Option<TailTrend>,
    pub growth: GrowthReport,
    /// Trend of the band dispersion.
    pub growth_trend: Option<TailTrend>,
    pub ratio: Option<RatioReport>,
}

/// All trajectory measurements; the ratio chain needs `R₁` from the barriers.
pub fn analyze(
    traj: &Trajectory,
    profile: &SolitonProfile,
    cfg: &AnalysisConfig,
    constants: Option<&BarrierConstants>,
) -> Result<AsymptoticsReport> {
    let tip_error = tip_profile_error(traj, profile, cfg)?;
    let growth = exterior_growth(traj, cfg, constants)?;
    let dispersion: Vec<(f64, f64)> = growth.points.iter().map(|g| (g.tau, g.dispersion)).collect();
    Ok(AsymptoticsReport {
        blowup: fit_blowup_exponent(traj, cfg)?,
        tip_trend: tail_trend(&tip_error.points),
        tip_error,
        growth_trend: tail_trend(&dispersion),
        growth,
        ratio: constants.map(|k| ratio_principle(traj, k.R1)).transpose()?,
    })
}
