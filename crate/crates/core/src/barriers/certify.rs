//! Constant selection and grid certification of the barrier pair.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::patch::{Barrier, CrossingStats};
use super::qprofile::{build_q, QProfile, QSource};
use super::regions::{ExteriorBarrier, InteriorBarrier, SideConstants};
use super::{BarrierConstants, Sign};
use crate::error::{McfError, Result};
use crate::formal::{lambda_bar, PsiProfile};
use crate::geometry::FlowParams;
use crate::numerics::{geomspace, linspace};
use crate::soliton::SolitonProfile;

/// Tunable choices for the barrier construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierConfig {
    /// `c± = (1 ∓ ε_c) c`.
    pub eps_c: f64,
    /// Required bound on `sup |λ⁺ − λ⁻|` at `τ₀`.
    pub gap_eps: f64,
    pub r1: f64,
    pub r2: f64,
    /// `b± = ∓ k_b (c±)³`.
    pub k_b: f64,
    /// Source constants of `Q`.
    pub kappa0: f64,
    pub kappa1: f64,
    /// Initial `D± = d_factor · |B±|`; searched in `[1e−3, 1e3]` if that fails.
    pub d_factor: f64,
    pub c1_psi: f64,
    /// Time at which `E±` puts the crossing at `z = √(R₁R₂)`.
    pub tau_ref: f64,
    /// Length of the certification window.
    pub window: f64,
    pub z_nodes: usize,
    pub tau_nodes: usize,
    /// Outer edge of the exterior certification domain.
    pub phi_far: f64,
    pub tau_search_lo: f64,
    pub tau_search_hi: f64,
    pub bisection_tol: f64,
    pub q_rel_tol: f64,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            eps_c: 0.1,
            gap_eps: 0.25,
            r1: 10.0,
            r2: 1.0,
            k_b: 4.0,
            kappa0: 1.0,
            kappa1: 2.0,
            d_factor: 1.0,
            c1_psi: 0.0,
            tau_ref: 3.0,
            window: 5.0,
            z_nodes: 400,
            tau_nodes: 50,
            phi_far: 1e3,
            tau_search_lo: 0.5,
            tau_search_hi: 12.0,
            bisection_tol: 0.02,
            q_rel_tol: 1e-10,
        }
    }
}

impl BarrierConfig {
    pub fn validate(&self) -> Result<()> {
        let range = |field: &str, reason: String| Err(McfError::Range { field: format!("barriers.{field}"), reason });
        if !(self.eps_c > 0.0 && self.eps_c < 1.0) {
            return range("eps_c", format!("must lie in (0, 1), got {}", self.eps_c));
        }
        if !(self.gap_eps > 0.0) {
            return range("gap_eps", format!("must be positive, got {}", self.gap_eps));
        }
        if !(self.r2 > 0.0 && self.r1 > self.r2) {
            return range("r1", format!("need 0 < r2 < r1, got r2 = {}, r1 = {}", self.r2, self.r1));
        }
        if !(self.k_b > 1.0) {
            return range("k_b", format!("must exceed 1 so that |b⁺| > (c⁺)³, got {}", self.k_b));
        }
        if self.z_nodes < 400 {
            return range("z_nodes", format!("at least 400 nodes required, got {}", self.z_nodes));
        }
        if self.tau_nodes < 50 {
            return range("tau_nodes", format!("at least 50 nodes required, got {}", self.tau_nodes));
        }
        if !(self.window > 0.0) {
            return range("window", format!("must be positive, got {}", self.window));
        }
        if !(self.tau_search_hi > self.tau_search_lo && self.bisection_tol > 0.0) {
            return range("tau_search_hi", "search interval is empty".into());
        }
        if !(self.phi_far > self.r1) {
            return range("phi_far", format!("must exceed r1, got {}", self.phi_far));
        }
        Ok(())
    }
}

/// Worst signed margin on a grid, at two resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub worst: f64,
    pub worst_refined: f64,
    /// `|worst − worst_refined|`, the sampling error estimate.
    pub error_estimate: f64,
    pub at_x: f64,
    pub at_tau: f64,
    pub nodes_x: usize,
    pub nodes_tau: usize,
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub min_sign_changes: usize,
    pub max_sign_changes: usize,
    pub all_monotone: bool,
    /// First time with a failed crossing, if any.
    pub worst_tau: Option<f64>,
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Interior sign grids clear from here on.
    pub tau1: f64,
    /// Exterior sign grids.
    pub tau2: f64,
    /// Interior ordering.
    pub tau3: f64,
    /// Exterior ordering.
    pub tau4: f64,
    /// Single monotone crossing.
    pub tau5: f64,
}

/// Everything that was checked, with margins and where they were attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierCertificate {
    pub constants: BarrierConstants,
    pub config: BarrierConfig,
    pub thresholds: Thresholds,
    pub window: [f64; 2],
    pub interior_upper: GridReport,
    pub interior_lower: GridReport,
    pub exterior_upper: GridReport,
    pub exterior_lower: GridReport,
    pub crossing_upper: CrossingReport,
    pub crossing_lower: CrossingReport,
    pub interior_ordering: GridReport,
    pub exterior_ordering: GridReport,
    pub global_ordering: GridReport,
    /// `|λ±| ≤ 2c±λ̄` on the outer tenth of the exterior domain.
    pub decay_ok: bool,
    /// Sup of the diffusion quotient deviation: outer zone `φ ≥ 1/2` and inner zone.
    pub m1: f64,
    pub m2: f64,
    /// `b⁺ ≤ min{−2(c⁺)³/3, −(c⁺)³/(1 + (c⁺)³M₂R₂⁻²)}`.
    pub b_plus_bound_ok: bool,
    /// Interior grid with `D = 0`: the correction term is needed iff this fails.
    pub no_correction_upper: GridReport,
    pub no_correction_lower: GridReport,
    pub relation_violations: Vec<String>,
    pub all_certified: bool,
}

/// The certified upper and lower barriers.
#[derive(Debug, Clone)]
pub struct BarrierPair {
    pub upper: Barrier,
    pub lower: Barrier,
    pub constants: BarrierConstants,
    pub certificate: BarrierCertificate,
}

impl BarrierPair {
    pub fn barrier(&self, sign: Sign) -> &Barrier {
        match sign {
            Sign::Upper => &self.upper,
            Sign::Lower => &self.lower,
        }
    }

    /// CSV of both crossing functions on `[R₂, R₁]` at the given times.
    pub fn write_crossing_csv<W: Write>(&self, taus: &[f64], nodes: usize, mut out: W) -> Result<()> {
        writeln!(out, "tau,z,G_plus,G_minus")?;
        let c = &self.constants;
        for &tau in taus {
            for z in linspace(c.R2, c.R1, nodes) {
                let gp = self.upper.crossing(z, tau)?;
                let gm = self.lower.crossing(z, tau)?;
                writeln!(out, "{tau:.16e},{z:.16e},{gp:.16e},{gm:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Minimum of `f` over a tensor grid (rows in τ are evaluated in parallel).
fn grid_min<F>(xs_of_tau: &(dyn Fn(f64) -> Vec<f64> + Sync), taus: &[f64], f: F) -> Result<(f64, f64, f64)>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let rows: Vec<Result<(f64, f64, f64)>> = taus
        .par_iter()
        .map(|&tau| {
            let mut best = (f64::INFINITY, 0.0, tau);
            for x in xs_of_tau(tau) {
                let v = f(x, tau)?;
                if v.is_nan() {
                    return Err(McfError::Numerical(format!("NaN margin at x = {x}, τ = {tau}")));
                }
                if v < best.0 {
                    best = (v, x, tau);
                }
            }
            Ok(best)
        })
        .collect();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for r in rows {
        let r = r?;
        if r.0 < best.0 {
            best = r;
        }
    }
    Ok(best)
}

/// Grid certification with a Richardson-style sampling error estimate: the
/// grid is refined by bisection in both directions and the change of the
/// worst margin is taken as its error.
fn certify_grid<F>(
    xs_of: impl Fn(f64, usize) -> Vec<f64> + Sync,
    window: [f64; 2],
    nx: usize,
    nt: usize,
    f: F,
) -> Result<GridReport>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let coarse_t = linspace(window[0], window[1], nt);
    let fine_t = linspace(window[0], window[1], 2 * nt - 1);
    let cx = |t: f64| xs_of(t, nx);
    let fx = |t: f64| xs_of(t, 2 * nx - 1);
    let (w0, _, _) = grid_min(&cx, &coarse_t, &f)?;
    let (w1, x1, t1) = grid_min(&fx, &fine_t, &f)?;
    let err = (w0 - w1).abs();
    Ok(GridReport {
        worst: w0,
        worst_refined: w1,
        error_estimate: err,
        at_x: x1,
        at_tau: t1,
        nodes_x: nx,
        nodes_tau: nt,
        certified: w1 - err > 0.0,
    })
}

struct Pieces {
    params: FlowParams,
    cfg: BarrierConfig,
    constants: BarrierConstants,
    upper_int: InteriorBarrier,
    lower_int: InteriorBarrier,
    upper_ext: ExteriorBarrier,
    lower_ext: ExteriorBarrier,
}

impl Pieces {
    fn int(&self, sign: Sign) -> &InteriorBarrier {
        match sign {
            Sign::Upper => &self.upper_int,
            Sign::Lower => &self.lower_int,
        }
    }

    fn ext(&self, sign: Sign) -> &ExteriorBarrier {
        match sign {
            Sign::Upper => &self.upper_ext,
            Sign::Lower => &self.lower_ext,
        }
    }

    fn z_grid(&self) -> impl Fn(f64, usize) -> Vec<f64> + Sync {
        let r1 = self.cfg.r1;
        move |_, n| linspace(0.0, r1, n)
    }

    fn phi_grid(&self) -> impl Fn(f64, usize) -> Vec<f64> + Sync {
        let (r2, g, far) = (self.cfg.r2, self.params.gamma, self.cfg.phi_far);
        move |tau, n| geomspace(r2 * (-g * tau).exp(), far, n)
    }

    fn interior_report(&self, sign: Sign, w: [f64; 2]) -> Result<GridReport> {
        let b = self.int(sign);
        certify_grid(self.z_grid(), w, self.cfg.z_nodes, self.cfg.tau_nodes, |z, t| {
            Ok(sign.factor() * b.scaled_residual(z, t)?)
        })
    }

    fn exterior_report(&self, sign: Sign, w: [f64; 2]) -> Result<GridReport> {
        let b = self.ext(sign);
        certify_grid(self.phi_grid(), w, self.cfg.z_nodes, self.cfg.tau_nodes, |phi, t| {
            Ok(sign.factor() * b.normalized_residual(phi, t)?)
        })
    }

    fn interior_ordering(&self, w: [f64; 2]) -> Result<GridReport> {
        let off = -self.upper_int.side.a;
        certify_grid(self.z_grid(), w, self.cfg.z_nodes, self.cfg.tau_nodes, |z, t| {
            Ok(self.upper_int.scaled_value(z, t, off)? - self.lower_int.scaled_value(z, t, off)?)
        })
    }

    fn exterior_ordering(&self, w: [f64; 2]) -> Result<GridReport> {
        // (λ⁺ − λ⁻)/λ̄, positive when ordered
        certify_grid(self.phi_grid(), w, self.cfg.z_nodes, self.cfg.tau_nodes, |phi, t| {
            let d = self.upper_ext.value(phi, t)? - self.lower_ext.value(phi, t)?;
            Ok(d / lambda_bar(phi, &self.params)[0])
        })
    }

    fn crossing_report(&self, sign: Sign, w: [f64; 2]) -> Result<CrossingReport> {
        let bar = Barrier {
            sign,
            constants: self.constants,
            interior: self.int(sign).clone(),
            exterior: self.ext(sign).clone(),
        };
        let taus = linspace(w[0], w[1], self.cfg.tau_nodes);
        let stats: Vec<(f64, CrossingStats)> = taus
            .par_iter()
            .map(|&t| Ok((t, bar.crossing_stats(t, self.cfg.z_nodes)?)))
            .collect::<Result<_>>()?;
        let min = stats.iter().map(|s| s.1.sign_changes).min().unwrap_or(0);
        let max = stats.iter().map(|s| s.1.sign_changes).max().unwrap_or(0);
        let mono = stats.iter().all(|s| s.1.monotone);
        let worst_tau = stats
            .iter()
            .find(|s| s.1.sign_changes != 1 || !s.1.monotone)
            .map(|s| s.0);
        Ok(CrossingReport {
            min_sign_changes: min,
            max_sign_changes: max,
            all_monotone: mono,
            worst_tau,
            certified: min == 1 && max == 1 && mono,
        })
    }

    fn window(&self, start: f64) -> [f64; 2] {
        [start, start + self.cfg.window]
    }
}

fn bisect_threshold(lo: f64, hi: f64, tol: f64, what: &str, pred: impl Fn(f64) -> Result<bool>) -> Result<f64> {
    if pred(lo)? {
        return Ok(lo);
    }
    if !pred(hi)? {
        return Err(McfError::Certification(format!(
            "{what} does not hold on any window starting in [{lo}, {hi}]"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if pred(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}

fn side_constants(params: &FlowParams, cfg: &BarrierConfig, sign: Sign) -> SideConstants {
    let n1 = params.nf() - 1.0;
    let h = params.half_exponent();
    let bt = n1.powf(-3.0 * h) / (params.gamma + 1.0);
    let c = params.c() * (1.0 - sign.factor() * cfg.eps_c);
    let a = c * n1.powf(-h);
    let b = -sign.factor() * cfg.k_b * c.powi(3);
    let b_cap = -params.gamma * b * bt;
    SideConstants { sign, a, b_cap, e: 0.0, d: cfg.d_factor * b_cap.abs(), c, b }
}

/// Choose constants, build `Q±`, certify all sign grids and the patch, and
/// return the barrier pair with its certificate.
pub fn construct_barriers(
    params: &FlowParams,
    profile: Arc<SolitonProfile>,
    cfg: &BarrierConfig,
) -> Result<BarrierPair> {
    params.validate()?;
    cfg.validate()?;
    let n1 = params.nf() - 1.0;
    let beta_tilde = n1.powf(-3.0 * params.half_exponent()) / (params.gamma + 1.0);
    let psi = PsiProfile::new(*params, cfg.c1_psi);

    let mut sides = [side_constants(params, cfg, Sign::Upper), side_constants(params, cfg, Sign::Lower)];
    let mut qs: Vec<Arc<QProfile>> = Vec::with_capacity(2);
    for s in &sides {
        let src = QSource { sigma: s.b_cap.signum(), kappa0: cfg.kappa0, kappa1: cfg.kappa1 };
        qs.push(Arc::new(build_q(profile.clone(), s.a, params.gamma, src, cfg.r1 * 1.05, cfg.q_rel_tol)?));
    }

    let make_int = |s: SideConstants, q: &Arc<QProfile>| InteriorBarrier {
        side: s,
        params: *params,
        profile: profile.clone(),
        q: Some(q.clone()),
    };
    let provisional = [cfg.tau_ref, cfg.tau_ref + cfg.window];

    // D±: the natural choice, else a log-uniform search
    for k in 0..2 {
        let sign = sides[k].sign;
        let probe = |d: f64| -> Result<GridReport> {
            let mut s = sides[k];
            s.d = d;
            let b = make_int(s, &qs[k]);
            certify_grid(|_, n| linspace(0.0, cfg.r1, n), provisional, cfg.z_nodes, cfg.tau_nodes, |z, t| {
                Ok(sign.factor() * b.scaled_residual(z, t)?)
            })
        };
        if !probe(sides[k].d)?.certified {
            let cands = geomspace(1e-3, 1e3, 31);
            let reports: Vec<(f64, GridReport)> =
                cands.par_iter().map(|&d| Ok((d, probe(d)?))).collect::<Result<_>>()?;
            let best = reports
                .iter()
                .filter(|r| r.1.certified)
                .max_by(|a, b| a.1.worst_refined.total_cmp(&b.1.worst_refined));
            match best {
                Some(r) => {
                    log::info!("{} barrier: D = {:e} certifies (natural choice did not)", sign.name(), r.0);
                    sides[k].d = r.0;
                }
                None => {
                    let w = reports.iter().max_by(|a, b| a.1.worst_refined.total_cmp(&b.1.worst_refined)).unwrap();
                    return Err(McfError::Certification(format!(
                        "no D in [1e-3, 1e3] certifies the {} interior barrier; best margin {:e} at z = {}, τ = {}",
                        sign.name(),
                        w.1.worst_refined,
                        w.1.at_x,
                        w.1.at_tau
                    )));
                }
            }
        }
    }

    // E±: crossing at z* = √(R₁R₂) at τ_ref
    let z_star = (cfg.r1 * cfg.r2).sqrt();
    for k in 0..2 {
        let int = make_int(sides[k], &qs[k]);
        let ext = ExteriorBarrier { side: sides[k], params: *params, psi, r2: cfg.r2 };
        let g0 = super::regions::crossing(&int, &ext, z_star, cfg.tau_ref)?;
        // E enters the crossing with the barrier's sign
        sides[k].e = -sides[k].sign.factor() * g0;
    }

    let constants = BarrierConstants {
        A_plus: sides[0].a,
        A_minus: sides[1].a,
        B_plus: sides[0].b_cap,
        B_minus: sides[1].b_cap,
        E_plus: sides[0].e,
        E_minus: sides[1].e,
        D_plus: sides[0].d,
        D_minus: sides[1].d,
        c_plus: sides[0].c,
        c_minus: sides[1].c,
        b_plus: sides[0].b,
        b_minus: sides[1].b,
        R1: cfg.r1,
        R2: cfg.r2,
        tau0: f64::NAN,
        beta_tilde,
    };
    let mut pieces = Pieces {
        params: *params,
        cfg: *cfg,
        constants,
        upper_int: make_int(sides[0], &qs[0]),
        lower_int: make_int(sides[1], &qs[1]),
        upper_ext: ExteriorBarrier { side: sides[0], params: *params, psi, r2: cfg.r2 },
        lower_ext: ExteriorBarrier { side: sides[1], params: *params, psi, r2: cfg.r2 },
    };

    let (lo, hi, tol) = (cfg.tau_search_lo, cfg.tau_search_hi, cfg.bisection_tol);
    let p = &pieces;
    let tau1 = bisect_threshold(lo, hi, tol, "interior sign condition", |t| {
        Ok(p.interior_report(Sign::Upper, p.window(t))?.certified
            && p.interior_report(Sign::Lower, p.window(t))?.certified)
    })?;
    let tau2 = bisect_threshold(lo, hi, tol, "exterior sign condition", |t| {
        Ok(p.exterior_report(Sign::Upper, p.window(t))?.certified
            && p.exterior_report(Sign::Lower, p.window(t))?.certified)
    })?;
    let tau3 = bisect_threshold(lo, hi, tol, "interior ordering", |t| Ok(p.interior_ordering(p.window(t))?.certified))?;
    let tau4 = bisect_threshold(lo, hi, tol, "exterior ordering", |t| Ok(p.exterior_ordering(p.window(t))?.certified))?;
    let tau5 = bisect_threshold(lo, hi, tol, "single monotone crossing", |t| {
        Ok(p.crossing_report(Sign::Upper, p.window(t))?.certified
            && p.crossing_report(Sign::Lower, p.window(t))?.certified)
    })?;
    let thresholds = Thresholds { tau1, tau2, tau3, tau4, tau5 };
    let tau0 = tau1.max(tau2).max(tau3).max(tau4).max(tau5);
    pieces.constants.tau0 = tau0;
    let w = pieces.window(tau0);
    let p = &pieces;

    let upper = Barrier {
        sign: Sign::Upper,
        constants: p.constants,
        interior: p.upper_int.clone(),
        exterior: p.upper_ext.clone(),
    };
    let lower = Barrier {
        sign: Sign::Lower,
        constants: p.constants,
        interior: p.lower_int.clone(),
        exterior: p.lower_ext.clone(),
    };

    let interior_upper = p.interior_report(Sign::Upper, w)?;
    let interior_lower = p.interior_report(Sign::Lower, w)?;
    let exterior_upper = p.exterior_report(Sign::Upper, w)?;
    let exterior_lower = p.exterior_report(Sign::Lower, w)?;
    let crossing_upper = p.crossing_report(Sign::Upper, w)?;
    let crossing_lower = p.crossing_report(Sign::Lower, w)?;
    let interior_ordering = p.interior_ordering(w)?;
    let exterior_ordering = p.exterior_ordering(w)?;
    let off = -p.constants.A_plus;
    let global_ordering = certify_grid(
        |t, n| geomspace(1e-3 * cfg.r2 * (-params.gamma * t).exp(), cfg.phi_far, n),
        w,
        cfg.z_nodes,
        cfg.tau_nodes,
        |phi, t| Ok(upper.scaled_value(phi, t, off)? - lower.scaled_value(phi, t, off)?),
    )?;

    // decay at the far edge
    let mut decay_ok = true;
    for t in linspace(w[0], w[1], cfg.tau_nodes) {
        for phi in geomspace(cfg.phi_far / 10.0, cfg.phi_far, 50) {
            for b in [&upper, &lower] {
                let v = b.value(phi, t)?;
                decay_ok &= v.abs() <= 2.0 * b.interior.side.c * lambda_bar(phi, params)[0];
            }
        }
    }

    // diffusion quotient constants, δ = 1/2
    let mut m1: f64 = 0.0;
    let mut m2: f64 = 0.0;
    for t in linspace(w[0], w[1], cfg.tau_nodes) {
        let eps = (-2.0 * params.gamma * t).exp();
        for ext in [&p.upper_ext, &p.lower_ext] {
            let bb = ext.side.b.abs();
            for phi in geomspace(ext.inner_edge(t), cfg.phi_far, cfg.z_nodes) {
                let q = ext.diffusion_deviation(phi, t)?.abs();
                if phi >= 0.5 {
                    m1 = m1.max(q / (bb * eps));
                } else {
                    m2 = m2.max(q * phi * phi / (bb * eps));
                }
            }
        }
    }
    let cp3 = p.constants.c_plus.powi(3);
    let b_plus_bound = (-2.0 * cp3 / 3.0).min(-cp3 / (1.0 + cp3 * m2 / (cfg.r2 * cfg.r2)));
    let b_plus_bound_ok = p.constants.b_plus <= b_plus_bound;

    let no_corr = |sign: Sign| -> Result<GridReport> {
        let mut b = p.int(sign).clone();
        b.side.d = 0.0;
        b.q = None;
        certify_grid(p.z_grid(), w, cfg.z_nodes, cfg.tau_nodes, |z, t| Ok(sign.factor() * b.scaled_residual(z, t)?))
    };
    let no_correction_upper = no_corr(Sign::Upper)?;
    let no_correction_lower = no_corr(Sign::Lower)?;
    let relation_violations = p.constants.relation_violations(params.n, params.gamma);

    let all_certified = interior_upper.certified
        && interior_lower.certified
        && exterior_upper.certified
        && exterior_lower.certified
        && crossing_upper.certified
        && crossing_lower.certified
        && interior_ordering.certified
        && exterior_ordering.certified
        && global_ordering.certified
        && decay_ok
        && b_plus_bound_ok
        && relation_violations.is_empty();

    let certificate = BarrierCertificate {
        constants: p.constants,
        config: *cfg,
        thresholds,
        window: w,
        interior_upper,
        interior_lower,
        exterior_upper,
        exterior_lower,
        crossing_upper,
        crossing_lower,
        interior_ordering,
        exterior_ordering,
        global_ordering,
        decay_ok,
        m1,
        m2,
        b_plus_bound_ok,
        no_correction_upper,
        no_correction_lower,
        relation_violations,
        all_certified,
    };
    Ok(BarrierPair { upper, lower, constants: p.constants, certificate })
}
