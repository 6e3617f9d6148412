//! The translating bowl soliton.
//!
//! `P̃(w)` solves `P̃_ww/(1+P̃_w²) + (n−1)P̃_w/w = 1`, `P̃(0) = P̃_w(0) = 0`.
//! Near the axis the profile is launched from its Taylor series; beyond the
//! tabulated range it is continued by the far-field expansion
//! `w²/(2(n−1)) − log w + K + k₂ w⁻²` matched to the integrated solution.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{McfError, Result};
use crate::geometry::FlowParams;
use crate::numerics::{integrate, DenseSolution, OdeOptions, OdeSystem};

pub const DEFAULT_LAUNCH: f64 = 1e-3;
pub const DEFAULT_REL_TOL: f64 = 1e-10;

struct BowlOde {
    n1: f64,
}

impl BowlOde {
    fn pww(&self, w: f64, q: f64) -> f64 {
        (1.0 + q * q) * (1.0 - self.n1 * q / w)
    }
}

impl OdeSystem<2> for BowlOde {
    fn rhs(&self, w: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], self.pww(w, y[1])]
    }

    fn rhs_derivative(&self, w: f64, y: &[f64; 2], f: &[f64; 2]) -> [f64; 2] {
        let q = y[1];
        let g = f[1];
        let dg_dw = (1.0 + q * q) * self.n1 * q / (w * w);
        let dg_dq = 2.0 * q * (1.0 - self.n1 * q / w) - (1.0 + q * q) * self.n1 / w;
        [g, dg_dw + dg_dq * g]
    }
}

/// Taylor coefficients of `P̃ = w²/(2n) + a₄w⁴ + a₆w⁶ + …`.
pub fn series_coefficients(n: u32) -> (f64, f64) {
    let n = n as f64;
    let a4 = 1.0 / (4.0 * n.powi(3) * (n + 2.0));
    let a6 = -(n - 3.0) / (6.0 * n.powi(5) * (n + 2.0) * (n + 4.0));
    (a4, a6)
}

/// Tabulated bowl profile with dense output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonProfile {
    pub n: u32,
    pub w_grid: Vec<f64>,
    pub p: Vec<f64>,
    pub pw: Vec<f64>,
    /// Below this radius values come from the Taylor series.
    pub switch_radius: f64,
    pub w_max: f64,
    pub rel_tol: f64,
    pub error_estimate: f64,
    /// Far-field constant `K` in `P̃ − w²/(2(n−1)) + log w → K`.
    pub far_constant: f64,
    /// Coefficient `k₂` of the `w⁻²` correction, matched at `w_max`.
    pub far_k2: f64,
    dense: DenseSolution<2>,
}

/// Value, first and second derivative.
pub type Jet = [f64; 3];

pub fn solve_bowl(n: u32, w_max: f64, rel_tol: f64) -> Result<SolitonProfile> {
    solve_bowl_with_launch(n, w_max, rel_tol, DEFAULT_LAUNCH)
}

pub fn solve_bowl_with_launch(n: u32, w_max: f64, rel_tol: f64, w0: f64) -> Result<SolitonProfile> {
    if n < 2 {
        return Err(McfError::Range { field: "n".into(), reason: format!("n ≥ 2 required, got {n}") });
    }
    if !(w_max > 1.0) {
        return Err(McfError::Range { field: "w_max".into(), reason: format!("w_max > 1 required, got {w_max}") });
    }
    if !(1e-14..=1e-6).contains(&rel_tol) {
        return Err(McfError::Range {
            field: "rel_tol".into(),
            reason: format!("rel_tol must lie in [1e-14, 1e-6], got {rel_tol:e}"),
        });
    }
    if !(w0 > 0.0 && w0 < 0.1) {
        return Err(McfError::Range { field: "w0".into(), reason: format!("launch radius must lie in (0, 0.1), got {w0}") });
    }
    let (a4, a6) = series_coefficients(n);
    let nf = n as f64;
    let y0 = [
        w0 * w0 / (2.0 * nf) + a4 * w0.powi(4) + a6 * w0.powi(6),
        w0 / nf + 4.0 * a4 * w0.powi(3) + 6.0 * a6 * w0.powi(5),
    ];
    let sys = BowlOde { n1: nf - 1.0 };
    let opts = OdeOptions {
        rel_tol,
        abs_tol: rel_tol * 1e-6,
        initial_step: w0 * 0.1,
        max_step: 0.5,
        max_steps: 2_000_000,
    };
    let dense = integrate(&sys, w0, y0, w_max, &opts)?;
    let mut w_grid = vec![0.0];
    let mut p = vec![0.0];
    let mut pw = vec![0.0];
    for (w, y) in dense.t.iter().zip(&dense.y) {
        w_grid.push(*w);
        p.push(y[0]);
        pw.push(y[1]);
    }
    let pe = *p.last().unwrap();
    let qe = *pw.last().unwrap();
    let lead = w_max / (nf - 1.0) - 1.0 / w_max;
    let far_k2 = -(qe - lead) * w_max.powi(3) / 2.0;
    let far_constant = pe - w_max * w_max / (2.0 * (nf - 1.0)) + w_max.ln() - far_k2 / (w_max * w_max);
    Ok(SolitonProfile {
        n,
        w_grid,
        p,
        pw,
        switch_radius: w0,
        w_max,
        rel_tol,
        error_estimate: dense.max_error_estimate * rel_tol,
        far_constant,
        far_k2,
        dense,
    })
}

impl SolitonProfile {
    fn n1(&self) -> f64 {
        self.n as f64 - 1.0
    }

    /// `P̃_ww` from the ODE (with the axis limit `1/n`).
    pub fn pww_from(&self, w: f64, q: f64) -> f64 {
        if w == 0.0 {
            1.0 / self.n as f64
        } else {
            (1.0 + q * q) * (1.0 - self.n1() * q / w)
        }
    }

    /// `(P̃, P̃_w, P̃_ww)` at `w`, evenly extended to `w < 0`.
    pub fn eval(&self, w: f64) -> Jet {
        let s = w.signum();
        let a = w.abs();
        let [v, d1, d2] = self.eval_nonneg(a);
        [v, s * d1, d2]
    }

    fn eval_nonneg(&self, w: f64) -> Jet {
        let nf = self.n as f64;
        if w <= self.switch_radius {
            let (a4, a6) = series_coefficients(self.n);
            let w2 = w * w;
            return [
                w2 / (2.0 * nf) + a4 * w2 * w2 + a6 * w2 * w2 * w2,
                w / nf + 4.0 * a4 * w2 * w + 6.0 * a6 * w2 * w2 * w,
                1.0 / nf + 12.0 * a4 * w2 + 30.0 * a6 * w2 * w2,
            ];
        }
        if w <= self.w_max {
            let y = self.dense.eval(w);
            let q = y[1][0];
            return [y[0][0], q, self.pww_from(w, q)];
        }
        self.far_field(w)
    }

    /// `P̃_www`, from differentiating the ODE.
    pub fn third_derivative(&self, w: f64) -> f64 {
        let a = w.abs();
        let v = if a <= self.switch_radius {
            let (a4, a6) = series_coefficients(self.n);
            24.0 * a4 * a + 120.0 * a6 * a.powi(3)
        } else {
            let [_, q, qw] = self.eval_nonneg(a);
            let n1 = self.n1();
            2.0 * q * qw * (1.0 - n1 * q / a) - (1.0 + q * q) * n1 * (qw / a - q / (a * a))
        };
        w.signum() * v
    }

    /// Matched far-field expansion, used beyond `w_max`.
    pub fn far_field(&self, w: f64) -> Jet {
        let n1 = self.n1();
        let k2 = self.far_k2;
        [
            w * w / (2.0 * n1) - w.ln() + self.far_constant + k2 / (w * w),
            w / n1 - 1.0 / w - 2.0 * k2 / w.powi(3),
            1.0 / n1 + 1.0 / (w * w) + 6.0 * k2 / w.powi(4),
        ]
    }

    /// ODE residual using the interpolated derivative of `P̃_w` (independent of
    /// the right-hand side used in [`eval`](Self::eval)).
    pub fn residual(&self, w: f64) -> f64 {
        if w <= self.switch_radius || w > self.w_max {
            return 0.0;
        }
        let y = self.dense.eval(w);
        let q = y[1][0];
        let qw = y[1][1];
        qw / (1.0 + q * q) + self.n1() * q / w - 1.0
    }

    /// Principal-curvature ratio `κ_n/κ₁ = w P̃_ww / (P̃_w (1+P̃_w²))` (1 on the axis).
    pub fn curvature_ratio(&self, w: f64) -> f64 {
        if w == 0.0 {
            return 1.0;
        }
        let [_, q, qq] = self.eval(w);
        w * qq / (q * (1.0 + q * q))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "w,P,Pw")?;
        for i in 0..self.w_grid.len() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", self.w_grid[i], self.p[i], self.pw[i])?;
        }
        Ok(())
    }
}

/// `F(z) = A³/(γ+1) · P̃(z(γ+1)/A)` with its first two `z`-derivatives.
///
/// `F` solves `F_zz/(1+F_z²/A⁴) + (n−1)F_z/z = (γ+1)A`.
pub fn f_of_z(profile: &SolitonProfile, z: f64, a: f64, gamma: f64) -> Jet {
    let g1 = gamma + 1.0;
    let [p, pw, pww] = profile.eval(z * g1 / a);
    [a.powi(3) / g1 * p, a * a * pw, a * g1 * pww]
}

/// `F̃(z) = P̃((γ+1)Ãz)/((γ+1)Ã) + C(τ)` with its first two `z`-derivatives.
pub fn ftilde_of_z(profile: &SolitonProfile, z: f64, params: &FlowParams, c_tau: f64) -> Jet {
    let k = (params.gamma + 1.0) * params.a_tilde;
    let [p, pw, pww] = profile.eval(k * z);
    [p / k + c_tau, pw, k * pww]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn bowl(n: u32) -> SolitonProfile {
        solve_bowl(n, 200.0, DEFAULT_REL_TOL).unwrap()
    }

    #[test]
    fn third_derivative_matches_differences() {
        let b = bowl(3);
        for w in [1e-3_f64, 0.5, 2.0, 30.0] {
            let h = 1e-5 * w.max(1.0);
            let fd = (b.eval(w + h)[2] - b.eval(w - h)[2]) / (2.0 * h);
            assert!((b.third_derivative(w) - fd).abs() < 1e-6, "w = {w}");
        }
    }

    #[test]
    fn launch_series_satisfies_the_ode() {
        for n in [2u32, 3, 7] {
            let (a4, a6) = series_coefficients(n);
            let nf = n as f64;
            let w: f64 = 0.01;
            let q = w / nf + 4.0 * a4 * w.powi(3) + 6.0 * a6 * w.powi(5);
            let qq = 1.0 / nf + 12.0 * a4 * w * w + 30.0 * a6 * w.powi(4);
            let r = qq / (1.0 + q * q) + (nf - 1.0) * q / w - 1.0;
            assert!(r.abs() < 1e-12, "n={n}: {r:e}");
        }
    }

    #[test]
    fn small_w_quadratic_law() {
        for n in [2u32, 3, 7] {
            let b = bowl(n);
            let w = 1e-2;
            let ratio = b.eval(w)[0] / (w * w / (2.0 * n as f64));
            assert!((ratio - 1.0).abs() < 1e-3, "n={n}: {ratio}");
        }
    }

    #[test]
    fn ode_residual_at_random_points() {
        let b = bowl(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let w = rng.gen_range(1e-3..200.0);
            worst = worst.max(b.residual(w).abs());
        }
        assert!(worst < 10.0 * b.rel_tol, "worst residual {worst:e}");
    }

    #[test]
    fn profile_is_strictly_convex() {
        let b = bowl(3);
        assert!(b.pw.windows(2).all(|w| w[1] > w[0]));
        for i in 1..b.w_grid.len() {
            assert!(b.pww_from(b.w_grid[i], b.pw[i]) > 0.0);
        }
        assert_eq!(b.p[0], 0.0);
        assert_eq!(b.pw[0], 0.0);
    }

    #[test]
    fn launch_radius_does_not_matter() {
        let a = solve_bowl_with_launch(2, 50.0, 1e-10, 1e-3).unwrap();
        let b = solve_bowl_with_launch(2, 50.0, 1e-10, 1e-2).unwrap();
        for w in [0.05, 0.5, 2.0, 10.0, 49.0] {
            let (pa, pb) = (a.eval(w)[0], b.eval(w)[0]);
            assert!((pa - pb).abs() < 10.0 * 1e-10 * pa.abs().max(1.0), "w={w}: {pa} vs {pb}");
        }
    }

    #[test]
    fn halving_tolerance_is_stable() {
        let a = solve_bowl(2, 100.0, 1e-9).unwrap();
        let b = solve_bowl(2, 100.0, 5e-10).unwrap();
        for w in [0.1, 1.0, 10.0, 99.0] {
            let (pa, pb) = (a.eval(w)[0], b.eval(w)[0]);
            assert!((pa - pb).abs() < 10.0 * 1e-9 * pa.abs().max(1.0));
        }
    }

    #[test]
    fn far_field_expansion_with_constant() {
        let b = solve_bowl(2, 400.0, DEFAULT_REL_TOL).unwrap();
        for w in [20.0, 50.0, 100.0, 200.0] {
            let dev = b.eval(w)[0] - w * w / 2.0 + f64::ln(w) - b.far_constant;
            assert!(dev.abs() * w * w < 5.0, "w={w}: {dev:e}");
        }
        // continuation past w_max is smooth
        let (l, r) = (b.eval(400.0 - 1e-9), b.eval(400.0 + 1e-9));
        assert!((l[0] - r[0]).abs() < 1e-6 && (l[1] - r[1]).abs() < 1e-8);
    }

    #[test]
    fn bowl_ratio_bounded_by_one() {
        let b = bowl(2);
        for i in 0..2000 {
            let w = 1e-3 * 1.005f64.powi(i);
            if w > 200.0 {
                break;
            }
            assert!(b.curvature_ratio(w) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn rescaled_family_solves_its_ode() {
        let b = bowl(3);
        let p = FlowParams::new(3, 2.0, 0.7).unwrap();
        let a = p.a();
        assert_eq!(f_of_z(&b, 0.0, a, p.gamma)[0], 0.0);
        assert_eq!(ftilde_of_z(&b, 0.0, &p, 0.0)[0], 0.0);
        for z in [0.01, 0.3, 1.0, 5.0, 20.0] {
            let [_, fz, fzz] = f_of_z(&b, z, a, p.gamma);
            let r = fzz / (1.0 + fz * fz / a.powi(4)) + 2.0 * fz / z - 3.0 * a;
            assert!(r.abs() < 1e-8, "z={z}: {r:e}");
            // finite-difference check of the derivative accessors
            let h = 1e-5;
            let d = (f_of_z(&b, z + h, a, p.gamma)[0] - f_of_z(&b, z - h, a, p.gamma)[0]) / (2.0 * h);
            assert!((d - fz).abs() < 1e-6 * fz.abs().max(1.0));
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let b = solve_bowl(2, 5.0, 1e-8).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("w,P,Pw\n"));
        assert_eq!(s.lines().count(), b.w_grid.len() + 1);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(solve_bowl(1, 10.0, 1e-10).is_err());
        assert!(solve_bowl(2, 0.5, 1e-10).is_err());
        assert!(solve_bowl(2, 10.0, 1e-3).is_err());
    }
}
