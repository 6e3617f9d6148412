//! Interior (tip) and exterior barriers and their residuals.
//!
//! Interior: `λ_int(z,τ) = −A + ε(F(z) + Bτ + E) + τε²DQ(z)`, `ε = e^{−2γτ}`.
//! Exterior: `λ_ext(φ,τ) = −cλ̄(φ) + bεψ(φ)`.
//!
//! Both are O(ε) perturbations of constants, so residuals and crossing
//! functions are also provided divided by `ε` and assembled without
//! cancellation, which keeps them meaningful for large `τ`.

use std::sync::Arc;

use super::operators::LambdaJet;
use super::qprofile::QProfile;
use super::Sign;
use crate::error::{McfError, Result};
use crate::formal::{lambda_bar, lambda_bar_increment, lambda_source, PsiProfile};
use crate::geometry::FlowParams;
use crate::soliton::{f_of_z, SolitonProfile};

/// Constants of one barrier (upper or lower).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideConstants {
    pub sign: Sign,
    pub a: f64,
    pub b_cap: f64,
    pub e: f64,
    pub d: f64,
    pub c: f64,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct InteriorBarrier {
    pub side: SideConstants,
    pub params: FlowParams,
    pub profile: Arc<SolitonProfile>,
    pub q: Option<Arc<QProfile>>,
}

fn eps(params: &FlowParams, tau: f64) -> f64 {
    (-2.0 * params.gamma * tau).exp()
}

impl InteriorBarrier {
    fn q_jet(&self, z: f64) -> Result<[f64; 3]> {
        match &self.q {
            Some(q) => q.eval(z),
            None if self.side.d == 0.0 => Ok([0.0; 3]),
            None => Err(McfError::InvalidInput("interior barrier has no Q profile; build it with build_q".into())),
        }
    }

    /// `W = F + Bτ + E + τεDQ` and its `z`-derivatives, with `F`'s derivatives.
    fn w(&self, z: f64, tau: f64) -> Result<([f64; 3], [f64; 3], [f64; 3])> {
        let s = &self.side;
        let fj = f_of_z(&self.profile, z, s.a, self.params.gamma);
        let qj = self.q_jet(z)?;
        let k = tau * eps(&self.params, tau) * s.d;
        let w = [fj[0] + s.b_cap * tau + s.e + k * qj[0], fj[1] + k * qj[1], fj[2] + k * qj[2]];
        Ok((w, fj, qj))
    }

    /// Unscaled jet of `λ_int` at `(z, τ)` (∂_τ at fixed `z`).
    pub fn jet(&self, z: f64, tau: f64) -> Result<LambdaJet> {
        let s = &self.side;
        let e = eps(&self.params, tau);
        let g = self.params.gamma;
        let (w, fj, qj) = self.w(z, tau)?;
        let base = fj[0] + s.b_cap * tau + s.e;
        Ok(LambdaJet {
            v: -s.a + e * w[0],
            d1: e * w[1],
            d2: e * w[2],
            dt: e * (s.b_cap - 2.0 * g * base) + e * e * s.d * qj[0] * (1.0 - 4.0 * g * tau),
        })
    }

    pub fn value(&self, z: f64, tau: f64) -> Result<f64> {
        Ok(self.jet(z, tau)?.v)
    }

    /// `(λ_int − offset)/ε`.
    pub fn scaled_value(&self, z: f64, tau: f64, offset: f64) -> Result<f64> {
        let (w, _, _) = self.w(z, tau)?;
        Ok((-self.side.a - offset) / eps(&self.params, tau) + w[0])
    }

    /// `𝒯_z[λ_int]/ε`, assembled term by term so that every piece is O(1).
    pub fn scaled_residual(&self, z: f64, tau: f64) -> Result<f64> {
        let s = &self.side;
        let p = &self.params;
        let g = p.gamma;
        let n1 = p.nf() - 1.0;
        let e = eps(p, tau);
        let (w, fj, qj) = self.w(z, tau)?;
        let a = s.a;
        let a4 = a.powi(4);
        let lam = -a + e * w[0];
        if lam == 0.0 {
            return Err(McfError::Numerical(format!("λ = 0 at z = {z}, τ = {tau}")));
        }
        let wt = s.b_cap + e * s.d * qj[0] * (1.0 - 2.0 * g * tau);
        let h_l = w[1] * w[1] / lam.powi(4);
        let h_a = fj[1] * fj[1] / a4;
        let tdq = tau * s.d;
        // (h_A − h_λ)/ε
        let dh = -tdq * qj[1] * (w[1] + fj[1]) / a4
            + w[1] * w[1] * w[0] * (lam - a) * (lam * lam + a * a) / (a4 * lam.powi(4));
        let t2 = tdq * qj[2] / (1.0 + h_l) + fj[2] * dh / ((1.0 + h_l) * (1.0 + h_a));
        let radial = if z == 0.0 { n1 * tdq * qj[2] } else { n1 * tdq * qj[1] / z };
        Ok((wt - 2.0 * g * w[0]) + (g - 1.0) * z * w[1] - (g + 1.0) * w[0] + 2.0 * w[1] * w[1] / (lam * (1.0 + h_l))
            - t2
            - radial)
    }
}

#[derive(Debug, Clone)]
pub struct ExteriorBarrier {
    pub side: SideConstants,
    pub params: FlowParams,
    pub psi: PsiProfile,
    pub r2: f64,
}

impl ExteriorBarrier {
    /// Inner edge `R₂e^{−γτ}` of the exterior domain.
    pub fn inner_edge(&self, tau: f64) -> f64 {
        self.r2 * (-self.params.gamma * tau).exp()
    }

    fn check_domain(&self, phi: f64, tau: f64) -> Result<()> {
        let edge = self.inner_edge(tau);
        if phi.abs() < edge * (1.0 - 1e-12) {
            return Err(McfError::InvalidInput(format!(
                "exterior barrier evaluated inside the core |φ| < R₂e^{{−γτ}} = {edge:e} (φ = {phi:e})"
            )));
        }
        Ok(())
    }

    /// Unscaled jet of `λ_ext` at `(φ, τ)` (∂_τ at fixed `φ`).
    pub fn jet(&self, phi: f64, tau: f64) -> Result<LambdaJet> {
        self.check_domain(phi, tau)?;
        let s = &self.side;
        let e = eps(&self.params, tau);
        let lb = lambda_bar(phi, &self.params);
        let ps = self.psi.eval(phi)?;
        Ok(LambdaJet {
            v: -s.c * lb[0] + s.b * e * ps[0],
            d1: -s.c * lb[1] + s.b * e * ps[1],
            d2: -s.c * lb[2] + s.b * e * ps[2],
            dt: -2.0 * self.params.gamma * s.b * e * ps[0],
        })
    }

    pub fn value(&self, phi: f64, tau: f64) -> Result<f64> {
        Ok(self.jet(phi, tau)?.v)
    }

    /// `(λ_ext − offset)/ε`, using `λ̄(φ) − λ̄(0)` without cancellation.
    pub fn scaled_value(&self, phi: f64, tau: f64, offset: f64) -> Result<f64> {
        self.check_domain(phi, tau)?;
        let s = &self.side;
        let e = eps(&self.params, tau);
        let lb0 = lambda_bar(0.0, &self.params)[0];
        let inc = lambda_bar_increment(phi, &self.params);
        Ok((-s.c * lb0 - offset) / e - s.c * inc / e + s.b * self.psi.eval(phi)?[0])
    }

    /// `ℱ_φ[λ_ext]/ε = b(−(3γ+1)ψ − ((n−1)/φ+φ)ψ′) − (λ_φφ − 2λ_φ²/λ)/(ε + λ_φ²/λ⁴)`.
    pub fn scaled_residual(&self, phi: f64, tau: f64) -> Result<f64> {
        let jet = self.jet(phi, tau)?;
        let p = &self.params;
        let e = eps(p, tau);
        let ps = self.psi.eval(phi)?;
        let drift = self.side.b * (-(3.0 * p.gamma + 1.0) * ps[0] - ((p.nf() - 1.0) / phi + phi) * ps[1]);
        let l = jet.v;
        let diff = (jet.d2 - 2.0 * jet.d1 * jet.d1 / l) / (e + jet.d1 * jet.d1 / l.powi(4));
        Ok(drift - diff)
    }

    /// Scaled residual divided by `|Λ(φ)|`, the natural size of both terms.
    pub fn normalized_residual(&self, phi: f64, tau: f64) -> Result<f64> {
        Ok(self.scaled_residual(phi, tau)? / lambda_source(phi, &self.params)?.abs())
    }

    /// Relative deviation of the diffusion term from its leading form `c³Λ`.
    pub fn diffusion_deviation(&self, phi: f64, tau: f64) -> Result<f64> {
        let jet = self.jet(phi, tau)?;
        let e = eps(&self.params, tau);
        let l = jet.v;
        let ii = -(jet.d2 - 2.0 * jet.d1 * jet.d1 / l) / (e + jet.d1 * jet.d1 / l.powi(4));
        let lead = self.side.c.powi(3) * lambda_source(phi, &self.params)?;
        Ok(ii / lead - 1.0)
    }
}

/// Scaled crossing function at `(z, τ)`:
/// `e^{2γτ}(λ⁺_int − λ⁺_ext)` for the upper barrier, `e^{2γτ}(λ⁻_ext − λ⁻_int)` for the lower.
///
/// Negative at `z = R₂` and positive at `z = R₁` for a valid patch.
pub fn crossing(int: &InteriorBarrier, ext: &ExteriorBarrier, z: f64, tau: f64) -> Result<f64> {
    // A = c λ̄(0) exactly, so the O(1/ε) constants cancel identically
    let off = -int.side.a;
    let phi = z * (-int.params.gamma * tau).exp();
    let d = int.scaled_value(z, tau, off)? - ext.scaled_value(phi, tau, off)?;
    Ok(int.side.sign.factor() * d)
}

#[cfg(test)]
mod tests {
    use super::super::operators::{apply_fphi, apply_tz};
    use super::super::qprofile::{build_q, QSource};
    use super::*;
    use crate::soliton::solve_bowl;

    fn setup(sign: Sign) -> (InteriorBarrier, ExteriorBarrier) {
        let p = FlowParams::new(2, 2.0, 1.0).unwrap();
        let prof = Arc::new(solve_bowl(2, 200.0, 1e-10).unwrap());
        let c = p.c() * if sign == Sign::Upper { 0.9 } else { 1.1 };
        let a = c * (p.nf() - 1.0).powf(-p.half_exponent());
        let b = -sign.factor() * 4.0 * c.powi(3);
        let bt = (p.nf() - 1.0).powf(-3.0 * p.half_exponent()) / (p.gamma + 1.0);
        let b_cap = -p.gamma * b * bt;
        let q = build_q(prof.clone(), a, p.gamma, QSource { sigma: b_cap.signum(), kappa0: 1.0, kappa1: 2.0 }, 12.0, 1e-10)
            .unwrap();
        let side = SideConstants { sign, a, b_cap, e: 0.3, d: b_cap.abs(), c, b };
        (
            InteriorBarrier { side, params: p, profile: prof, q: Some(Arc::new(q)) },
            ExteriorBarrier { side, params: p, psi: PsiProfile::new(p, 0.0), r2: 1.0 },
        )
    }

    #[test]
    fn scaled_interior_residual_matches_operator() {
        let (int, _) = setup(Sign::Upper);
        for &tau in &[0.3, 0.6] {
            let e = eps(&int.params, tau);
            for &z in &[0.0, 0.5, 3.0, 9.0] {
                let full = apply_tz(&int.jet(z, tau).unwrap(), z, tau, &int.params).unwrap();
                let sc = int.scaled_residual(z, tau).unwrap();
                assert!((full / e - sc).abs() < 1e-6 * sc.abs().max(1.0), "z={z} τ={tau}: {} vs {sc}", full / e);
            }
        }
    }

    #[test]
    fn scaled_exterior_residual_matches_operator() {
        let (_, ext) = setup(Sign::Lower);
        for &tau in &[0.5, 1.0] {
            let e = eps(&ext.params, tau);
            for &phi in &[0.7, 2.0, 10.0] {
                let full = apply_fphi(&ext.jet(phi, tau).unwrap(), phi, tau, &ext.params).unwrap();
                let sc = ext.scaled_residual(phi, tau).unwrap();
                assert!((full / e - sc).abs() < 1e-7 * sc.abs().max(1e-12), "φ={phi}: {} vs {sc}", full / e);
            }
        }
    }

    #[test]
    fn interior_axis_and_limit() {
        let (int, _) = setup(Sign::Upper);
        let s = int.side;
        let tau = 1.2;
        let e = eps(&int.params, tau);
        let v = int.value(0.0, tau).unwrap();
        assert!((v - (-s.a + e * (s.b_cap * tau + s.e))).abs() < 1e-15);
        assert!((int.value(2.0, 30.0).unwrap() + s.a).abs() < 1e-20_f64.max(1e-15));
    }

    #[test]
    fn missing_q_is_reported() {
        let (mut int, _) = setup(Sign::Upper);
        int.q = None;
        let msg = int.value(1.0, 1.0).unwrap_err().to_string();
        assert!(msg.contains("build_q"));
    }

    #[test]
    fn exterior_rejects_core_and_decays() {
        let (_, ext) = setup(Sign::Upper);
        assert!(ext.value(1e-3, 1.0).is_err());
        let far = ext.value(1e4, 1.0).unwrap();
        assert!(far.abs() < 2.0 * ext.side.c * lambda_bar(1e4, &ext.params)[0]);
        let lim = ext.value(3.0, 40.0).unwrap();
        assert!((lim + ext.side.c * lambda_bar(3.0, &ext.params)[0]).abs() < 1e-15);
    }

    #[test]
    fn scaled_values_are_consistent() {
        let (int, ext) = setup(Sign::Lower);
        let tau = 0.8;
        let e = eps(&int.params, tau);
        let off = -1.0;
        let z = 2.0;
        let sv = int.scaled_value(z, tau, off).unwrap();
        assert!((sv - (int.value(z, tau).unwrap() - off) / e).abs() < 1e-9 * sv.abs());
        let phi = z * (-2.0 * tau).exp();
        let sv = ext.scaled_value(phi, tau, off).unwrap();
        assert!((sv - (ext.value(phi, tau).unwrap() - off) / e).abs() < 1e-8 * sv.abs());
    }
}
