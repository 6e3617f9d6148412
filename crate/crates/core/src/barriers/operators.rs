//! The flow operators in the `z` and `φ` charts of the `λ` formulation.
//!
//! ```text
//! 𝒯_z[λ] = ∂_τ|_z λ − e^{2γτ}(λ_zz − 2λ_z²/λ)/(1 + e^{4γτ}λ_z²/λ⁴)
//!          − e^{2γτ}(n−1)λ_z/z + (γ−1)zλ_z − (γ+1)λ
//! ℱ_φ[λ] = ∂_τ|_φ λ − (λ_φφ − 2λ_φ²/λ)/(1 + e^{2γτ}λ_φ²/λ⁴)
//!          − ((n−1)/φ + φ)λ_φ − (γ+1)λ
//! ```
//!
//! A supersolution has nonnegative residual, a subsolution nonpositive.

use serde::{Deserialize, Serialize};

use crate::error::{McfError, Result};
use crate::geometry::FlowParams;

/// Value, first and second space derivatives and time derivative at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LambdaJet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub dt: f64,
}

fn check_nonzero(v: f64) -> Result<()> {
    if v == 0.0 || !v.is_finite() {
        return Err(McfError::Numerical(format!("λ = {v} in flow operator (division by λ)")));
    }
    Ok(())
}

/// `𝒯_z[λ]` at `(z, τ)`; at `z = 0` the radial term uses `λ_z/z → λ_zz`.
pub fn apply_tz(jet: &LambdaJet, z: f64, tau: f64, params: &FlowParams) -> Result<f64> {
    check_nonzero(jet.v)?;
    let g = params.gamma;
    let e2 = (2.0 * g * tau).exp();
    let l = jet.v;
    let diff = e2 * (jet.d2 - 2.0 * jet.d1 * jet.d1 / l) / (1.0 + e2 * e2 * jet.d1 * jet.d1 / l.powi(4));
    let radial = if z == 0.0 { jet.d2 } else { jet.d1 / z };
    Ok(jet.dt - diff - e2 * (params.nf() - 1.0) * radial + (g - 1.0) * z * jet.d1 - (g + 1.0) * l)
}

/// `ℱ_φ[λ]` at `(φ, τ)`; at `φ = 0` the radial term uses `λ_φ/φ → λ_φφ`.
pub fn apply_fphi(jet: &LambdaJet, phi: f64, tau: f64, params: &FlowParams) -> Result<f64> {
    check_nonzero(jet.v)?;
    let g = params.gamma;
    let e2 = (2.0 * g * tau).exp();
    let l = jet.v;
    let diff = (jet.d2 - 2.0 * jet.d1 * jet.d1 / l) / (1.0 + e2 * jet.d1 * jet.d1 / l.powi(4));
    let radial = if phi == 0.0 { (params.nf() - 1.0) * jet.d2 } else { ((params.nf() - 1.0) / phi + phi) * jet.d1 };
    Ok(jet.dt - diff - radial - (g + 1.0) * l)
}

/// Worst signed margin `min σ·r` over a sample set, with its index.
pub fn worst_margin(sign: f64, residuals: &[f64]) -> (f64, usize) {
    residuals
        .iter()
        .enumerate()
        .map(|(i, r)| (sign * r, i))
        .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formal::lambda_bar;

    #[test]
    fn exterior_profile_first_order_part_vanishes() {
        // with diffusion suppressed (τ → ∞) only the first-order part remains
        let p = FlowParams::new(3, 1.5, 1.0).unwrap();
        for phi in [0.1, 1.0, 5.0] {
            let [v, d1, d2] = lambda_bar(phi, &p);
            let jet = LambdaJet { v: -v, d1: -d1, d2: -d2, dt: 0.0 };
            let r = apply_fphi(&jet, phi, 40.0, &p).unwrap();
            assert!(r.abs() < 1e-12, "φ={phi}: {r:e}");
        }
    }

    #[test]
    fn charts_agree() {
        // same function seen in z and φ: 𝒯_z = ℱ_φ after the change of variables
        let p = FlowParams::new(2, 1.0, 1.0).unwrap();
        let tau: f64 = 0.4;
        let e = (p.gamma * tau).exp();
        let phi: f64 = 0.7;
        let z = phi * e;
        // λ(φ, τ) = −1 − 0.2 φ² e^{−τ}
        let lphi = LambdaJet {
            v: -1.0 - 0.2 * phi * phi * (-tau).exp(),
            d1: -0.4 * phi * (-tau).exp(),
            d2: -0.4 * (-tau).exp(),
            dt: 0.2 * phi * phi * (-tau).exp(),
        };
        // in z: λ = −1 − 0.2 z² e^{−(2γ+1)τ}
        let k = -0.2 * (-(2.0 * p.gamma + 1.0) * tau).exp();
        let lz = LambdaJet { v: -1.0 + k * z * z, d1: 2.0 * k * z, d2: 2.0 * k, dt: -(2.0 * p.gamma + 1.0) * k * z * z };
        let a = apply_tz(&lz, z, tau, &p).unwrap();
        let b = apply_fphi(&lphi, phi, tau, &p).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn zero_lambda_is_an_error() {
        let p = FlowParams::new(2, 1.0, 1.0).unwrap();
        assert!(apply_tz(&LambdaJet::default(), 1.0, 0.0, &p).is_err());
    }
}
