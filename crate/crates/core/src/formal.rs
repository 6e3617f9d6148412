//! Closed-form formal solutions: the exterior profiles `ỹ` and `λ̄`, the
//! exterior correction `ψ` with its source `Λ`, and the interior ansatz built
//! from the bowl.

use crate::error::{McfError, Result};
use crate::geometry::FlowParams;
use crate::soliton::{f_of_z, ftilde_of_z, Jet, SolitonProfile};

fn s_of(phi: f64, params: &FlowParams) -> f64 {
    phi * phi + params.nf() - 1.0
}

/// `ỹ(φ) = C₁(φ²+n−1)^{(γ+1)/2}` and derivatives.
pub fn exterior_y(phi: f64, c1: f64, params: &FlowParams) -> Jet {
    let h = params.half_exponent();
    let s = s_of(phi, params);
    let v = c1 * s.powf(h);
    let d1 = c1 * h * s.powf(h - 1.0) * 2.0 * phi;
    let d2 = c1 * h * (2.0 * s.powf(h - 1.0) + 4.0 * phi * phi * (h - 1.0) * s.powf(h - 2.0));
    [v, d1, d2]
}

/// Unit exterior profile `λ̄(φ) = (φ²+n−1)^{−(γ+1)/2}` and derivatives.
pub fn lambda_bar(phi: f64, params: &FlowParams) -> Jet {
    let h = -params.half_exponent();
    let s = s_of(phi, params);
    [
        s.powf(h),
        h * s.powf(h - 1.0) * 2.0 * phi,
        h * (2.0 * s.powf(h - 1.0) + 4.0 * phi * phi * (h - 1.0) * s.powf(h - 2.0)),
    ]
}

/// Exterior profile in the `λ` chart, `λ = −c λ̄(φ)`; equals `−1/ỹ` when `c = 1/C₁`.
pub fn exterior_lambda(phi: f64, c: f64, params: &FlowParams) -> Jet {
    let [v, d1, d2] = lambda_bar(phi, params);
    [-c * v, -c * d1, -c * d2]
}

/// `λ̄(φ) − λ̄(0)` without cancellation for small `φ`.
pub fn lambda_bar_increment(phi: f64, params: &FlowParams) -> f64 {
    let n1 = params.nf() - 1.0;
    let h = params.half_exponent();
    n1.powf(-h) * (-h * (phi * phi / n1).ln_1p()).exp_m1()
}

/// Source term `Λ = −(γφ²+n−1)/((γ+1)φ²) λ̄³ < 0`.
pub fn lambda_source(phi: f64, params: &FlowParams) -> Result<f64> {
    if phi == 0.0 {
        return Err(McfError::InvalidInput("Λ is singular (∼ −φ⁻²) at φ = 0".into()));
    }
    let g = params.gamma;
    let l3 = lambda_bar(phi, params)[0].powi(3);
    Ok(-(g * phi * phi + params.nf() - 1.0) / ((g + 1.0) * phi * phi) * l3)
}

/// Exterior correction `ψ` solving `−(1+3γ)ψ − ((n−1)/φ+φ)ψ′ = Λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiProfile {
    pub params: FlowParams,
    pub c1_psi: f64,
}

impl PsiProfile {
    pub fn new(params: FlowParams, c1_psi: f64) -> Self {
        Self { params, c1_psi }
    }

    /// `(ψ, ψ′, ψ″)` at `φ ≠ 0`, evenly extended.
    pub fn eval(&self, phi: f64) -> Result<Jet> {
        if phi == 0.0 {
            return Err(McfError::InvalidInput("ψ has a log φ² singularity at φ = 0".into()));
        }
        let sign = phi.signum();
        let phi = phi.abs();
        let p = &self.params;
        let g = p.gamma;
        let n1 = p.nf() - 1.0;
        let s = s_of(phi, p);
        let k = 1.0 / (2.0 * n1 * (g + 1.0));
        let k0 = (1.0 - g) / (2.0 * (1.0 + g));
        let c = self.c1_psi;
        // log φ² − log s
        let ell = -(n1 / (phi * phi)).ln_1p();
        let gv = k0 + c * s + k * s * ell;
        let g1 = 2.0 * c * phi + k * (2.0 * phi * ell + 2.0 * s / phi - 2.0 * phi);
        let g2 = 2.0 * c + k * (2.0 * ell + 6.0 - 4.0 * phi * phi / s - 2.0 * s / (phi * phi));
        let beta = -3.0 * (g + 1.0);
        let l3 = s.powf(0.5 * beta);
        let l31 = beta * phi * l3 / s;
        let l32 = beta * l3 / s * (1.0 + (beta - 2.0) * phi * phi / s);
        Ok([l3 * gv, sign * (l31 * gv + l3 * g1), l32 * gv + 2.0 * l31 * g1 + l3 * g2])
    }

    /// Regular part at the axis: `ψ = d + β̃ log|φ| + o(1)`, `β̃ = (n−1)^{−3(γ+1)/2}/(γ+1)`.
    ///
    /// Includes the `−log(n−1)/(2(γ+1))` contribution of `log(φ²+n−1)`,
    /// which vanishes only for `n = 2`.
    pub fn axis_constant(&self) -> f64 {
        let p = &self.params;
        let n1 = p.nf() - 1.0;
        let g = p.gamma;
        n1.powf(-3.0 * p.half_exponent())
            * ((1.0 - g) / (2.0 + 2.0 * g) + self.c1_psi * n1 - n1.ln() / (2.0 * (g + 1.0)))
    }

    /// Coefficient `d₀` of `log φ²` in `ψ/λ̄` as `φ → 0`.
    pub fn log_coefficient(&self) -> f64 {
        let p = &self.params;
        (p.nf() - 1.0).powf(-(p.gamma + 1.0)) / (2.0 * (p.gamma + 1.0))
    }

    /// Left side minus right side of the defining ODE.
    pub fn residual(&self, phi: f64) -> Result<f64> {
        let [v, d1, _] = self.eval(phi)?;
        let p = &self.params;
        let lhs = -(1.0 + 3.0 * p.gamma) * v - ((p.nf() - 1.0) / phi + phi) * d1;
        Ok(lhs - lambda_source(phi, p)?)
    }
}

/// Interior formal solution `y = Ã + e^{−2γτ} F̃(z)`, with `F̃` carrying `C(τ)`.
pub fn interior_formal_y(z: f64, tau: f64, params: &FlowParams, profile: &SolitonProfile, c_tau: f64) -> Jet {
    let e = (-2.0 * params.gamma * tau).exp();
    let [f, fz, fzz] = ftilde_of_z(profile, z, params, c_tau);
    [params.a_tilde + e * f, e * fz, e * fzz]
}

/// Interior formal solution in the `λ` chart, `λ = −A + e^{−2γτ} F(z)`.
pub fn interior_formal_lambda(z: f64, tau: f64, params: &FlowParams, profile: &SolitonProfile) -> Jet {
    let e = (-2.0 * params.gamma * tau).exp();
    let [f, fz, fzz] = f_of_z(profile, z, params.a(), params.gamma);
    [-params.a() + e * f, e * fz, e * fzz]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::solve_bowl;
    use rand::{Rng, SeedableRng};

    fn params() -> FlowParams {
        FlowParams::new(3, 1.5, 0.8).unwrap()
    }

    #[test]
    fn exterior_y_at_axis() {
        let p = FlowParams::new(2, 1.0, 1.0).unwrap();
        assert_eq!(exterior_y(0.0, 1.0, &p)[0], 1.0);
    }

    #[test]
    fn exterior_residuals_vanish() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for &(n, g) in &[(2u32, 1.0), (3, 1.5), (7, 0.3)] {
            let p = FlowParams::new(n, g, 1.0).unwrap();
            let n1 = (n - 1) as f64;
            for _ in 0..1000 {
                let phi: f64 = rng.gen_range(1e-3..50.0);
                let [y, y1, _] = exterior_y(phi, p.c1(), &p);
                let r = (n1 / phi + phi) * y1 - (g + 1.0) * y;
                assert!(r.abs() < 1e-12 * y.abs().max(1.0));
                let [l, l1, _] = exterior_lambda(phi, p.c(), &p);
                let r = (n1 / phi + phi) * l1 + (g + 1.0) * l;
                assert!(r.abs() < 1e-12);
                // inversion duality with matched constants
                assert!((l * y + 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn second_derivatives_match_differences() {
        let p = params();
        for phi in [0.1, 1.0, 7.0] {
            let h = 1e-4;
            for f in [
                |x: f64, p: &FlowParams| exterior_y(x, 1.3, p),
                |x: f64, p: &FlowParams| lambda_bar(x, p),
            ] {
                let [_, d1, d2] = f(phi, &p);
                let fd1 = (f(phi + h, &p)[0] - f(phi - h, &p)[0]) / (2.0 * h);
                let fd2 = (f(phi + h, &p)[1] - f(phi - h, &p)[1]) / (2.0 * h);
                assert!((d1 - fd1).abs() < 1e-7 * d1.abs().max(1.0));
                assert!((d2 - fd2).abs() < 1e-7 * d2.abs().max(1.0));
            }
        }
    }

    #[test]
    fn profiles_are_even() {
        let p = params();
        let psi = PsiProfile::new(p, 0.2);
        for phi in [0.01, 0.5, 3.0] {
            assert_eq!(exterior_y(phi, 1.0, &p)[0], exterior_y(-phi, 1.0, &p)[0]);
            assert_eq!(lambda_bar(phi, &p)[0], lambda_bar(-phi, &p)[0]);
            assert_eq!(psi.eval(phi).unwrap()[0], psi.eval(-phi).unwrap()[0]);
            assert_eq!(psi.eval(phi).unwrap()[1], -psi.eval(-phi).unwrap()[1]);
        }
    }

    #[test]
    fn source_is_negative() {
        let p = params();
        let mut phi = 1e-6;
        while phi < 1e3 {
            assert!(lambda_source(phi, &p).unwrap() < 0.0);
            phi *= 1.1;
        }
        assert!(lambda_source(0.0, &p).is_err());
    }

    #[test]
    fn psi_solves_its_ode() {
        for c in [0.0, 0.2, -1.0] {
            let psi = PsiProfile::new(params(), c);
            let mut phi = 1e-4;
            while phi < 1e3 {
                let r = psi.residual(phi).unwrap();
                // the two left-hand terms cancel down to Λ at large φ
                let scale = lambda_source(phi, &psi.params)
                    .unwrap()
                    .abs()
                    .max((1.0 + 3.0 * psi.params.gamma) * psi.eval(phi).unwrap()[0].abs());
                assert!(r.abs() < 1e-10 * scale.max(1e-300) + 1e-300, "φ={phi}: {r:e}");
                phi *= 1.3;
            }
        }
        assert!(PsiProfile::new(params(), 0.0).eval(0.0).is_err());
    }

    #[test]
    fn psi_second_derivative_matches_difference() {
        let psi = PsiProfile::new(params(), 0.3);
        for phi in [0.05, 0.8, 4.0] {
            let h = 1e-5 * phi;
            let [_, _, d2] = psi.eval(phi).unwrap();
            let fd = (psi.eval(phi + h).unwrap()[1] - psi.eval(phi - h).unwrap()[1]) / (2.0 * h);
            assert!((d2 - fd).abs() < 1e-6 * d2.abs().max(1.0), "φ={phi}: {d2} vs {fd}");
        }
    }

    #[test]
    fn psi_axis_asymptotics() {
        let psi = PsiProfile::new(params(), 0.2);
        let d0 = psi.log_coefficient();
        let d = psi.axis_constant();
        let p = &psi.params;
        for phi in [1e-3, 1e-4, 1e-5] {
            let lb = lambda_bar(phi, p)[0];
            let ratio = psi.eval(phi).unwrap()[0] / lb;
            let lb0 = lambda_bar(0.0, p)[0];
            // ψ/λ̄ − d₀ log φ² stays bounded and approaches d/λ̄(0)
            let rem = ratio - d0 * (phi * phi).ln();
            assert!((rem - d / lb0).abs() < 1e-4, "φ={phi}: {rem} vs {}", d / lb0);
        }
    }

    #[test]
    fn psi_far_field_decay() {
        let p = params();
        let c = 0.2;
        let psi = PsiProfile::new(p, c);
        for phi in [1e2, 1e3] {
            let s = phi * phi + 2.0;
            let ratio = psi.eval(phi).unwrap()[0] / lambda_bar(phi, &p)[0];
            let c0 = ratio * s.powf(p.gamma);
            assert!((c0 - c).abs() < 10.0 / s, "φ={phi}: {c0}");
        }
    }

    #[test]
    fn increment_is_accurate() {
        let p = params();
        for phi in [1e-8, 1e-3, 0.5, 10.0] {
            let direct = lambda_bar(phi, &p)[0] - lambda_bar(0.0, &p)[0];
            let inc = lambda_bar_increment(phi, &p);
            assert!((inc - direct).abs() <= 1e-15 + 1e-9 * direct.abs());
        }
    }

    #[test]
    fn interior_formal_solution() {
        let p = params();
        let b = solve_bowl(3, 100.0, 1e-10).unwrap();
        assert_eq!(interior_formal_y(0.0, 2.0, &p, &b, 0.0)[0], p.a_tilde);
        // tip bounded for C(τ) = τ
        for tau in [1.0, 5.0, 20.0] {
            let y0 = interior_formal_y(0.0, tau, &p, &b, tau)[0];
            assert!((y0 - p.a_tilde).abs() <= tau * (-2.0 * p.gamma * tau).exp() + 1e-15);
        }
        // interior and exterior both ≈ Ã at z = R for large τ
        let tau = 8.0;
        let z = 2.0;
        let yi = interior_formal_y(z, tau, &p, &b, 0.0)[0];
        let phi = z * (-p.gamma * tau).exp();
        let ye = exterior_y(phi, p.c1(), &p)[0];
        assert!((yi - p.a_tilde).abs() < 1e-8 && (ye - p.a_tilde).abs() < 1e-8);
        // λ-chart version is −1/y to leading order
        let li = interior_formal_lambda(z, tau, &p, &b)[0];
        assert!((li + 1.0 / yi).abs() < 1e-8);
    }
}
