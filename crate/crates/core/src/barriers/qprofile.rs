//! Correction profile `Q` for the interior barriers.
//!
//! `Q` solves the linearization of the bowl equation about `F`,
//!
//! ```text
//! Q″/(1+h) − 2 F_z F_zz Q′/(A⁴(1+h)²) + (n−1)Q′/z = S(z),   h = F_z²/A⁴,
//! ```
//!
//! with `Q(0) = Q′(0) = 0` and source `S = σ(m(z) − κ₀ − κ₁F(z))`, where
//! `m = −(3γ+1) + 4hF_zz/(A(1+h)²)` collects the lower-order residual terms and
//! `σ = sign(B)`. The term `τe^{−4γτ}DQ` then dominates those terms with the
//! sign required of a super- (σ = +1) or subsolution (σ = −1).

use std::sync::Arc;

use crate::error::{McfError, Result};
use crate::numerics::{integrate, DenseSolution, OdeOptions, OdeSystem};
use crate::soliton::{f_of_z, Jet, SolitonProfile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSource {
    pub sigma: f64,
    pub kappa0: f64,
    pub kappa1: f64,
}

struct QOde<'a> {
    profile: &'a SolitonProfile,
    a: f64,
    gamma: f64,
    n1: f64,
    src: QSource,
}

impl QOde<'_> {
    fn coefficients(&self, z: f64) -> (f64, f64, f64) {
        let [f, fz, fzz] = f_of_z(self.profile, z, self.a, self.gamma);
        let a4 = self.a.powi(4);
        let h = fz * fz / a4;
        let m = -(3.0 * self.gamma + 1.0) + 4.0 * h * fzz / (self.a * (1.0 + h).powi(2));
        let s = self.src.sigma * (m - self.src.kappa0 - self.src.kappa1 * f);
        let drift = 2.0 * fz * fzz / (a4 * (1.0 + h).powi(2));
        (s, h, drift)
    }

    fn qzz(&self, z: f64, qz: f64) -> f64 {
        let (s, h, drift) = self.coefficients(z);
        if z == 0.0 {
            return s / (self.n1 + 1.0);
        }
        (1.0 + h) * (s - (self.n1 / z - drift) * qz)
    }
}

impl OdeSystem<2> for QOde<'_> {
    fn rhs(&self, z: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], self.qzz(z, y[1])]
    }

    fn rhs_derivative(&self, z: f64, y: &[f64; 2], f: &[f64; 2]) -> [f64; 2] {
        // directional difference along the flow
        let d = 1e-6 * z.abs().max(1e-3);
        let fp = self.rhs(z + d, &[y[0] + d * f[0], y[1] + d * f[1]]);
        let fm = self.rhs(z - d, &[y[0] - d * f[0], y[1] - d * f[1]]);
        [(fp[0] - fm[0]) / (2.0 * d), (fp[1] - fm[1]) / (2.0 * d)]
    }
}

/// Tabulated `Q` on `[0, z_max]`, evenly extended.
#[derive(Debug, Clone)]
pub struct QProfile {
    pub a: f64,
    pub gamma: f64,
    pub n: u32,
    pub source: QSource,
    pub z_max: f64,
    z_launch: f64,
    s0: f64,
    profile: Arc<SolitonProfile>,
    dense: DenseSolution<2>,
}

pub fn build_q(
    profile: Arc<SolitonProfile>,
    a: f64,
    gamma: f64,
    source: QSource,
    z_max: f64,
    rel_tol: f64,
) -> Result<QProfile> {
    if !(z_max > 0.0) {
        return Err(McfError::Range { field: "R1".into(), reason: format!("Q needs z_max > 0, got {z_max}") });
    }
    let n1 = profile.n as f64 - 1.0;
    let ode = QOde { profile: &profile, a, gamma, n1, src: source };
    let (s0, _, _) = ode.coefficients(0.0);
    let nf = n1 + 1.0;
    let z0 = 1e-4 * z_max.min(1.0);
    // leading axis behaviour Q ≈ S(0) z²/(2n)
    let y0 = [s0 * z0 * z0 / (2.0 * nf), s0 * z0 / nf];
    let opts = OdeOptions { rel_tol, abs_tol: rel_tol * 1e-4, initial_step: z0, max_step: z_max / 50.0, max_steps: 500_000 };
    let dense = integrate(&ode, z0, y0, z_max, &opts)?;
    Ok(QProfile { a, gamma, n: profile.n, source, z_max, z_launch: z0, s0, profile: profile.clone(), dense })
}

impl QProfile {
    /// `(Q, Q′, Q″)` at `z`.
    pub fn eval(&self, z: f64) -> Result<Jet> {
        let sgn = z.signum();
        let z = z.abs();
        if z > self.z_max * (1.0 + 1e-12) {
            return Err(McfError::InvalidInput(format!(
                "Q requested at z = {z} beyond its range {}; rebuild with a larger radius",
                self.z_max
            )));
        }
        let nf = self.n as f64;
        let ode = QOde { profile: &self.profile, a: self.a, gamma: self.gamma, n1: nf - 1.0, src: self.source };
        if z <= self.z_launch {
            return Ok([self.s0 * z * z / (2.0 * nf), sgn * self.s0 * z / nf, self.s0 / nf]);
        }
        let y = self.dense.eval(z.min(self.z_max));
        let qz = y[1][0];
        Ok([y[0][0], sgn * qz, ode.qzz(z, qz)])
    }

    /// Left side minus right side of the defining ODE, using the
    /// interpolated `Q″` rather than the one recovered from the equation.
    pub fn residual(&self, z: f64) -> f64 {
        if z <= self.z_launch || z > self.z_max {
            return 0.0;
        }
        let nf = self.n as f64;
        let ode = QOde { profile: &self.profile, a: self.a, gamma: self.gamma, n1: nf - 1.0, src: self.source };
        let (s, h, drift) = ode.coefficients(z);
        let y = self.dense.eval(z);
        let (qz, qzz) = (y[1][0], y[1][1]);
        qzz / (1.0 + h) - drift * qz + (nf - 1.0) * qz / z - s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::solve_bowl;

    fn q(sigma: f64) -> QProfile {
        let b = Arc::new(solve_bowl(2, 200.0, 1e-10).unwrap());
        build_q(b, 0.9, 2.0, QSource { sigma, kappa0: 1.0, kappa1: 2.0 }, 12.0, 1e-10).unwrap()
    }

    #[test]
    fn normalized_at_axis_and_even() {
        let q = q(1.0);
        let [v, d1, _] = q.eval(0.0).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(d1, 0.0);
        for z in [0.3, 2.0, 9.0] {
            let (a, b) = (q.eval(z).unwrap(), q.eval(-z).unwrap());
            assert_eq!(a[0], b[0]);
            assert_eq!(a[1], -b[1]);
        }
    }

    #[test]
    fn solves_the_linearized_equation() {
        let q = q(-1.0);
        for i in 1..200 {
            let z = 12.0 * i as f64 / 200.0;
            assert!(q.residual(z).abs() < 1e-6, "z={z}: {:e}", q.residual(z));
        }
    }

    #[test]
    fn out_of_range_is_an_error() {
        assert!(q(1.0).eval(13.0).is_err());
    }
}
