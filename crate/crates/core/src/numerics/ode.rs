//! Adaptive Dormand–Prince 5(4) integrator with quintic Hermite dense output.
//!
//! Dense output uses the values, first and second derivatives stored at every
//! accepted node, so the system has to supply the total derivative of its
//! right-hand side along a trajectory (`rhs_derivative`). This keeps the
//! interpolant one order above the stepper, which matters when the dense
//! output is differentiated again (residual checks).

use serde::{Deserialize, Serialize};

use crate::error::{McfError, Result};

/// First-order system `y' = f(t, y)` of dimension `N`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];

    /// `d/dt f(t, y(t))` along the solution, i.e. `f_t + J f`.
    fn rhs_derivative(&self, t: f64, y: &[f64; N], f: &[f64; N]) -> [f64; N];
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            initial_step: 1e-4,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

/// Accepted nodes of an integration, with enough data for C² dense output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "[f64; N]: Serialize", deserialize = "[f64; N]: Deserialize<'de>"))]
pub struct DenseSolution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub f: Vec<[f64; N]>,
    pub g: Vec<[f64; N]>,
    /// Largest accepted local error estimate (scaled norm).
    pub max_error_estimate: f64,
}

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th minus 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrate from `t0` to `t1 > t0`.
pub fn integrate<const N: usize, S: OdeSystem<N>>(
    system: &S,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &OdeOptions,
) -> Result<DenseSolution<N>> {
    if !(t1 > t0) {
        return Err(McfError::InvalidInput(format!(
            "integration interval [{t0}, {t1}] is empty"
        )));
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = system.rhs(t, &y);
    let mut sol = DenseSolution {
        t: vec![t],
        y: vec![y],
        f: vec![k1],
        g: vec![system.rhs_derivative(t, &y, &k1)],
        max_error_estimate: 0.0,
    };
    let mut h = opts.initial_step.min(t1 - t0).min(opts.max_step);
    let mut last_err = 1e-4_f64;
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(McfError::Tolerance {
                what: "ode step budget exhausted".into(),
                achieved: last_err,
                at: t,
            });
        }
        if t + h > t1 {
            h = t1 - t;
        }
        let k2 = system.rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = system.rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = system.rhs(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = system.rhs(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = system.rhs(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = system.rhs(t + h, &y_new);
        let mut err = 0.0_f64;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.25;
            if h < 1e-300 {
                return Err(McfError::Numerical(format!("ode blew up near t = {t}")));
            }
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
            sol.t.push(t);
            sol.y.push(y);
            sol.f.push(k1);
            sol.g.push(system.rhs_derivative(t, &y, &k1));
            sol.max_error_estimate = sol.max_error_estimate.max(err);
            // PI controller
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * last_err.max(1e-10).powf(0.4 / 5.0);
            h *= fac.clamp(0.2, 5.0);
            last_err = err;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        h = h.min(opts.max_step);
    }
    Ok(sol)
}

impl<const N: usize> DenseSolution<N> {
    pub fn t_min(&self) -> f64 {
        self.t[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    fn locate(&self, t: f64) -> usize {
        match self.t.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.t.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.t.len() - 2),
        }
    }

    /// Value and first two derivatives of every component at `t`.
    pub fn eval(&self, t: f64) -> [[f64; 3]; N] {
        let i = self.locate(t);
        let (ta, tb) = (self.t[i], self.t[i + 1]);
        let h = tb - ta;
        let s = (t - ta) / h;
        let mut out = [[0.0; 3]; N];
        for (c, o) in out.iter_mut().enumerate() {
            *o = quintic_hermite(
                s,
                h,
                [self.y[i][c], self.f[i][c], self.g[i][c]],
                [self.y[i + 1][c], self.f[i + 1][c], self.g[i + 1][c]],
            );
        }
        out
    }
}

/// Quintic Hermite interpolation on one interval; returns (p, p', p'').
fn quintic_hermite(s: f64, h: f64, a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h21 = 0.5 * (s3 - 2.0 * s4 + s5);

    let d00 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d10 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d20 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    let d01 = -d00;
    let d11 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d21 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);

    let e00 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
    let e10 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let e20 = 0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3);
    let e01 = -e00;
    let e11 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let e21 = 0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3);

    let p = h00 * a[0] + h * h10 * a[1] + h * h * h20 * a[2] + h01 * b[0] + h * h11 * b[1] + h * h * h21 * b[2];
    let dp = (d00 * a[0] + d01 * b[0]) / h + d10 * a[1] + d11 * b[1] + h * (d20 * a[2] + d21 * b[2]);
    let ddp = (e00 * a[0] + e01 * b[0]) / (h * h) + (e10 * a[1] + e11 * b[1]) / h + e20 * a[2] + e21 * b[2];
    [p, dp, ddp]
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl OdeSystem<2> for Oscillator {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
        fn rhs_derivative(&self, _t: f64, _y: &[f64; 2], f: &[f64; 2]) -> [f64; 2] {
            [f[1], -f[0]]
        }
    }

    #[test]
    fn oscillator_endpoint_and_dense_output() {
        let opts = OdeOptions { rel_tol: 1e-11, abs_tol: 1e-13, ..Default::default() };
        let sol = integrate(&Oscillator, 0.0, [0.0, 1.0], 10.0, &opts).unwrap();
        let end = sol.y.last().unwrap();
        assert!((end[0] - 10f64.sin()).abs() < 1e-8);
        for k in 0..200 {
            let t = 0.05 * k as f64 + 0.0123;
            let v = sol.eval(t);
            assert!((v[0][0] - t.sin()).abs() < 1e-8, "value at {t}");
            assert!((v[0][1] - t.cos()).abs() < 1e-8, "slope at {t}");
            assert!((v[0][2] + t.sin()).abs() < 1e-6, "curvature at {t}");
        }
    }

    #[test]
    fn hermite_reproduces_quintic() {
        let p = |x: f64| [x.powi(5) - 2.0 * x * x, 5.0 * x.powi(4) - 4.0 * x, 20.0 * x.powi(3) - 4.0];
        let (a, b) = (0.3, 1.1);
        for k in 0..=10 {
            let x = a + (b - a) * k as f64 / 10.0;
            let v = quintic_hermite((x - a) / (b - a), b - a, p(a), p(b));
            let e = p(x);
            for j in 0..3 {
                assert!((v[j] - e[j]).abs() < 1e-11, "{j}: {} vs {}", v[j], e[j]);
            }
        }
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(integrate(&Oscillator, 1.0, [0.0, 1.0], 1.0, &OdeOptions::default()).is_err());
    }
}
