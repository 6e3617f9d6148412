//! Interior and exterior super-/subsolutions, their patching into global
//! barriers, and grid certification of the operator signs.

pub mod certify;
pub mod operators;
pub mod patch;
pub mod qprofile;
pub mod regions;

use serde::{Deserialize, Serialize};

pub use certify::{construct_barriers, BarrierCertificate, BarrierConfig, BarrierPair};
pub use operators::{apply_fphi, apply_tz, LambdaJet};
pub use patch::Barrier;
pub use qprofile::{build_q, QProfile, QSource};
pub use regions::{crossing, ExteriorBarrier, InteriorBarrier, SideConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Sign {
    Upper,
    Lower,
}

impl Sign {
    /// `+1` for the supersolution, `−1` for the subsolution.
    pub fn factor(self) -> f64 {
        match self {
            Sign::Upper => 1.0,
            Sign::Lower => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sign::Upper => "upper",
            Sign::Lower => "lower",
        }
    }
}

/// Constants of the barrier pair.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierConstants {
    pub A_plus: f64,
    pub A_minus: f64,
    pub B_plus: f64,
    pub B_minus: f64,
    pub E_plus: f64,
    pub E_minus: f64,
    pub D_plus: f64,
    pub D_minus: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub b_plus: f64,
    pub b_minus: f64,
    pub R1: f64,
    pub R2: f64,
    pub tau0: f64,
    pub beta_tilde: f64,
}

impl BarrierConstants {
    pub fn side(&self, sign: Sign) -> SideConstants {
        match sign {
            Sign::Upper => SideConstants {
                sign,
                a: self.A_plus,
                b_cap: self.B_plus,
                e: self.E_plus,
                d: self.D_plus,
                c: self.c_plus,
                b: self.b_plus,
            },
            Sign::Lower => SideConstants {
                sign,
                a: self.A_minus,
                b_cap: self.B_minus,
                e: self.E_minus,
                d: self.D_minus,
                c: self.c_minus,
                b: self.b_minus,
            },
        }
    }

    /// Structural relations between the constants; returns the violated ones.
    pub fn relation_violations(&self, n: u32, gamma: f64) -> Vec<String> {
        let n1 = n as f64 - 1.0;
        let h = 0.5 * (gamma + 1.0);
        let bt = n1.powf(-3.0 * h) / (gamma + 1.0);
        let mut out = Vec::new();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        if !(self.A_minus > self.A_plus && self.A_plus > 0.0) {
            out.push(format!("A⁻ > A⁺ > 0 fails: A⁺ = {}, A⁻ = {}", self.A_plus, self.A_minus));
        }
        if !(self.b_plus < 0.0 && self.b_minus > 0.0) {
            out.push(format!("b⁺ < 0 < b⁻ fails: b⁺ = {}, b⁻ = {}", self.b_plus, self.b_minus));
        }
        if !close(self.beta_tilde, bt) {
            out.push(format!("β̃ = {} but (n−1)^(−3(γ+1)/2)/(γ+1) = {bt}", self.beta_tilde));
        }
        for (a, c, name) in [(self.A_plus, self.c_plus, "A⁺"), (self.A_minus, self.c_minus, "A⁻")] {
            if !close(a, c * n1.powf(-h)) {
                out.push(format!("{name} ≠ c(n−1)^(−(γ+1)/2)"));
            }
        }
        for (bb, b, name) in [(self.B_plus, self.b_plus, "B⁺"), (self.B_minus, self.b_minus, "B⁻")] {
            if !close(bb, -gamma * b * bt) {
                out.push(format!("{name} ≠ −γbβ̃"));
            }
        }
        if !(self.R2 < self.R1 && self.R2 > 0.0) {
            out.push(format!("0 < R₂ < R₁ fails: R₂ = {}, R₁ = {}", self.R2, self.R1));
        }
        out
    }
}
