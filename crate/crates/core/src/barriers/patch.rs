//! Global barriers from the interior and exterior pieces.
//!
//! The upper barrier is `λ⁺_int` on `|z| ≤ R₂`, `min{λ⁺_int, λ⁺_ext}` on the
//! overlap and `λ⁺_ext` on `|z| ≥ R₁`; the lower one uses `max` instead.

use serde::{Deserialize, Serialize};

use super::regions::{crossing, ExteriorBarrier, InteriorBarrier};
use super::{BarrierConstants, Sign};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Region {
    Interior,
    Overlap,
    Exterior,
}

#[derive(Debug, Clone)]
pub struct Barrier {
    pub sign: Sign,
    pub constants: BarrierConstants,
    pub interior: InteriorBarrier,
    pub exterior: ExteriorBarrier,
}

/// Sign changes and monotonicity of a sampled crossing function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingStats {
    pub sign_changes: usize,
    pub monotone: bool,
    pub at_r2: f64,
    pub at_r1: f64,
}

impl Barrier {
    fn z_of(&self, phi: f64, tau: f64) -> f64 {
        phi * (self.interior.params.gamma * tau).exp()
    }

    pub fn region(&self, phi: f64, tau: f64) -> Region {
        let z = self.z_of(phi, tau).abs();
        if z <= self.constants.R2 {
            Region::Interior
        } else if z >= self.constants.R1 {
            Region::Exterior
        } else {
            Region::Overlap
        }
    }

    /// `(λ − offset)e^{2γτ}` of the patched barrier.
    pub fn scaled_value(&self, phi: f64, tau: f64, offset: f64) -> Result<f64> {
        let z = self.z_of(phi, tau);
        match self.region(phi, tau) {
            Region::Interior => self.interior.scaled_value(z, tau, offset),
            Region::Exterior => self.exterior.scaled_value(phi, tau, offset),
            Region::Overlap => {
                let i = self.interior.scaled_value(z, tau, offset)?;
                let e = self.exterior.scaled_value(phi, tau, offset)?;
                Ok(match self.sign {
                    Sign::Upper => i.min(e),
                    Sign::Lower => i.max(e),
                })
            }
        }
    }

    /// Patched barrier value `λ±(φ, τ)`.
    pub fn value(&self, phi: f64, tau: f64) -> Result<f64> {
        let off = -self.interior.side.a;
        let e = (-2.0 * self.interior.params.gamma * tau).exp();
        Ok(off + e * self.scaled_value(phi, tau, off)?)
    }

    /// Which piece the patch selects at `(φ, τ)`: `true` for the interior one.
    pub fn selects_interior(&self, phi: f64, tau: f64) -> Result<bool> {
        let z = self.z_of(phi, tau);
        Ok(match self.region(phi, tau) {
            Region::Interior => true,
            Region::Exterior => false,
            Region::Overlap => crossing(&self.interior, &self.exterior, z, tau)? < 0.0,
        })
    }

    pub fn crossing(&self, z: f64, tau: f64) -> Result<f64> {
        crossing(&self.interior, &self.exterior, z, tau)
    }

    /// Crossing statistics on `nodes` equispaced points of `[R₂, R₁]`.
    pub fn crossing_stats(&self, tau: f64, nodes: usize) -> Result<CrossingStats> {
        let (r1, r2) = (self.constants.R1, self.constants.R2);
        let vals = (0..nodes)
            .map(|i| self.crossing(r2 + (r1 - r2) * i as f64 / (nodes - 1) as f64, tau))
            .collect::<Result<Vec<_>>>()?;
        let sign_changes = vals.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
        let monotone = vals.windows(2).all(|w| w[1] > w[0]);
        Ok(CrossingStats { sign_changes, monotone, at_r2: vals[0], at_r1: vals[nodes - 1] })
    }
}
