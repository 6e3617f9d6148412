//! Numerical construction of rotationally symmetric convex mean curvature
//! flow solutions with a prescribed growth rate of curvature at infinity.
//!
//! Layers, bottom up: [`numerics`] (ODE integration, finite differences,
//! interpolation), [`geometry`] (charts and curvature), [`soliton`] (the
//! translating bowl), [`formal`] (matched approximate solutions),
//! [`barriers`] (certified sub/supersolutions), [`evolve`] (PDE solver),
//! [`asymptotics`] (growth-rate diagnostics), [`io`] (config and manifests)
//! and [`verify`] (acceptance gates).

// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod barriers;
pub mod error;
pub mod evolve;
pub mod formal;
pub mod geometry;
pub mod io;
pub mod numerics;
pub mod soliton;
pub mod verify;

pub use error::{McfError, Result};
pub use geometry::{Chart, FlowParams, FlowState};
