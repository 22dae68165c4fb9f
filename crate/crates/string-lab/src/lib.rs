//! Numerical laboratory for a hanging inextensible string.
//!
//! The string occupies arc length s ∈ [0, 1] with a free end at s = 0 and a fixed
//! end at s = 1. Its motion obeys ẍ = (τx')' + g where the tension τ solves, at
//! every instant, −τ'' + |x''|²τ = |ẋ'|² with τ(0) = 0 and τ'(1) = −g·x'(1).

pub mod compat;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod norms;
pub mod prep;
pub mod scenarios;
pub mod tension;

pub type Vec3 = nalgebra::Vector3<f64>;

pub use error::{LabError, Result};
pub use grid::{DiffOps, Grid, StringState};
