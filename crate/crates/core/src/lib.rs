//! Nonlocal quadratic energies on periodic perforated domains.
//!
//! The crate evaluates double-integral energies of the form
//!
//! ```text
//! F(u) = ε^-(d+2) ∫∫_{(Ω∩δE)²} φ((x-y)/ε) |u(x) - u(y)|² dx dy
//! ```
//!
//! where `E = K + Z^d` is a periodic array of disjoint inclusions, and provides
//! the tools needed to study their behaviour as `ε, δ → 0`: radial kernels and
//! their moments, inclusion geometry and connectivity thresholds, grid
//! discretizations, averaging/interpolation operators, the periodic cell
//! problem for the homogenized tensor, and the explicit sequences used in the
//! three scaling regimes.
//!
//! The crate is `no_std` (it needs `alloc`). Enabling the `parallel` feature
//! pulls in `std` and `rayon`; every parallel reduction combines partial
//! results in a fixed order, so outputs do not depend on the thread count.

#![cfg_attr(not(feature = "std"), no_std)]
// Index loops over parallel fixed-size arrays, and `!(x > 0.0)` to reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cellproblem;
pub mod cg;
pub mod energy;
pub mod geometry;
pub mod grid;
pub mod interpolate;
pub mod kernels;
pub mod lattice;
mod par;
pub mod quadrature;
pub mod regimes;
pub mod unionfind;

/// Largest spatial dimension supported by the fixed-size point types.
pub const MAX_DIM: usize = 3;

/// A point in `R^d`, padded with zeros beyond the active dimension.
pub type Point = [f64; MAX_DIM];

/// An integer lattice vector in `Z^d`, padded with zeros beyond the active dimension.
pub type LatticeIndex = [i64; MAX_DIM];

pub use cellproblem::{CellDiscretization, CellError, HomogenizedTensor};
pub use energy::{Energy, EnergyContext, EnergyError, EnergyOptions};
pub use geometry::{ConnectivityReport, GeometryError, InclusionShape, PerforatedSet};
pub use grid::{Aabb, Grid, GridError, GridFunction};
pub use interpolate::{AverageKind, InterpolateError, LatticeAverages};
pub use kernels::{KernelError, Profile, RadialKernel, StaircaseKernel};
pub use regimes::{Regime, RegimeConfig, RegimeError, RegimeReport, RegimeRow, TestFunction};

pub(crate) fn point_from_slice(x: &[f64]) -> Point {
    let mut p = [0.0; MAX_DIM];
    p[..x.len()].copy_from_slice(x);
    p
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}
