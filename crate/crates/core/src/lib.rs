//! Far-field phase retrieval toolkit.
//!
//! The array, transform, symmetry and classical-solver layers are generic
//! over [`Real`]; the aliases below pin them to `f64`, which is what every
//! solver and metric in this crate is validated at.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod crystal;
pub mod dip;
pub mod dip_solvers;
pub mod error;
pub mod formats;
pub mod forward;
pub mod fourier;
pub mod grid;
pub mod propagate;
pub mod scalar;
pub mod symmetry;
pub mod trace;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ComplexImage = grid::ComplexGrid<f64>;
pub type MagnitudeMap = grid::IntensityGrid<f64>;
pub type ComplexImage32 = grid::ComplexGrid<f32>;
pub type MagnitudeMap32 = grid::IntensityGrid<f32>;
pub type Model = forward::ForwardModel<f64>;
pub type Symmetry = symmetry::SymmetryElement<f64>;
pub type Trace = trace::SolverTrace<f64>;

pub use grid::SupportMask;
pub use num_complex::Complex64;
