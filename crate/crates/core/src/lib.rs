//! Quantum transport along planar curved wires.
//!
//! A curve profile `y = f(x)` is turned into a flat-axis Schrödinger problem
//! with position-dependent mass `(1 + f'²) m0` and a curvature-induced
//! effective potential, discretized as a tight-binding chain between two flat
//! leads. From the 2×2 scattering matrix the crate derives transmission,
//! reflection, the Friedel phase and the Wigner time delay, and compares the
//! delay with the classical traversal time over the arc length.
//!
//! Internally everything is in Hartree atomic units; see [`units`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod hamiltonian;
pub mod io;
pub mod observables;
pub mod oracle;
pub mod scattering;
mod stencil;
pub mod sweep;
pub mod units;

pub use geometry::{GeometryError, GeometryField, Parity, Profile, Shape, StretchMode};
pub use hamiltonian::{Chain, ChainError};
pub use observables::Spectrum;
pub use scattering::{solve_smatrix, SMatrix, SMatrixPoint, ScatteringError};
pub use sweep::{SweepConfig, SweepError};
