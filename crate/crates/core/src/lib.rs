//! P1 finite elements and a mass- and energy-conserving Crank-Nicolson
//! integrator for the nonlinear Schrödinger equation
//!
//! ```text
//! i ∂t u = −κ Δu + V u + γ(|u|²) u   in D × (0, T],   u = 0 on ∂D,
//! ```
//!
//! with a bounded, possibly discontinuous potential `V ≥ 0`. The nonlinear
//! term of the time discretization uses the divided difference of the
//! antiderivative `Γ` of `γ`, which makes the discrete mass and energy exact
//! invariants of the scheme.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command-line tools live in the `nlsfem-cli` crate.
//!
//! Module map:
//!
//! * [`mesh`]: nested uniform triangulations of rectangles and prolongation.
//! * [`assembly`]: mass, stiffness, potential and nonlinear operators, Ritz projection.
//! * [`model`]: potentials, nonlinearities, the divided-difference kernel, mass and energy.
//! * [`truncation`]: the bounded extension `γ_M` of a nonlinearity.
//! * [`stepper`]: the Crank-Nicolson step, time grids, conservation logs.
//! * [`groundstate`]: discrete normalized gradient flow for ground states.
//! * [`analysis`]: randomized checks of the identities and bounds behind the error analysis.
//! * [`convergence`]: relative errors against a reference and experimental orders.
#![no_std]
#![warn(rust_2018_idioms, missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod assembly;
pub mod convergence;
mod error;
pub mod field;
pub mod groundstate;
pub mod linsolve;
pub(crate) mod math;
pub mod mesh;
pub mod model;
pub mod quadrature;
pub mod sparse;
pub mod stepper;
pub mod truncation;

pub use error::{Error, Result};
pub use field::FeField;
pub use mesh::{Mesh, Rect};
pub use num_complex::Complex64 as C64;
