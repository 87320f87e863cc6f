//! Numerical checks of the Rellich inequality and its mode-by-mode
//! refinement, reduced to weighted integrals on the half-line.
//!
//! The crate is organised bottom-up:
//!
//! - [`quadrature`]: panel Gauss–Legendre rules and weighted pairings.
//! - [`profiles`]: analytic compactly supported radial test functions.
//! - [`radial_ops`]: radial, dimension-shifted and per-mode Laplacians.
//! - [`harmonics`]: zonal harmonics certifying the sphere eigenvalues.
//! - [`verify`]: identity, positivity, dissipativity and Rellich checks.
//! - [`sharp`]: best constants by eigen-solve and by symbol, angle search.
//! - [`oracle_nd`]: finite-difference cross-check on tensor grids in 3-D/4-D.

// `!(x > 0.0)` is how input guards reject NaN along with the bad range
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

mod error;
mod simplex;

pub mod harmonics;
pub mod oracle_nd;
pub mod profiles;
pub mod quadrature;
pub mod radial_ops;
pub mod sharp;
pub mod verify;

pub use error::{Error, Result};
