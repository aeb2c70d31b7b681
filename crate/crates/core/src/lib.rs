//! Radial Thomas-Fermi type functionals for atoms and ions.
//!
//! Densities live on logarithmic radial grids ([`RadialGrid`]) as
//! [`RadialFunction`]s with an explicit model of their behaviour beyond the
//! last node. On top of that sit Coulomb potentials, the Thomas-Fermi solvers,
//! the TFDW minimizer with its ionization analysis, and the liquid drop model.

// `!(x > 0.0)` is deliberate throughout: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod constants;
pub mod coulomb;
pub mod drop;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod tf;
pub mod tfdw;

pub use constants::ModelConstants;
pub use error::{Error, Result};
pub use grid::{Jump, RadialFunction, RadialGrid, Side, Tail};
