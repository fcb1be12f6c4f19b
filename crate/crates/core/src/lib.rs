//! Exact, finite experiments on cylinder intersections.
//!
//! - [`finfield`]: GF(p^m) arithmetic over an explicit irreducible polynomial.
//! - [`boolalg`]: finite Boolean algebras, measure extension and determinacy.
//! - [`cylinder`]: product spaces, cylinder intersections, homogeneity.
//! - [`discrepancy`]: strong discrepancy, generalized inner products and the
//!   Babai–Hayes–Kimmel bound.
//! - [`regularity`]: product measures, regularity defects of grid partitions,
//!   and homogeneous-CI search.
//! - [`schema`]: the JSON wire formats.
//!
//! Sweeps run on rayon when the `parallel` feature is enabled (the
//! default); every reduction breaks ties on the index, so results do not
//! depend on the [`par::Execution`] mode.

pub mod bitset;
pub mod boolalg;
pub mod cylinder;
pub mod discrepancy;
pub mod error;
pub mod finfield;
pub mod par;
pub mod rational;
pub mod regularity;
pub mod schema;

pub use error::{Error, ErrorKind, Result};
pub use par::Execution;
pub use rational::Rational;
