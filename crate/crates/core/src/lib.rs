//! Finite-dimensional tracial operator algebras and their maximal-norm toolkit.
//!
//! The crate models direct sums of matrix blocks with weighted traces and
//! provides, on top of that foundation: certified superoperators (complete
//! positivity, trace behavior, symmetry), ergodic and fractional averages,
//! a convex solver for maximal norms of positive sequences, weak-type
//! witnesses with a dyadic Marcinkiewicz-style decomposition, and a zoo of
//! concrete semigroups on which all of it can be exercised.

pub mod averages;
pub mod context;
pub mod element;
pub mod error;
pub mod laguerre;
pub mod maxnorm;
pub mod norms;
pub mod prox;
pub mod semigroups;
pub mod serial;
pub mod spectral;
pub mod superop;
pub mod weaktype;

pub use context::{Block, TraceContext};
pub use element::Element;
pub use error::{Error, Result};
