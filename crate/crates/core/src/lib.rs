//! Exact-arithmetic library for set functions on semilattices of sets, their
//! unique additive extensions to generated lattices and rings, the order-side
//! correspondence between point functions and semi-additive set functions, and
//! a fully computable finite model of semilattice-indexed stochastic processes
//! (quasi-martingale norms, Riesz and Doob–Meyer decompositions).
//!
//! Everything is computed over arbitrary-precision rationals; there are no
//! tolerances anywhere. All reported identities are exact equalities.

pub mod json;
pub mod linalg;
pub mod order_semilattice;
pub mod product_ext;
pub mod report;
pub mod selftest;
pub mod semimodular;
pub mod set_core;
pub mod stoch;
pub mod value;

pub use report::{IdentityLedger, LedgerEntry};
pub use value::{rat, rat_from_str, rat_to_string, Value};

use thiserror::Error;

/// Errors shared by every module. Witness payloads are kept printable so they
/// can be serialized into reports unchanged.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ground set mismatch: {0}")]
    GroundMismatch(String),
    #[error("family is not a semi-lattice (closed under neither intersection nor union)")]
    NotSemilattice,
    #[error("set function is not semi-modular: {0}")]
    NotSemimodular(String),
    #[error("value dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("domain is incomplete: {0}")]
    PartialDomain(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("order property fails: strict up-sets of {x} and {y} are nested but the points are not comparable")]
    OrderProperty { x: String, y: String },
    #[error("point is not on the level grid: {0}")]
    OffGrid(String),
    #[error("model is invalid: {0}")]
    InvalidModel(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
