//! Numerical analysis of set-valued inclusions `F(p, x) ⊆ C` at desk scale.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`geometry`] — closed convex bodies in `R^m` (`m ≤ 4`), point-set
//!   distances, the excess `e(A, B) = sup_{a∈A} dist(a, B)` and the Hausdorff
//!   distance derived from it.
//! * [`setmaps`] — a catalog of set-valued maps `F(p, x)`, the scalar excess
//!   function `φ(p, x) = e(F(p,x), C)` whose zero set is the solution set,
//!   and 1-D solution slices.
//! * [`slopes`] — descent-rate (strong slope) estimators for scalar
//!   functions, strict outer slopes of `φ` near a reference solution, and the
//!   region-wide infimum `tau`.
//! * [`moduli`] — empirical Lipschitz-style moduli of set-valued maps
//!   (lower/upper semicontinuity, calmness, local Lipschitz).
//! * [`increase`] — metric C-increase certificates, matrix covering values
//!   and bounds for fan-generated maps.
//! * [`parametric`] — optimal-value functions `val(p) = inf θ(p, ·)` over
//!   solution slices and their calmness.
//! * [`certify`] — assembles estimator output into per-claim certification
//!   reports (hypothesis checks, bound, empirical value, verdict).
//!
//! Everything is deterministic for a fixed seed: sampling patterns are either
//! fixed lattices/direction sets or driven by a caller-supplied ChaCha stream.

pub mod certify;
pub mod config;
pub mod estimate;
pub mod expr;
pub mod geometry;
pub mod increase;
pub mod moduli;
pub mod parametric;
pub mod setmaps;
pub mod slopes;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("operation not supported: {0}")]
    Unsupported(String),
    #[error("no oracle available: {0}")]
    MissingOracle(&'static str),
    #[error("instance validation failed: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
