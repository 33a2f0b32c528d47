//! Numerical laboratory for the two-dimensional obstacle problem with the
//! degenerate forcing term `|x|` on the unit disk,
//!
//! ```text
//!     Δu = |x| χ_{u>0}  in B₁,    u ≥ 0  in B₁.
//! ```
//!
//! The crate solves the discrete complementarity problem, evaluates the
//! closed-form catalog of cubic homogeneous global solutions, monitors the
//! Weiss energy Φ(r) and its decay, classifies blow-up profiles, extracts and
//! validates the free-boundary corner geometry, and verifies the
//! epiperimetric inequality for boundary traces near a cone profile.

pub mod blowup;
pub mod catalog;
pub mod cli;
pub mod epicheck;
pub mod error;
pub mod freeboundary;
pub mod grid;
pub mod solver;
pub mod weiss;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
