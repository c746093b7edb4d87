//! Inertial forward-backward splitting for monotone inclusions
//! `0 ∈ A(x) + B(x)` with `A` maximally monotone and `B` co-coercive.
//!
//! The crate provides three solvers that share one step structure:
//! [`crifba`] for a single `A`, [`gcrifba`] for a finite sum `Σ A_k` via a
//! weighted product space, and [`cripda`] for convex-concave saddle points.
//! [`baselines`] holds classical splitting methods for comparison and
//! [`checks`] turns the identities and inequalities the iterates satisfy into
//! executable oracles over recorded runs.

// negated comparisons are how NaN parameters get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod checks;
pub mod crifba;
pub mod cripda;
pub mod error;
pub mod gcrifba;
pub mod metric;
pub mod operators;
pub mod problems;
pub mod rates;
pub mod trace;

pub use error::{Error, Result};
pub use metric::{Matrix, SpdMap, Vector};
