//! Numerical laboratory for the degenerate fully nonlinear Dirichlet problem
//!
//! ```text
//! |Du|^γ F(x, D²u) + a(x) u^q = 0  in Ω,   u ≥ 0,   u = 0 on ∂Ω,
//! ```
//!
//! with `γ ≥ 0`, `0 < q < γ + 1` and a sign-changing weight `a`, on
//! intervals and rectangles. Solutions are computed with monotone
//! finite-difference schemes and classified as trivial, dead-core or
//! positive.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod banded;
pub mod cli;
pub mod config;
pub mod dirichlet;
pub mod eigen;
pub mod error;
pub mod grid;
mod march;
pub mod matrix;
pub mod operators;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
