//! Thin-film photonics benchmark core.
//!
//! Transfer-matrix optics, the three benchmark objective families, anytime metrics,
//! baseline optimizers, a subprocess ask/tell sandbox and the benchmark harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod fmt;
pub mod materials;
pub mod metrics;
pub mod optimizers;
pub mod parallel;
pub mod problems;
pub mod sandbox;
pub mod tmm;

pub use num_complex::Complex64 as C64;
