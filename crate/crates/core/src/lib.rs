//! Repelling cycles of transcendental meromorphic maps.
//!
//! The crate covers the whole pipeline: Riemann-sphere numerics
//! ([`sphere`]), expression parsing and jets ([`fnexpr`]), Julia rasters
//! and pre-poles ([`dynamics`]), the rescaling constructions ([`renorm`]),
//! periodic-point search and density reports ([`cycles`]), and the
//! command-line driver ([`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod cli;
pub mod cycles;
pub mod dynamics;
pub mod fnexpr;
pub mod newton;
pub mod renorm;
pub mod sphere;

pub use num_complex::Complex64;

/// Version string embedded in every output file.
pub const VERSION: &str = concat!("julia-cycles ", env!("CARGO_PKG_VERSION"));
