//! Meromorphic expressions: parsing, jet evaluation, iteration and the
//! pole profile that selects the density strategy.

mod ast;
mod eval;
mod parse;
mod profile;

pub use ast::Expr;
pub use eval::{eval_jet, finite_value_and_deriv, iterate_jet, orbit, EvalError, POLE_CUTOFF};
pub use parse::{parse, ParseError};
pub use profile::{
    classify_profile, witness_pole, Evidence, FunctionProfile, PoleCase, ProfileError,
    ScanSettings, POLE_WITNESS_TOL,
};
