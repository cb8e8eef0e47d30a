//! Reduction compiler from two-counter machines to Presburger arithmetic with
//! a single uninterpreted unary predicate, plus a desk-scale workbench that
//! builds the canonical bit-string model of a run and checks every encoding
//! sentence against it by bounded quantifier instantiation.
//!
//! The pipeline is
//! [`machine`] → [`encoder`] → [`logic`] (CNF, SMT-LIB) and
//! [`machine`] → [`model`] → [`checker`].

pub mod checker;
pub mod cli;
pub mod encoder;
pub mod logic;
pub mod machine;
pub mod model;
