//! First-order formulas over `⟨0, 1, +, ≤, <, =⟩` with one uninterpreted
//! unary predicate `P` (or unary function `f`).

mod cnf;
mod formula;
pub mod smtlib;
mod term;

use thiserror::Error;

pub use cnf::{
    is_horn, max_vars_per_clause, predicate_to_function, range_axiom, to_cnf, Clause, ClauseSet, Flavor,
    Literal,
};
pub use formula::{Atom, Formula, Interpretation, MacroApp, MacroKind};
pub use smtlib::{to_smtlib, SmtHeader, Sort};
pub use term::{eval_term, normalize_term, LinearTerm, RawTerm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("arithmetic overflow")]
    Overflow,
    #[error("predicate access at {position} is outside the model (length {length})")]
    OutOfRange { position: u64, length: u64 },
    #[error("existential quantifier not allowed here")]
    Existential,
    #[error("quantified formula where a quantifier-free one was expected")]
    Quantified,
    #[error("sentence set mixes the predicate P and the function f")]
    MixedSymbols,
    #[error("SMT-LIB parse error: {0}")]
    Parse(String),
}
