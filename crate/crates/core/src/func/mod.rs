//! Functional layer: values, substitutions, expression and guard evaluation.

mod eval;
mod subst;
mod value;

pub use eval::{
    literal, match_pattern, EvalError, Evaluator, FutureView, Functions, NoFutures,
    DEFAULT_MAX_DEPTH,
};
pub use subst::{Layered, Scope, Substitution};
pub use value::{fmt_rat, parse_rat, rat, CtorValue, Dur, Value};
