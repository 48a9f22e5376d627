//! Scheduling policies. The policies themselves are model-language
//! functions in the prelude; this module evaluates a policy expression
//! against a reflected queue.

use std::sync::OnceLock;

use thiserror::Error;

use crate::func::{EvalError, Evaluator, Layered, Scope, Substitution, Value};
use crate::syntax::ast::{Expr, ModelAst};
use crate::syntax::parse_model;

const PRELUDE: &str = include_str!("prelude.rtabs");

/// Source text of the prelude: list and duration helpers, process
/// observers and the policy library.
pub fn prelude_policies() -> &'static str {
    PRELUDE
}

/// The parsed prelude (not desugared).
pub fn prelude_ast() -> &'static ModelAst {
    static AST: OnceLock<ModelAst> = OnceLock::new();
    AST.get_or_init(|| parse_model(PRELUDE).expect("prelude parses"))
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("scheduling policy failed: {0}")]
    Eval(#[from] EvalError),
    #[error("scheduling policy returned {0}, which is not a Proc value")]
    NotAProcess(String),
    #[error("scheduling policy chose {0}, which is not a ready process")]
    UnknownPid(String),
    #[error("scheduling policy applied to an empty queue")]
    EmptyQueue,
}

/// Pid field of a `Proc(..)` value.
pub fn process_pid(p: &Value) -> Option<&Value> {
    let c = p.as_ctor()?;
    (c.name == "Proc" && c.args.len() == 9).then(|| &c.args[0])
}

/// Evaluate `policy` with `queue` bound to the ready processes, over the
/// object's attributes. Returns the chosen pid, which is guaranteed to be
/// the pid of some element of `ready`.
pub fn evaluate_policy(
    ev: &Evaluator<'_>,
    policy: &Expr,
    ready: &[Value],
    attrs: &dyn Scope,
) -> Result<Value, PolicyError> {
    if ready.is_empty() {
        return Err(PolicyError::EmptyQueue);
    }
    let mut q = Substitution::new();
    q.bind("queue", Value::list(ready.to_vec()));
    let scope = Layered {
        outer: attrs,
        inner: &q,
    };
    let chosen = ev.eval(policy, &scope)?;
    let pid = process_pid(&chosen).ok_or_else(|| PolicyError::NotAProcess(chosen.to_string()))?;
    if ready.iter().any(|p| process_pid(p) == Some(pid)) {
        Ok(pid.clone())
    } else {
        Err(PolicyError::UnknownPid(pid.to_string()))
    }
}
