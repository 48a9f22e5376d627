use std::cell::Cell;
use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use super::subst::{Layered, Scope, Substitution};
use super::value::{Dur, Value};
use crate::syntax::ast::*;

pub const DEFAULT_MAX_DEPTH: usize = 100_000;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no case branch matches {0}")]
    MatchFailure(String),
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("function {name} expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("operator {op} is not defined for {operands}")]
    BadOperands { op: &'static str, operands: String },
    #[error("expected {expected}, found {found}")]
    Expected {
        expected: &'static str,
        found: String,
    },
    #[error("function calls nested deeper than {0}")]
    DepthExceeded(usize),
}

/// Which futures of the surrounding configuration are resolved.
pub trait FutureView {
    fn is_resolved(&self, id: u64) -> bool;
}

/// For evaluation outside any configuration: every future is unresolved.
pub struct NoFutures;

impl FutureView for NoFutures {
    fn is_resolved(&self, _id: u64) -> bool {
        false
    }
}

/// Function definitions by name. A later definition replaces an earlier one,
/// which is how models shadow prelude functions.
#[derive(Clone, Debug)]
pub struct Functions {
    map: HashMap<String, Arc<FunDecl>>,
    pub max_depth: usize,
}

impl Functions {
    pub fn new(model: &ModelAst) -> Self {
        let map = model
            .functions
            .iter()
            .map(|f| (f.name.clone(), Arc::new(f.clone())))
            .collect();
        Functions {
            map,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn get(&self, name: &str) -> Option<&FunDecl> {
        self.map.get(name).map(|f| f.as_ref())
    }
}

/// Evaluation context: function table, current clock and future states.
pub struct Evaluator<'a> {
    funcs: &'a Functions,
    clock: &'a BigRational,
    futures: &'a dyn FutureView,
    depth: Cell<usize>,
}

impl<'a> Evaluator<'a> {
    pub fn new(funcs: &'a Functions, clock: &'a BigRational, futures: &'a dyn FutureView) -> Self {
        Evaluator {
            funcs,
            clock,
            futures,
            depth: Cell::new(0),
        }
    }

    pub fn eval(&self, e: &Expr, scope: &dyn Scope) -> Result<Value, EvalError> {
        match &e.kind {
            ExprKind::Lit(l) => Ok(literal(l)),
            ExprKind::Var(x) => lookup(scope, x),
            ExprKind::This => lookup(scope, "this"),
            ExprKind::Destiny => lookup(scope, "destiny"),
            ExprKind::Deadline => lookup(scope, "deadline"),
            ExprKind::Now => Ok(Value::time(self.clock.clone())),
            ExprKind::Ctor(c, args) => {
                let vals = self.eval_all(args, scope)?;
                Ok(Value::ctor(c, vals))
            }
            ExprKind::Call(f, args) => {
                let vals = self.eval_all(args, scope)?;
                self.call(f, vals)
            }
            ExprKind::Case(s, branches) => {
                let v = self.eval(s, scope)?;
                for b in branches {
                    if let Some(sub) = match_pattern(&b.pattern, &v) {
                        let inner = Layered {
                            outer: scope,
                            inner: &sub,
                        };
                        return self.eval(&b.body, &inner);
                    }
                }
                Err(EvalError::MatchFailure(v.to_string()))
            }
            ExprKind::If(c, t, f) => {
                if self.eval_bool(c, scope)? {
                    self.eval(t, scope)
                } else {
                    self.eval(f, scope)
                }
            }
            ExprKind::Unary(UnOp::Not, x) => Ok(Value::Bool(!self.eval_bool(x, scope)?)),
            ExprKind::Unary(UnOp::Neg, x) => match self.eval(x, scope)? {
                Value::Int(n) => Ok(Value::Int(-n)),
                Value::Rat(r) => Ok(Value::Rat(-r)),
                v => Err(EvalError::BadOperands {
                    op: "-",
                    operands: v.type_name().into(),
                }),
            },
            ExprKind::Binary(BinOp::And, a, b) => {
                Ok(Value::Bool(self.eval_bool(a, scope)? && self.eval_bool(b, scope)?))
            }
            ExprKind::Binary(BinOp::Or, a, b) => {
                Ok(Value::Bool(self.eval_bool(a, scope)? || self.eval_bool(b, scope)?))
            }
            ExprKind::Binary(op, a, b) => {
                let x = self.eval(a, scope)?;
                let y = self.eval(b, scope)?;
                binary(*op, x, y)
            }
        }
    }

    pub fn eval_bool(&self, e: &Expr, scope: &dyn Scope) -> Result<bool, EvalError> {
        let v = self.eval(e, scope)?;
        v.as_bool().ok_or_else(|| EvalError::Expected {
            expected: "Bool",
            found: v.to_string(),
        })
    }

    /// Evaluate to a duration: `Duration(r)`, `InfDuration` or a number.
    pub fn eval_dur(&self, e: &Expr, scope: &dyn Scope) -> Result<Dur, EvalError> {
        let v = self.eval(e, scope)?;
        Dur::from_value(&v).ok_or_else(|| EvalError::Expected {
            expected: "Duration",
            found: v.to_string(),
        })
    }

    fn eval_all(&self, es: &[Expr], scope: &dyn Scope) -> Result<Vec<Value>, EvalError> {
        es.iter().map(|e| self.eval(e, scope)).collect()
    }

    /// Apply a named function to evaluated arguments. The body sees only
    /// its formals.
    pub fn call(&self, name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
        let f = self
            .funcs
            .get(name)
            .ok_or_else(|| EvalError::UnknownFunction(name.to_string()))?;
        if f.params.len() != args.len() {
            return Err(EvalError::Arity {
                name: name.to_string(),
                expected: f.params.len(),
                got: args.len(),
            });
        }
        let depth = self.depth.get();
        if depth >= self.funcs.max_depth {
            return Err(EvalError::DepthExceeded(self.funcs.max_depth));
        }
        let env: Substitution = f
            .params
            .iter()
            .map(|p| p.name.clone())
            .zip(args)
            .collect();
        self.depth.set(depth + 1);
        let r = stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || self.eval(&f.body, &env));
        self.depth.set(depth);
        r
    }

    pub fn eval_guard(&self, g: &Guard, scope: &dyn Scope) -> Result<bool, EvalError> {
        match g {
            Guard::Expr(e) => self.eval_bool(e, scope),
            Guard::Future(x, _) => match lookup(scope, x)? {
                Value::Future(id) => Ok(self.futures.is_resolved(id)),
                v => Err(EvalError::Expected {
                    expected: "future",
                    found: v.to_string(),
                }),
            },
            Guard::Duration(b, _) => Ok(match self.eval_dur(b, scope)? {
                Dur::Finite(r) => !r.is_positive(),
                Dur::Infinite => false,
            }),
            Guard::And(a, b) => Ok(self.eval_guard(a, scope)? && self.eval_guard(b, scope)?),
        }
    }
}

fn lookup(scope: &dyn Scope, x: &str) -> Result<Value, EvalError> {
    scope
        .lookup(x)
        .cloned()
        .ok_or_else(|| EvalError::UnboundVariable(x.to_string()))
}

pub fn literal(l: &Literal) -> Value {
    match l {
        Literal::Bool(b) => Value::Bool(*b),
        Literal::Int(n) => Value::Int(n.clone()),
        Literal::Rat(r) => Value::Rat(r.clone()),
        Literal::Str(s) => Value::str(s),
        Literal::Null => Value::Null,
    }
}

fn bad(op: BinOp, x: &Value, y: &Value) -> EvalError {
    EvalError::BadOperands {
        op: op.symbol(),
        operands: format!("{} and {}", x.type_name(), y.type_name()),
    }
}

fn binary(op: BinOp, x: Value, y: Value) -> Result<Value, EvalError> {
    use BinOp::*;
    match op {
        Eq => return Ok(Value::Bool(x == y)),
        Ne => return Ok(Value::Bool(x != y)),
        Lt => return Ok(Value::Bool(x < y)),
        Le => return Ok(Value::Bool(x <= y)),
        Gt => return Ok(Value::Bool(x > y)),
        Ge => return Ok(Value::Bool(x >= y)),
        _ => {}
    }
    if let (Add, Value::Str(a), Value::Str(b)) = (op, &x, &y) {
        return Ok(Value::str(&format!("{a}{b}")));
    }
    if let (Value::Int(a), Value::Int(b)) = (&x, &y) {
        return int_op(op, a, b).ok_or_else(|| bad(op, &x, &y))?;
    }
    let (Some(a), Some(b)) = (x.as_rat(), y.as_rat()) else {
        return Err(bad(op, &x, &y));
    };
    match op {
        Add => Ok(Value::Rat(a + b)),
        Sub => Ok(Value::Rat(a - b)),
        Mul => Ok(Value::Rat(a * b)),
        Div if b.is_zero() => Err(EvalError::DivisionByZero),
        Div => Ok(Value::Rat(a / b)),
        _ => Err(bad(op, &x, &y)),
    }
}

fn int_op(op: BinOp, a: &BigInt, b: &BigInt) -> Option<Result<Value, EvalError>> {
    use BinOp::*;
    Some(match op {
        Add => Ok(Value::Int(a + b)),
        Sub => Ok(Value::Int(a - b)),
        Mul => Ok(Value::Int(a * b)),
        Div | Mod if b.is_zero() => Err(EvalError::DivisionByZero),
        // exact division
        Div => Ok(Value::Rat(BigRational::new(a.clone(), b.clone()))),
        Mod => Ok(Value::Int(a % b)),
        _ => return None,
    })
}

/// `σ` with `σ(p) = v`, or `None` when `p` does not match.
pub fn match_pattern(p: &Pattern, v: &Value) -> Option<Substitution> {
    let mut sub = Substitution::new();
    if match_into(p, v, &mut sub) {
        Some(sub)
    } else {
        None
    }
}

fn match_into(p: &Pattern, v: &Value, sub: &mut Substitution) -> bool {
    match p {
        Pattern::Wildcard => true,
        Pattern::Var(x) => {
            sub.bind(x.clone(), v.clone());
            true
        }
        Pattern::Lit(l) => literal(l) == *v,
        Pattern::Ctor(name, args) => match v {
            Value::Ctor(c) if c.name == *name && c.args.len() == args.len() => args
                .iter()
                .zip(&c.args)
                .all(|(p, v)| match_into(p, v, sub)),
            _ => false,
        },
    }
}
