use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;

use crate::func::{Dur, FutureView, Substitution, Value};
use crate::syntax::ast::{Block, Expr, Guard, Stmt, StmtKind};
use crate::syntax::pretty;

/// An `await` guard whose duration bounds have been fixed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RtGuard {
    Expr(Expr),
    Future(String),
    Duration(Dur, Dur),
    And(Box<RtGuard>, Box<RtGuard>),
}

impl RtGuard {
    pub fn render(&self) -> String {
        match self {
            RtGuard::Expr(e) => pretty::expr(e),
            RtGuard::Future(x) => format!("{x}?"),
            RtGuard::Duration(b, w) => format!("duration({b}, {w})"),
            RtGuard::And(a, b) => format!("{} && {}", a.render(), b.render()),
        }
    }

    /// Back to source syntax, for re-evaluation with the functional layer.
    pub fn to_guard(&self) -> Guard {
        match self {
            RtGuard::Expr(e) => Guard::Expr(e.clone()),
            RtGuard::Future(x) => Guard::Future(x.clone(), Default::default()),
            RtGuard::Duration(b, w) => Guard::Duration(dur_expr(b), dur_expr(w)),
            RtGuard::And(a, b) => Guard::And(Box::new(a.to_guard()), Box::new(b.to_guard())),
        }
    }
}

fn dur_expr(d: &Dur) -> Expr {
    use crate::syntax::ast::{ExprKind, Literal};
    match d {
        Dur::Finite(r) => Expr::ctor("Duration", vec![Expr::synth(ExprKind::Lit(Literal::Rat(r.clone())))]),
        Dur::Infinite => Expr::ctor("InfDuration", vec![]),
    }
}

/// One frame of a process continuation. The top of the stack is the next
/// thing the process executes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cont {
    /// Remaining statements `block[idx..]`.
    Seq { block: Block, idx: usize },
    /// `await g` after its duration bounds were fixed.
    Await(RtGuard),
    /// `duration2(b, w)`.
    Duration2(Dur, Dur),
    /// The `suspend` inserted by a failed `await`.
    Suspend,
    /// `x = v` with an already computed value; no target discards it.
    Set(Option<String>, Value),
}

/// The next action of a process.
#[derive(Debug)]
pub enum Head<'a> {
    Stmt(&'a Stmt),
    Await(&'a RtGuard),
    Duration2(&'a Dur, &'a Dur),
    Suspend,
    Set(&'a Option<String>, &'a Value),
    /// Body exhausted without `return`: returns `Unit`.
    End,
}

/// A method activation `{l | s}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Process {
    pub locals: Substitution,
    pub stack: Vec<Cont>,
    /// Deadline at activation, kept for bookkeeping checks.
    pub initial_deadline: Dur,
    pub started: bool,
    /// Causal path, e.g. `m.c0.c2`; stable across interleavings.
    pub path: Arc<str>,
    /// Calls and object creations issued so far.
    pub spawned: u32,
    /// First String argument of the call, used to group jobs in metrics.
    pub label: Option<Arc<str>>,
}

impl Process {
    pub fn head(&self) -> Head<'_> {
        for c in self.stack.iter().rev() {
            match c {
                Cont::Seq { block, idx } if *idx < block.len() => return Head::Stmt(&block[*idx]),
                Cont::Seq { .. } => continue,
                Cont::Await(g) => return Head::Await(g),
                Cont::Duration2(b, w) => return Head::Duration2(b, w),
                Cont::Suspend => return Head::Suspend,
                Cont::Set(x, v) => return Head::Set(x, v),
            }
        }
        Head::End
    }

    pub fn local(&self, name: &str) -> Option<&Value> {
        self.locals.get(name)
    }

    pub fn pid(&self) -> u64 {
        match self.locals.get("destiny") {
            Some(Value::Future(f)) => *f,
            _ => unreachable!("every process has a destiny future"),
        }
    }

    pub fn method(&self) -> String {
        match self.locals.get("method") {
            Some(Value::Str(s)) => s.to_string(),
            _ => String::new(),
        }
    }

    /// Remaining relative deadline.
    pub fn deadline(&self) -> Dur {
        self.locals
            .get("deadline")
            .and_then(Dur::from_value)
            .unwrap_or(Dur::Infinite)
    }

    pub fn arrival(&self) -> BigRational {
        self.locals
            .get("arrival")
            .and_then(Value::as_time)
            .unwrap_or_else(BigRational::zero)
    }

    /// `Proc(destiny, method, arrival, cost, deadline, start, finish, critical, value)`.
    pub fn lift(&self) -> Value {
        let get = |n: &str| self.locals.get(n).cloned().unwrap_or(Value::Null);
        Value::ctor(
            "Proc",
            vec![
                get("destiny"),
                get("method"),
                get("arrival"),
                get("cost"),
                get("deadline"),
                get("start"),
                get("finish"),
                get("critical"),
                get("value"),
            ],
        )
    }

    /// Source rendering of the next action, for diagnostics.
    pub fn render_head(&self) -> String {
        match self.head() {
            Head::Stmt(s) => pretty::stmt(s, 0),
            Head::Await(g) => format!("await {};", g.render()),
            Head::Duration2(b, w) => format!("duration2({b}, {w});"),
            Head::Suspend => "suspend;".into(),
            Head::Set(Some(x), v) => format!("{x} = {v};"),
            Head::Set(None, v) => format!("{v};"),
            Head::End => "end of method".into(),
        }
    }

    /// Is the head an `x = e.get` statement?
    pub fn head_get(&self) -> Option<&Expr> {
        match self.head() {
            Head::Stmt(s) => match s.kind.rhs() {
                Some((crate::syntax::ast::Rhs::Get(e), _)) => Some(e),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn head_is_await_stmt(&self) -> bool {
        matches!(self.head(), Head::Stmt(Stmt { kind: StmtKind::Await(_), .. }))
    }
}

/// Lift every process, preserving order.
pub fn liftall<'a>(q: impl IntoIterator<Item = &'a Process>) -> Value {
    Value::list(q.into_iter().map(Process::lift).collect::<Vec<_>>())
}

/// The process with the given pid, if any.
pub fn select<'a>(pid: &Value, q: &'a [Process]) -> Option<&'a Process> {
    q.iter().find(|p| p.locals.get("destiny") == Some(pid))
}

/// `ob(o, p, a, pr, q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Object {
    pub id: u64,
    pub class: Arc<str>,
    pub policy: Expr,
    pub attrs: Substitution,
    pub active: Option<Process>,
    pub queue: Vec<Process>,
    pub path: Arc<str>,
}

/// `m(o, v̄, f, d, c, t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub method: String,
    pub callee: u64,
    pub args: Vec<Value>,
    pub future: u64,
    pub deadline: Dur,
    pub critical: bool,
    pub time: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FutureCell {
    pub id: u64,
    pub value: Option<Value>,
    pub path: Arc<str>,
}

/// Timed configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub objects: Vec<Object>,
    pub messages: Vec<Message>,
    pub futures: Vec<FutureCell>,
    pub clock: BigRational,
}

impl Configuration {
    pub fn empty() -> Self {
        Configuration {
            objects: Vec::new(),
            messages: Vec::new(),
            futures: Vec::new(),
            clock: BigRational::zero(),
        }
    }

    pub fn object(&self, id: u64) -> Option<&Object> {
        self.objects.get(id as usize)
    }

    pub fn future_value(&self, id: u64) -> Option<&Value> {
        self.futures.get(id as usize).and_then(|f| f.value.as_ref())
    }

    /// Objects with an active process, queued processes or pending messages.
    pub fn has_pending_work(&self) -> bool {
        !self.messages.is_empty()
            || self
                .objects
                .iter()
                .any(|o| o.active.is_some() || !o.queue.is_empty())
    }

    pub fn processes(&self) -> impl Iterator<Item = (&Object, &Process)> {
        self.objects
            .iter()
            .flat_map(|o| o.active.iter().chain(o.queue.iter()).map(move |p| (o, p)))
    }
}

impl FutureView for Configuration {
    fn is_resolved(&self, id: u64) -> bool {
        self.future_value(id).is_some()
    }
}

/// Resolved-future view over a bare future table.
pub struct FutureTable<'a>(pub &'a [FutureCell]);

impl FutureView for FutureTable<'_> {
    fn is_resolved(&self, id: u64) -> bool {
        self.0.get(id as usize).is_some_and(|f| f.value.is_some())
    }
}
