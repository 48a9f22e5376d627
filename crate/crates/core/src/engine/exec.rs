use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::*;
use super::time::{adv_config, eval_rt_guard, mte_config};
use super::{DurationPolicy, EngineError, EngineOptions, ErrorKind, Rule};
use crate::func::{fmt_rat, Dur, EvalError, Evaluator, Layered, Scope, Substitution, Value};
use crate::metrics::{EventKind, TraceEvent};
use crate::model::Program;
use crate::sched::evaluate_policy;
use crate::syntax::ast::*;

const MAIN_CLASS: &str = "Main";
const MAIN_PATH: &str = "m";

/// Why a run stopped without error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stop {
    /// No process, message or queued work is left.
    Terminated,
    /// The next clock advance would pass the limit.
    TimeLimit,
    /// Work is pending but nothing can ever happen; one line per blocked object.
    Deadlock(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub stop: Stop,
    pub clock: BigRational,
    pub steps: u64,
    pub ticks: u64,
}

/// What happens to a process after one of its steps.
enum Fate {
    Stay,
    Queue,
    Done,
}

/// A simulation: one configuration plus the deterministic strategy that
/// picks the next rule.
pub struct Engine {
    program: Arc<Program>,
    pub cn: Configuration,
    rng: ChaCha8Rng,
    options: EngineOptions,
    pub trace: Vec<TraceEvent>,
    pub steps: u64,
    pub ticks: u64,
}

fn default_value(ty: &TypeRef) -> Value {
    match ty.name.as_str() {
        "Int" => Value::int(0),
        "Rat" => Value::Rat(BigRational::zero()),
        "Bool" => Value::Bool(false),
        "String" => Value::str(""),
        _ => Value::Null,
    }
}

fn time_value(t: &BigRational) -> Value {
    Value::time(t.clone())
}

fn render_dur_value(v: Option<&Value>) -> String {
    match v.and_then(Dur::from_value) {
        Some(d) => d.to_string(),
        None => String::new(),
    }
}

fn render_time_value(v: Option<&Value>) -> String {
    v.and_then(Value::as_time).map(|t| fmt_rat(&t)).unwrap_or_default()
}

fn consume_head(p: &mut Process) {
    while let Some(top) = p.stack.last_mut() {
        match top {
            Cont::Seq { block, idx } if *idx < block.len() => {
                *idx += 1;
                return;
            }
            Cont::Seq { .. } => {
                p.stack.pop();
            }
            _ => {
                p.stack.pop();
                return;
            }
        }
    }
}

impl Engine {
    /// Bootstrap the configuration: a main object running the main block.
    pub fn new(program: Arc<Program>, options: EngineOptions) -> Result<Engine, EngineError> {
        let mut e = Engine {
            rng: ChaCha8Rng::seed_from_u64(options.seed),
            program,
            cn: Configuration::empty(),
            options,
            trace: Vec::new(),
            steps: 0,
            ticks: 0,
        };
        if let Some(main) = e.program.ast.main.clone() {
            let path: Arc<str> = Arc::from(MAIN_PATH);
            let fut = e.fresh_future(path.clone());
            let mut attrs = Substitution::new();
            attrs.bind("this", Value::Object(0));
            let mut locals = Substitution::new();
            locals.bind("method", Value::str("main"));
            locals.bind("arrival", time_value(&e.cn.clock));
            locals.bind("cost", Dur::zero().to_value());
            locals.bind("deadline", Dur::Infinite.to_value());
            locals.bind("start", time_value(&e.cn.clock));
            locals.bind("finish", time_value(&BigRational::zero()));
            locals.bind("critical", Value::Bool(false));
            locals.bind("value", Value::int(0));
            locals.bind("destiny", Value::Future(fut));
            for (name, ty, _) in declared_locals(&main) {
                locals.bind(name, default_value(&ty));
            }
            let mut p = Process {
                locals,
                stack: vec![Cont::Seq {
                    block: main,
                    idx: 0,
                }],
                initial_deadline: Dur::Infinite,
                started: true,
                path: path.clone(),
                spawned: 0,
                label: None,
            };
            e.cn.objects.push(Object {
                id: 0,
                class: Arc::from(MAIN_CLASS),
                policy: crate::syntax::ast::Expr::call(
                    "default",
                    vec![crate::syntax::ast::Expr::var("queue")],
                ),
                attrs,
                active: None,
                queue: Vec::new(),
                path,
            });
            e.normalize(0, &mut p).map_err(|k| e.err_at(0, Some(&p), k))?;
            e.cn.objects[0].active = Some(p);
        }
        Ok(e)
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    fn evaluator(&self) -> Evaluator<'_> {
        Evaluator::new(&self.program.funcs, &self.cn.clock, &self.cn)
    }

    fn fresh_future(&mut self, path: Arc<str>) -> u64 {
        let id = self.cn.futures.len() as u64;
        self.cn.futures.push(FutureCell {
            id,
            value: None,
            path,
        });
        id
    }

    fn err_at(&self, obj: usize, p: Option<&Process>, kind: impl Into<ErrorKind>) -> EngineError {
        let o = &self.cn.objects[obj];
        EngineError {
            kind: kind.into(),
            object: Some(o.id),
            class: Some(o.class.to_string()),
            pid: p.map(Process::pid),
            method: p.map(Process::method),
            statement: p.map(Process::render_head),
        }
    }

    fn emit(
        &mut self,
        kind: EventKind,
        object: Option<u64>,
        p: Option<&Process>,
        data: Vec<(String, String)>,
    ) {
        if !self.options.record_trace {
            return;
        }
        if p.is_some_and(|p| &*p.path == MAIN_PATH) {
            return;
        }
        self.trace.push(TraceEvent {
            time: self.cn.clock.clone(),
            kind,
            object,
            pid: p.map(Process::pid),
            method: p.map(Process::method),
            data,
        });
    }

    fn kv(k: &str, v: impl Into<String>) -> (String, String) {
        (k.to_string(), v.into())
    }

    fn process_data(p: &Process, keys: &[&str]) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for &k in keys {
            let v = match k {
                "arrival" | "start" | "finish" => render_time_value(p.local(k)),
                "cost" | "deadline" => render_dur_value(p.local(k)),
                "d0" => p.initial_deadline.to_string(),
                "critical" => p.local("critical").map(|v| v.to_string()).unwrap_or_default(),
                "label" => match &p.label {
                    Some(l) => l.to_string(),
                    None => continue,
                },
                _ => continue,
            };
            out.push(Self::kv(k, v));
        }
        out
    }

    fn sample(&mut self, d1: Dur, d2: Dur) -> Result<Dur, ErrorKind> {
        if d2 < d1 {
            return Err(ErrorKind::DurationBounds(d1.to_string(), d2.to_string()));
        }
        Ok(match self.options.duration_policy {
            DurationPolicy::Worst => d2,
            DurationPolicy::Best => d1,
            DurationPolicy::Uniform => match (&d1, &d2) {
                (Dur::Finite(a), Dur::Finite(b)) => {
                    let k: i64 = self.rng.gen_range(0..=1000);
                    let frac = BigRational::new(BigInt::from(k), BigInt::from(1000));
                    Dur::Finite(a + (b - a) * frac)
                }
                _ => d1,
            },
        })
    }

    fn instantiate(&mut self, g: &Guard, scope: &dyn Scope) -> Result<RtGuard, ErrorKind> {
        Ok(match g {
            Guard::Expr(e) => RtGuard::Expr(e.clone()),
            Guard::Future(x, _) => RtGuard::Future(x.clone()),
            Guard::Duration(b, w) => {
                let (b, w) = {
                    let ev = self.evaluator();
                    (ev.eval_dur(b, scope)?, ev.eval_dur(w, scope)?)
                };
                let d = self.sample(b, w)?;
                RtGuard::Duration(d.clone(), d)
            }
            Guard::And(a, b) => RtGuard::And(
                Box::new(self.instantiate(a, scope)?),
                Box::new(self.instantiate(b, scope)?),
            ),
        })
    }

    /// Drop exhausted blocks and fix the bounds of a leading `await`.
    fn normalize(&mut self, obj: usize, p: &mut Process) -> Result<(), ErrorKind> {
        while matches!(p.stack.last(), Some(Cont::Seq { block, idx }) if *idx >= block.len()) {
            p.stack.pop();
        }
        let guard = match p.stack.last() {
            Some(Cont::Seq { block, idx }) => match &block[*idx].kind {
                StmtKind::Await(g) => Some(g.clone()),
                _ => None,
            },
            _ => None,
        };
        if let Some(g) = guard {
            let attrs = self.cn.objects[obj].attrs.clone();
            let scope = Layered {
                outer: &attrs,
                inner: &p.locals,
            };
            let rt = self.instantiate(&g, &scope)?;
            consume_head(p);
            p.stack.push(Cont::Await(rt));
        }
        Ok(())
    }

    fn eval(&self, obj: usize, p: &Process, e: &Expr) -> Result<Value, EvalError> {
        let scope = Layered {
            outer: &self.cn.objects[obj].attrs,
            inner: &p.locals,
        };
        self.evaluator().eval(e, &scope)
    }

    fn assign(&mut self, obj: usize, p: &mut Process, x: &str, v: Value) {
        if p.locals.contains(x) {
            p.locals.set(x, v);
        } else {
            self.cn.objects[obj].attrs.set(x, v);
        }
    }

    /// Is `p` ready to run if scheduled on object `obj`?
    fn is_ready(&self, obj: usize, p: &Process) -> Result<bool, EvalError> {
        let scope = Layered {
            outer: &self.cn.objects[obj].attrs,
            inner: &p.locals,
        };
        let ev = self.evaluator();
        Ok(match p.head() {
            Head::Await(g) => eval_rt_guard(g, &scope, &ev)?,
            Head::Duration2(b, _) => match b {
                Dur::Finite(r) => !r.is_positive(),
                Dur::Infinite => false,
            },
            Head::Stmt(s) => match (&s.kind, s.kind.rhs()) {
                (StmtKind::Await(g), _) => ev.eval_guard(g, &scope)?,
                (_, Some((Rhs::Get(e), _))) => match ev.eval(e, &scope)? {
                    Value::Future(f) => self.cn.future_value(f).is_some(),
                    _ => true,
                },
                _ => true,
            },
            _ => true,
        })
    }

    /// Indices of ready processes in the queue of object `obj`.
    pub fn ready_set(&self, obj: usize) -> Result<Vec<usize>, EngineError> {
        let o = &self.cn.objects[obj];
        let mut out = Vec::new();
        for (i, p) in o.queue.iter().enumerate() {
            if self.is_ready(obj, p).map_err(|e| self.err_at(obj, Some(p), e))? {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// `bind`: the process for an invocation message.
    pub fn bind(&mut self, msg: &Message) -> Result<Process, EngineError> {
        let obj = msg.callee as usize;
        let class = self.cn.objects[obj].class.clone();
        let program = self.program.clone();
        let md = program
            .class(&class)
            .and_then(|c| c.method(&msg.method))
            .filter(|m| m.sig.params.len() == msg.args.len())
            .ok_or_else(|| {
                self.err_at(
                    obj,
                    None,
                    ErrorKind::UnknownMethod {
                        class: class.to_string(),
                        method: msg.method.clone(),
                        arity: msg.args.len(),
                    },
                )
            })?;
        let formals: Substitution = md
            .sig
            .params
            .iter()
            .map(|p| p.name.clone())
            .zip(msg.args.iter().cloned())
            .collect();
        let cost = match &md.annotations.cost {
            Some(c) => {
                let ev = self.evaluator();
                ev.eval_dur(c, &formals).map_err(|e| self.err_at(obj, None, e))?
            }
            None => Dur::zero(),
        };
        let mut locals = Substitution::new();
        locals.bind("method", Value::str(&msg.method));
        locals.bind("arrival", time_value(&msg.time));
        locals.bind("cost", cost.to_value());
        locals.bind("deadline", msg.deadline.to_value());
        locals.bind("start", time_value(&BigRational::zero()));
        locals.bind("finish", time_value(&BigRational::zero()));
        locals.bind("critical", Value::Bool(msg.critical));
        locals.bind("value", Value::int(0));
        locals.bind("destiny", Value::Future(msg.future));
        let locals = locals.compose(formals);
        let mut locals = locals;
        for (name, ty, _) in declared_locals(&md.body) {
            locals.bind(name, default_value(&ty));
        }
        let label = msg.args.iter().find_map(|a| match a {
            Value::Str(s) => Some(s.clone()),
            _ => None,
        });
        let mut p = Process {
            locals,
            stack: vec![Cont::Seq {
                block: md.body.clone(),
                idx: 0,
            }],
            initial_deadline: msg.deadline.clone(),
            started: false,
            path: self.cn.futures[msg.future as usize].path.clone(),
            spawned: 0,
            label,
        };
        self.normalize(obj, &mut p)
            .map_err(|k| self.err_at(obj, Some(&p), k))?;
        Ok(p)
    }

    fn activate(&mut self, msg: Message) -> Result<(), EngineError> {
        let obj = msg.callee as usize;
        let p = self.bind(&msg)?;
        let data = Self::process_data(&p, &["arrival", "cost", "deadline", "critical", "label"]);
        self.emit(EventKind::Activate, Some(msg.callee), Some(&p), data);
        self.cn.objects[obj].queue.push(p);
        Ok(())
    }

    /// Apply one instantaneous rule, or report quiescence with `None`.
    pub fn exec_step(&mut self) -> Result<Option<Rule>, EngineError> {
        for obj in 0..self.cn.objects.len() {
            if let Some(rule) = self.step_object(obj)? {
                self.steps += 1;
                return Ok(Some(rule));
            }
        }
        Ok(None)
    }

    fn step_object(&mut self, obj: usize) -> Result<Option<Rule>, EngineError> {
        let oid = self.cn.objects[obj].id;
        if let Some(k) = self.cn.messages.iter().position(|m| m.callee == oid) {
            let msg = self.cn.messages.remove(k);
            self.activate(msg)?;
            return Ok(Some(Rule::Activation));
        }
        match self.cn.objects[obj].active.take() {
            Some(mut p) => {
                let result = self.step_process(obj, &mut p);
                let (rule, fate) = match result {
                    Ok(r) => r,
                    Err(kind) => {
                        let err = self.err_at(obj, Some(&p), kind);
                        self.cn.objects[obj].active = Some(p);
                        self.emit(
                            EventKind::Error,
                            Some(oid),
                            None,
                            vec![Self::kv("message", err.to_string())],
                        );
                        return Err(err);
                    }
                };
                match fate {
                    Fate::Stay => {
                        if rule.is_some() {
                            if let Err(k) = self.normalize(obj, &mut p) {
                                let err = self.err_at(obj, Some(&p), k);
                                self.cn.objects[obj].active = Some(p);
                                return Err(err);
                            }
                        }
                        self.cn.objects[obj].active = Some(p);
                    }
                    Fate::Queue => {
                        self.emit(EventKind::Suspend, Some(oid), Some(&p), vec![]);
                        self.cn.objects[obj].queue.push(p);
                    }
                    Fate::Done => {}
                }
                Ok(rule)
            }
            None => self.schedule(obj),
        }
    }

    fn schedule(&mut self, obj: usize) -> Result<Option<Rule>, EngineError> {
        let ready = self.ready_set(obj)?;
        if ready.is_empty() {
            return Ok(None);
        }
        let o = &self.cn.objects[obj];
        let lifted: Vec<Value> = ready.iter().map(|&i| o.queue[i].lift()).collect();
        let pid = {
            let ev = self.evaluator();
            evaluate_policy(&ev, &o.policy, &lifted, &o.attrs)
        };
        let pid = match pid {
            Ok(pid) => pid,
            Err(e) => {
                let err = self.err_at(obj, None, e);
                self.emit(
                    EventKind::Error,
                    Some(o.id),
                    None,
                    vec![Self::kv("message", err.to_string())],
                );
                return Err(err);
            }
        };
        let pos = ready
            .iter()
            .copied()
            .find(|&i| o.queue[i].locals.get("destiny") == Some(&pid))
            .expect("policy result is a ready pid");
        let oid = o.id;
        let mut p = self.cn.objects[obj].queue.remove(pos);
        if !p.started {
            p.started = true;
            p.locals.set("start", time_value(&self.cn.clock));
        }
        let data = Self::process_data(&p, &["deadline", "d0", "arrival", "start"]);
        self.emit(EventKind::Schedule, Some(oid), Some(&p), data);
        self.cn.objects[obj].active = Some(p);
        Ok(Some(Rule::Schedule))
    }

    fn do_return(&mut self, obj: usize, p: &mut Process, v: Value) -> (Option<Rule>, Fate) {
        p.locals.set("finish", time_value(&self.cn.clock));
        let f = p.pid();
        self.cn.futures[f as usize].value = Some(v.clone());
        let oid = self.cn.objects[obj].id;
        let mut data = vec![Self::kv("value", v.to_string())];
        data.extend(Self::process_data(
            p,
            &["deadline", "d0", "arrival", "cost", "start", "finish", "critical", "label"],
        ));
        self.emit(EventKind::Return, Some(oid), Some(p), data);
        if let Dur::Finite(r) = p.deadline() {
            if r.is_negative() {
                let late = vec![Self::kv("lateness", fmt_rat(&-r))];
                self.emit(EventKind::DeadlineMiss, Some(oid), Some(p), late);
            }
        }
        self.emit(
            EventKind::Resolve,
            Some(oid),
            Some(p),
            vec![Self::kv("value", v.to_string())],
        );
        (Some(Rule::Return), Fate::Done)
    }

    fn step_process(
        &mut self,
        obj: usize,
        p: &mut Process,
    ) -> Result<(Option<Rule>, Fate), ErrorKind> {
        let stmt = match p.head() {
            Head::End => return Ok(self.do_return(obj, p, Value::unit())),
            Head::Suspend => {
                consume_head(p);
                return Ok((Some(Rule::Suspend), Fate::Queue));
            }
            Head::Set(x, v) => {
                let (x, v) = (x.clone(), v.clone());
                consume_head(p);
                if let Some(x) = x {
                    self.assign(obj, p, &x, v);
                }
                return Ok((Some(Rule::Assign), Fate::Stay));
            }
            Head::Duration2(b, _) => {
                let done = match b {
                    Dur::Finite(r) => !r.is_positive(),
                    Dur::Infinite => false,
                };
                if !done {
                    return Ok((None, Fate::Stay));
                }
                consume_head(p);
                return Ok((Some(Rule::Duration2), Fate::Stay));
            }
            Head::Await(g) => {
                let g = g.clone();
                let holds = {
                    let scope = Layered {
                        outer: &self.cn.objects[obj].attrs,
                        inner: &p.locals,
                    };
                    eval_rt_guard(&g, &scope, &self.evaluator())?
                };
                if holds {
                    consume_head(p);
                    return Ok((Some(Rule::Await1), Fate::Stay));
                }
                p.stack.push(Cont::Suspend);
                return Ok((Some(Rule::Await2), Fate::Stay));
            }
            Head::Stmt(s) => s.clone(),
        };
        match &stmt.kind {
            StmtKind::Skip => {
                consume_head(p);
                Ok((Some(Rule::Skip), Fate::Stay))
            }
            StmtKind::Suspend => {
                consume_head(p);
                Ok((Some(Rule::Suspend), Fate::Queue))
            }
            StmtKind::Return(e) => {
                let v = self.eval(obj, p, e)?;
                Ok(self.do_return(obj, p, v))
            }
            StmtKind::Await(g) => {
                // normally fixed by `normalize`; kept total for safety
                let attrs = self.cn.objects[obj].attrs.clone();
                let scope = Layered {
                    outer: &attrs,
                    inner: &p.locals,
                };
                let rt = self.instantiate(g, &scope)?;
                consume_head(p);
                p.stack.push(Cont::Await(rt));
                Ok((Some(Rule::Skip), Fate::Stay))
            }
            StmtKind::Duration(e1, e2) => {
                let (d1, d2) = {
                    let scope = Layered {
                        outer: &self.cn.objects[obj].attrs,
                        inner: &p.locals,
                    };
                    let ev = self.evaluator();
                    (ev.eval_dur(e1, &scope)?, ev.eval_dur(e2, &scope)?)
                };
                let d = self.sample(d1, d2)?;
                consume_head(p);
                p.stack.push(Cont::Duration2(d.clone(), d));
                Ok((Some(Rule::Duration1), Fate::Stay))
            }
            StmtKind::If(c, t, e) => {
                let cond = self.eval_bool(obj, p, c)?;
                consume_head(p);
                let branch = if cond { Some(t.clone()) } else { e.clone() };
                if let Some(b) = branch {
                    p.stack.push(Cont::Seq { block: b, idx: 0 });
                }
                Ok((Some(Rule::Cond), Fate::Stay))
            }
            StmtKind::While(c, b) => {
                if self.eval_bool(obj, p, c)? {
                    p.stack.push(Cont::Seq {
                        block: b.clone(),
                        idx: 0,
                    });
                } else {
                    consume_head(p);
                }
                Ok((Some(Rule::While), Fate::Stay))
            }
            StmtKind::Decl {
                ty, name, init: None, ..
            } => {
                consume_head(p);
                p.locals.set(name, default_value(ty));
                Ok((Some(Rule::Assign), Fate::Stay))
            }
            StmtKind::AwaitCall { .. } => Err(ErrorKind::NotDesugared),
            kind => {
                let (rhs, ann) = kind.rhs().expect("assignment-like statement");
                let target = kind.target().map(str::to_string);
                self.step_rhs(obj, p, target, rhs, ann)
            }
        }
    }

    fn eval_bool(&self, obj: usize, p: &Process, e: &Expr) -> Result<bool, EvalError> {
        let v = self.eval(obj, p, e)?;
        v.as_bool().ok_or_else(|| EvalError::Expected {
            expected: "Bool",
            found: v.to_string(),
        })
    }

    fn step_rhs(
        &mut self,
        obj: usize,
        p: &mut Process,
        target: Option<String>,
        rhs: &Rhs,
        ann: &AnnotationSet,
    ) -> Result<(Option<Rule>, Fate), ErrorKind> {
        match rhs {
            Rhs::Expr(e) => {
                let v = self.eval(obj, p, e)?;
                consume_head(p);
                if let Some(x) = target {
                    self.assign(obj, p, &x, v);
                }
                Ok((Some(Rule::Assign), Fate::Stay))
            }
            Rhs::Get(e) => {
                let f = match self.eval(obj, p, e)? {
                    Value::Future(f) => f,
                    v => return Err(ErrorKind::NotAFuture(v.to_string())),
                };
                let Some(v) = self.cn.future_value(f).cloned() else {
                    return Ok((None, Fate::Stay));
                };
                consume_head(p);
                if target.is_some() {
                    p.stack.push(Cont::Set(target, v));
                }
                Ok((Some(Rule::ReadFut), Fate::Stay))
            }
            Rhs::AsyncCall(callee, m, args) => {
                let (callee, args, deadline, critical) = {
                    let scope = Layered {
                        outer: &self.cn.objects[obj].attrs,
                        inner: &p.locals,
                    };
                    let ev = self.evaluator();
                    let callee = ev.eval(callee, &scope)?;
                    let args = args
                        .iter()
                        .map(|a| ev.eval(a, &scope))
                        .collect::<Result<Vec<_>, _>>()?;
                    let deadline = match &ann.deadline {
                        Some(d) => ev.eval_dur(d, &scope)?,
                        None => Dur::Infinite,
                    };
                    let critical = match &ann.critical {
                        Some(c) => ev.eval_bool(c, &scope)?,
                        None => false,
                    };
                    (callee, args, deadline, critical)
                };
                let Value::Object(callee) = callee else {
                    return Err(ErrorKind::NotAnObject(callee.to_string()));
                };
                let path: Arc<str> = Arc::from(format!("{}.c{}", p.path, p.spawned));
                p.spawned += 1;
                let f = self.fresh_future(path);
                let oid = self.cn.objects[obj].id;
                if self.options.record_trace {
                    let data = vec![
                        Self::kv("callee", callee.to_string()),
                        Self::kv("deadline", deadline.to_string()),
                        Self::kv("critical", Value::Bool(critical).to_string()),
                    ];
                    self.trace.push(TraceEvent {
                        time: self.cn.clock.clone(),
                        kind: EventKind::Invoke,
                        object: Some(oid),
                        pid: Some(f),
                        method: Some(m.clone()),
                        data,
                    });
                }
                self.cn.messages.push(Message {
                    method: m.clone(),
                    callee,
                    args,
                    future: f,
                    deadline,
                    critical,
                    time: self.cn.clock.clone(),
                });
                consume_head(p);
                if target.is_some() {
                    p.stack.push(Cont::Set(target, Value::Future(f)));
                }
                Ok((Some(Rule::AsyncCall), Fate::Stay))
            }
            Rhs::New(cname, args) => {
                let args = args
                    .iter()
                    .map(|a| self.eval(obj, p, a))
                    .collect::<Result<Vec<_>, _>>()?;
                let path: Arc<str> = Arc::from(format!("{}.n{}", p.path, p.spawned));
                p.spawned += 1;
                let policy = ann.scheduler.clone();
                let o = self.new_object(cname, args, policy, path, self.cn.objects[obj].id)?;
                consume_head(p);
                if target.is_some() {
                    p.stack.push(Cont::Set(target, Value::Object(o)));
                }
                Ok((Some(Rule::NewObject), Fate::Stay))
            }
            Rhs::SyncCall(..) => Err(ErrorKind::NotDesugared),
        }
    }

    fn new_object(
        &mut self,
        cname: &str,
        args: Vec<Value>,
        policy: Option<Expr>,
        path: Arc<str>,
        creator: u64,
    ) -> Result<u64, ErrorKind> {
        let program = self.program.clone();
        let class = program
            .class(cname)
            .ok_or_else(|| ErrorKind::UnknownClass(cname.to_string()))?;
        let id = self.cn.objects.len() as u64;
        let mut attrs = Substitution::new();
        attrs.bind("this", Value::Object(id));
        for (p, v) in class.params.iter().zip(args) {
            attrs.bind(p.name.clone(), v);
        }
        for f in &class.fields {
            let v = match &f.init {
                Some(e) => self.evaluator().eval(e, &attrs)?,
                None => default_value(&f.ty),
            };
            attrs.bind(f.name.clone(), v);
        }
        let policy = policy
            .or_else(|| class.annotations.scheduler.clone())
            .unwrap_or_else(crate::syntax::default_scheduler);
        self.cn.objects.push(Object {
            id,
            class: Arc::from(cname),
            policy,
            attrs,
            active: None,
            queue: Vec::new(),
            path: path.clone(),
        });
        self.emit(
            EventKind::NewObject,
            Some(id),
            None,
            vec![Self::kv("class", cname), Self::kv("creator", creator.to_string())],
        );
        let idx = id as usize;
        let now = self.cn.clock.clone();
        let has = |m: &str| class.method(m).is_some_and(|md| md.sig.params.is_empty());
        if has("init") {
            let f = self.fresh_future(Arc::from(format!("{path}.i")));
            let msg = Message {
                method: "init".into(),
                callee: id,
                args: vec![],
                future: f,
                deadline: Dur::Infinite,
                critical: false,
                time: now.clone(),
            };
            let mut p = self.bind(&msg).map_err(|e| e.kind)?;
            p.started = true;
            p.locals.set("start", time_value(&now));
            let data = Self::process_data(&p, &["arrival", "cost", "deadline", "critical"]);
            self.emit(EventKind::Activate, Some(id), Some(&p), data);
            self.cn.objects[idx].active = Some(p);
        }
        if has("run") {
            let f = self.fresh_future(Arc::from(format!("{path}.r")));
            self.cn.messages.push(Message {
                method: "run".into(),
                callee: id,
                args: vec![],
                future: f,
                deadline: Dur::Infinite,
                critical: false,
                time: now,
            });
        }
        Ok(id)
    }

    /// Maximal time elapse of the current configuration.
    pub fn mte(&self) -> Result<Dur, EngineError> {
        mte_config(&self.cn, &self.program.funcs).map_err(|e| EngineError::global(e.into()))
    }

    /// Advance time by `d` (0 < d <= mte).
    pub fn tick(&mut self, d: &BigRational) {
        adv_config(&mut self.cn, d);
        self.ticks += 1;
        if self.options.record_trace {
            self.trace.push(TraceEvent {
                time: self.cn.clock.clone(),
                kind: EventKind::Tick,
                object: None,
                pid: None,
                method: None,
                data: vec![Self::kv("delta", fmt_rat(d))],
            });
        }
    }

    /// Apply instantaneous steps until none applies.
    pub fn quiesce(&mut self) -> Result<u64, EngineError> {
        let mut n = 0;
        while self.exec_step()?.is_some() {
            n += 1;
            if n > self.options.max_steps_per_instant {
                return Err(EngineError::global(ErrorKind::StepLimit(
                    self.options.max_steps_per_instant,
                )));
            }
        }
        Ok(n)
    }

    /// Run with maximal progress until termination, deadlock or the point
    /// where the next clock advance would pass `limit`.
    pub fn run_until(&mut self, limit: &BigRational) -> Result<RunReport, EngineError> {
        let stop = loop {
            self.quiesce()?;
            if !self.cn.has_pending_work() {
                break Stop::Terminated;
            }
            if &self.cn.clock >= limit {
                break Stop::TimeLimit;
            }
            match self.mte()? {
                Dur::Infinite => break Stop::Deadlock(self.blocked_report()),
                Dur::Finite(d) if !d.is_positive() => {
                    return Err(EngineError::global(ErrorKind::Stuck));
                }
                Dur::Finite(d) => {
                    if &(&self.cn.clock + &d) > limit {
                        break Stop::TimeLimit;
                    }
                    self.tick(&d);
                }
            }
        };
        Ok(RunReport {
            stop,
            clock: self.cn.clock.clone(),
            steps: self.steps,
            ticks: self.ticks,
        })
    }

    /// One line per object that still has work.
    pub fn blocked_report(&self) -> Vec<String> {
        let mut out = Vec::new();
        for o in &self.cn.objects {
            let mut parts = Vec::new();
            if let Some(p) = &o.active {
                parts.push(format!(
                    "active process {} ({}) blocked at `{}`",
                    p.pid(),
                    p.method(),
                    p.render_head().trim()
                ));
            }
            for p in &o.queue {
                parts.push(format!(
                    "queued process {} ({}) waiting at `{}`",
                    p.pid(),
                    p.method(),
                    p.render_head().trim()
                ));
            }
            if !parts.is_empty() {
                out.push(format!("object {} ({}): {}", o.id, o.class, parts.join("; ")));
            }
        }
        out
    }
}
