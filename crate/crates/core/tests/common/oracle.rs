//! Tiny random programs and an exhaustive reference executor for them.
//!
//! The executor works directly on the generated program structure and
//! follows the transition rules nondeterministically: any object may step,
//! any pending message may be activated, schedulers pick any process that
//! is optimal for their key, and time advances by any amount up to the
//! maximal time elapse. Duration intervals are resolved to either bound.
//! It is driven by the engine's trace: only transitions whose labels match
//! the next recorded event survive, while unlabeled steps are closed over.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtabs_core::engine::{Configuration, DurationPolicy, Engine, EngineOptions, Process};
use rtabs_core::func::{parse_rat, Dur};
use rtabs_core::load_program;
use rtabs_core::metrics::{EventKind, TraceEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Policy {
    Default,
    Fifo,
    Edf,
    Sjf,
}

#[derive(Clone, Debug)]
pub enum MStmt {
    Skip,
    Duration(i64, i64),
    AwaitDuration(i64, i64),
}

#[derive(Clone, Debug)]
pub struct Method {
    pub cost: Option<i64>,
    pub body: Vec<MStmt>,
    pub ret: i64,
}

#[derive(Clone, Debug)]
pub struct Class {
    pub policy: Policy,
    pub methods: Vec<Method>,
}

#[derive(Clone, Copy, Debug)]
pub enum Sync {
    Nothing,
    Await,
    Get,
}

#[derive(Clone, Debug)]
pub struct Call {
    /// Object id; objects are numbered from 1 in creation order.
    pub obj: usize,
    pub method: usize,
    pub arg: i64,
    pub deadline: Option<i64>,
    pub pause: Option<(i64, i64)>,
    pub sync: Sync,
}

#[derive(Clone, Debug)]
pub struct TinyProgram {
    pub classes: Vec<Class>,
    pub calls: Vec<Call>,
}

pub const MAX_OBJECTS: usize = 2;
pub const MAX_CALLS: usize = 3;
pub const MAX_STEPS: usize = 12;

fn bounds(rng: &mut ChaCha8Rng) -> (i64, i64) {
    let b = rng.gen_range(0..=3);
    (b, b + rng.gen_range(0..=3))
}

fn gen_once(rng: &mut ChaCha8Rng) -> TinyProgram {
    let policies = [Policy::Default, Policy::Fifo, Policy::Edf, Policy::Sjf];
    let n = rng.gen_range(1..=MAX_OBJECTS);
    let mut classes = Vec::new();
    for _ in 0..n {
        let policy = policies[rng.gen_range(0..policies.len())];
        let mut methods = Vec::new();
        for _ in 0..2 {
            let cost = if rng.gen_bool(0.5) { Some(rng.gen_range(0..=4)) } else { None };
            let mut body = Vec::new();
            for _ in 0..rng.gen_range(0..=2) {
                body.push(match rng.gen_range(0..3) {
                    0 => MStmt::Skip,
                    1 => {
                        let (b, w) = bounds(rng);
                        MStmt::Duration(b, w)
                    }
                    _ => {
                        let (b, w) = bounds(rng);
                        MStmt::AwaitDuration(b, w)
                    }
                });
            }
            methods.push(Method {
                cost,
                body,
                ret: rng.gen_range(0..=5),
            });
        }
        classes.push(Class { policy, methods });
    }
    let mut calls = Vec::new();
    for _ in 0..rng.gen_range(1..=MAX_CALLS) {
        let deadline = if rng.gen_bool(0.6) { Some(rng.gen_range(1..=8)) } else { None };
        let pause = if rng.gen_bool(0.3) { Some(bounds(rng)) } else { None };
        calls.push(Call {
            obj: rng.gen_range(1..=n),
            method: rng.gen_range(0..2),
            arg: rng.gen_range(0..=5),
            deadline,
            pause,
            sync: [Sync::Nothing, Sync::Await, Sync::Get][rng.gen_range(0..3)],
        });
    }
    TinyProgram { classes, calls }
}

/// A program with at most [`MAX_STEPS`] executed statements.
pub fn generate(seed: u64) -> TinyProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let p = gen_once(&mut rng);
        if p.steps() <= MAX_STEPS {
            return p;
        }
    }
}

fn mark(method: usize, pos: usize) -> i64 {
    (method * 2 + pos + 1) as i64
}

impl TinyProgram {
    /// Statements executed by a complete run, bookkeeping marks excluded.
    pub fn steps(&self) -> usize {
        let main: usize = self.classes.len()
            + self
                .calls
                .iter()
                .map(|c| 1 + c.pause.is_some() as usize + !matches!(c.sync, Sync::Nothing) as usize)
                .sum::<usize>();
        let bodies: usize = self
            .calls
            .iter()
            .map(|c| self.classes[c.obj - 1].methods[c.method].body.len() + 1)
            .sum();
        main + bodies
    }

    pub fn source(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.classes.iter().enumerate() {
            let n = i + 1;
            s += &format!("interface I{n} {{ Int m0(Int a); Int m1(Int a); }}\n");
            match c.policy {
                Policy::Default => {}
                Policy::Fifo => s += "[Scheduler: fifo(queue)]\n",
                Policy::Edf => s += "[Scheduler: edf(queue)]\n",
                Policy::Sjf => s += "[Scheduler: sjf(queue)]\n",
            }
            s += &format!("class C{n} implements I{n} {{\n  Int log = 0;\n");
            for (j, m) in c.methods.iter().enumerate() {
                if let Some(cost) = m.cost {
                    s += &format!("  [Cost: Duration({cost})]\n");
                }
                s += &format!("  Int m{j}(Int a) {{\n");
                for (k, st) in m.body.iter().enumerate() {
                    s += &match st {
                        MStmt::Skip => "    skip;\n".to_string(),
                        MStmt::Duration(b, w) => format!("    duration({b}, {w});\n"),
                        MStmt::AwaitDuration(b, w) => format!("    await duration({b}, {w});\n"),
                    };
                    s += &format!("    log = log * 10 + {};\n", mark(j, k));
                }
                s += &format!("    return a + {};\n  }}\n", m.ret);
            }
            s += "}\n";
        }
        s += "{\n";
        for i in 1..=self.classes.len() {
            s += &format!("  I{i} o{i} = new C{i}();\n");
        }
        for (i, c) in self.calls.iter().enumerate() {
            let f = i + 1;
            if let Some(d) = c.deadline {
                s += &format!("  [Deadline: Duration({d})]\n");
            }
            s += &format!("  Fut<Int> f{f} = o{}!m{}({});\n", c.obj, c.method, c.arg);
            if let Some((b, w)) = c.pause {
                s += &format!("  await duration({b}, {w});\n");
            }
        }
        for (i, c) in self.calls.iter().enumerate() {
            let f = i + 1;
            match c.sync {
                Sync::Nothing => {}
                Sync::Await => s += &format!("  await f{f}?;\n"),
                Sync::Get => s += &format!("  Int g{f} = f{f}.get;\n"),
            }
        }
        s += "}\n";
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Code {
    Skip,
    Duration(i64, i64),
    Duration2(i64, i64),
    /// An await on a duration whose bounds are not yet fixed.
    AwaitRaw(i64, i64),
    AwaitDur(i64, i64),
    Mark(i64),
    Return(i64),
    New(usize),
    Call(usize),
    AwaitFut(u64),
    Get(u64),
    Suspend,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Proc {
    pid: u64,
    method: Option<String>,
    code: VecDeque<Code>,
    deadline: Option<i64>,
    arrival: i64,
    cost: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Obj {
    class: Option<usize>,
    log: i64,
    active: Option<Proc>,
    queue: Vec<Proc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Msg {
    fut: u64,
    callee: usize,
    method: usize,
    arg: i64,
    deadline: Option<i64>,
    time: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Label {
    time: i64,
    kind: EventKind,
    object: Option<u64>,
    pid: Option<u64>,
    method: Option<String>,
    data: Vec<(&'static str, String)>,
}

impl Label {
    fn of(time: i64, kind: EventKind, object: usize, p: Option<(u64, &str)>) -> Self {
        Label {
            time,
            kind,
            object: Some(object as u64),
            pid: p.map(|p| p.0),
            method: p.map(|p| p.1.to_string()),
            data: Vec::new(),
        }
    }

    fn with(mut self, key: &'static str, value: impl ToString) -> Self {
        self.data.push((key, value.to_string()));
        self
    }

    fn matches(&self, e: &TraceEvent) -> bool {
        int(&e.time) == Some(self.time)
            && e.kind == self.kind
            && e.object == self.object
            && e.pid == self.pid
            && e.method == self.method
            && self.data.iter().all(|(k, v)| e.get(k) == Some(v.as_str()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct State {
    clock: i64,
    objs: Vec<Obj>,
    msgs: Vec<Msg>,
    futs: BTreeMap<u64, Option<i64>>,
    next_fut: u64,
    pending: VecDeque<Label>,
}

fn active(n: &mut State, o: usize) -> &mut Proc {
    n.objs[o].active.as_mut().expect("object has an active process")
}

fn int(r: &BigRational) -> Option<i64> {
    r.is_integer().then(|| r.to_integer().to_i64()).flatten()
}

fn fmt_deadline(d: Option<i64>) -> String {
    d.map(|d| d.to_string()).unwrap_or_else(|| "inf".into())
}

fn dur_int(d: &Dur) -> Option<i64> {
    match d {
        Dur::Finite(r) => Some(int(r).expect("integral duration")),
        Dur::Infinite => None,
    }
}

/// Observable part of a configuration, comparable between both executors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Snapshot {
    clock: i64,
    objects: Vec<(i64, Option<(u64, Option<i64>)>, Vec<(u64, Option<i64>)>)>,
    futures: Vec<(u64, Option<String>)>,
    messages: Vec<u64>,
}

impl State {
    fn snapshot(&self) -> Snapshot {
        let proc = |p: &Proc| (p.pid, p.deadline);
        Snapshot {
            clock: self.clock,
            objects: self
                .objs
                .iter()
                .map(|o| {
                    let mut q: Vec<_> = o.queue.iter().map(proc).collect();
                    q.sort();
                    (o.log, o.active.as_ref().map(proc), q)
                })
                .collect(),
            futures: self
                .futs
                .iter()
                .map(|(k, v)| (*k, v.map(|v| v.to_string())))
                .collect(),
            messages: {
                let mut m: Vec<u64> = self.msgs.iter().map(|m| m.fut).collect();
                m.sort();
                m
            },
        }
    }

    fn resolved(&self, f: u64) -> bool {
        matches!(self.futs.get(&f), Some(Some(_)))
    }
}

pub fn engine_snapshot(cn: &Configuration) -> Snapshot {
    let proc = |p: &Process| (p.pid(), dur_int(&p.deadline()));
    Snapshot {
        clock: int(&cn.clock).expect("integral clock"),
        objects: cn
            .objects
            .iter()
            .map(|o| {
                let log = o
                    .attrs
                    .get("log")
                    .map(|v| v.to_string().parse().expect("integer log"))
                    .unwrap_or(0);
                let mut q: Vec<_> = o.queue.iter().map(proc).collect();
                q.sort();
                (log, o.active.as_ref().map(proc), q)
            })
            .collect(),
        futures: cn
            .futures
            .iter()
            .filter(|f| f.id != 0)
            .map(|f| (f.id, f.value.as_ref().map(|v| v.to_string())))
            .collect(),
        messages: {
            let mut m: Vec<u64> = cn.messages.iter().map(|m| m.future).collect();
            m.sort();
            m
        },
    }
}

pub struct Oracle<'a> {
    prog: &'a TinyProgram,
}

impl<'a> Oracle<'a> {
    pub fn new(prog: &'a TinyProgram) -> Self {
        Oracle { prog }
    }

    fn initial(&self) -> State {
        let mut code = VecDeque::new();
        for c in 0..self.prog.classes.len() {
            code.push_back(Code::New(c));
        }
        for (i, c) in self.prog.calls.iter().enumerate() {
            code.push_back(Code::Call(i));
            if let Some((b, w)) = c.pause {
                code.push_back(Code::AwaitRaw(b, w));
            }
        }
        for (i, c) in self.prog.calls.iter().enumerate() {
            let f = i as u64 + 1;
            match c.sync {
                Sync::Nothing => {}
                Sync::Await => code.push_back(Code::AwaitFut(f)),
                Sync::Get => code.push_back(Code::Get(f)),
            }
        }
        let main = Proc {
            pid: 0,
            method: None,
            code,
            deadline: None,
            arrival: 0,
            cost: 0,
        };
        State {
            clock: 0,
            objs: vec![Obj {
                class: None,
                log: 0,
                active: Some(main),
                queue: Vec::new(),
            }],
            msgs: Vec::new(),
            futs: BTreeMap::new(),
            next_fut: 1,
            pending: VecDeque::new(),
        }
    }

    fn bind(&self, m: &Msg, class: usize) -> Proc {
        let method = &self.prog.classes[class].methods[m.method];
        let mut code = VecDeque::new();
        for (k, st) in method.body.iter().enumerate() {
            code.push_back(match *st {
                MStmt::Skip => Code::Skip,
                MStmt::Duration(b, w) => Code::Duration(b, w),
                MStmt::AwaitDuration(b, w) => Code::AwaitRaw(b, w),
            });
            code.push_back(Code::Mark(mark(m.method, k)));
        }
        code.push_back(Code::Return(m.arg + method.ret));
        Proc {
            pid: m.fut,
            method: Some(format!("m{}", m.method)),
            code,
            deadline: m.deadline,
            arrival: m.time,
            cost: method.cost.unwrap_or(0),
        }
    }

    fn ready(s: &State, p: &Proc) -> bool {
        match p.code.front() {
            Some(Code::AwaitDur(b, _)) | Some(Code::Duration2(b, _)) => *b <= 0,
            Some(Code::AwaitFut(f)) | Some(Code::Get(f)) => s.resolved(*f),
            _ => true,
        }
    }

    /// Queue positions the object's policy may pick among `ready`.
    fn choices(policy: Policy, q: &[Proc], ready: Vec<usize>) -> Vec<usize> {
        let key = |p: &Proc| -> (bool, i64) {
            match policy {
                Policy::Default => (false, 0),
                Policy::Fifo => (false, p.arrival),
                Policy::Edf => match p.deadline {
                    Some(d) => (false, d),
                    None => (true, 0),
                },
                Policy::Sjf => (false, p.cost),
            }
        };
        let best = ready.iter().map(|&i| key(&q[i])).min().expect("nonempty");
        ready.into_iter().filter(|&i| key(&q[i]) == best).collect()
    }

    /// Fix the bounds of every leading duration await, in all combinations.
    fn normalize(s: State) -> Vec<State> {
        for o in 0..s.objs.len() {
            let obj = &s.objs[o];
            let slots = obj.active.iter().chain(obj.queue.iter()).enumerate();
            for (slot, p) in slots {
                if let Some(Code::AwaitRaw(b, w)) = p.code.front() {
                    let (b, w) = (*b, *w);
                    let mut out = Vec::new();
                    for v in if b == w { vec![b] } else { vec![b, w] } {
                        let mut n = s.clone();
                        let obj = &mut n.objs[o];
                        let p = match (&mut obj.active, slot) {
                            (Some(a), 0) => a,
                            (Some(_), k) => &mut obj.queue[k - 1],
                            (None, k) => &mut obj.queue[k],
                        };
                        p.code[0] = Code::AwaitDur(v, v);
                        out.extend(Self::normalize(n));
                    }
                    return out;
                }
            }
        }
        vec![s]
    }

    fn policy(&self, o: &Obj) -> Policy {
        o.class.map(|c| self.prog.classes[c].policy).unwrap_or(Policy::Default)
    }

    /// All instantaneous transitions, each with the events it emits.
    fn steps(&self, s: &State) -> Vec<(State, Vec<Label>)> {
        let mut out = Vec::new();
        for i in 0..s.msgs.len() {
            let mut n = s.clone();
            let m = n.msgs.remove(i);
            let class = n.objs[m.callee].class.expect("callee is a created object");
            let p = self.bind(&m, class);
            let label = Label::of(n.clock, EventKind::Activate, m.callee, Some((m.fut, p.method.as_deref().unwrap())))
                .with("arrival", m.time)
                .with("cost", p.cost)
                .with("deadline", fmt_deadline(m.deadline));
            n.objs[m.callee].queue.push(p);
            n.objs[m.callee].queue.sort_by_key(|p| p.pid);
            out.push((n, vec![label]));
        }
        for o in 0..s.objs.len() {
            match &s.objs[o].active {
                None => {
                    let q = &s.objs[o].queue;
                    let ready: Vec<usize> = (0..q.len()).filter(|&i| Self::ready(s, &q[i])).collect();
                    if ready.is_empty() {
                        continue;
                    }
                    for i in Self::choices(self.policy(&s.objs[o]), q, ready) {
                        let mut n = s.clone();
                        let p = n.objs[o].queue.remove(i);
                        let labels = match &p.method {
                            Some(m) => vec![Label::of(n.clock, EventKind::Schedule, o, Some((p.pid, m)))
                                .with("deadline", fmt_deadline(p.deadline))],
                            None => vec![],
                        };
                        n.objs[o].active = Some(p);
                        out.push((n, labels));
                    }
                }
                Some(p) => self.step_active(s, o, p, &mut out),
            }
        }
        out.into_iter()
            .flat_map(|(n, l)| Self::normalize(n).into_iter().map(move |n| (n, l.clone())))
            .collect()
    }

    fn step_active(&self, s: &State, o: usize, p: &Proc, out: &mut Vec<(State, Vec<Label>)>) {
        let mut n = s.clone();
        let Some(head) = p.code.front().cloned() else {
            // the main block ran to completion
            n.objs[o].active = None;
            out.push((n, vec![]));
            return;
        };
        let ident = p.method.as_deref().map(|m| (p.pid, m));
        match head {
            Code::Skip => {
                active(&mut n, o).code.pop_front();
                out.push((n, vec![]));
            }
            Code::Mark(k) => {
                n.objs[o].log = n.objs[o].log * 10 + k;
                active(&mut n, o).code.pop_front();
                out.push((n, vec![]));
            }
            Code::Duration(b, w) => {
                for v in if b == w { vec![b] } else { vec![b, w] } {
                    let mut n = s.clone();
                    active(&mut n, o).code[0] = Code::Duration2(v, v);
                    out.push((n, vec![]));
                }
            }
            Code::Duration2(b, _) => {
                if b <= 0 {
                    active(&mut n, o).code.pop_front();
                    out.push((n, vec![]));
                }
            }
            Code::AwaitDur(b, _) => {
                if b <= 0 {
                    active(&mut n, o).code.pop_front();
                } else {
                    active(&mut n, o).code.push_front(Code::Suspend);
                }
                out.push((n, vec![]));
            }
            Code::AwaitFut(f) => {
                if s.resolved(f) {
                    active(&mut n, o).code.pop_front();
                } else {
                    active(&mut n, o).code.push_front(Code::Suspend);
                }
                out.push((n, vec![]));
            }
            Code::Get(f) => {
                if s.resolved(f) {
                    active(&mut n, o).code.pop_front();
                    out.push((n, vec![]));
                }
            }
            Code::Suspend => {
                let mut p = n.objs[o].active.take().unwrap();
                p.code.pop_front();
                n.objs[o].queue.push(p);
                n.objs[o].queue.sort_by_key(|p| p.pid);
                let labels = match ident {
                    Some(id) => vec![Label::of(n.clock, EventKind::Suspend, o, Some(id))],
                    None => vec![],
                };
                out.push((n, labels));
            }
            Code::Return(v) => {
                let p = n.objs[o].active.take().unwrap();
                n.futs.insert(p.pid, Some(v));
                let id = ident.expect("only methods return");
                let mut labels = vec![Label::of(n.clock, EventKind::Return, o, Some(id))
                    .with("value", v)
                    .with("deadline", fmt_deadline(p.deadline))];
                if let Some(d) = p.deadline.filter(|d| *d < 0) {
                    labels.push(Label::of(n.clock, EventKind::DeadlineMiss, o, Some(id)).with("lateness", -d));
                }
                labels.push(Label::of(n.clock, EventKind::Resolve, o, Some(id)).with("value", v));
                out.push((n, labels));
            }
            Code::New(c) => {
                let id = n.objs.len();
                n.objs.push(Obj {
                    class: Some(c),
                    log: 0,
                    active: None,
                    queue: Vec::new(),
                });
                active(&mut n, o).code.pop_front();
                let mut l = Label::of(n.clock, EventKind::NewObject, id, None).with("class", format!("C{}", c + 1));
                l.pid = None;
                out.push((n, vec![l]));
            }
            Code::Call(i) => {
                let c = &self.prog.calls[i];
                let fut = n.next_fut;
                n.next_fut += 1;
                n.futs.insert(fut, None);
                n.msgs.push(Msg {
                    fut,
                    callee: c.obj,
                    method: c.method,
                    arg: c.arg,
                    deadline: c.deadline,
                    time: n.clock,
                });
                active(&mut n, o).code.pop_front();
                let method = format!("m{}", c.method);
                let l = Label::of(n.clock, EventKind::Invoke, o, Some((fut, &method)))
                    .with("callee", c.obj)
                    .with("deadline", fmt_deadline(c.deadline));
                out.push((n, vec![l]));
            }
            Code::AwaitRaw(..) => unreachable!("bounds are fixed when an await reaches the head"),
        }
    }

    fn mte_proc(s: &State, p: &Proc) -> Option<i64> {
        match p.code.front() {
            Some(Code::Duration2(_, w)) | Some(Code::AwaitDur(_, w)) => Some(*w),
            Some(Code::AwaitFut(f)) | Some(Code::Get(f)) => s.resolved(*f).then_some(0),
            _ => Some(0),
        }
    }

    /// Maximal time elapse; `None` is unbounded.
    fn mte(s: &State) -> Option<i64> {
        let min = |a: Option<i64>, b: Option<i64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, None) => x,
            (None, y) => y,
        };
        s.objs
            .iter()
            .map(|o| match &o.active {
                Some(p) => Self::mte_proc(s, p),
                None => o.queue.iter().map(|p| Self::mte_proc(s, p)).fold(None, min),
            })
            .fold(None, min)
    }

    fn tick(s: &State, d: i64) -> Option<State> {
        if d <= 0 || !s.pending.is_empty() || Self::mte(s).is_some_and(|m| d > m) {
            return None;
        }
        let mut n = s.clone();
        n.clock += d;
        for o in &mut n.objs {
            for p in o.active.iter_mut().chain(o.queue.iter_mut()) {
                p.deadline = p.deadline.map(|x| x - d);
                match p.code.front_mut() {
                    Some(Code::Duration2(b, w)) | Some(Code::AwaitDur(b, w)) => {
                        *b -= d;
                        *w -= d;
                    }
                    _ => {}
                }
            }
        }
        Some(n)
    }
}

/// The set of oracle states consistent with the events seen so far.
pub struct Explorer<'a> {
    oracle: Oracle<'a>,
    states: HashSet<State>,
    pub max_states: usize,
}

const STATE_CAP: usize = 200_000;

impl<'a> Explorer<'a> {
    pub fn new(prog: &'a TinyProgram) -> Result<Self, String> {
        let oracle = Oracle::new(prog);
        let init = oracle.initial();
        let mut ex = Explorer {
            oracle,
            states: HashSet::new(),
            max_states: 0,
        };
        ex.states = ex.closure(Oracle::normalize(init).into_iter().collect())?;
        Ok(ex)
    }

    fn closure(&mut self, start: HashSet<State>) -> Result<HashSet<State>, String> {
        let mut seen = start;
        let mut work: Vec<State> = seen.iter().cloned().collect();
        while let Some(s) = work.pop() {
            if !s.pending.is_empty() {
                continue;
            }
            for (n, labels) in self.oracle.steps(&s) {
                if labels.is_empty() && !seen.contains(&n) {
                    seen.insert(n.clone());
                    work.push(n);
                }
            }
            if seen.len() > STATE_CAP {
                return Err("oracle state space exceeded its cap".into());
            }
        }
        self.max_states = self.max_states.max(seen.len());
        Ok(seen)
    }

    /// Consume one engine event.
    pub fn advance(&mut self, e: &TraceEvent) -> Result<(), String> {
        let mut next = HashSet::new();
        for s in &self.states {
            if let Some(l) = s.pending.front() {
                if l.matches(e) {
                    let mut n = s.clone();
                    n.pending.pop_front();
                    next.insert(n);
                }
                continue;
            }
            if e.kind == EventKind::Tick {
                let d = e.get("delta").and_then(parse_rat).as_ref().and_then(int);
                if let Some(n) = d.and_then(|d| Oracle::tick(s, d)) {
                    if int(&e.time) == Some(n.clock) {
                        next.insert(n);
                    }
                }
                continue;
            }
            for (mut n, labels) in self.oracle.steps(s) {
                if let Some((first, rest)) = labels.split_first() {
                    if first.matches(e) {
                        n.pending = rest.iter().cloned().collect();
                        next.insert(n);
                    }
                }
            }
        }
        if next.is_empty() {
            return Err(format!("no oracle transition produces {e:?}"));
        }
        self.states = self.closure(next)?;
        Ok(())
    }

    /// Is `snap` one of the settled states currently reachable?
    pub fn admits(&self, snap: &Snapshot) -> bool {
        self.states
            .iter()
            .any(|s| s.pending.is_empty() && &s.snapshot() == snap)
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckStats {
    pub engine_steps: usize,
    pub events: usize,
    pub max_states: usize,
}

/// Run the engine step by step and require every intermediate configuration
/// to be reachable by the reference executor along the same events.
pub fn check_program(prog: &TinyProgram, policy: DurationPolicy) -> Result<CheckStats, String> {
    let src = prog.source();
    let program = load_program(&src).map_err(|d| format!("{d:?}\n{src}"))?;
    let options = EngineOptions {
        duration_policy: policy,
        ..EngineOptions::default()
    };
    let mut engine = Engine::new(Arc::new(program), options).map_err(|e| e.to_string())?;
    let mut ex = Explorer::new(prog)?;
    let mut stats = CheckStats::default();
    let mut consumed = 0;
    let limit = BigRational::from_integer(200.into());
    let sync = |engine: &Engine, ex: &mut Explorer, consumed: &mut usize| -> Result<(), String> {
        for e in &engine.trace[*consumed..] {
            ex.advance(e).map_err(|m| format!("{m}\n{src}"))?;
        }
        *consumed = engine.trace.len();
        let snap = engine_snapshot(&engine.cn);
        if !ex.admits(&snap) {
            return Err(format!("engine state not reachable: {snap:?}\n{src}"));
        }
        Ok(())
    };
    sync(&engine, &mut ex, &mut consumed)?;
    loop {
        while engine.exec_step().map_err(|e| e.to_string())?.is_some() {
            stats.engine_steps += 1;
            sync(&engine, &mut ex, &mut consumed)?;
        }
        if !engine.cn.has_pending_work() {
            break;
        }
        match engine.mte().map_err(|e| e.to_string())? {
            Dur::Infinite => return Err(format!("engine blocked\n{src}")),
            Dur::Finite(d) => {
                if engine.cn.clock.clone() + &d > limit {
                    return Err(format!("engine did not finish by {limit}\n{src}"));
                }
                engine.tick(&d);
                sync(&engine, &mut ex, &mut consumed)?;
            }
        }
    }
    stats.events = consumed;
    stats.max_states = ex.max_states;
    Ok(stats)
}

/// Does the reference executor reproduce this event sequence at all?
pub fn reproduces(prog: &TinyProgram, trace: &[TraceEvent]) -> bool {
    let Ok(mut ex) = Explorer::new(prog) else {
        return false;
    };
    trace.iter().all(|e| ex.advance(e).is_ok())
}

/// Engine trace of a complete run.
pub fn engine_trace(prog: &TinyProgram, policy: DurationPolicy) -> Vec<TraceEvent> {
    let program = load_program(&prog.source()).expect("generated programs check");
    let options = EngineOptions {
        duration_policy: policy,
        ..EngineOptions::default()
    };
    let mut engine = Engine::new(Arc::new(program), options).expect("engine starts");
    engine
        .run_until(&BigRational::from_integer(200.into()))
        .expect("run succeeds");
    engine.trace
}
