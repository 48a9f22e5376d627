#![allow(dead_code)]

pub mod oracle;

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rtabs_core::engine::{
    adv_config, adv_guard, adv_process, mte_config, Configuration, Cont, Engine, EngineOptions,
    FutureCell, Object, Process, RtGuard, RunReport,
};
use rtabs_core::func::{fmt_rat, parse_rat, Dur, Functions, Substitution, Value};
use rtabs_core::syntax::ast::{Block, Expr};
use rtabs_core::syntax::parse_model;
use rtabs_core::metrics::{EventKind, TraceEvent};
use rtabs_core::sched::prelude_ast;
use rtabs_core::{load_program, Program};

pub const PHOTO_VIDEO: &str = include_str!("../../models/photo_video.rtabs");
pub const LENGTH_SENSITIVE: &str = include_str!("../../models/length_sensitive.rtabs");
pub const MONITORS: &str = include_str!("../../models/monitors.rtabs");
pub const SINGLE: &str = include_str!("../../models/single_request.rtabs");
pub const DEADLOCK: &str = include_str!("../../models/deadlock.rtabs");

pub fn r(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn prelude_functions() -> Functions {
    Functions::new(prelude_ast())
}

pub fn dur(v: Option<BigRational>) -> Value {
    match v {
        Some(r) => Value::ctor("Duration", vec![Value::Rat(r)]),
        None => Value::ctor("InfDuration", vec![]),
    }
}

pub fn program(src: &str) -> Arc<Program> {
    match load_program(src) {
        Ok(p) => Arc::new(p),
        Err(diags) => panic!(
            "{}",
            diags.iter().map(|d| d.render("model")).collect::<Vec<_>>().join("\n")
        ),
    }
}

pub fn run(src: &str, limit: i64, options: EngineOptions) -> (Engine, RunReport) {
    let mut e = Engine::new(program(src), options).expect("bootstrap");
    let report = e.run_until(&r(limit)).expect("run");
    (e, report)
}

/// Swap the server's scheduler annotation in the photo/video model.
pub fn with_scheduler(src: &str, policy: &str) -> String {
    assert!(src.contains("[Scheduler: sjf(queue)]"), "scheduler annotation not found");
    src.replace("[Scheduler: sjf(queue)]", &format!("[Scheduler: {policy}]"))
}

pub fn with_limit(src: &str, limit: &str) -> String {
    let out = src.replace("new ServerImp(6)", &format!("new ServerImp({limit})"));
    assert_ne!(out, src, "server creation not found");
    out
}

pub fn with_monitor(src: &str, class: &str) -> String {
    src.replace("new SimpleMonitorImp()", &format!("new {class}()"))
}

fn num(e: &TraceEvent, key: &str) -> Option<BigRational> {
    e.get(key).and_then(parse_rat)
}

/// Violations of `d0 - deadline = clock - arrival` on schedule and return
/// events with a finite initial deadline.
pub fn bookkeeping_violations(trace: &[TraceEvent]) -> Vec<String> {
    let mut bad = Vec::new();
    let mut checked = 0;
    for e in trace {
        if !matches!(e.kind, EventKind::Schedule | EventKind::Return) {
            continue;
        }
        let (Some(d0), Some(d), Some(a)) = (num(e, "d0"), num(e, "deadline"), num(e, "arrival")) else {
            continue;
        };
        checked += 1;
        if &d0 - &d != &e.time - &a {
            bad.push(format!(
                "pid {:?} at {}: d0 {} deadline {} arrival {}",
                e.pid,
                fmt_rat(&e.time),
                fmt_rat(&d0),
                fmt_rat(&d),
                fmt_rat(&a)
            ));
        }
    }
    let _ = checked;
    bad
}

/// Number of schedule/return events the bookkeeping check applies to.
pub fn bookkeeping_checked(trace: &[TraceEvent]) -> usize {
    trace
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Schedule | EventKind::Return))
        .filter(|e| num(e, "d0").is_some())
        .count()
}

/// Pids of `method` processes on `object` in the order of the given event.
pub fn order_of(trace: &[TraceEvent], kind: EventKind, method: &str) -> Vec<u64> {
    trace
        .iter()
        .filter(|e| e.kind == kind && e.method.as_deref() == Some(method))
        .filter_map(|e| e.pid)
        .collect()
}

pub fn body(src: &str) -> Block {
    let m = parse_model(&format!("class C {{ Unit m() {{ {src} }} }}")).expect("statements parse");
    m.classes[0].methods[0].body.clone()
}

pub fn d(n: i64) -> Dur {
    Dur::Finite(r(n))
}

pub fn process(pid: u64, deadline: Dur, stack: Vec<Cont>) -> Process {
    let mut locals = Substitution::new();
    locals.bind("method", Value::str("m"));
    locals.bind("arrival", Value::time(r(0)));
    locals.bind("cost", d(0).to_value());
    locals.bind("deadline", deadline.to_value());
    locals.bind("start", Value::time(r(0)));
    locals.bind("finish", Value::time(r(0)));
    locals.bind("critical", Value::Bool(false));
    locals.bind("value", Value::int(0));
    locals.bind("destiny", Value::Future(pid));
    Process {
        locals,
        stack,
        initial_deadline: deadline,
        started: false,
        path: Arc::from(format!("p{pid}")),
        spawned: 0,
        label: None,
    }
}

pub fn object(id: u64, active: Option<Process>, queue: Vec<Process>) -> Object {
    let mut attrs = Substitution::new();
    attrs.bind("this", Value::Object(id));
    attrs.bind("b", Value::Bool(false));
    Object {
        id,
        class: Arc::from("C"),
        policy: Expr::call("default", vec![Expr::var("queue")]),
        attrs,
        active,
        queue,
        path: Arc::from(format!("o{id}")),
    }
}

pub fn config(objects: Vec<Object>) -> Configuration {
    let mut cn = Configuration::empty();
    cn.objects = objects;
    cn
}

pub fn with_future(mut cn: Configuration, id: u64, value: Option<Value>) -> Configuration {
    while cn.futures.len() <= id as usize {
        let n = cn.futures.len() as u64;
        cn.futures.push(FutureCell {
            id: n,
            value: None,
            path: Arc::from(format!("f{n}")),
        });
    }
    cn.futures[id as usize].value = value;
    cn
}

pub fn dur2(b: i64, w: i64) -> Cont {
    Cont::Duration2(d(b), d(w))
}

pub fn await_dur(b: i64, w: i64) -> RtGuard {
    RtGuard::Duration(d(b), d(w))
}

pub fn and(a: RtGuard, b: RtGuard) -> RtGuard {
    RtGuard::And(Box::new(a), Box::new(b))
}

pub fn seq(src: &str) -> Cont {
    Cont::Seq {
        block: body(src),
        idx: 0,
    }
}

pub fn getter(pid: u64, fut: u64) -> Process {
    let mut p = process(pid, Dur::Infinite, vec![seq("Int v = f.get;")]);
    p.locals.bind("f", Value::Future(fut));
    p.locals.bind("v", Value::int(0));
    p
}

pub fn mte(cn: &Configuration) -> Dur {
    mte_config(cn, &prelude_functions()).expect("mte evaluates")
}

/// One maximal-time-elapse or time-advance case.
pub struct TimeCase {
    pub name: &'static str,
    pub got: String,
    pub want: String,
}

fn case<T: std::fmt::Debug>(name: &'static str, got: T, want: T) -> TimeCase {
    TimeCase {
        name,
        got: format!("{got:?}"),
        want: format!("{want:?}"),
    }
}

/// Every case of the time machinery, with hand-computed results.
pub fn time_table() -> Vec<TimeCase> {
    let b_guard = RtGuard::Expr(Expr::var("b"));
    let mut out = vec![
        case(
            "mte: duration2 head gives its upper bound",
            mte(&config(vec![object(0, Some(process(1, d(10), vec![dur2(3, 5)])), vec![])])),
            d(5),
        ),
        case(
            "mte: idle object takes the minimum over its queued await durations",
            mte(&config(vec![object(
                0,
                None,
                vec![
                    process(1, d(10), vec![Cont::Await(await_dur(2, 4))]),
                    process(2, d(10), vec![Cont::Await(await_dur(5, 9))]),
                ],
            )])),
            d(4),
        ),
        case(
            "mte: conjunction of durations takes the maximum",
            mte(&config(vec![object(
                0,
                Some(process(1, d(10), vec![Cont::Await(and(await_dur(2, 4), await_dur(1, 7)))])),
                vec![],
            )])),
            d(7),
        ),
        case(
            "mte: false conjunct makes the guard unbounded",
            mte(&config(vec![object(
                0,
                Some(process(1, d(10), vec![Cont::Await(and(await_dur(1, 3), b_guard.clone()))])),
                vec![],
            )])),
            Dur::Infinite,
        ),
        case(
            "mte: enabled head gives zero",
            mte(&config(vec![object(0, Some(process(1, d(10), vec![seq("skip;")])), vec![])])),
            d(0),
        ),
        case(
            "mte: get on an unresolved future is blocked",
            mte(&with_future(config(vec![object(0, Some(getter(1, 7)), vec![])]), 7, None)),
            Dur::Infinite,
        ),
        case(
            "mte: configuration takes the minimum over objects",
            mte(&config(vec![
                object(0, Some(process(1, d(10), vec![dur2(5, 5)])), vec![]),
                object(1, None, vec![]),
                object(2, None, vec![process(2, d(10), vec![dur2(1, 3)])]),
            ])),
            d(3),
        ),
        case(
            "mte: an active process hides the queue",
            mte(&with_future(
                config(vec![object(0, Some(getter(1, 7)), vec![process(2, d(10), vec![dur2(0, 1)])])]),
                7,
                None,
            )),
            Dur::Infinite,
        ),
    ];

    let mut p = process(1, d(10), vec![dur2(3, 5)]);
    adv_process(&mut p, &r(2));
    out.push(case(
        "adv: deadline and duration2 head decrease",
        (p.deadline(), p.stack),
        (d(8), vec![dur2(1, 3)]),
    ));

    let mut p = process(1, Dur::Infinite, vec![seq("skip;")]);
    adv_process(&mut p, &q(7, 3));
    out.push(case(
        "adv: infinite deadline absorbs, other heads unchanged",
        (p.deadline(), p.stack),
        (Dur::Infinite, vec![seq("skip;")]),
    ));

    out.push(case(
        "adv: durations inside conjunctions decrease",
        adv_guard(&and(await_dur(2, 4), b_guard.clone()), &r(2)),
        and(await_dur(0, 2), b_guard),
    ));

    let mut cn = config(vec![object(
        0,
        Some(process(1, d(10), vec![Cont::Await(await_dur(2, 4))])),
        vec![process(2, d(3), vec![seq("skip;")])],
    )]);
    adv_config(&mut cn, &r(1));
    let o = &cn.objects[0];
    out.push(case(
        "adv: clock, active await and queued deadline all advance",
        (
            cn.clock.clone(),
            o.active.as_ref().unwrap().stack.clone(),
            o.active.as_ref().unwrap().deadline(),
            o.queue[0].deadline(),
        ),
        (r(1), vec![Cont::Await(await_dur(1, 3))], d(9), d(2)),
    ));
    out
}
