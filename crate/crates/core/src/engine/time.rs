//! Maximal time elapse and time advance.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::state::{Configuration, Cont, Head, Object, Process, RtGuard};
use crate::func::{Dur, EvalError, Evaluator, Functions, Layered, Scope, Substitution, Value};

pub(crate) fn eval_rt_guard(
    g: &RtGuard,
    scope: &dyn Scope,
    ev: &Evaluator<'_>,
) -> Result<bool, EvalError> {
    match g {
        RtGuard::Duration(b, _) => Ok(match b {
            Dur::Finite(r) => !r.is_positive(),
            Dur::Infinite => false,
        }),
        RtGuard::And(a, b) => Ok(eval_rt_guard(a, scope, ev)? && eval_rt_guard(b, scope, ev)?),
        other => ev.eval_guard(&other.to_guard(), scope),
    }
}

/// `max` for conjunctions, `w` for `duration(b, w)`, `0` when true and
/// infinity otherwise.
pub fn mte_guard(g: &RtGuard, scope: &dyn Scope, ev: &Evaluator<'_>) -> Result<Dur, EvalError> {
    match g {
        RtGuard::And(a, b) => Ok(mte_guard(a, scope, ev)?.max(mte_guard(b, scope, ev)?)),
        RtGuard::Duration(_, w) => Ok(w.clone()),
        other => Ok(if eval_rt_guard(other, scope, ev)? {
            Dur::zero()
        } else {
            Dur::Infinite
        }),
    }
}

/// Can the head of `p` execute now? Only a read of an unresolved future
/// cannot (durations and awaits are handled separately).
fn head_enabled(p: &Process, scope: &dyn Scope, ev: &Evaluator<'_>, cn: &Configuration) -> bool {
    match p.head_get() {
        Some(e) => match ev.eval(e, scope) {
            Ok(Value::Future(f)) => cn.future_value(f).is_some(),
            // errors surface when the statement executes
            _ => true,
        },
        None => true,
    }
}

pub fn mte_process(
    p: &Process,
    attrs: &Substitution,
    ev: &Evaluator<'_>,
    cn: &Configuration,
) -> Result<Dur, EvalError> {
    let scope = Layered {
        outer: attrs,
        inner: &p.locals,
    };
    match p.head() {
        Head::Duration2(_, w) => Ok(w.clone()),
        Head::Await(g) => mte_guard(g, &scope, ev),
        _ if head_enabled(p, &scope, ev, cn) => Ok(Dur::zero()),
        _ => Ok(Dur::Infinite),
    }
}

pub fn mte_object(o: &Object, ev: &Evaluator<'_>, cn: &Configuration) -> Result<Dur, EvalError> {
    match &o.active {
        Some(p) => mte_process(p, &o.attrs, ev, cn),
        None => {
            let mut m = Dur::Infinite;
            for p in &o.queue {
                m = m.min(mte_process(p, &o.attrs, ev, cn)?);
            }
            Ok(m)
        }
    }
}

pub fn mte_config(cn: &Configuration, funcs: &Functions) -> Result<Dur, EvalError> {
    let ev = Evaluator::new(funcs, &cn.clock, cn);
    let mut m = Dur::Infinite;
    for o in &cn.objects {
        m = m.min(mte_object(o, &ev, cn)?);
    }
    Ok(m)
}

pub fn adv_guard(g: &RtGuard, d: &BigRational) -> RtGuard {
    match g {
        RtGuard::And(a, b) => RtGuard::And(Box::new(adv_guard(a, d)), Box::new(adv_guard(b, d))),
        RtGuard::Duration(b, w) => RtGuard::Duration(b.minus(d), w.minus(d)),
        other => other.clone(),
    }
}

/// Decrement the deadline and the timed head of one process.
pub fn adv_process(p: &mut Process, d: &BigRational) {
    let remaining = p.deadline().minus(d);
    p.locals.set("deadline", remaining.to_value());
    for c in p.stack.iter_mut().rev() {
        match c {
            Cont::Seq { block, idx } if *idx >= block.len() => continue,
            Cont::Duration2(b, w) => {
                *c = Cont::Duration2(b.minus(d), w.minus(d));
            }
            Cont::Await(g) => {
                *c = Cont::Await(adv_guard(g, d));
            }
            _ => {}
        }
        break;
    }
}

/// Advance every process and the clock by `d`.
pub fn adv_config(cn: &mut Configuration, d: &BigRational) {
    assert!(d > &BigRational::zero(), "time advances by a positive amount");
    for o in &mut cn.objects {
        for p in o.active.iter_mut().chain(o.queue.iter_mut()) {
            adv_process(p, d);
        }
    }
    cn.clock += d;
}
