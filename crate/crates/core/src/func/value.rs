use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// A fully evaluated term.
#[derive(Clone, Debug)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Rat(BigRational),
    Str(Arc<str>),
    Ctor(Arc<CtorValue>),
    Object(u64),
    Future(u64),
    Null,
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CtorValue {
    pub name: String,
    pub args: Vec<Value>,
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `p/q` in lowest terms, or `n` when the denominator is one.
pub fn fmt_rat(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Inverse of [`fmt_rat`]; also accepts plain integers.
pub fn parse_rat(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: BigInt = q.parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p.parse().ok()?, q))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

impl Value {
    pub fn ctor(name: &str, args: Vec<Value>) -> Value {
        Value::Ctor(Arc::new(CtorValue {
            name: name.to_string(),
            args,
        }))
    }

    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn unit() -> Value {
        Value::ctor("Unit", vec![])
    }

    pub fn time(t: BigRational) -> Value {
        Value::ctor("Time", vec![Value::Rat(t)])
    }

    pub fn nil() -> Value {
        Value::ctor("Nil", vec![])
    }

    pub fn cons(h: Value, t: Value) -> Value {
        Value::ctor("Cons", vec![h, t])
    }

    pub fn list(items: impl IntoIterator<Item = Value, IntoIter: DoubleEndedIterator>) -> Value {
        items
            .into_iter()
            .rev()
            .fold(Value::nil(), |acc, v| Value::cons(v, acc))
    }

    /// Elements of a `Cons`/`Nil` list, or `None` if this is not a list.
    pub fn as_list(&self) -> Option<Vec<Value>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            let c = cur.as_ctor()?;
            match (c.name.as_str(), c.args.as_slice()) {
                ("Nil", []) => return Some(out),
                ("Cons", [h, t]) => {
                    out.push(h.clone());
                    cur = t;
                }
                _ => return None,
            }
        }
    }

    pub fn as_ctor(&self) -> Option<&CtorValue> {
        match self {
            Value::Ctor(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Numeric payload of an `Int` or `Rat`.
    pub fn as_rat(&self) -> Option<BigRational> {
        match self {
            Value::Int(n) => Some(BigRational::from_integer(n.clone())),
            Value::Rat(r) => Some(r.clone()),
            _ => None,
        }
    }

    /// Payload of `Time(r)`.
    pub fn as_time(&self) -> Option<BigRational> {
        let c = self.as_ctor()?;
        match (c.name.as_str(), c.args.as_slice()) {
            ("Time", [r]) => r.as_rat(),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "Bool",
            Value::Int(_) => "Int",
            Value::Rat(_) => "Rat",
            Value::Str(_) => "String",
            Value::Ctor(_) => "constructor term",
            Value::Object(_) => "object reference",
            Value::Future(_) => "future",
            Value::Null => "null",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Bool(_) => 1,
            Value::Int(_) | Value::Rat(_) => 2,
            Value::Str(_) => 3,
            Value::Ctor(_) => 4,
            Value::Object(_) => 5,
            Value::Future(_) => 6,
        }
    }
}

/// Numbers compare by magnitude regardless of representation; everything
/// else compares structurally (constructor name, then arguments).
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        use Value::*;
        match (self, other) {
            (Int(a), Int(b)) => a.cmp(b),
            (Int(_) | Rat(_), Int(_) | Rat(_)) => self.as_rat().cmp(&other.as_rat()),
            (Bool(a), Bool(b)) => a.cmp(b),
            (Str(a), Str(b)) => a.cmp(b),
            (Ctor(a), Ctor(b)) => a.cmp(b),
            (Object(a), Object(b)) | (Future(a), Future(b)) => a.cmp(b),
            (Null, Null) => Ordering::Equal,
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Rat(r) => f.write_str(&fmt_rat(r)),
            Value::Str(s) => write!(f, "{}", crate::syntax::pretty::quote(s)),
            Value::Ctor(c) => {
                f.write_str(&c.name)?;
                if !c.args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in c.args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
            Value::Object(o) => write!(f, "ob{o}"),
            Value::Future(id) => write!(f, "fut{id}"),
            Value::Null => f.write_str("null"),
        }
    }
}

/// Host view of the `Duration` datatype.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Dur {
    Finite(BigRational),
    Infinite,
}

impl Dur {
    pub fn zero() -> Dur {
        Dur::Finite(BigRational::zero())
    }

    /// Accepts `Duration(r)`, `InfDuration` and bare numbers.
    pub fn from_value(v: &Value) -> Option<Dur> {
        if let Some(r) = v.as_rat() {
            return Some(Dur::Finite(r));
        }
        let c = v.as_ctor()?;
        match (c.name.as_str(), c.args.as_slice()) {
            ("Duration", [r]) => r.as_rat().map(Dur::Finite),
            ("InfDuration", []) => Some(Dur::Infinite),
            _ => None,
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            Dur::Finite(r) => Value::ctor("Duration", vec![Value::Rat(r.clone())]),
            Dur::Infinite => Value::ctor("InfDuration", vec![]),
        }
    }

    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            Dur::Finite(r) => Some(r),
            Dur::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Dur::Infinite)
    }

    /// Subtract a finite amount; infinity absorbs.
    pub fn minus(&self, d: &BigRational) -> Dur {
        match self {
            Dur::Finite(r) => Dur::Finite(r - d),
            Dur::Infinite => Dur::Infinite,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Dur::Finite(r) => r.is_positive(),
            Dur::Infinite => true,
        }
    }
}

impl Ord for Dur {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Dur::Finite(a), Dur::Finite(b)) => a.cmp(b),
            (Dur::Finite(_), Dur::Infinite) => Ordering::Less,
            (Dur::Infinite, Dur::Finite(_)) => Ordering::Greater,
            (Dur::Infinite, Dur::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Dur {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dur {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dur::Finite(r) => f.write_str(&fmt_rat(r)),
            Dur::Infinite => f.write_str("inf"),
        }
    }
}
