//! Timed configurations and their transition rules.

mod exec;
mod state;
mod time;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::func::EvalError;
use crate::sched::PolicyError;

pub use exec::{Engine, RunReport, Stop};
pub use state::{
    liftall, select, Configuration, Cont, FutureCell, FutureTable, Head, Message, Object, Process,
    RtGuard,
};
pub use time::{adv_config, adv_guard, adv_process, mte_config, mte_guard, mte_object, mte_process};

/// How a `duration(b, w)` interval is resolved to a single amount.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DurationPolicy {
    /// Always `w`.
    #[default]
    Worst,
    /// Always `b`.
    Best,
    /// Seeded draw from `b + (w - b) * k / 1000`, `k` in `0..=1000`.
    Uniform,
}

impl FromStr for DurationPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "worst" => Ok(DurationPolicy::Worst),
            "best" => Ok(DurationPolicy::Best),
            "uniform" => Ok(DurationPolicy::Uniform),
            other => Err(format!("unknown duration policy {other:?} (worst, best, uniform)")),
        }
    }
}

impl fmt::Display for DurationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DurationPolicy::Worst => "worst",
            DurationPolicy::Best => "best",
            DurationPolicy::Uniform => "uniform",
        })
    }
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub duration_policy: DurationPolicy,
    pub seed: u64,
    /// Instantaneous steps allowed between two clock advances.
    pub max_steps_per_instant: u64,
    pub record_trace: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            duration_policy: DurationPolicy::Worst,
            seed: 0,
            max_steps_per_instant: 5_000_000,
            record_trace: true,
        }
    }
}

/// The rule applied by one instantaneous step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Skip,
    Assign,
    Cond,
    While,
    Suspend,
    Await1,
    Await2,
    Schedule,
    Activation,
    NewObject,
    AsyncCall,
    Return,
    ReadFut,
    Duration1,
    Duration2,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ErrorKind {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("class {class} has no method {method} taking {arity} argument(s)")]
    UnknownMethod {
        class: String,
        method: String,
        arity: usize,
    },
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("method call on {0}, which is not an object")]
    NotAnObject(String),
    #[error("get on {0}, which is not a future")]
    NotAFuture(String),
    #[error("duration bounds out of order: {0} > {1}")]
    DurationBounds(String, String),
    #[error("more than {0} instantaneous steps without time passing")]
    StepLimit(u64),
    #[error("no step applies but time cannot advance")]
    Stuck,
    #[error("synchronous call left after desugaring")]
    NotDesugared,
}

/// A runtime failure, located at the object, process and statement that
/// raised it.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{}", self.render())]
pub struct EngineError {
    pub kind: ErrorKind,
    pub object: Option<u64>,
    pub class: Option<String>,
    pub pid: Option<u64>,
    pub method: Option<String>,
    pub statement: Option<String>,
}

impl EngineError {
    pub fn global(kind: ErrorKind) -> Self {
        EngineError {
            kind,
            object: None,
            class: None,
            pid: None,
            method: None,
            statement: None,
        }
    }

    fn render(&self) -> String {
        let mut parts = Vec::new();
        if let Some(o) = self.object {
            match &self.class {
                Some(c) => parts.push(format!("object {o} ({c})")),
                None => parts.push(format!("object {o}")),
            }
        }
        if let Some(p) = self.pid {
            match &self.method {
                Some(m) => parts.push(format!("process {p} ({m})")),
                None => parts.push(format!("process {p}")),
            }
        }
        if let Some(s) = &self.statement {
            parts.push(format!("at `{}`", s.trim()));
        }
        if parts.is_empty() {
            self.kind.to_string()
        } else {
            format!("{}: {}", parts.join(", "), self.kind)
        }
    }
}
