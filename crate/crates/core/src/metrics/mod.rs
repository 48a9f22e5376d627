//! Trace recording and per-process timing metrics.

pub mod trace;

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::func::{fmt_rat, parse_rat, Dur};
pub use trace::{
    read_trace, trace_to_string, write_trace, EventKind, TraceError, TraceEvent, TraceFormat,
    CSV_HEADER,
};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("process {0} has not returned")]
    IncompleteProcess(u64),
    #[error("process {0} has no activate event")]
    MissingActivation(u64),
    #[error("event for process {pid} lacks a valid {field}")]
    BadField { pid: u64, field: &'static str },
}

/// Timing parameters of one completed process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessOutcome {
    pub pid: u64,
    pub method: String,
    pub label: Option<String>,
    pub arrival: BigRational,
    pub cost: Dur,
    pub deadline: Dur,
    pub start: BigRational,
    pub finish: BigRational,
    pub critical: bool,
    /// Deadline remaining at return, as carried by the engine.
    pub remaining: Dur,
}

impl ProcessOutcome {
    /// `D = r + d`; `None` without a deadline.
    pub fn absolute_deadline(&self) -> Option<BigRational> {
        self.deadline.finite().map(|d| &self.arrival + d)
    }

    /// `R = f - r`.
    pub fn response(&self) -> BigRational {
        &self.finish - &self.arrival
    }

    /// `L = f - D`; `None` means no deadline.
    pub fn lateness(&self) -> Option<BigRational> {
        self.absolute_deadline().map(|d| &self.finish - d)
    }

    /// `E = max(0, L)`.
    pub fn tardiness(&self) -> Option<BigRational> {
        self.lateness().map(|l| if l.is_positive() { l } else { BigRational::zero() })
    }

    /// `X = d - c`.
    pub fn laxity(&self) -> Dur {
        match (&self.deadline, &self.cost) {
            (Dur::Finite(d), Dur::Finite(c)) => Dur::Finite(d - c),
            _ => Dur::Infinite,
        }
    }

    pub fn missed(&self) -> bool {
        self.lateness().is_some_and(|l| l.is_positive())
    }

    /// Series grouping key: the method, qualified by the job label if any.
    pub fn class_key(&self) -> String {
        match &self.label {
            Some(l) => format!("{}[{}]", self.method, l),
            None => self.method.clone(),
        }
    }
}

fn field_time(e: &TraceEvent, pid: u64, field: &'static str) -> Result<BigRational, MetricsError> {
    e.get(field)
        .and_then(parse_rat)
        .ok_or(MetricsError::BadField { pid, field })
}

fn field_dur(e: &TraceEvent, pid: u64, field: &'static str) -> Result<Dur, MetricsError> {
    match e.get(field) {
        Some("inf") => Ok(Dur::Infinite),
        Some(s) => parse_rat(s)
            .map(Dur::Finite)
            .ok_or(MetricsError::BadField { pid, field }),
        None => Err(MetricsError::BadField { pid, field }),
    }
}

/// Outcome from the activate and return events of one process.
pub fn derive_outcome(
    activate: Option<&TraceEvent>,
    ret: Option<&TraceEvent>,
    pid: u64,
) -> Result<ProcessOutcome, MetricsError> {
    let a = activate.ok_or(MetricsError::MissingActivation(pid))?;
    let r = ret.ok_or(MetricsError::IncompleteProcess(pid))?;
    Ok(ProcessOutcome {
        pid,
        method: a.method.clone().unwrap_or_default(),
        label: a.get("label").map(str::to_string),
        arrival: field_time(a, pid, "arrival")?,
        cost: field_dur(a, pid, "cost")?,
        deadline: field_dur(a, pid, "deadline")?,
        start: field_time(r, pid, "start")?,
        finish: r.time.clone(),
        critical: r.get("critical") == Some("True"),
        remaining: field_dur(r, pid, "deadline")?,
    })
}

/// All processes seen in a trace, split into completed and still alive.
#[derive(Clone, Debug, Default)]
pub struct Outcomes {
    pub completed: Vec<ProcessOutcome>,
    pub incomplete: Vec<u64>,
}

impl Outcomes {
    pub fn misses(&self) -> usize {
        self.completed.iter().filter(|o| o.missed()).count()
    }
}

pub fn outcomes(events: &[TraceEvent]) -> Result<Outcomes, MetricsError> {
    let mut activations: BTreeMap<u64, &TraceEvent> = BTreeMap::new();
    let mut returns: HashMap<u64, &TraceEvent> = HashMap::new();
    let mut order = Vec::new();
    for e in events {
        let Some(pid) = e.pid else { continue };
        match e.kind {
            EventKind::Activate => {
                activations.insert(pid, e);
            }
            EventKind::Return => {
                returns.insert(pid, e);
                order.push(pid);
            }
            _ => {}
        }
    }
    let mut out = Outcomes::default();
    for pid in order {
        out.completed
            .push(derive_outcome(activations.get(&pid).copied(), returns.get(&pid).copied(), pid)?);
    }
    out.incomplete = activations
        .keys()
        .copied()
        .filter(|p| !returns.contains_key(p))
        .collect();
    Ok(out)
}

/// One point of the cumulative miss series, taken at a return.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesPoint {
    pub time: BigRational,
    pub pid: u64,
    pub completed: usize,
    pub misses: usize,
    pub by_class: BTreeMap<String, usize>,
}

/// Cumulative misses after every return, with per-class counts.
pub fn misses_series(events: &[TraceEvent]) -> Result<Vec<SeriesPoint>, MetricsError> {
    let o = outcomes(events)?;
    let classes: Vec<String> = {
        let mut v: Vec<String> = o.completed.iter().map(ProcessOutcome::class_key).collect();
        v.sort();
        v.dedup();
        v
    };
    let mut by_class: BTreeMap<String, usize> = classes.into_iter().map(|c| (c, 0)).collect();
    let mut misses = 0;
    let mut out = Vec::with_capacity(o.completed.len());
    for (i, p) in o.completed.iter().enumerate() {
        if p.missed() {
            misses += 1;
            *by_class.get_mut(&p.class_key()).expect("class collected") += 1;
        }
        out.push(SeriesPoint {
            time: p.finish.clone(),
            pid: p.pid,
            completed: i + 1,
            misses,
            by_class: by_class.clone(),
        });
    }
    Ok(out)
}

/// CSV rendering of a miss series.
pub fn series_csv(series: &[SeriesPoint], by_class: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let classes: Vec<String> = series
        .last()
        .map(|p| p.by_class.keys().cloned().collect())
        .unwrap_or_default();
    let mut header = vec!["time".to_string(), "pid".into(), "completed".into(), "misses".into()];
    if by_class {
        header.extend(classes.iter().cloned());
    }
    w.write_record(&header).expect("in-memory write");
    for p in series {
        let mut row = vec![
            fmt_rat(&p.time),
            p.pid.to_string(),
            p.completed.to_string(),
            p.misses.to_string(),
        ];
        if by_class {
            row.extend(classes.iter().map(|c| p.by_class[c].to_string()));
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("UTF-8")
}
