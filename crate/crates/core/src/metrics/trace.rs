use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::func::{fmt_rat, parse_rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Invoke,
    Activate,
    Schedule,
    Suspend,
    Return,
    Resolve,
    Tick,
    NewObject,
    DeadlineMiss,
    Error,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::Invoke,
        EventKind::Activate,
        EventKind::Schedule,
        EventKind::Suspend,
        EventKind::Return,
        EventKind::Resolve,
        EventKind::Tick,
        EventKind::NewObject,
        EventKind::DeadlineMiss,
        EventKind::Error,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Invoke => "invoke",
            EventKind::Activate => "activate",
            EventKind::Schedule => "schedule",
            EventKind::Suspend => "suspend",
            EventKind::Return => "return",
            EventKind::Resolve => "resolve",
            EventKind::Tick => "tick",
            EventKind::NewObject => "new_object",
            EventKind::DeadlineMiss => "deadline_miss",
            EventKind::Error => "error",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| TraceError::Malformed(format!("unknown event kind {s:?}")))
    }
}

/// One engine transition. Payload values are already rendered as text
/// (rationals as `p/q`, infinite durations as `inf`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: BigRational,
    pub kind: EventKind,
    pub object: Option<u64>,
    pub pid: Option<u64>,
    pub method: Option<String>,
    pub data: Vec<(String, String)>,
}

impl TraceEvent {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.data
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed trace: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TraceFormat {
    #[default]
    Csv,
    /// One JSON object per line.
    Structured,
}

pub const CSV_HEADER: [&str; 6] = ["time", "event", "object", "pid", "method", "data"];

fn escape(v: &str) -> String {
    v.replace('%', "%25").replace(';', "%3B").replace('=', "%3D")
}

fn unescape(v: &str) -> String {
    v.replace("%3D", "=").replace("%3B", ";").replace("%25", "%")
}

fn encode_data(data: &[(String, String)]) -> String {
    data.iter()
        .map(|(k, v)| format!("{k}={}", escape(v)))
        .collect::<Vec<_>>()
        .join(";")
}

fn decode_data(s: &str) -> Result<Vec<(String, String)>, TraceError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), unescape(v)))
                .ok_or_else(|| TraceError::Malformed(format!("bad data field {kv:?}")))
        })
        .collect()
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn parse_opt_u64(s: &str, what: &str) -> Result<Option<u64>, TraceError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| TraceError::Malformed(format!("bad {what} {s:?}")))
}

fn parse_time(s: &str) -> Result<BigRational, TraceError> {
    parse_rat(s).ok_or_else(|| TraceError::Malformed(format!("bad time {s:?}")))
}

#[derive(Serialize, Deserialize)]
struct JsonEvent {
    time: String,
    event: EventKind,
    object: Option<u64>,
    pid: Option<u64>,
    method: Option<String>,
    data: serde_json::Map<String, serde_json::Value>,
}

pub fn write_trace<W: Write>(
    events: &[TraceEvent],
    format: TraceFormat,
    out: W,
) -> Result<(), TraceError> {
    match format {
        TraceFormat::Csv => {
            let mut w = csv::WriterBuilder::new().from_writer(out);
            w.write_record(CSV_HEADER)?;
            for e in events {
                w.write_record([
                    fmt_rat(&e.time),
                    e.kind.as_str().to_string(),
                    opt(&e.object),
                    opt(&e.pid),
                    opt(&e.method),
                    encode_data(&e.data),
                ])?;
            }
            w.flush()?;
        }
        TraceFormat::Structured => {
            let mut out = out;
            for e in events {
                let rec = JsonEvent {
                    time: fmt_rat(&e.time),
                    event: e.kind,
                    object: e.object,
                    pid: e.pid,
                    method: e.method.clone(),
                    data: e
                        .data
                        .iter()
                        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                        .collect(),
                };
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

/// Render a trace to a string in the given format.
pub fn trace_to_string(events: &[TraceEvent], format: TraceFormat) -> String {
    let mut buf = Vec::new();
    write_trace(events, format, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("trace is UTF-8")
}

pub fn read_trace<R: BufRead>(input: R, format: TraceFormat) -> Result<Vec<TraceEvent>, TraceError> {
    let mut events = Vec::new();
    match format {
        TraceFormat::Csv => {
            let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
            let header = r.headers()?.clone();
            if header.iter().ne(CSV_HEADER) {
                return Err(TraceError::Malformed(format!(
                    "expected header {}",
                    CSV_HEADER.join(",")
                )));
            }
            for rec in r.records() {
                let rec = rec?;
                if rec.len() != 6 {
                    return Err(TraceError::Malformed(format!("expected 6 fields, got {}", rec.len())));
                }
                events.push(TraceEvent {
                    time: parse_time(&rec[0])?,
                    kind: rec[1].parse()?,
                    object: parse_opt_u64(&rec[2], "object id")?,
                    pid: parse_opt_u64(&rec[3], "pid")?,
                    method: (!rec[4].is_empty()).then(|| rec[4].to_string()),
                    data: decode_data(&rec[5])?,
                });
            }
        }
        TraceFormat::Structured => {
            for line in input.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let j: JsonEvent = serde_json::from_str(&line)?;
                let mut data = Vec::new();
                for (k, v) in j.data {
                    match v {
                        serde_json::Value::String(s) => data.push((k, s)),
                        other => {
                            return Err(TraceError::Malformed(format!(
                                "data value for {k} is not a string: {other}"
                            )))
                        }
                    }
                }
                events.push(TraceEvent {
                    time: parse_time(&j.time)?,
                    kind: j.event,
                    object: j.object,
                    pid: j.pid,
                    method: j.method,
                    data,
                });
            }
        }
    }
    Ok(events)
}
