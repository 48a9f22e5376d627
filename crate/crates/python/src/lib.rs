//! Python bindings: check models, run simulations and compute miss series.

use std::sync::Arc;

use num_rational::BigRational;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use rtabs_core::engine::{DurationPolicy, Engine, EngineOptions, Stop};
use rtabs_core::func::{fmt_rat, parse_rat};
use rtabs_core::metrics::{self, read_trace, trace_to_string, TraceFormat};
use rtabs_core::{check_source, load_program};

create_exception!(rtabs, ModelError, PyException, "The model has diagnostics.");
create_exception!(rtabs, SimulationError, PyException, "The simulation failed at runtime.");

fn trace_format(name: &str) -> PyResult<TraceFormat> {
    match name {
        "csv" => Ok(TraceFormat::Csv),
        "structured" => Ok(TraceFormat::Structured),
        other => Err(PyValueError::new_err(format!("unknown trace format {other:?}"))),
    }
}

/// Outcome of one simulation run.
#[pyclass(frozen, get_all, module = "rtabs")]
pub struct RunResult {
    /// Final clock as an exact rational string.
    clock: String,
    /// `terminated`, `time_limit` or `deadlock`.
    stop: String,
    completed: usize,
    misses: usize,
    incomplete: usize,
    /// The recorded trace, rendered in the requested format.
    trace: String,
    /// Blocked objects when the run deadlocked.
    blocked: Vec<String>,
}

#[pymethods]
impl RunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(clock={}, stop={}, completed={}, misses={}, incomplete={})",
            self.clock, self.stop, self.completed, self.misses, self.incomplete
        )
    }
}

/// Diagnostics for a model source, one rendered line each.
#[pyfunction]
#[pyo3(signature = (source, name = "<model>"))]
fn check(source: &str, name: &str) -> Vec<String> {
    check_source(source).iter().map(|d| d.render(name)).collect()
}

/// Simulate `source` until the time limit `until` (an exact rational such
/// as `"600"` or `"33/2"`).
#[pyfunction]
#[pyo3(signature = (source, until, seed = 0, duration_policy = "worst", format = "csv"))]
fn run(
    py: Python<'_>,
    source: &str,
    until: &str,
    seed: u64,
    duration_policy: &str,
    format: &str,
) -> PyResult<RunResult> {
    let limit: BigRational = parse_rat(until)
        .filter(|r| r > &BigRational::from_integer(0.into()))
        .ok_or_else(|| PyValueError::new_err(format!("bad time limit {until:?}")))?;
    let duration_policy: DurationPolicy = duration_policy.parse().map_err(PyValueError::new_err)?;
    let format = trace_format(format)?;
    let program = load_program(source).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| d.render("<model>")).collect();
        ModelError::new_err(lines.join("\n"))
    })?;
    let options = EngineOptions {
        duration_policy,
        seed,
        ..EngineOptions::default()
    };
    py.detach(move || {
        let mut engine = Engine::new(Arc::new(program), options)
            .map_err(|e| SimulationError::new_err(e.to_string()))?;
        let report = engine
            .run_until(&limit)
            .map_err(|e| SimulationError::new_err(e.to_string()))?;
        let o = metrics::outcomes(&engine.trace).map_err(|e| SimulationError::new_err(e.to_string()))?;
        let (stop, blocked) = match report.stop {
            Stop::Terminated => ("terminated", Vec::new()),
            Stop::TimeLimit => ("time_limit", Vec::new()),
            Stop::Deadlock(b) => ("deadlock", b),
        };
        Ok(RunResult {
            clock: fmt_rat(&report.clock),
            stop: stop.into(),
            completed: o.completed.len(),
            misses: o.misses(),
            incomplete: o.incomplete.len(),
            trace: trace_to_string(&engine.trace, format),
            blocked,
        })
    })
}

/// Cumulative deadline-miss series of a recorded trace, as CSV text.
#[pyfunction]
#[pyo3(signature = (trace, format = "csv", by_method = false))]
fn miss_series(trace: &str, format: &str, by_method: bool) -> PyResult<String> {
    let events = read_trace(trace.as_bytes(), trace_format(format)?)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let series = metrics::misses_series(&events).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(metrics::series_csv(&series, by_method))
}

#[pymodule]
fn rtabs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(miss_series, m)?)?;
    m.add("ModelError", m.py().get_type::<ModelError>())?;
    m.add("SimulationError", m.py().get_type::<SimulationError>())?;
    Ok(())
}
