//! The `rtabs` command line.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::Signed;

use crate::engine::{DurationPolicy, Engine, EngineOptions, Stop};
use crate::func::{fmt_rat, parse_rat};
use crate::metrics::{self, read_trace, write_trace, TraceFormat};
use crate::model::{check_source, load_program};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_DEADLOCK: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rtabs", version, about = "Simulate timed actor models with user-defined schedulers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Csv,
    Structured,
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TraceFormat::Csv,
            FormatArg::Structured => TraceFormat::Structured,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SeriesArg {
    Misses,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ByArg {
    Method,
}

fn parse_until(s: &str) -> Result<BigRational, String> {
    let r = parse_rat(s).ok_or_else(|| format!("not a rational number: {s:?}"))?;
    if !r.is_positive() {
        return Err("the time limit must be positive".into());
    }
    Ok(r)
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and check a model.
    Check { file: PathBuf },
    /// Simulate a model up to a time limit and write its trace.
    Run {
        file: PathBuf,
        /// Time limit, an exact rational such as `600` or `33/2`.
        #[arg(long, value_parser = parse_until)]
        until: BigRational,
        /// Seed for sampled durations.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// How `duration(b, w)` picks a value: worst, best or uniform.
        #[arg(long, default_value = "worst")]
        duration_policy: DurationPolicy,
        /// Defaults to `<model>.trace.csv` (or `.trace.jsonl`).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Deadline-miss series of a recorded trace, as CSV.
    Metrics {
        trace: PathBuf,
        #[arg(long, value_enum)]
        series: SeriesArg,
        #[arg(long, value_enum)]
        by: Option<ByArg>,
        /// Defaults to structured for `.jsonl` files, CSV otherwise.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
}

/// Parse `args` and run the command; returns the exit status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_FAILURE
                }
            };
        }
    };
    match cli.command {
        Command::Check { file } => cmd_check(&file, out, err),
        Command::Run {
            file,
            until,
            seed,
            duration_policy,
            trace,
            format,
        } => {
            let format = TraceFormat::from(format);
            let trace = trace.unwrap_or_else(|| default_trace_path(&file, format));
            let options = EngineOptions {
                duration_policy,
                seed,
                ..EngineOptions::default()
            };
            cmd_run(&file, &until, options, &trace, format, out, err)
        }
        Command::Metrics {
            trace,
            series: SeriesArg::Misses,
            by,
            format,
        } => {
            let format = format.map(TraceFormat::from).unwrap_or_else(|| guess_format(&trace));
            cmd_metrics(&trace, format, by.is_some(), out, err)
        }
    }
}

pub fn default_trace_path(model: &Path, format: TraceFormat) -> PathBuf {
    let ext = match format {
        TraceFormat::Csv => "trace.csv",
        TraceFormat::Structured => "trace.jsonl",
    };
    model.with_extension(ext)
}

fn guess_format(path: &Path) -> TraceFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") => TraceFormat::Structured,
        _ => TraceFormat::Csv,
    }
}

fn read_source(file: &Path, err: &mut dyn Write) -> Option<String> {
    match fs::read_to_string(file) {
        Ok(s) => Some(s),
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", file.display());
            None
        }
    }
}

pub fn cmd_check(file: &Path, _out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(src) = read_source(file, err) else {
        return EXIT_FAILURE;
    };
    let diags = check_source(&src);
    let name = file.display().to_string();
    for d in &diags {
        let _ = writeln!(err, "{}", d.render(&name));
    }
    if diags.is_empty() {
        EXIT_OK
    } else {
        EXIT_DIAGNOSTICS
    }
}

pub fn cmd_run(
    file: &Path,
    until: &BigRational,
    options: EngineOptions,
    trace_path: &Path,
    format: TraceFormat,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(src) = read_source(file, err) else {
        return EXIT_FAILURE;
    };
    let name = file.display().to_string();
    let program = match load_program(&src) {
        Ok(p) => Arc::new(p),
        Err(diags) => {
            for d in &diags {
                let _ = writeln!(err, "{}", d.render(&name));
            }
            return EXIT_DIAGNOSTICS;
        }
    };
    let mut engine = match Engine::new(program, options) {
        Ok(e) => e,
        Err(e) => {
            let _ = writeln!(err, "runtime error: {e}");
            return EXIT_FAILURE;
        }
    };
    let result = engine.run_until(until);
    if let Err(e) = fs::File::create(trace_path)
        .map_err(metrics::TraceError::from)
        .and_then(|f| write_trace(&engine.trace, format, std::io::BufWriter::new(f)))
    {
        let _ = writeln!(err, "error: cannot write {}: {e}", trace_path.display());
        return EXIT_FAILURE;
    }
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "runtime error at time {}: {e}", fmt_rat(&engine.cn.clock));
            return EXIT_FAILURE;
        }
    };
    let outcomes = match metrics::outcomes(&engine.trace) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let stop = match &report.stop {
        Stop::Terminated => "terminated",
        Stop::TimeLimit => "time_limit",
        Stop::Deadlock(_) => "deadlock",
    };
    let _ = writeln!(out, "clock,stop,completed,misses,incomplete");
    let _ = writeln!(
        out,
        "{},{},{},{},{}",
        fmt_rat(&report.clock),
        stop,
        outcomes.completed.len(),
        outcomes.misses(),
        outcomes.incomplete.len()
    );
    if let Stop::Deadlock(blocked) = &report.stop {
        let _ = writeln!(err, "deadlock at time {}:", fmt_rat(&report.clock));
        for line in blocked {
            let _ = writeln!(err, "  {line}");
        }
        return EXIT_DEADLOCK;
    }
    EXIT_OK
}

pub fn cmd_metrics(
    trace: &Path,
    format: TraceFormat,
    by_method: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let events = match fs::File::open(trace)
        .map_err(metrics::TraceError::from)
        .and_then(|f| read_trace(BufReader::new(f), format))
    {
        Ok(e) => e,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", trace.display());
            return EXIT_FAILURE;
        }
    };
    match metrics::misses_series(&events) {
        Ok(s) => {
            let _ = write!(out, "{}", metrics::series_csv(&s, by_method));
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", trace.display());
            EXIT_FAILURE
        }
    }
}
