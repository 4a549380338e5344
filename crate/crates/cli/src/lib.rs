//! Scenario runner: TOML configs in, `report.json` and per-scenario CSV out.

pub mod config;
pub mod repro;
pub mod tasks;

use std::fs;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

pub use config::{Config, FnSpec, Scenario, Task};

pub const TOOL: &str = "vertexlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub id: String,
    pub task: Task,
    pub status: Status,
    pub error: Option<String>,
    pub payload: Value,
    pub thresholds: Value,
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub config: Scenario,
}

/// Petrovskii classification and ODE verdict for the same φ, both with m = 1.
#[derive(Debug, Clone, Serialize)]
pub struct Consistency {
    pub phi: String,
    pub petrovskii: String,
    pub criterion: String,
    pub classification: Value,
    pub verdict: Value,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    /// Seconds since the epoch; the only field that varies between identical runs.
    pub timestamp: u64,
    pub seed: u64,
    pub reports: Vec<Report>,
    pub consistency: Vec<Consistency>,
}

impl RunReport {
    pub fn failed(&self) -> bool {
        self.reports.iter().any(|r| r.status == Status::Error)
    }
}

pub struct RunOptions {
    pub workers: usize,
    pub seed: u64,
    /// Restrict to one task; `None` runs every scenario.
    pub task: Option<Task>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 1, seed: 0, task: None }
    }
}

/// Floats with 17 significant digits; everything else as pretty JSON.
struct SigFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SigFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report serializes");
    buf.push(b'\n');
    String::from_utf8(buf).expect("json is utf-8")
}

struct Executed {
    report: Report,
    files: Vec<(String, String)>,
}

fn execute_isolated(s: &Scenario) -> Executed {
    let result = catch_unwind(AssertUnwindSafe(|| tasks::execute(s)));
    let (status, error, payload, thresholds, files) = match result {
        Ok(Ok(out)) => (Status::Ok, None, out.payload, out.thresholds, out.artifacts),
        Ok(Err(e)) => (Status::Error, Some(e.to_string()), Value::Null, Value::Null, Vec::new()),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (Status::Error, Some(format!("internal error: {msg}")), Value::Null, Value::Null, Vec::new())
        }
    };
    let files: Vec<(String, String)> = files.into_iter().map(|(n, b)| (format!("{}/{n}", s.id), b)).collect();
    Executed {
        report: Report {
            id: s.id.clone(),
            task: s.task(),
            status,
            error,
            payload,
            thresholds,
            artifacts: files.iter().map(|f| f.0.clone()).collect(),
            tool_version: VERSION.into(),
            config: s.clone(),
        },
        files,
    }
}

fn consistency(reports: &[Report]) -> Vec<Consistency> {
    let key = |r: &Report| -> Option<String> {
        let c = &r.config;
        let linear = c.kappa.as_ref().is_none_or(|k| k.name() == "zero-kappa");
        if r.status != Status::Ok || c.m() != 1 || !linear {
            return None;
        }
        c.phi().ok().map(|f| f.name)
    };
    let mut out = Vec::new();
    for p in reports.iter().filter(|r| r.task == Task::Petrovskii) {
        let form_ok = p.config.form.is_none_or(|f| f == config::IntegralForm::Integral);
        let Some(kp) = key(p).filter(|_| form_ok) else { continue };
        for c in reports.iter().filter(|r| r.task == Task::Criterion && r.config.kind != Some(vertexlab::criterion::CriterionKind::Gradient)) {
            if key(c).as_deref() != Some(kp.as_str()) {
                continue;
            }
            let class = p.payload["vertex"].clone();
            let verdict = c.payload["verdict"]["verdict"].clone();
            let consistent = match (class.as_str(), verdict.as_str()) {
                (Some("regular"), Some("regular")) | (Some("irregular"), Some("irregular")) => true,
                (Some("undetermined"), Some("inconclusive")) => true,
                _ => false,
            };
            out.push(Consistency {
                phi: p.payload["phi"].as_str().unwrap_or_default().into(),
                petrovskii: p.id.clone(),
                criterion: c.id.clone(),
                classification: class,
                verdict,
                consistent,
            });
        }
    }
    out
}

/// Runs the scenarios concurrently and returns the reports in config order.
pub fn run_config(cfg: &Config, opts: &RunOptions) -> Result<(RunReport, Vec<(String, String)>), CliError> {
    cfg.validate()?;
    let selected: Vec<&Scenario> =
        cfg.scenarios.iter().filter(|s| opts.task.is_none_or(|t| s.task() == t)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    let done: Vec<Executed> = pool.install(|| selected.par_iter().map(|s| execute_isolated(s)).collect());
    let mut files = Vec::new();
    let mut reports = Vec::new();
    for e in done {
        files.extend(e.files);
        reports.push(e.report);
    }
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let consistency = consistency(&reports);
    Ok((
        RunReport {
            tool: TOOL.into(),
            version: VERSION.into(),
            schema_version: config::SCHEMA_VERSION,
            timestamp,
            seed: opts.seed,
            reports,
            consistency,
        },
        files,
    ))
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    }
    fs::write(path, body).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Parses `config_path`, runs it and writes `report.json` plus artifacts under `out`.
pub fn run_scenarios(config_path: &Path, out: &Path, opts: &RunOptions) -> Result<RunReport, CliError> {
    let text = fs::read_to_string(config_path).map_err(|source| CliError::Io { path: config_path.into(), source })?;
    let cfg = Config::parse(&text)?;
    let (report, files) = run_config(&cfg, opts)?;
    for (name, body) in &files {
        write(&out.join(name), body)?;
    }
    write(&out.join("report.json"), &to_json(&report))?;
    Ok(report)
}

/// The report without the timestamp, for reproducibility comparisons.
pub fn comparable(report_json: &str) -> Value {
    let mut v: Value = serde_json::from_str(report_json).unwrap_or(Value::Null);
    if let Some(o) = v.as_object_mut() {
        o.remove("timestamp");
    }
    v
}

pub fn summary_line(r: &Report) -> String {
    let detail = match (&r.error, r.payload.pointer("/verdict/verdict"), r.payload.get("vertex")) {
        (Some(e), _, _) => e.clone(),
        (None, Some(v), _) => format!("verdict {}", v.as_str().unwrap_or("?")),
        (None, None, Some(v)) => format!("vertex {}", v.as_str().unwrap_or("?")),
        _ => json!(r.artifacts.len()).to_string() + " artifacts",
    };
    format!("{:<32} {:<10} {:<5} {detail}", r.id, r.task.name(), if r.status == Status::Ok { "ok" } else { "ERROR" })
}
