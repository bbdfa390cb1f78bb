//! Command-line harness: runs seeded batteries over benchmark functions and
//! writes one PR/SR row per function and accuracy level.
//!
//! Run `i` of a battery uses seed `base_seed + i`, so results do not depend
//! on the worker count. Settings are resolved as CLI flags over the config
//! file over built-in defaults.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bench::FunctionId;
use crate::engine::{run_traced, RunConfig, RunReport, Settings};
use crate::error::LadeError;
use crate::metrics::{summarize, to_csv, Summary};

pub const DEFAULT_RUNS: usize = 50;
pub const DEFAULT_EPS: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<LadeError> for CliError {
    fn from(e: LadeError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblationFlag {
    Prss,
    Pords,
    Sds,
}

impl AblationFlag {
    fn key(self) -> &'static str {
        match self {
            AblationFlag::Prss => "disable_prss",
            AblationFlag::Pords => "disable_pords",
            AblationFlag::Sds => "disable_sds",
        }
    }
}

/// Runs LADE on CEC 2013 niching benchmarks and reports PR/SR as CSV.
#[derive(Debug, Parser)]
#[command(name = "lade", version)]
pub struct Args {
    /// Functions: `F2`, `F1,F3`, `F1..F5` or `all`. Repeatable.
    #[arg(long, short = 'f')]
    pub function: Vec<String>,
    /// Independent runs per function.
    #[arg(long, short = 'n')]
    pub runs: Option<usize>,
    /// Accuracy level. Repeatable; defaults to 1e-3, 1e-4 and 1e-5.
    #[arg(long)]
    pub eps: Vec<f64>,
    /// Base seed; run i uses seed + i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides every function's FE budget.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Worker threads. Defaults to the number of available cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// CSV output path. The table goes to stdout when omitted.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Directory for per-run evaluation traces, reports and SDS events.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Disables a component. Repeatable.
    #[arg(long, value_enum)]
    pub ablate: Vec<AblationFlag>,
    /// Algorithm parameter override as key=value. Repeatable.
    #[arg(long = "param", short = 'p')]
    pub params: Vec<String>,
    /// Plain key=value file, one entry per line, `#` starts a comment.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A fully resolved battery.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub functions: Vec<FunctionId>,
    pub runs: usize,
    pub eps: Vec<f64>,
    pub base_seed: u64,
    pub budget: Option<usize>,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub settings: Settings,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            functions: FunctionId::ALL.to_vec(),
            runs: DEFAULT_RUNS,
            eps: DEFAULT_EPS.to_vec(),
            base_seed: 0,
            budget: None,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out: None,
            trace: None,
            settings: Settings::default(),
        }
    }
}

/// Parses `F2`, `F1,F3`, `F1..F5` or `all` into function ids.
pub fn parse_functions(s: &str) -> Result<Vec<FunctionId>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part.eq_ignore_ascii_case("all") {
            out.extend(FunctionId::ALL);
        } else if let Some((a, b)) = part.split_once("..") {
            let (a, b): (FunctionId, FunctionId) = (a.parse()?, b.parse()?);
            if a > b {
                return Err(CliError::Config(format!("empty function range `{part}`")));
            }
            out.extend(
                FunctionId::ALL
                    .iter()
                    .copied()
                    .filter(|f| (a..=b).contains(f)),
            );
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("no function in `{s}`")));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_eps(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value.split(',').map(|v| parse_num(key, v)).collect()
}

fn split_pair(line: &str) -> Result<(&str, &str), CliError> {
    line.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| CliError::Config(format!("expected key=value, got `{line}`")))
}

impl ExperimentSpec {
    /// Applies one harness or algorithm setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "function" | "functions" => self.functions = parse_functions(value)?,
            "runs" => self.runs = parse_num(key, value)?,
            "eps" => self.eps = parse_eps(key, value)?,
            "seed" => self.base_seed = parse_num(key, value)?,
            "budget" => self.budget = Some(parse_num(key, value)?),
            "workers" => self.workers = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "trace" => self.trace = Some(PathBuf::from(value)),
            "ablate" => {
                for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    let flag = AblationFlag::from_str(part, true)
                        .map_err(|_| CliError::Config(format!("unknown component `{part}`")))?;
                    self.settings.set(flag.key(), "true")?;
                }
            }
            _ => self.settings.set(key, value)?,
        }
        Ok(())
    }

    /// Applies the lines of a key=value config file.
    pub fn apply_config(&mut self, text: &str) -> Result<(), CliError> {
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split_pair(line)?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Resolves parsed flags against an optional config file and defaults.
    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let mut spec = ExperimentSpec::default();
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            spec.apply_config(&text)?;
        }
        if !args.function.is_empty() {
            spec.functions = Vec::new();
            for f in &args.function {
                spec.functions.extend(parse_functions(f)?);
            }
        }
        if let Some(r) = args.runs {
            spec.runs = r;
        }
        if !args.eps.is_empty() {
            spec.eps = args.eps.clone();
        }
        if let Some(s) = args.seed {
            spec.base_seed = s;
        }
        if args.budget.is_some() {
            spec.budget = args.budget;
        }
        if let Some(w) = args.workers {
            spec.workers = w;
        }
        if args.out.is_some() {
            spec.out = args.out.clone();
        }
        if args.trace.is_some() {
            spec.trace = args.trace.clone();
        }
        for a in &args.ablate {
            spec.settings.set(a.key(), "true")?;
        }
        for p in &args.params {
            let (k, v) = split_pair(p)?;
            spec.settings.set(k, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.runs == 0 {
            return Err(CliError::Config("runs must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(CliError::Config("accuracy levels must be positive".into()));
        }
        self.run_config(FunctionId::F1, 0).validate()?;
        Ok(())
    }

    pub fn run_config(&self, function: FunctionId, run: usize) -> RunConfig {
        let mut cfg = RunConfig::new(function, self.base_seed.wrapping_add(run as u64));
        cfg.accuracy = self.eps.iter().copied().fold(f64::INFINITY, f64::min);
        cfg.budget = self.budget;
        cfg.settings = self.settings.clone();
        cfg
    }
}

/// Executes one run and writes its trace files when a trace directory is set.
fn run_one(spec: &ExperimentSpec, function: FunctionId, run: usize) -> Result<RunReport, CliError> {
    let out = run_traced(&spec.run_config(function, run))?;
    if let Some(dir) = &spec.trace {
        let stem = dir.join(format!("{function}_run{run:03}"));
        let path = stem.with_extension("jsonl");
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        out.archive.write_jsonl(&mut w).map_err(io_err(&path))?;
        w.flush().map_err(io_err(&path))?;
        write_json(&stem, "report", &out.report)?;
        write_json(&stem, "sds", &out.sds_events)?;
    }
    Ok(out.report)
}

fn write_json<T: Serialize>(stem: &Path, suffix: &str, value: &T) -> Result<(), CliError> {
    let path = PathBuf::from(format!("{}_{suffix}.json", stem.display()));
    let text = serde_json::to_string_pretty(value).expect("trace types serialise");
    fs::write(&path, text).map_err(io_err(&path))
}

/// Runs the whole battery and returns one summary per function and accuracy.
pub fn execute(spec: &ExperimentSpec) -> Result<Vec<Summary>, CliError> {
    if let Some(dir) = &spec.trace {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start workers: {e}")))?;
    let mut rows = Vec::new();
    for &function in &spec.functions {
        let reports: Vec<RunReport> = pool.install(|| {
            (0..spec.runs)
                .into_par_iter()
                .map(|i| run_one(spec, function, i))
                .collect::<Result<_, _>>()
        })?;
        for &eps in &spec.eps {
            rows.push(summarize(function, eps, &reports));
        }
    }
    Ok(rows)
}

/// Parses `argv`, runs the battery and writes the CSV. Returns the exit code.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_cli(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lade: {e}");
            e.exit_code()
        }
    }
}

fn run_cli(args: &Args) -> Result<(), CliError> {
    let spec = ExperimentSpec::from_args(args)?;
    let rows = execute(&spec)?;
    let csv = to_csv(&rows);
    match &spec.out {
        Some(path) => fs::write(path, csv).map_err(io_err(path)),
        None => io::stdout()
            .write_all(csv.as_bytes())
            .map_err(io_err(Path::new("<stdout>"))),
    }
}
