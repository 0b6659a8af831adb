//! Front end for `glauber-core`: argument parsing, dispatch, and the run
//! manifest written alongside every result.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical or verification
//! failure, 3 cap or timeout. Data goes to standard output or `--out`;
//! messages go to standard error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use glauber_core::ModelParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub mod args;
mod commands;
pub mod output;

pub use output::emit_curve;

use args::Cli;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Usage,
    Numeric,
    Cap,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Usage => EXIT_USAGE,
            FailureKind::Numeric => EXIT_NUMERIC,
            FailureKind::Cap => EXIT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Usage,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Numeric,
            message: message.into(),
        }
    }

    pub fn cap(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Cap,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<glauber_core::Error> for Failure {
    fn from(e: glauber_core::Error) -> Self {
        use glauber_core::Error::*;
        let kind = match e {
            Domain(_) | Refused(_) => FailureKind::Usage,
            Verification(_) | Inconsistency(_) | InsufficientData(_) => FailureKind::Numeric,
            CapExceeded { .. } => FailureKind::Cap,
        };
        Failure {
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// File path, or `-` for standard output.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl OutputDigest {
    fn of(path: &str, data: &[u8]) -> Self {
        OutputDigest {
            path: path.to_string(),
            bytes: data.len() as u64,
            sha256: format!("{:x}", Sha256::digest(data)),
        }
    }
}

/// Everything needed to reproduce a run and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Arguments as given.
    pub command_line: Vec<String>,
    /// Arguments after merging `--config` and pinning any generated seed;
    /// running these reproduces the outputs.
    pub effective_args: Vec<String>,
    pub params: Option<ModelParams>,
    pub seeds: Vec<u64>,
    pub seed_generated: bool,
    pub caps: Vec<u64>,
    pub threads: Option<usize>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputDigest>,
    pub exit_code: i32,
}

/// Inputs a command reports for the manifest.
#[derive(Debug, Default)]
pub(crate) struct RunRecord {
    pub params: Option<ModelParams>,
    pub seeds: Vec<u64>,
    pub seed_generated: bool,
    pub caps: Vec<u64>,
}

impl RunRecord {
    /// The given seed, or a fresh one that is then recorded as generated.
    pub fn seed(&mut self, given: Option<u64>) -> u64 {
        let seed = given.unwrap_or_else(|| {
            use std::hash::BuildHasher;
            self.seed_generated = true;
            std::collections::hash_map::RandomState::new().hash_one(std::time::SystemTime::now())
        });
        self.seeds.push(seed);
        seed
    }
}

/// Result of a command. `status` carries a failure that still leaves data
/// worth writing, such as censored runs.
pub(crate) struct Outcome {
    pub data: Vec<u8>,
    /// Secondary JSON (sweep summaries and fits).
    pub side: Option<Vec<u8>>,
    pub status: Result<(), Failure>,
}

const SUBCOMMANDS: [&str; 9] = [
    "analyze",
    "critical",
    "exact",
    "simulate",
    "couple",
    "sweep",
    "phase-diagram",
    "curve",
    "oracle",
];

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn config_tokens(path: &str) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {path}: {e}")))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("config {path} is not valid JSON: {e}")))?;
    let map = value
        .as_object()
        .ok_or_else(|| Failure::usage(format!("config {path} must hold a JSON object")))?;
    let mut tokens = Vec::new();
    for (key, v) in map {
        if key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &serde_json::Value| match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            _ => Err(Failure::usage(format!(
                "config key {key:?} has an unsupported value {v}"
            ))),
        };
        match v {
            serde_json::Value::Null | serde_json::Value::Bool(false) => {}
            serde_json::Value::Bool(true) => tokens.push(flag),
            serde_json::Value::Array(items) => {
                let parts: Result<Vec<String>, Failure> = items.iter().map(scalar).collect();
                tokens.push(flag);
                tokens.push(parts?.join(","));
            }
            other => {
                tokens.push(flag);
                tokens.push(scalar(other)?);
            }
        }
    }
    Ok(tokens)
}

/// Splices config-file flags in right after the subcommand name so that
/// flags given on the command line, which come later, take precedence.
fn merge_config(argv: &[String]) -> Result<Vec<String>, Failure> {
    let Some(path) = config_path(argv) else {
        return Ok(argv.to_vec());
    };
    let tokens = config_tokens(&path)?;
    let at = argv
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .ok_or_else(|| Failure::usage("--config needs a subcommand"))?;
    let mut merged = argv[..=at].to_vec();
    merged.extend(tokens);
    merged.extend_from_slice(&argv[at + 1..]);
    Ok(merged)
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, data: &[u8]) -> Result<(), Failure> {
    fs::write(path, data)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code.
pub fn dispatch(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let started = Instant::now();
    let effective = match merge_config(argv) {
        Ok(a) => a,
        Err(f) => {
            let _ = writeln!(stderr, "error: {f}");
            return f.kind.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(effective.iter().map(OsString::from)) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };

    let mut record = RunRecord::default();
    let outcome = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| commands::run(&cli, &mut record)),
            Err(e) => Err(Failure::usage(format!("cannot start {t} threads: {e}"))),
        },
        None => commands::run(&cli, &mut record),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(f) => {
            let _ = writeln!(stderr, "error: {f}");
            return f.kind.exit_code();
        }
    };

    let mut exit = match &outcome.status {
        Ok(()) => EXIT_OK,
        Err(f) => f.kind.exit_code(),
    };
    let mut outputs = Vec::new();
    let written = match &cli.out {
        Some(path) => write_file(path, &outcome.data).map(|()| {
            outputs.push(OutputDigest::of(&path.to_string_lossy(), &outcome.data));
        }),
        None => {
            let _ = stdout.write_all(&outcome.data);
            outputs.push(OutputDigest::of("-", &outcome.data));
            Ok(())
        }
    };
    let side_path = commands::side_path(&cli);
    let written = written.and_then(|()| match (&outcome.side, side_path) {
        (Some(side), Some(path)) => write_file(&path, side).map(|()| {
            outputs.push(OutputDigest::of(&path.to_string_lossy(), side));
        }),
        (Some(side), None) => {
            let _ = stderr.write_all(side);
            Ok(())
        }
        (None, _) => Ok(()),
    });
    if let Err(f) = written {
        let _ = writeln!(stderr, "error: {f}");
        return f.kind.exit_code();
    }
    if let Err(f) = &outcome.status {
        let _ = writeln!(stderr, "error: {f}");
    }

    let mut effective_args = effective;
    if record.seed_generated {
        if let Some(&seed) = record.seeds.first() {
            effective_args.push("--seed".to_string());
            effective_args.push(seed.to_string());
        }
    }
    let manifest = RunManifest {
        tool: "glauber".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command_line: argv.to_vec(),
        effective_args,
        params: record.params,
        seeds: record.seeds,
        seed_generated: record.seed_generated,
        caps: record.caps,
        threads: cli.threads,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs,
        exit_code: exit,
    };
    match &cli.out {
        Some(path) => {
            if let Err(f) = write_file(&sibling(path, ".manifest.json"), &output::json(&manifest)) {
                let _ = writeln!(stderr, "error: {f}");
                exit = f.kind.exit_code();
            }
        }
        None => {
            let line = serde_json::to_string(&manifest).expect("manifest serializes");
            let _ = writeln!(stderr, "manifest: {line}");
        }
    }
    exit
}
