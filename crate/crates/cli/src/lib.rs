//! The `scenekg` command line: generate synthetic corpora, build scene graphs
//! from world snapshots, analyze a training corpus, score scenes against the
//! resulting model and correlate scores with external per-scene metrics.

pub mod commands;
pub mod config;
pub mod stats;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::LoadedConfig;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation, missing input file or invalid configuration. Exit 2.
    #[error("{0}")]
    Usage(String),
    /// The inputs were read but their content is unusable. Exit 1.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "scenekg", version, about = "Sub-scene coverage, complexity and competence for driving scene corpora")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Fixed sufficiency threshold n, overriding the configured policy.
    #[arg(long, global = true)]
    pub n: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus and its ground-truth manifest.
    Generate {
        /// Generator spec (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Corpus output (NDJSON).
        #[arg(long)]
        out: PathBuf,
        /// Manifest output; defaults to `<out stem>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Also write the world snapshots (NDJSON).
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Build scene graphs from world snapshots (JSON or NDJSON).
    Build {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Placement report listing dropped actors per scene.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Count signatures and calibrate complexity over a training corpus.
    Analyze {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every scene of a corpus against a model.
    Score {
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pearson correlation between a score column and an external metric.
    Correlate {
        /// Scores CSV as written by `score`.
        report: PathBuf,
        /// CSV with a `scene_id` column and a metric column.
        metric: PathBuf,
        /// Column of the scores CSV to correlate.
        #[arg(long, default_value = "competence")]
        column: String,
        /// Metric column; defaults to the first column other than `scene_id`.
        #[arg(long)]
        metric_column: Option<String>,
        /// Directory to write `correlation.json` into.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pattern catalog tools.
    Patterns {
        #[command(subcommand)]
        action: PatternsCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum PatternsCommand {
    /// Parse and validate pattern files, or the configured catalog.
    Check { files: Vec<PathBuf> },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = LoadedConfig::load(cli.config.as_deref())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| commands::dispatch(&cli, &config))
}

/// Reads a whole input file; a missing or unreadable file is a usage error.
pub fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn write_output(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| write_error(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| write_error(path, e))
}

pub fn write_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("cannot write {}: {e}", path.display()))
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    write_output(path, text.as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `x` with exactly nine significant digits in positional notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if x < 0.0 { "-" } else { "" };
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{digits}", "0".repeat(point.unsigned_abs() as usize))
    } else if point as usize >= digits.len() {
        format!("{digits}{}", "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    format!("{sign}{body}")
}
