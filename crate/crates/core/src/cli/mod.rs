//! Command-line front end: configuration, orchestration and output.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 a
//! verification verdict failed, 3 a non-finite number was met.

pub mod commands;
pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::error::{Error, Result};
use crate::virial::Verdict;
use commands::run_command;
use config::{merge, parse_config_text, CommandId, Format, RunConfig};
use output::{write_atomic, OutputRecord, SCHEMA_VERSION};

pub use commands::Payload;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "BRAVL_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    VerificationFailed = 2,
    NonFinite = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl From<&Error> for ExitStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NonFinite(_) | Error::NearSingular { .. } | Error::ZeroNorm | Error::GridMismatch(_) => {
                ExitStatus::NonFinite
            }
            _ => ExitStatus::Usage,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bravl",
    version,
    about = "Spectral toolkit for partial-wave channels of the Brown-Ravenhall operator"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: CommandId,
    /// Flat key=value file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Partial wave, e.g. `0,1/2` or `1,-1/2`.
    #[arg(long, value_name = "L,S", allow_hyphen_values = true)]
    pub channel: Option<String>,
    /// Coupling ν = αZ; a comma-separated list for `sweep`.
    #[arg(long, value_name = "X", allow_hyphen_values = true)]
    pub nu: Option<String>,
    #[arg(long, value_name = "A")]
    pub alpha: Option<String>,
    /// Nuclear charge; a comma-separated list for `sweep`.
    #[arg(long = "Z", value_name = "Z")]
    pub z: Option<String>,
    /// `massive` or `massless`.
    #[arg(long)]
    pub mass: Option<String>,
    /// Grid refinement sequence.
    #[arg(long, value_name = "N1,N2,...")]
    pub nodes: Option<String>,
    /// Scale of the rational momentum map.
    #[arg(long, value_name = "S")]
    pub sigma: Option<String>,
    /// Verification tolerance of the command.
    #[arg(long, value_name = "T")]
    pub tol: Option<String>,
    /// `subtraction` or `cell_average`.
    #[arg(long)]
    pub diagonal: Option<String>,
    #[arg(long, value_name = "K")]
    pub quadrature_level: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
    /// `json`, `csv` or both.
    #[arg(long, value_name = "json,csv")]
    pub format: Option<String>,
    /// Omit the timestamp so reruns are byte-identical.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long)]
    pub allow_supercritical: bool,
    /// Write the finest matrix as CSV with a JSON sidecar (`spectrum`).
    #[arg(long)]
    pub export_matrix: bool,
    /// Write finest-grid bound-state eigenfunctions as CSV (`spectrum`).
    #[arg(long)]
    pub export_eigenvectors: bool,
}

impl Cli {
    fn flag_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let text = [
            ("channel", &self.channel),
            ("nu", &self.nu),
            ("alpha", &self.alpha),
            ("Z", &self.z),
            ("mass", &self.mass),
            ("nodes", &self.nodes),
            ("sigma", &self.sigma),
            ("tol", &self.tol),
            ("diagonal", &self.diagonal),
            ("quadrature_level", &self.quadrature_level),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (k, v) in text {
            if let Some(v) = v {
                m.insert(k.to_string(), v.clone());
            }
        }
        let switches = [
            ("deterministic", self.deterministic),
            ("allow_supercritical", self.allow_supercritical),
            ("export_matrix", self.export_matrix),
            ("export_eigenvectors", self.export_eigenvectors),
        ];
        for (k, on) in switches {
            if on {
                m.insert(k.to_string(), "true".into());
            }
        }
        m
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        RunConfig::from_map(self.command, &merge(file, self.flag_map()))
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs a configuration and writes its record and tables into `config.out`.
pub fn execute(config: &RunConfig) -> Result<(OutputRecord, Vec<PathBuf>)> {
    let out = run_command(config)?;
    let record = OutputRecord {
        schema_version: SCHEMA_VERSION,
        tool: format!("bravl {}", env!("CARGO_PKG_VERSION")),
        timestamp: (!config.deterministic)
            .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        command: config.command,
        config: config.clone(),
        payload: out.payload,
        verdicts: out.verdicts,
        warnings: out.warnings,
    };
    let dir = &config.out;
    let mut written = Vec::new();
    if config.wants(Format::Json) {
        written.push(write_atomic(
            dir,
            &format!("{}.json", config.command),
            record.to_json()?.as_bytes(),
        )?);
    }
    if config.wants(Format::Csv) {
        for (stem, table) in &out.tables {
            written.push(write_atomic(dir, &format!("{stem}.csv"), &table.to_csv()?)?);
        }
    }
    for (name, bytes) in &out.exports {
        written.push(write_atomic(dir, name, bytes)?);
    }
    Ok((record, written))
}

fn status_of(record: &OutputRecord) -> ExitStatus {
    if record.verdicts.iter().any(|v| v.verdict == Verdict::Fail) {
        ExitStatus::VerificationFailed
    } else {
        ExitStatus::Success
    }
}

pub fn run<I, T>(args: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitStatus::Usage
            } else {
                ExitStatus::Success
            };
        }
    };
    let result = configure_threads()
        .and_then(|()| cli.run_config())
        .and_then(|c| execute(&c));
    match result {
        Ok((record, written)) => {
            for w in &record.warnings {
                eprintln!("warning: {w}");
            }
            for v in &record.verdicts {
                println!("{} {}: {}", v.verdict, v.name, v.detail);
            }
            for path in written {
                println!("wrote {}", path.display());
            }
            status_of(&record)
        }
        Err(e) => {
            eprintln!("bravl: {e}");
            ExitStatus::from(&e)
        }
    }
}
