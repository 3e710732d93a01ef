use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempfile::Builder;

use super::commands::Payload;
use super::config::{CommandId, RunConfig};
use crate::channel_operator::ChannelMatrix;
use crate::error::{Error, Result};
use crate::virial::Verdict;

/// Bumped whenever a field of the record or a payload changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "mc2")]
    Mc2,
    #[serde(rename = "dimensionless")]
    Dimensionless,
    #[serde(rename = "momentum_mc")]
    MomentumMc,
    /// Energy unit of massless runs: `c` times the grid scale.
    #[serde(rename = "c_sigma")]
    CSigma,
}

impl Units {
    pub fn tag(self) -> &'static str {
        match self {
            Units::Mc2 => "mc2",
            Units::Dimensionless => "dimensionless",
            Units::MomentumMc => "momentum_mc",
            Units::CSigma => "c_sigma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub units: Units,
}

impl Quantity {
    pub fn new(value: f64, units: Units) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite("emitted quantity"));
        }
        Ok(Self { value, units })
    }

    pub fn dimensionless(value: f64) -> Result<Self> {
        Self::new(value, Units::Dimensionless)
    }

    /// `None` for infinite values that mean "absent".
    pub fn finite_or_none(value: f64, units: Units) -> Result<Option<Self>> {
        if value.is_infinite() {
            Ok(None)
        } else {
            Self::new(value, units).map(Some)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub units: Units,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(values: Vec<f64>, units: Units) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("emitted series"));
        }
        Ok(Self { units, values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl VerdictEntry {
    pub fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            verdict: Verdict::from_bool(ok),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub schema_version: u32,
    pub tool: String,
    /// RFC 3339, absent in deterministic runs.
    pub timestamp: Option<String>,
    pub command: CommandId,
    pub config: RunConfig,
    pub payload: Payload,
    pub verdicts: Vec<VerdictEntry>,
    pub warnings: Vec<String>,
}

impl OutputRecord {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("malformed record: {e}")))
    }
}

/// 17 significant digits, `.` separator, exponent form.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt17(x: Option<f64>) -> String {
    x.map(sig17).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `N`, the nodes, the weights, then the matrix row by row.
pub fn matrix_csv(matrix: &ChannelMatrix) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let n = matrix.len();
    w.write_record([n.to_string()]).map_err(csv_err)?;
    w.write_record(matrix.grid().nodes().iter().map(|&x| sig17(x)))
        .map_err(csv_err)?;
    w.write_record(matrix.grid().weights().iter().map(|&x| sig17(x)))
        .map_err(csv_err)?;
    for i in 0..n {
        w.write_record(matrix.matrix().row(i).iter().map(|&x| sig17(x)))
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn matrix_sidecar(matrix: &ChannelMatrix) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(&matrix.metadata()).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Writes through a temporary file in `dir` and renames it into place.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let target = dir.join(name);
    let mut builder = Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(&target, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(&target, e))?;
    tmp.persist(&target).map_err(|e| io_err(&target, e.error))?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = sig17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
        assert_eq!(sig17(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn non_finite_quantities_are_refused() {
        assert!(Quantity::dimensionless(f64::NAN).is_err());
        assert!(Series::new(vec![1.0, f64::INFINITY], Units::Mc2).is_err());
        assert_eq!(Quantity::finite_or_none(f64::INFINITY, Units::Mc2).unwrap(), None);
        assert!(Quantity::finite_or_none(f64::NAN, Units::Mc2).is_err());
    }

    #[test]
    fn csv_quotes_text_fields() {
        let mut t = Table::new(["name", "value"]);
        t.push(vec!["a,b".into(), sig17(1.0)]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "name,value\n\"a,b\",1.0000000000000000e0\n");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "x.txt", b"one").unwrap();
        let path = write_atomic(dir.path(), "x.txt", b"two").unwrap();
        assert_eq!(std::fs::read(path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
