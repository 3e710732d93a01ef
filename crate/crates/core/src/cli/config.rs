use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel_operator::{AssemblyOptions, Channel, DiagonalRule, GridMap, Spin};
use crate::error::{Error, Result};
use crate::kinematics::{critical_nu, PhysicalParams, FINE_STRUCTURE};
use crate::quadrature::QuadratureLevel;
use crate::spectral::{SpectralOptions, StabilityOptions, DEFAULT_SEQUENCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandId {
    Identities,
    Spectrum,
    Virial,
    Bounds,
    Sweep,
}

impl CommandId {
    pub fn name(self) -> &'static str {
        match self {
            CommandId::Identities => "identities",
            CommandId::Spectrum => "spectrum",
            CommandId::Virial => "virial",
            CommandId::Bounds => "bounds",
            CommandId::Sweep => "sweep",
        }
    }

    /// Tolerance used when `tol` is not given.
    pub fn default_tolerance(self) -> f64 {
        match self {
            CommandId::Identities => 1e-8,
            CommandId::Spectrum | CommandId::Sweep => StabilityOptions::default().tolerance,
            CommandId::Virial => 1e-3,
            CommandId::Bounds => 1e-6,
        }
    }
}

impl fmt::Display for CommandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMode {
    Massive,
    Massless,
}

impl FromStr for MassMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "massive" => Ok(MassMode::Massive),
            "massless" => Ok(MassMode::Massless),
            other => Err(Error::Config(format!(
                "mass must be `massive` or `massless`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

/// Keys accepted in a config file and as flag overrides.
pub const KEYS: [&str; 16] = [
    "channel",
    "nu",
    "alpha",
    "Z",
    "mass",
    "nodes",
    "sigma",
    "tol",
    "diagonal",
    "quadrature_level",
    "out",
    "format",
    "deterministic",
    "allow_supercritical",
    "export_matrix",
    "export_eigenvectors",
];

const COUPLING_KEYS: [&str; 3] = ["nu", "alpha", "Z"];

/// Allowed mismatch between `ν` and `αZ` when both are given.
pub const COUPLING_AGREEMENT: f64 = 1e-12;

/// Flat `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", n + 1)))?;
        let key = canonical_key(key.trim())
            .ok_or_else(|| Error::Config(format!("line {}: unknown key `{}`", n + 1, key.trim())))?;
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::Config(format!("line {}: empty value for `{key}`", n + 1)));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{key}`", n + 1)));
        }
    }
    Ok(map)
}

fn canonical_key(key: &str) -> Option<&'static str> {
    let key = if key == "z" { "Z" } else { key };
    KEYS.iter().copied().find(|k| *k == key.replace('-', "_"))
}

/// Applies flag values over file values. Any coupling flag replaces all
/// coupling keys of the file.
pub fn merge(mut file: BTreeMap<String, String>, flags: BTreeMap<String, String>) -> BTreeMap<String, String> {
    if COUPLING_KEYS.iter().any(|k| flags.contains_key(*k)) {
        for k in COUPLING_KEYS {
            file.remove(k);
        }
    }
    file.extend(flags);
    file
}

fn number(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{s}`")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("`{key}` must be finite, got `{s}`")));
    }
    Ok(v)
}

fn list<T>(key: &str, s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(item)
        .collect::<Result<Vec<_>>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("`{key}` expects a comma-separated list")));
    }
    Ok(items)
}

fn flag(key: &str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("`{key}` expects true or false, got `{other}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandId,
    pub channel: Channel,
    /// `ν = αZ` for each requested coupling.
    pub nu: Vec<f64>,
    pub alpha: f64,
    pub mass: MassMode,
    pub nodes: Vec<usize>,
    pub sigma: f64,
    pub tolerance: f64,
    pub diagonal: DiagonalRule,
    pub quadrature_level: QuadratureLevel,
    pub formats: Vec<Format>,
    pub deterministic: bool,
    pub allow_supercritical: bool,
    pub export_matrix: bool,
    pub export_eigenvectors: bool,
    /// Not echoed: where results go does not change them.
    #[serde(skip)]
    pub out: PathBuf,
}

/// Coupling used by `bounds` when none is given: the `ν = 3/4` edge.
pub const BOUNDS_DEFAULT_NU: f64 = 0.75;

impl RunConfig {
    pub fn from_map(command: CommandId, map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(key) = map.keys().find(|k| canonical_key(k).is_none()) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        let get = |k: &str| map.get(k).map(String::as_str);

        let channel = match get("channel") {
            Some(s) => s.parse()?,
            None => Channel::new(0, Spin::Up)?,
        };
        let alpha = get("alpha").map(|s| number("alpha", s)).transpose()?;
        if alpha.is_some_and(|a| a <= 0.0) {
            return Err(Error::Config("`alpha` must be positive".into()));
        }
        let nus = get("nu").map(|s| list("nu", s, |x| number("nu", x))).transpose()?;
        let charges = get("Z").map(|s| list("Z", s, |x| number("Z", x))).transpose()?;
        let a = alpha.unwrap_or(FINE_STRUCTURE);
        let nu = match (nus, charges) {
            (None, None) => {
                if alpha.is_some() {
                    return Err(Error::Config("`alpha` needs `Z`".into()));
                }
                Vec::new()
            }
            (Some(nu), None) => nu,
            (None, Some(z)) => z.iter().map(|z| a * z).collect(),
            (Some(nu), Some(z)) => {
                if nu.len() != z.len() {
                    return Err(Error::Config("`nu` and `Z` lists differ in length".into()));
                }
                for (n, z) in nu.iter().zip(&z) {
                    if (n - a * z).abs() > COUPLING_AGREEMENT {
                        return Err(Error::Config(format!(
                            "nu = {n} disagrees with alpha*Z = {} beyond {COUPLING_AGREEMENT:e}",
                            a * z
                        )));
                    }
                }
                nu
            }
        };

        let allow_supercritical = get("allow_supercritical")
            .map(|s| flag("allow_supercritical", s))
            .transpose()?
            .unwrap_or(false);
        for &n in &nu {
            if n < 0.0 {
                return Err(Error::Config(format!("nu must be >= 0, got {n}")));
            }
            if n >= critical_nu() && !allow_supercritical {
                return Err(Error::Supercritical {
                    nu: n,
                    critical: critical_nu(),
                });
            }
        }
        let nu = match command {
            CommandId::Identities => nu,
            CommandId::Bounds if nu.is_empty() => vec![BOUNDS_DEFAULT_NU],
            CommandId::Spectrum | CommandId::Virial | CommandId::Bounds if nu.len() != 1 => {
                return Err(Error::Config(format!(
                    "`{command}` needs exactly one coupling (nu, or alpha and Z), got {}",
                    nu.len()
                )))
            }
            CommandId::Sweep if nu.is_empty() => {
                return Err(Error::Config("`sweep` needs a list of couplings".into()));
            }
            _ => nu,
        };

        let mass = get("mass").map(str::parse).transpose()?.unwrap_or(MassMode::Massive);
        if mass == MassMode::Massless && matches!(command, CommandId::Virial | CommandId::Sweep) {
            return Err(Error::Config(format!("`{command}` needs a massive run")));
        }
        let nodes = match get("nodes") {
            Some(s) => list("nodes", s, |x| {
                x.parse::<usize>()
                    .map_err(|_| Error::Config(format!("`nodes` expects integers, got `{x}`")))
            })?,
            None => DEFAULT_SEQUENCE.to_vec(),
        };
        let sigma = get("sigma").map(|s| number("sigma", s)).transpose()?.unwrap_or(1.0);
        GridMap::rational(sigma)?;
        let tolerance = get("tol")
            .map(|s| number("tol", s))
            .transpose()?
            .unwrap_or(command.default_tolerance());
        if tolerance <= 0.0 {
            return Err(Error::Config("`tol` must be positive".into()));
        }
        let diagonal = get("diagonal").map(str::parse).transpose()?.unwrap_or_default();
        let quadrature_level = match get("quadrature_level") {
            Some(s) => QuadratureLevel(
                s.parse()
                    .map_err(|_| Error::Config(format!("`quadrature_level` expects an integer, got `{s}`")))?,
            ),
            None => QuadratureLevel::DEFAULT,
        };
        let mut formats = match get("format") {
            Some(s) => list("format", s, str::parse)?,
            None => vec![Format::Json, Format::Csv],
        };
        formats.sort();
        formats.dedup();
        let boolean = |k: &str| get(k).map(|s| flag(k, s)).transpose().map(Option::unwrap_or_default);

        Ok(RunConfig {
            command,
            channel,
            nu,
            alpha: a,
            mass,
            nodes,
            sigma,
            tolerance,
            diagonal,
            quadrature_level,
            formats,
            deterministic: boolean("deterministic")?,
            allow_supercritical,
            export_matrix: boolean("export_matrix")?,
            export_eigenvectors: boolean("export_eigenvectors")?,
            out: PathBuf::from(get("out").unwrap_or("bravl-out")),
        })
    }

    pub fn params(&self, nu: f64) -> Result<PhysicalParams> {
        let mass = match self.mass {
            MassMode::Massive => 1.0,
            MassMode::Massless => 0.0,
        };
        PhysicalParams::from_alpha_z(self.alpha, nu / self.alpha)?.with_mass(mass)
    }

    pub fn spectral_options(&self) -> Result<SpectralOptions> {
        let stability = match self.command {
            CommandId::Spectrum | CommandId::Sweep => StabilityOptions {
                tolerance: self.tolerance,
                ..StabilityOptions::default()
            },
            _ => StabilityOptions::default(),
        };
        Ok(SpectralOptions {
            map: GridMap::rational(self.sigma)?,
            assembly: AssemblyOptions {
                rule: self.diagonal,
                level: self.quadrature_level,
            },
            stability,
            allow_supercritical: self.allow_supercritical,
        })
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn parses_comments_and_blank_lines() {
        let m = parse_config_text("# run\nchannel = 1,-1/2\n\nnu=0.5 # coupling\nnodes = 100, 200,400\n").unwrap();
        assert_eq!(m["channel"], "1,-1/2");
        assert_eq!(m["nu"], "0.5");
        let c = RunConfig::from_map(CommandId::Spectrum, &m).unwrap();
        assert_eq!(c.channel, Channel::new(1, Spin::Down).unwrap());
        assert_eq!(c.nodes, vec![100, 200, 400]);
        assert_eq!(c.tolerance, 1e-4);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_config_text("nu 0.5").is_err());
        assert!(parse_config_text("colour = red").is_err());
        assert!(parse_config_text("nu = 0.5\nnu = 0.6").is_err());
        assert!(parse_config_text("nu =").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = map(&[("nu", "0.5"), ("sigma", "2")]);
        let flags = map(&[("Z", "60"), ("sigma", "3")]);
        let merged = merge(file, flags);
        assert!(!merged.contains_key("nu"));
        assert_eq!(merged["sigma"], "3");
        let c = RunConfig::from_map(CommandId::Spectrum, &merged).unwrap();
        assert!((c.nu[0] - 60.0 * FINE_STRUCTURE).abs() < 1e-15);
    }

    #[test]
    fn coupling_pair_must_agree() {
        let ok = map(&[("nu", "0.5"), ("alpha", "0.01"), ("Z", "50")]);
        assert!(RunConfig::from_map(CommandId::Spectrum, &ok).is_ok());
        let bad = map(&[("nu", "0.5"), ("alpha", "0.01"), ("Z", "50.001")]);
        assert!(RunConfig::from_map(CommandId::Spectrum, &bad).is_err());
        assert!(RunConfig::from_map(CommandId::Spectrum, &map(&[("alpha", "0.01")])).is_err());
        assert!(RunConfig::from_map(CommandId::Spectrum, &map(&[])).is_err());
    }

    #[test]
    fn supercritical_needs_permission() {
        let m = map(&[("nu", "0.95")]);
        assert!(matches!(
            RunConfig::from_map(CommandId::Spectrum, &m),
            Err(Error::Supercritical { .. })
        ));
        let m = map(&[("nu", "0.95"), ("allow_supercritical", "true")]);
        assert!(RunConfig::from_map(CommandId::Spectrum, &m).is_ok());
    }

    #[test]
    fn command_specific_requirements() {
        assert_eq!(
            RunConfig::from_map(CommandId::Bounds, &map(&[])).unwrap().nu,
            vec![0.75]
        );
        assert!(RunConfig::from_map(CommandId::Identities, &map(&[])).is_ok());
        assert!(RunConfig::from_map(CommandId::Spectrum, &map(&[("nu", "0.1,0.2")])).is_err());
        assert!(RunConfig::from_map(CommandId::Sweep, &map(&[("nu", "0.1,0.2")])).is_ok());
        let m = map(&[("nu", "0.1"), ("mass", "massless")]);
        assert!(RunConfig::from_map(CommandId::Virial, &m).is_err());
        assert!(RunConfig::from_map(CommandId::Spectrum, &m).is_ok());
        assert!(RunConfig::from_map(CommandId::Identities, &map(&[("tol", "-1")])).is_err());
        assert!(RunConfig::from_map(CommandId::Identities, &map(&[("format", "xml")])).is_err());
    }
}
