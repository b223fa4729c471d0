//! Flat `key = value` scenario files and their validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::frw::TimeConvention;
use crate::numerics::IvpSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Zlambda,
    Trace,
    TraceDecoupled,
    FrwCheck,
    Crossing,
    Bounds,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Zlambda => "zlambda",
            Command::Trace => "trace",
            Command::TraceDecoupled => "trace-decoupled",
            Command::FrwCheck => "frw-check",
            Command::Crossing => "crossing",
            Command::Bounds => "bounds",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "zlambda" => Command::Zlambda,
            "trace" => Command::Trace,
            "trace-decoupled" | "trace_decoupled" => Command::TraceDecoupled,
            "frw-check" | "frw_check" => Command::FrwCheck,
            "crossing" => Command::Crossing,
            "bounds" => Command::Bounds,
            _ => return Err(format!("unknown command '{s}'")),
        })
    }
}

/// Background model for `trace`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `E = r²/2`, `R₀ = c r`
    Frw,
    /// `E = e₀ r^p`, `R₀ = c r`
    PowerLaw,
    /// `E = 1`, `R₀ = c r`
    UnitEnergy,
}

/// Source of `R[z]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    Luminosity,
    /// Self-consistent open FRW light cone.
    OpenFrw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub command: Option<Command>,
    pub omega_lambda: Option<f64>,
    pub z0: Option<f64>,
    pub z1: Option<f64>,
    pub c: Option<f64>,
    pub c_scale: Option<f64>,
    pub xi0: Option<f64>,
    pub m0: Option<f64>,
    pub r0: Option<f64>,
    pub t0: Option<f64>,
    pub model: ModelKind,
    pub e0: f64,
    pub power: f64,
    pub data: DataKind,
    pub rtol: f64,
    pub atol: f64,
    pub convention: TimeConvention,
    pub alpha: f64,
    pub samples: usize,
    pub out: Option<PathBuf>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            command: None,
            omega_lambda: None,
            z0: None,
            z1: None,
            c: None,
            c_scale: None,
            xi0: None,
            m0: None,
            r0: None,
            t0: None,
            model: ModelKind::Frw,
            e0: 1.0,
            power: 2.0,
            data: DataKind::Luminosity,
            rtol: 1e-10,
            atol: 1e-12,
            convention: TimeConvention::ConstraintConsistent,
            alpha: 0.1,
            samples: 201,
            out: None,
        }
    }
}

/// Where a bad value came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
    Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Origin,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.origin {
            Origin::File { path, line } => write!(
                f,
                "{}:{line}: field '{}': {}",
                path.display(),
                self.field,
                self.message
            ),
            Origin::Flag => write!(
                f,
                "flag --{}: {}",
                self.field.replace('_', "-"),
                self.message
            ),
            Origin::Scenario => write!(f, "field '{}': {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn num(v: &str) -> Result<f64, String> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("invalid number '{v}'"))
}

fn positive(v: &str) -> Result<f64, String> {
    let x = num(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive, got {x}"))
    }
}

impl Scenario {
    /// Sets one field; keys use `_` or `-` interchangeably.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "command" => self.command = Some(v.parse()?),
            "omega" | "omega_lambda" => {
                let o = num(v)?;
                if !(0.0..=1.0).contains(&o) {
                    return Err(format!("must lie in [0, 1], got {o}"));
                }
                self.omega_lambda = Some(o);
            }
            "z0" => self.z0 = Some(num(v)?),
            "z1" => self.z1 = Some(num(v)?),
            "range" => {
                let (a, b) = v
                    .split_once(':')
                    .ok_or_else(|| format!("expected a:b, got '{v}'"))?;
                self.z0 = Some(num(a)?);
                self.z1 = Some(num(b)?);
            }
            "c" => self.c = Some(positive(v)?),
            "c_scale" => self.c_scale = Some(positive(v)?),
            "xi0" => self.xi0 = Some(num(v)?),
            "m0" => self.m0 = Some(num(v)?),
            "r0" => self.r0 = Some(positive(v)?),
            "t0" => self.t0 = Some(num(v)?),
            "model" => {
                self.model = match v {
                    "frw" => ModelKind::Frw,
                    "power-law" | "power_law" => ModelKind::PowerLaw,
                    "unit-energy" | "unit_energy" => ModelKind::UnitEnergy,
                    _ => return Err(format!("unknown model '{v}' (frw|power-law|unit-energy)")),
                }
            }
            "e0" => self.e0 = num(v)?,
            "power" => self.power = num(v)?,
            "data" => {
                self.data = match v {
                    "luminosity" => DataKind::Luminosity,
                    "open-frw" | "open_frw" => DataKind::OpenFrw,
                    _ => return Err(format!("unknown data '{v}' (luminosity|open-frw)")),
                }
            }
            "rtol" => self.rtol = positive(v)?,
            "atol" => self.atol = positive(v)?,
            "convention" => self.convention = v.parse().map_err(|e: crate::Error| e.to_string())?,
            "alpha" => self.alpha = positive(v)?,
            "samples" => {
                let n: usize = v.parse().map_err(|_| format!("invalid count '{v}'"))?;
                if n < 2 {
                    return Err(format!("need at least 2 samples, got {n}"));
                }
                self.samples = n;
            }
            "out" => self.out = Some(PathBuf::from(v)),
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Applies a scenario file; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = Origin::File {
                path: path.to_path_buf(),
                line: i + 1,
            };
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError {
                origin: origin.clone(),
                field: line.to_string(),
                message: "expected key = value".into(),
            })?;
            self.set(k, v).map_err(|message| ConfigError {
                origin,
                field: k.trim().to_string(),
                message,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: Origin::File {
                path: path.to_path_buf(),
                line: 0,
            },
            field: "file".into(),
            message: e.to_string(),
        })?;
        let mut s = Self::default();
        s.apply_text(&text, path)?;
        Ok(s)
    }

    pub fn ivp_spec(&self) -> IvpSpec {
        IvpSpec::with_tolerances(self.rtol, self.atol)
    }

    fn missing(field: &str, cmd: Command) -> ConfigError {
        ConfigError {
            origin: Origin::Scenario,
            field: field.into(),
            message: format!("required by {}", cmd.name()),
        }
    }

    pub fn omega(&self, cmd: Command) -> Result<f64, ConfigError> {
        self.omega_lambda.ok_or_else(|| Self::missing("omega", cmd))
    }

    pub fn range(&self, cmd: Command) -> Result<(f64, f64), ConfigError> {
        let z0 = self.z0.ok_or_else(|| Self::missing("z0", cmd))?;
        let z1 = self.z1.ok_or_else(|| Self::missing("z1", cmd))?;
        if !(z0 > 0.0 && z1 > z0) {
            return Err(ConfigError {
                origin: Origin::Scenario,
                field: "range".into(),
                message: format!("need 0 < z0 < z1, got {z0}:{z1}"),
            });
        }
        Ok((z0, z1))
    }

    /// Checks the fields the command needs before anything runs.
    pub fn validate(&self) -> Result<Command, ConfigError> {
        let cmd = self.command.ok_or_else(|| ConfigError {
            origin: Origin::Scenario,
            field: "command".into(),
            message: "no command given".into(),
        })?;
        match cmd {
            Command::Zlambda => {
                self.omega(cmd)?;
            }
            Command::Trace | Command::FrwCheck | Command::Crossing => {
                self.omega(cmd)?;
                self.range(cmd)?;
            }
            Command::TraceDecoupled => {
                self.omega(cmd)?;
                self.range(cmd)?;
                if self.xi0.is_none() && self.m0.is_none() {
                    return Err(Self::missing("xi0", cmd));
                }
            }
            Command::Bounds => {
                if self.xi0.is_some() {
                    self.omega(cmd)?;
                    self.range(cmd)?;
                }
            }
        }
        if self.c.is_some() && self.c_scale.is_some() {
            return Err(ConfigError {
                origin: Origin::Scenario,
                field: "c_scale".into(),
                message: "give either c or c_scale, not both".into(),
            });
        }
        Ok(cmd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_with_comments_and_range() {
        let mut s = Scenario::default();
        let text = "# crossing run\ncommand = crossing\nomega = 0\nrange = 1:1.5  # across z_lambda\nc-scale = 1.2\n";
        s.apply_text(text, Path::new("x.cfg")).unwrap();
        assert_eq!(s.command, Some(Command::Crossing));
        assert_eq!((s.z0, s.z1), (Some(1.0), Some(1.5)));
        assert_eq!(s.c_scale, Some(1.2));
        assert_eq!(s.validate().unwrap(), Command::Crossing);
    }

    #[test]
    fn bad_line_reports_position() {
        let mut s = Scenario::default();
        let err = s
            .apply_text("omega = 0\nz0 = abc\n", Path::new("s.cfg"))
            .unwrap_err();
        assert_eq!(err.to_string(), "s.cfg:2: field 'z0': invalid number 'abc'");
        let err = s
            .apply_text("\n\nfoo = 1\n", Path::new("s.cfg"))
            .unwrap_err();
        assert!(err.to_string().starts_with("s.cfg:3:"));
    }

    #[test]
    fn missing_required_field() {
        let mut s = Scenario::default();
        s.set("command", "trace-decoupled").unwrap();
        s.set("omega", "0").unwrap();
        s.set("range", "2:10").unwrap();
        assert_eq!(s.validate().unwrap_err().field, "xi0");
    }

    #[test]
    fn tolerances_must_be_positive() {
        let mut s = Scenario::default();
        assert!(s.set("rtol", "0").is_err());
        assert!(s.set("omega", "1.5").is_err());
        assert!(s.set("samples", "1").is_err());
    }
}
