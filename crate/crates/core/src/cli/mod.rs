//! Command-line front end: scenarios in, CSV / JSON / plot files out.
//!
//! Exit codes: 0 success, 1 configuration error, 2 run ended at a singular
//! point.

pub mod commands;
pub mod report;
pub mod scenario;
pub mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use commands::{EXIT_CONFIG, EXIT_OK, EXIT_SINGULAR};
pub use report::{RunOutcome, RunReport, Table};
pub use scenario::{Command, ConfigError, Scenario};
pub use sweep::{sweep, SweepParam, SweepReport};

#[derive(Debug, Parser)]
#[command(
    name = "ltb-redshift",
    version,
    about = "LTB null-geodesic systems driven by luminosity-distance data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Critical redshift z_Λ where dR/dz vanishes
    Zlambda(Flags),
    /// General system for a chosen background model
    Trace(Flags),
    /// Constant-energy system with mass bound certificates
    TraceDecoupled(Flags),
    /// FRW closed forms against the general system
    FrwCheck(Flags),
    /// Integration through z_Λ for R₀ = c r
    Crossing(Flags),
    /// z_Λ bounds on the Ω grid, plus mass bounds when xi0 is given
    Bounds(Flags),
    /// Runs the command named in a scenario file
    Run {
        file: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Repeats a command over a list of parameter values
    Sweep {
        /// Command to repeat (defaults to the scenario file's)
        #[arg(long)]
        of: Option<String>,
        #[arg(long)]
        param: String,
        /// Comma-separated values; may be empty
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
        #[command(flatten)]
        flags: Flags,
    },
}

/// Flags shared by all subcommands; they override the scenario file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Scenario file with key = value lines
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub z0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub z1: Option<String>,
    /// z0:z1
    #[arg(long)]
    pub range: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// c as a multiple of c_Λ
    #[arg(long, allow_hyphen_values = true)]
    pub c_scale: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub m0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub r0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<String>,
    /// frw | power-law | unit-energy
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub e0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub power: Option<String>,
    /// luminosity | open-frw
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub rtol: Option<String>,
    #[arg(long)]
    pub atol: Option<String>,
    /// sqrt2 | consistent
    #[arg(long)]
    pub convention: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    /// Output directory for CSV, JSON and .dat files
    #[arg(long)]
    pub out: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("omega", &self.omega),
            ("range", &self.range),
            ("z0", &self.z0),
            ("z1", &self.z1),
            ("c", &self.c),
            ("c_scale", &self.c_scale),
            ("xi0", &self.xi0),
            ("m0", &self.m0),
            ("r0", &self.r0),
            ("t0", &self.t0),
            ("model", &self.model),
            ("e0", &self.e0),
            ("power", &self.power),
            ("data", &self.data),
            ("rtol", &self.rtol),
            ("atol", &self.atol),
            ("convention", &self.convention),
            ("alpha", &self.alpha),
            ("samples", &self.samples),
            ("out", &self.out),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    /// Scenario from `base_file` (if any), then `--config`, then the flags.
    pub fn scenario(
        &self,
        base_file: Option<&Path>,
        command: Option<Command>,
    ) -> Result<Scenario, ConfigError> {
        let mut s = match base_file {
            Some(p) => Scenario::from_file(p)?,
            None => Scenario::default(),
        };
        if let Some(p) = &self.config {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError {
                origin: scenario::Origin::File {
                    path: p.clone(),
                    line: 0,
                },
                field: "file".into(),
                message: e.to_string(),
            })?;
            s.apply_text(&text, p)?;
        }
        if command.is_some() {
            s.command = command;
        }
        for (k, v) in self.pairs() {
            s.set(k, v).map_err(|message| ConfigError {
                origin: scenario::Origin::Flag,
                field: k.into(),
                message,
            })?;
        }
        Ok(s)
    }
}

/// Runs a scenario; failures are folded into the report's exit code.
pub fn run_scenario(s: &Scenario) -> RunOutcome {
    let start = Instant::now();
    let cmd = match s.validate() {
        Ok(c) => c,
        Err(e) => {
            let mut report = RunReport::new("invalid", s.clone());
            report.exit_code = EXIT_CONFIG;
            report.error = Some(e.to_string());
            return RunOutcome {
                report,
                table: None,
                plots: vec![],
            };
        }
    };
    let mut out = commands::run_command(cmd, s).unwrap_or_else(|e| {
        let mut report = RunReport::new(cmd.name(), s.clone());
        report.exit_code = commands::exit_code_for(&e);
        report.error = Some(e.to_string());
        RunOutcome {
            report,
            table: None,
            plots: vec![],
        }
    });
    out.report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    out
}

fn emit(mut out: RunOutcome, stem: &str, dir: Option<&Path>) -> i32 {
    if let Some(d) = dir {
        if let Err(e) = out.write(d, stem) {
            eprintln!("error: writing {}: {e}", d.display());
            return EXIT_CONFIG;
        }
    }
    println!("{}", out.report.to_json());
    if let Some(e) = &out.report.error {
        eprintln!("error: {e}");
    }
    out.exit_code()
}

fn config_failure(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (flags, file, command) = match &cli.command {
        CliCommand::Zlambda(f) => (f, None, Some(Command::Zlambda)),
        CliCommand::Trace(f) => (f, None, Some(Command::Trace)),
        CliCommand::TraceDecoupled(f) => (f, None, Some(Command::TraceDecoupled)),
        CliCommand::FrwCheck(f) => (f, None, Some(Command::FrwCheck)),
        CliCommand::Crossing(f) => (f, None, Some(Command::Crossing)),
        CliCommand::Bounds(f) => (f, None, Some(Command::Bounds)),
        CliCommand::Run { file, flags } => (flags, Some(file.as_path()), None),
        CliCommand::Sweep { of, flags, .. } => {
            let cmd = match of.as_deref().map(str::parse::<Command>).transpose() {
                Ok(c) => c,
                Err(e) => return config_failure(e),
            };
            (flags, None, cmd)
        }
    };
    let s = match flags.scenario(file, command) {
        Ok(s) => s,
        Err(e) => return config_failure(e),
    };
    let dir = s.out.clone();
    match &cli.command {
        CliCommand::Sweep { param, values, .. } => {
            let param: SweepParam = match param.parse() {
                Ok(p) => p,
                Err(e) => return config_failure(e),
            };
            let values: Result<Vec<f64>, String> = values
                .split(',')
                .filter(|v| !v.trim().is_empty())
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("invalid sweep value '{v}'"))
                })
                .collect();
            let values = match values {
                Ok(v) => v,
                Err(e) => return config_failure(e),
            };
            let Some(cmd) = s.command else {
                return config_failure("sweep needs --of or a scenario command");
            };
            let rep = sweep(&s, cmd, param, &values);
            if let Some(d) = &dir {
                let t = rep.table();
                let json = serde_json::to_string_pretty(&rep).unwrap_or_default();
                let res = std::fs::create_dir_all(d)
                    .and_then(|_| std::fs::write(d.join("sweep.csv"), t.to_csv()))
                    .and_then(|_| std::fs::write(d.join("sweep.json"), &json))
                    .and_then(|_| match t.to_dat("value", sweep::headline(cmd)) {
                        Some(dat) => std::fs::write(
                            d.join(format!("{}_vs_value.dat", sweep::headline(cmd))),
                            dat,
                        ),
                        None => Ok(()),
                    });
                if let Err(e) = res {
                    return config_failure(format!("writing {}: {e}", d.display()));
                }
            }
            println!("{}", serde_json::to_string_pretty(&rep).unwrap_or_default());
            EXIT_OK
        }
        _ => {
            let out = run_scenario(&s);
            let stem = s.command.map(|c| c.name()).unwrap_or("run");
            emit(out, stem, dir.as_deref())
        }
    }
}
