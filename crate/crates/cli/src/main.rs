use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tddlat::config::{build, parse_entries, Entry, Origin};
use tddlat::deployment::Deployment;
use tddlat::sweep::{run_point, SweepTable};
use tddlat::validation::run_validation;
use tddlat::{run_sweep, ConfigBundle, ConfigError, Mode, RngStream};

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Two-way latency of coupled and decoupled TDD access.
#[derive(Parser, Debug)]
#[command(name = "tddlat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form latencies at the configured point or over a sweep.
    Analytic(Common),
    /// Monte Carlo latencies at the configured point or over a sweep.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Write every trial of every campaign to this CSV file.
        #[arg(long, value_name = "PATH")]
        samples: Option<PathBuf>,
    },
    /// Sweep one variable in the configured mode.
    Sweep(Common),
    /// Run the self-check suite; exits with 1 if any check fails.
    Validate(Common),
    /// One deployment as x,y,role,pair_id rows.
    Snapshot(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file of key = value lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long, value_name = "duda|duca|both")]
    scheme: Option<String>,
    #[arg(long, value_name = "analytic|simulate|both")]
    mode: Option<String>,
    /// VAR:START:STOP:STEPS, e.g. s_u:0.1:0.9:9.
    #[arg(long, value_name = "RANGE")]
    sweep: Option<String>,
    #[arg(long, value_name = "on|off")]
    noise: Option<String>,
    /// Any configuration key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Fill the wall_time_ms column. Output is then no longer reproducible.
    #[arg(long)]
    wall_time: bool,
}

impl Common {
    fn bundle(&self) -> Result<ConfigBundle, ConfigError> {
        let mut entries = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| ConfigError {
                    origin: None,
                    message: format!("cannot read {}: {e}", path.display()),
                })?;
                parse_entries(&text).map_err(|e| ConfigError {
                    message: format!("{}: {}", path.display(), e.message),
                    ..e
                })?
            }
            None => Vec::new(),
        };
        let flag = |key: &str, value: String| Entry {
            key: key.into(),
            value,
            origin: Origin::Flag(key.into()),
        };
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                return Err(ConfigError {
                    origin: Some(Origin::Flag("set".into())),
                    message: format!("expected KEY=VALUE, got '{kv}'"),
                });
            };
            entries.push(Entry {
                key: k.trim().into(),
                value: v.trim().into(),
                origin: Origin::Flag("set".into()),
            });
        }
        if let Some(v) = self.seed {
            entries.push(flag("seed", v.to_string()));
        }
        if let Some(v) = self.iterations {
            entries.push(flag("iterations", v.to_string()));
        }
        for (key, value) in [
            ("scheme", &self.scheme),
            ("mode", &self.mode),
            ("sweep", &self.sweep),
            ("noise", &self.noise),
        ] {
            if let Some(v) = value {
                entries.push(flag(key, v.clone()));
            }
        }
        build(entries)
    }

    fn emit(&self, text: &str) -> Result<(), String> {
        match &self.out {
            Some(path) => write_file(path, text),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| format!("cannot write output: {e}")),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// The configured sweep in `mode`, or the single configured point.
fn table(bundle: &ConfigBundle, mode: Mode) -> SweepTable {
    match &bundle.sweep {
        Some(spec) => {
            let mut spec = spec.clone();
            spec.mode = mode;
            run_sweep(&spec, bundle)
        }
        None => run_point(bundle, &bundle.schemes, mode),
    }
}

fn samples_csv(table: &SweepTable) -> String {
    let mut out = String::from("value,iteration,scheme,attempts,latency,censored\n");
    for (value, c) in &table.campaigns {
        let value = tddlat::report::fmt_sig(*value);
        for line in c.samples_csv().lines().skip(1) {
            out.push_str(&value);
            out.push(',');
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn run(cli: Cli) -> Result<ExitCode, (u8, String)> {
    let config_err = |e: ConfigError| (EXIT_CONFIG, format!("config error: {e}"));
    let io_err = |e: String| (EXIT_CONFIG, e);
    match cli.command {
        Command::Analytic(c) => {
            let b = c.bundle().map_err(config_err)?;
            c.emit(&table(&b, Mode::Analytic).to_csv(c.wall_time))
                .map_err(io_err)?;
        }
        Command::Simulate { common: c, samples } => {
            let b = c.bundle().map_err(config_err)?;
            let t = table(&b, Mode::Simulate);
            if let Some(path) = samples {
                write_file(&path, &samples_csv(&t)).map_err(io_err)?;
            }
            c.emit(&t.to_csv(c.wall_time)).map_err(io_err)?;
        }
        Command::Sweep(c) => {
            let b = c.bundle().map_err(config_err)?;
            if b.sweep.is_none() {
                return Err((
                    EXIT_CONFIG,
                    "config error: sweep needs --sweep or a 'sweep' key".into(),
                ));
            }
            c.emit(&table(&b, b.mode).to_csv(c.wall_time))
                .map_err(io_err)?;
        }
        Command::Validate(c) => {
            let b = c.bundle().map_err(config_err)?;
            let report = run_validation(&b);
            c.emit(&report.to_csv()).map_err(io_err)?;
            if !report.passed() {
                return Ok(ExitCode::from(EXIT_VALIDATION));
            }
        }
        Command::Snapshot(c) => {
            let b = c.bundle().map_err(config_err)?;
            let cfg = tddlat::TrialConfig {
                scheme: b.schemes[0],
                ..b.trial
            };
            let mut rng = RngStream::new(cfg.seed, 0).rng();
            let (dep, _) = Deployment::generate(&cfg.deployment_config(), &mut rng)
                .map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            c.emit(&dep.snapshot_csv()).map_err(io_err)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("tddlat: {msg}");
            ExitCode::from(code)
        }
    }
}
