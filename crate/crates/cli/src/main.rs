use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use duetherm_core::entangle::EntangleError;
use duetherm_core::integrate::IntegrationError;
use duetherm_core::model::ParamError;
use duetherm_core::pareto::ParetoError;
use serde::Serialize;
use serde_json::json;

mod commands;
mod config;
mod output;

use config::Config;
use output::{Outputs, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "duetherm",
    version,
    about = "Two-oscillator quantum heat engine: sweeps, maps, Pareto fronts and entanglement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration; `{}` selects every default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads; falls back to DUETHERM_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Profile::Desk)]
    profile: Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 500 harmonics, 200² grids.
    Desk,
    /// 5000 harmonics, 400² grids.
    Paper,
}

impl Profile {
    pub fn grid(self) -> (usize, usize) {
        match self {
            Profile::Desk => (200, 200),
            Profile::Paper => (400, 400),
        }
    }
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Imaginary response matrix over frequency for several dampings.
    Response,
    /// Normal modes over a damping sweep.
    Poles,
    /// Monochromatic power over the (ω₁, Ω) plane.
    PowerMap,
    /// Maximum monochromatic power against damping.
    PowerMax,
    /// Pareto fronts of power against entropy production and efficiency.
    Pareto,
    /// Logarithmic negativity sweeps and critical temperatures.
    Entangle {
        /// Also run the work-based estimate and compare with the closed form.
        #[arg(long)]
        from_works: bool,
    },
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Response => "response",
            Command::Poles => "poles",
            Command::PowerMap => "power-map",
            Command::PowerMax => "power-max",
            Command::Pareto => "pareto",
            Command::Entangle { .. } => "entangle",
        }
    }

    fn section(self) -> &'static str {
        match self {
            Command::Response => "response",
            Command::Poles => "poles",
            Command::PowerMap => "power_map",
            Command::PowerMax => "power_max",
            Command::Pareto => "pareto",
            Command::Entangle { .. } => "entangle",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Io {
        path: PathBuf,
        message: String,
    },
    Config {
        message: String,
        missing_keys: Vec<String>,
    },
    Invalid(ParamError),
    Numerics(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        Self::io(path, e)
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerics(_) => 2,
            _ => 1,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Io { path, message } => json!({
                "error": "io",
                "path": path.display().to_string(),
                "message": message,
            }),
            CliError::Config {
                message,
                missing_keys,
            } => json!({
                "error": "config",
                "message": message,
                "missing_keys": missing_keys,
            }),
            CliError::Invalid(e) => json!({
                "error": "validation",
                "message": e.to_string(),
                "violations": e.violations(),
            }),
            CliError::Numerics(message) => json!({
                "error": "no_convergence",
                "message": message,
            }),
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Invalid(e)
    }
}

impl From<IntegrationError> for CliError {
    fn from(e: IntegrationError) -> Self {
        CliError::Numerics(e.to_string())
    }
}

impl From<ParetoError> for CliError {
    fn from(e: ParetoError) -> Self {
        CliError::Numerics(e.to_string())
    }
}

impl From<EntangleError> for CliError {
    fn from(e: EntangleError) -> Self {
        CliError::Numerics(e.to_string())
    }
}

fn read_config(path: Option<&Path>, command: Command) -> Result<Config, CliError> {
    let Some(path) = path else {
        return Err(CliError::Config {
            message: "no --config given".into(),
            missing_keys: vec!["params".into(), command.section().into()],
        });
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim().is_empty() {
        return Err(CliError::Config {
            message: format!(
                "{} is empty; use {{}} to accept every default",
                path.display()
            ),
            missing_keys: Config::KEYS.iter().map(|k| k.to_string()).collect(),
        });
    }
    serde_json::from_str(&text).map_err(|e| CliError::Config {
        message: e.to_string(),
        missing_keys: Vec::new(),
    })
}

fn thread_count(flag: Option<usize>) -> Result<usize, CliError> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("DUETHERM_THREADS") {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Config {
                message: format!("DUETHERM_THREADS={v} is not a thread count"),
                missing_keys: Vec::new(),
            })?,
            Err(_) => 0,
        },
    };
    // a second build only fails when a pool already exists, which is harmless
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(rayon::current_num_threads())
}

/// What a command hands back for the manifest.
pub struct RunSummary {
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub panels: usize,
    pub details: serde_json::Value,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let config = read_config(cli.config.as_deref(), cli.command)?;
    let threads = thread_count(cli.threads)?;
    let mut out = Outputs::new(&cli.out)?;
    let ctx = commands::Context {
        profile: cli.profile,
        seed: cli.seed,
    };
    let summary = match cli.command {
        Command::Response => commands::response(&config, &ctx, &mut out)?,
        Command::Poles => commands::poles(&config, &ctx, &mut out)?,
        Command::PowerMap => commands::power_map(&config, &ctx, &mut out)?,
        Command::PowerMax => commands::power_max(&config, &ctx, &mut out)?,
        Command::Pareto => commands::pareto(&config, &ctx, &mut out)?,
        Command::Entangle { from_works } => {
            commands::entangle(&config, &ctx, from_works, &mut out)?
        }
    };
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION"),
        profile: format!("{:?}", cli.profile).to_lowercase(),
        seed: cli.seed,
        seeds: summary.seeds,
        threads,
        config: summary.config,
        outputs: out.written(),
        wall_time_s: start.elapsed().as_secs_f64(),
        panels: summary.panels,
        details: summary.details,
    };
    let path = out.manifest(&manifest)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
