//! Scenario runner for `wvkit`: reads a JSON scenario, evaluates weak values,
//! probe shifts and geometric phases over an optional sweep, and writes JSON
//! or CSV.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use error::CliError;
use output::{Display, Format};
use scenario::Settings;

pub const TOLERANCE_ENV: &str = "WVKIT_TOLERANCE";

#[derive(Debug, Parser)]
#[command(
    name = "wvkit",
    version,
    about = "Weak values of pre/post-selected systems under noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a scenario file.
    Run { config: PathBuf },
    /// Check a scenario file without evaluating it.
    Validate { config: PathBuf },
    /// Built-in scenarios.
    Demo {
        #[arg(value_enum)]
        which: Demo,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Demo {
    /// Geometric phase on the qubit path at φ = π/2, p from 0 to 1.
    Bitflip,
}

#[derive(Debug, Args)]
pub struct Options {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Threshold below which |Tr W| counts as zero (default 1e-12, or $WVKIT_TOLERANCE).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Probe grid size for exact shifts (at least 2048).
    #[arg(long, global = true, default_value_t = 4096)]
    pub grid_points: usize,
    /// Show angles in degrees.
    #[arg(long, global = true)]
    pub degrees: bool,
}

/// Flag, then environment, then the library default.
pub fn resolve_settings(opts: &Options, env: Option<&str>) -> Result<Settings, CliError> {
    let tolerance = match (opts.tolerance, env) {
        (Some(t), _) => t,
        (None, Some(s)) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("{TOLERANCE_ENV}: not a number: {s:?}")))?,
        (None, None) => Settings::default().tolerance,
    };
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(CliError::Config(format!(
            "tolerance: must be positive, got {tolerance}"
        )));
    }
    if opts.grid_points < 2048 {
        return Err(CliError::Config(format!(
            "grid-points: need at least 2048, got {}",
            opts.grid_points
        )));
    }
    Ok(Settings {
        tolerance,
        grid_points: opts.grid_points,
    })
}

fn read_config(path: &Path) -> Result<config::ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    config::parse_config(&text)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let env = std::env::var(TOLERANCE_ENV).ok();
    let settings = resolve_settings(&cli.opts, env.as_deref())?;
    let display = Display {
        degrees: cli.opts.degrees,
    };
    let cfg = match &cli.command {
        Command::Validate { config } => {
            let n = scenario::validate(&read_config(config)?, &settings)?;
            return emit(&format!("ok: {n} point(s)\n"), None);
        }
        Command::Run { config } => read_config(config)?,
        Command::Demo {
            which: Demo::Bitflip,
        } => config::demo_bitflip(),
    };
    let result = scenario::run_scenario(&cfg, &settings)?;
    emit(
        &output::render(&result, cli.opts.format, display),
        cli.opts.out.as_deref(),
    )
}
