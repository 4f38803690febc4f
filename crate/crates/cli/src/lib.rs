//! Command-line front end for the PV-RFID node models.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use pvrfid_core::link_budget::LinkError;
use pvrfid_core::{LoadError, PvError, SimError, SizingError};

use commands::Output;
use config::{Config, ConfigError, Value};
use report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "pvrfid", version, about = "PV-powered RFID sensor node models")]
struct Cli {
    /// Scenario overrides, `key = value` per line.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    /// Time step in seconds for every simulation.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Reserved; the models are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fitted IV curve and maximum power point.
    Iv,
    /// Harvested power, optionally Jsc from an EQE curve.
    Harvest {
        /// EQE CSV (`wavelength_nm,value`) integrated against AM1.5G.
        #[arg(long)]
        eqe: Option<PathBuf>,
    },
    /// IC demand versus measurement rate.
    Load,
    /// Charge / discharge trace.
    Simulate,
    /// One-day availability.
    Availability,
    /// Forward / reverse limited read range.
    Range {
        /// Threshold sweep CSV (`frequency_hz,threshold_dbm`).
        #[arg(long)]
        sweep_file: Option<PathBuf>,
    },
    /// Persistence over the capacitance x leak grid.
    Sweep,
    /// Smallest PV area and capacitance reaching the target availability.
    Size,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Iv => "iv",
            Command::Harvest { .. } => "harvest",
            Command::Load => "load",
            Command::Simulate => "simulate",
            Command::Availability => "availability",
            Command::Range { .. } => "range",
            Command::Sweep => "sweep",
            Command::Size => "size",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {1}", .0.display())]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Pv(#[from] PvError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Sizing(#[from] SizingError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Sizing(SizingError::Infeasible { .. }) => 2,
            _ => 1,
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = commands::read_input(path)?;
            Config::parse(&text).map_err(|e| match e {
                ConfigError::Invalid(_) => CliError::Config(e),
                other => CliError::Usage(format!("{}: {other}", path.display())),
            })?
        }
        None => Config::default(),
    };
    if let Some(dt) = cli.dt {
        cfg.set("sim.dt_s", Value::Num(dt))?;
        cfg.set("sim.day_dt_s", Value::Num(dt))?;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    if cli.dump_config {
        out.write_all(cfg.dump().as_bytes())
            .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))?;
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Usage(
            "no subcommand given (iv, harvest, load, simulate, availability, range, sweep, size)"
                .into(),
        ));
    };
    let extra = match command {
        Command::Harvest { eqe: Some(p) } => Some(commands::read_input(p)?),
        Command::Range {
            sweep_file: Some(p),
        } => Some(commands::read_input(p)?),
        _ => None,
    };
    let dump = cfg.dump();
    let digest = report::digest(&[
        command.name().as_bytes(),
        dump.as_bytes(),
        extra.as_deref().unwrap_or("").as_bytes(),
    ]);
    let mut r = RunReport::new(command.name(), digest);
    let dest = Output {
        dir: cli.out.as_deref(),
    };
    match command {
        Command::Iv => commands::iv(&cfg, &mut r, &dest)?,
        Command::Harvest { .. } => commands::harvest(&cfg, extra.as_deref(), &mut r)?,
        Command::Load => commands::load(&cfg, &mut r, &dest)?,
        Command::Simulate => commands::simulate(&cfg, &mut r, &dest)?,
        Command::Availability => commands::availability(&cfg, &mut r)?,
        Command::Range { .. } => commands::range(&cfg, extra.as_deref(), &mut r, &dest)?,
        Command::Sweep => commands::sweep(&cfg, &mut r, &dest)?,
        Command::Size => commands::size(&cfg, &mut r)?,
    }
    out.write_all(r.render().as_bytes())
        .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))
}

/// Parses `args` (program name first), runs, and returns the exit code.
/// Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{e}");
            return 1;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
