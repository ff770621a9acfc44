//! `fishclim`: windowed Fisher-Shannon analysis of gridded fields.
//!
//! Exit codes: 0 success, 2 io, 3 parse, 4 schema, 5 degenerate,
//! 6 upstream-missing, 7 parameter, 8 numerical. Failures print a single
//! `error[<category>]: <message>` line on stderr.

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::{RunConfig, Settings};
use failure::Failure;

#[derive(Parser)]
#[command(name = "fishclim", version, about = "Windowed Fisher-Shannon analysis of gridded space-time fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate SEP, FIM and FSC over sliding windows at every grid location
    Analyze(Common),
    /// Latitude x window means of analyze outputs
    Hovmoller(Common),
    /// EOF decomposition, PC series and PC trend fits of analyze outputs
    Eof(Common),
    /// Per-location (SEP, FIM, FSC) trajectories for plotting in the information plane
    Fsip(Common),
    /// Write a seeded synthetic grid
    Synth(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key: value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input grid (analyze) or directory of analyze outputs (other commands)
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    outdir: Option<String>,
    /// Worker threads; 0 uses every core
    #[arg(long)]
    workers: Option<String>,
    /// Comma-separated subset of sep,fim,fsc
    #[arg(long)]
    measures: Option<String>,
    /// Region name or label from the grid's region mask
    #[arg(long)]
    region: Option<String>,
    /// Number of EOF modes to write
    #[arg(long)]
    modes: Option<String>,
    /// First date (YYYY-MM-DD) included in PC trend fits
    #[arg(long = "start-date")]
    start_date: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `lat,lon` pairs separated by `;`
    #[arg(long)]
    locations: Option<String>,
    /// Override any configuration key
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        for kv in &self.set {
            s.apply_override(kv)?;
        }
        let flags = [
            ("input", &self.input),
            ("outdir", &self.outdir),
            ("workers", &self.workers),
            ("measures", &self.measures),
            ("region", &self.region),
            ("modes", &self.modes),
            ("start_date", &self.start_date),
            ("seed", &self.seed),
            ("locations", &self.locations),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.set(key, v.clone());
            }
        }
        RunConfig::from_settings(s)
    }
}

fn run(cli: Cli) -> Result<PathBuf, Failure> {
    match cli.command {
        Command::Analyze(c) => commands::analyze(&c.resolve()?),
        Command::Hovmoller(c) => commands::hovmoller_cmd(&c.resolve()?),
        Command::Eof(c) => commands::eof_cmd(&c.resolve()?),
        Command::Fsip(c) => commands::fsip_cmd(&c.resolve()?),
        Command::Synth(c) => commands::synth_cmd(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", Failure::parameter(first));
            return ExitCode::from(failure::exit_code(fishclim::ErrorCategory::Parameter));
        }
    };
    match run(cli) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code())
        }
    }
}
