//! Pipeline driver. Each subcommand is one stage; failures map onto a small
//! stable set of exit codes so scripts can branch on the failure class:
//!
//! 0 success, 2 configuration, 3 I/O or malformed data, 4 taxonomy coverage,
//! 5 missing pipeline artifact.

use std::path::PathBuf;
use std::process::ExitCode;

use beamwek_core::Error;
use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "beamwek", version, about = "Beam prediction from block permittivity maps")]
struct Cli {
    /// Run configuration TOML; defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize street scenes, label maps and beam labels.
    GenScenes {
        /// Number of scenes, overriding the config file.
        #[arg(long)]
        count: Option<usize>,
        /// Dataset directory, overriding <workdir>/dataset.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Reduce label maps to block permittivity matrices.
    BuildWek {
        /// Single block size instead of the configured sweep.
        #[arg(long)]
        block_size: Option<usize>,
    },
    /// Train the beam classifier on the train split.
    Train {
        #[arg(long)]
        block_size: Option<usize>,
    },
    /// Score a trained checkpoint on the test split.
    Eval {
        #[arg(long)]
        block_size: Option<usize>,
        /// Extra accuracy depth to score alongside the defaults.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Merge per-block metrics into one CSV.
    Report {
        /// Report path, overriding <workdir>/report.csv.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> beamwek_core::Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref(), cli.seed)?;
    match cli.cmd {
        Cmd::GenScenes { count, out } => commands::cmd_gen_scenes(&cfg, count, out),
        Cmd::BuildWek { block_size } => commands::cmd_build_wek(&cfg, block_size),
        Cmd::Train { block_size } => commands::cmd_train(&cfg, block_size),
        Cmd::Eval { block_size, k } => commands::cmd_eval(&cfg, block_size, k),
        Cmd::Report { out } => commands::cmd_report(&cfg, out),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Shape(_) | Error::InvalidScene(_) => 2,
        Error::Io { .. } | Error::PgmParse { .. } | Error::Dataset(_) => 3,
        Error::UnknownCategory { .. } | Error::TaxonomyCoverage { .. } => 4,
        Error::MissingArtifact(_) => 5,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
