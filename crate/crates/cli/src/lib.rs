//! Command-line front end for the translator laboratory: radial profile
//! runs, identity check suites, boundary probes, and parameter sweeps, each
//! writing deterministic CSV/JSON reports plus a gnuplot script.

pub mod check;
pub mod config;
pub mod probe;
pub mod profile;
pub mod registry;
pub mod report;
pub mod sweep;

use std::ffi::OsString;

use clap::{Parser, Subcommand};
use thiserror::Error;

use report::Outcome;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Surface(#[from] translator_lab::surface::SurfaceError),
    #[error(transparent)]
    Profile(#[from] translator_lab::profile::ProfileError),
    #[error(transparent)]
    Patch(#[from] translator_lab::patch::PatchError),
    #[error(transparent)]
    Probe(#[from] translator_lab::probe::ProbeError),
    #[error(transparent)]
    Conformal(#[from] translator_lab::conformal::ConformalError),
    #[error(transparent)]
    Level(#[from] translator_lab::levelcurve::LevelError),
    #[error("serialization: {0}")]
    Serialize(String),
}

#[derive(Parser)]
#[command(
    name = "tlab",
    version,
    about = "Translating-graph laboratory: profiles, identity checks, boundary probes, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a radial graph profile and classify its endpoint.
    Profile(config::ProfileArgs),
    /// Run an identity or conformal check suite on a catalog asset.
    Check(config::CheckArgs),
    /// Probe level-set curvature, boundary sign dichotomy, or the
    /// curvature-product monitor on a catalog asset.
    Probe(config::ProbeArgs),
    /// Run a list of configured jobs in parallel and summarize.
    Sweep(config::SweepArgs),
}

/// Parse arguments and dispatch. Exit codes: 0 pass, 1 failure, 2
/// inconclusive, 3 configuration error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Profile(args) => profile::run(args),
        Command::Check(args) => check::run(args),
        Command::Probe(args) => probe::run(args),
        Command::Sweep(args) => sweep::run(args),
    };
    match result {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail) => 1,
        Ok(Outcome::Inconclusive) => 2,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            3
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}
