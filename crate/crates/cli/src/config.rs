//! Argument structs, file-backed configuration, and the resolved run
//! record embedded in every report.
//!
//! Precedence: `TRANSLATOR_LAB_OUT` beats everything for the output
//! directory; otherwise command-line flags beat config-file values beat
//! built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(clap::Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML or JSON file supplying any parameter not set by a flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; the TRANSLATOR_LAB_OUT environment variable
    /// overrides it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for randomized checks; recorded in every report.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(clap::Args, Debug, Clone, Default)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Base surface: euclidean, spherical, hyperbolic, or cartesian.
    #[arg(long)]
    pub surface: Option<String>,
    /// Graph equation: translator, minimal, or cmc.
    #[arg(long)]
    pub mode: Option<String>,
    /// Prescribed mean curvature for cmc mode.
    #[arg(long, allow_negative_numbers = true)]
    pub h0: Option<f64>,
    /// Radius to integrate toward.
    #[arg(long = "r-end")]
    pub r_end: Option<f64>,
    /// Chart cutoff radius (spherical defaults to pi).
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
    /// Adaptive integrator tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Branch family: "blowup" traces the tangency-circle family.
    #[arg(long)]
    pub family: Option<String>,
}

#[derive(clap::Args, Debug, Clone, Default)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Check suite: identities or conformal.
    #[arg(long)]
    pub suite: Option<String>,
    /// Asset name from the registry.
    #[arg(long)]
    pub asset: Option<String>,
    /// Surface for surface-parametrized assets (random-smooth).
    #[arg(long)]
    pub surface: Option<String>,
    /// Grid sizes per axis for refinement studies.
    #[arg(long, value_delimiter = ',')]
    pub grids: Option<Vec<usize>>,
    /// Run only the named checks.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
}

#[derive(clap::Args, Debug, Clone, Default)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Asset name from the registry.
    #[arg(long)]
    pub asset: Option<String>,
    /// Boundary edge for the sign dichotomy: x+, x-, y+, y-.
    #[arg(long)]
    pub edge: Option<String>,
    /// Height levels for the limit-curvature study (family parameters for
    /// blow-up family assets).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub levels: Option<Vec<f64>>,
    /// Prescribed mean curvature for cmc family assets.
    #[arg(long, allow_negative_numbers = true)]
    pub h0: Option<f64>,
    /// Metric ball radii for the curvature-product monitor.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
}

#[derive(clap::Args, Debug, Clone, Default)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Worker threads for sweep entries (default: logical cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// File-backed parameters; any subset may be present. Flags win over file
/// values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FileConfig {
    pub surface: Option<String>,
    pub mode: Option<String>,
    pub h0: Option<f64>,
    pub r_end: Option<f64>,
    pub r_max: Option<f64>,
    pub tol: Option<f64>,
    pub family: Option<String>,
    pub suite: Option<String>,
    pub asset: Option<String>,
    pub edge: Option<String>,
    pub grids: Option<Vec<usize>>,
    pub levels: Option<Vec<f64>>,
    pub radii: Option<Vec<f64>>,
    pub only: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub jobs: Option<usize>,
    pub entries: Option<Vec<SweepEntry>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub name: String,
    pub command: String,
    #[serde(flatten)]
    pub params: FileConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
            "toml" => toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            "json" => serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            other => Err(CliError::Config(format!(
                "unsupported config extension {other:?} (use .toml or .json)"
            ))),
        }
    }

    pub fn load_opt(path: Option<&PathBuf>) -> Result<FileConfig, CliError> {
        match path {
            Some(p) => FileConfig::load(p),
            None => Ok(FileConfig::default()),
        }
    }
}

/// The resolved parameters of one run, embedded verbatim in its report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub surface: Option<String>,
    pub mode: Option<String>,
    pub h0: Option<f64>,
    pub r_end: Option<f64>,
    pub r_max: Option<f64>,
    pub tol: f64,
    pub family: Option<String>,
    pub suite: Option<String>,
    pub asset: Option<String>,
    pub edge: Option<String>,
    pub grids: Vec<usize>,
    pub levels: Vec<f64>,
    pub radii: Vec<f64>,
    pub only: Vec<String>,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        for &n in &self.grids {
            if n < 17 {
                return Err(CliError::Config(format!(
                    "grid size {n} below the minimum of 17 nodes per axis"
                )));
            }
        }
        if let Some(h0) = self.h0 {
            if !h0.is_finite() {
                return Err(CliError::Config(format!("h0 must be finite, got {h0}")));
            }
        }
        if let Some(r_end) = self.r_end {
            if !(r_end > 0.0 && r_end.is_finite()) {
                return Err(CliError::Config(format!("r-end must be positive, got {r_end}")));
            }
        }
        if self.levels.iter().any(|l| !l.is_finite()) {
            return Err(CliError::Config("levels must be finite".into()));
        }
        if self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(CliError::Config("radii must be positive".into()));
        }
        Ok(())
    }

    /// Keep a check whose id is in the `only` list (or every check when the
    /// list is empty).
    pub fn selected(&self, id: &str) -> bool {
        self.only.is_empty() || self.only.iter().any(|s| s == id)
    }
}

pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_opt<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Resolve the output directory: environment override, then flag, then
/// config file, then `tlab-out/<command>`.
pub fn resolve_out_dir(
    command: &str,
    flag: Option<&PathBuf>,
    file: Option<&String>,
) -> PathBuf {
    if let Ok(dir) = std::env::var("TRANSLATOR_LAB_OUT") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    flag.cloned()
        .or_else(|| file.map(PathBuf::from))
        .unwrap_or_else(|| Path::new("tlab-out").join(command))
}
