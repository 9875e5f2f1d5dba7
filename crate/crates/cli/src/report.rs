//! Report plumbing shared by every command: outcome lattice, one-row check
//! records, and deterministic JSON/CSV/gnuplot writers. Floats go through
//! the shortest-roundtrip formatter and no report carries a timestamp, so
//! identical runs produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn word(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Inconclusive => "inconclusive",
        }
    }

    /// Join two outcomes, keeping the more severe: fail beats inconclusive
    /// beats pass.
    pub fn worst(self, other: Outcome) -> Outcome {
        use Outcome::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }

    pub fn from_pass(pass: bool) -> Outcome {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// One named check with its headline number and pass threshold.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub id: String,
    pub status: Outcome,
    /// What `value` measures, e.g. "sup-residual" or "order".
    pub metric: String,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckRow {
    pub fn println(&self) {
        println!(
            "  {:<28} {:<12} {} = {} (threshold {})",
            self.id,
            self.status.word().to_uppercase(),
            self.metric,
            self.value,
            self.threshold
        );
    }
}

pub fn overall(rows: &[CheckRow]) -> Outcome {
    rows.iter().fold(Outcome::Pass, |acc, row| acc.worst(row.status))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)?;
    Ok(())
}

/// Write check rows as `checks.csv` next to the JSON report.
pub fn write_rows_csv(path: &Path, rows: &[CheckRow]) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "id,status,metric,value,threshold")?;
    for row in rows {
        writeln!(
            f,
            "{},{},{},{},{}",
            row.id,
            row.status.word(),
            row.metric,
            row.value,
            row.threshold
        )?;
    }
    Ok(())
}
