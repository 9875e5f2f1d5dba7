//! `tlab sweep`: run a list of profile/check/probe entries from one config
//! file on a worker pool, collect per-entry headline numbers, and fold the
//! exit status over all of them.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{resolve_out_dir, FileConfig, SweepArgs, SweepEntry};
use crate::report::{write_json, Outcome};
use crate::{check, probe, profile, CliError};

#[derive(Debug, Clone, Serialize)]
pub struct EntrySummary {
    pub name: String,
    pub command: String,
    /// pass | fail | inconclusive | config-error | error
    pub status: String,
    pub metric: String,
    pub value: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReportDoc {
    pub command: String,
    pub seed: u64,
    pub entries: Vec<EntrySummary>,
}

pub fn run(args: SweepArgs) -> Result<Outcome, CliError> {
    let Some(config_path) = args.common.config.as_ref() else {
        return Err(CliError::Config(
            "sweep needs --config pointing at a file with an [[entries]] list".into(),
        ));
    };
    let file = FileConfig::load(config_path)?;
    let Some(entries) = file.entries.clone() else {
        return Err(CliError::Config(format!(
            "{} has no [[entries]] list to sweep",
            config_path.display()
        )));
    };
    validate_names(&entries)?;

    let out = resolve_out_dir("sweep", args.common.out.as_ref(), file.out.as_ref());
    std::fs::create_dir_all(&out)?;
    let seed = args.common.seed.or(file.seed).unwrap_or(42);

    let jobs = args.jobs.or(file.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let mut summaries: Vec<EntrySummary> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| run_entry(entry, seed, args.common.seed, &out))
            .collect()
    });
    summaries.sort_by(|a, b| a.name.cmp(&b.name));

    write_summary_csv(&out.join("summary.csv"), &summaries)?;
    let doc =
        SweepReportDoc { command: "sweep".into(), seed, entries: summaries.clone() };
    write_json(&out.join("report.json"), &doc)?;

    for s in &summaries {
        if s.metric.is_empty() {
            println!("  {} ({}): {}", s.name, s.command, s.status.to_uppercase());
        } else {
            println!(
                "  {} ({}): {} {} = {}",
                s.name,
                s.command,
                s.status.to_uppercase(),
                s.metric,
                s.value
            );
        }
        if !s.detail.is_empty() {
            println!("      {}", s.detail);
        }
    }

    let bad: Vec<&str> = summaries
        .iter()
        .filter(|s| s.status == "config-error")
        .map(|s| s.name.as_str())
        .collect();
    if !bad.is_empty() {
        return Err(CliError::Config(format!(
            "entries with config errors: {}",
            bad.join(", ")
        )));
    }
    let worst = summaries.iter().fold(Outcome::Pass, |acc, s| {
        acc.worst(match s.status.as_str() {
            "pass" => Outcome::Pass,
            "inconclusive" => Outcome::Inconclusive,
            _ => Outcome::Fail,
        })
    });
    println!("sweep: {} entries, {}", summaries.len(), worst.word().to_uppercase());
    Ok(worst)
}

fn validate_names(entries: &[SweepEntry]) -> Result<(), CliError> {
    let mut seen = std::collections::HashSet::new();
    for e in entries {
        if e.name.is_empty() || e.name.contains(['/', '\\']) || e.name.starts_with('.') {
            return Err(CliError::Config(format!(
                "entry name {:?} must be a plain directory-safe label",
                e.name
            )));
        }
        if !seen.insert(&e.name) {
            return Err(CliError::Config(format!("duplicate entry name {:?}", e.name)));
        }
    }
    Ok(())
}

/// Run one entry into its own subdirectory. Failures become status strings
/// so one bad entry cannot take down the rest of the sweep.
fn run_entry(
    entry: &SweepEntry,
    seed: u64,
    seed_flag: Option<u64>,
    out: &Path,
) -> EntrySummary {
    let mut params = entry.params.clone();
    if seed_flag.is_some() || params.seed.is_none() {
        params.seed = Some(seed);
    }
    let sub = out.join(&entry.name);
    let result = std::fs::create_dir_all(&sub)
        .map_err(CliError::from)
        .and_then(|()| dispatch(&entry.command, &params, &sub));
    match result {
        Ok(mut summary) => {
            summary.name = entry.name.clone();
            summary.command = entry.command.clone();
            summary
        }
        Err(err) => EntrySummary {
            name: entry.name.clone(),
            command: entry.command.clone(),
            status: match err {
                CliError::Config(_) => "config-error".into(),
                _ => "error".into(),
            },
            metric: String::new(),
            value: f64::NAN,
            detail: err.to_string(),
        },
    }
}

fn dispatch(
    command: &str,
    params: &FileConfig,
    sub: &Path,
) -> Result<EntrySummary, CliError> {
    let blank = EntrySummary {
        name: String::new(),
        command: String::new(),
        status: "pass".into(),
        metric: String::new(),
        value: f64::NAN,
        detail: String::new(),
    };
    match command {
        "profile" => {
            let config = profile::resolve(&Default::default(), params)?;
            let outcome = profile::execute(&config, sub)?;
            let mut s = blank;
            if let Some(r_star) = outcome.report.r_star {
                s.metric = "r_star".into();
                s.value = r_star;
            } else {
                s.metric = "r_end".into();
                s.value = *outcome.profile.r.last().unwrap_or(&f64::NAN);
            }
            s.detail = format!("endpoint {:?}", outcome.endpoint());
            Ok(s)
        }
        "check" => {
            let config = check::resolve(&Default::default(), params)?;
            let doc = check::execute(&config, sub)?;
            let mut s = blank;
            s.status = crate::report::overall(&doc.rows).word().into();
            let headline = doc
                .rows
                .iter()
                .find(|r| r.metric == "order")
                .or_else(|| doc.rows.first());
            if let Some(row) = headline {
                s.metric = row.id.clone();
                s.value = row.value;
            }
            Ok(s)
        }
        "probe" => {
            let config = probe::resolve(&Default::default(), params)?;
            let doc = probe::execute(&config, sub)?;
            let mut s = blank;
            s.status = doc.outcome.word().into();
            if let Some(l) = &doc.limit {
                s.metric = "kappa_inf".into();
                s.value = l.kappa_inf;
            } else if let Some(m) = &doc.monitor {
                s.metric = "bound".into();
                s.value = m.bound.unwrap_or(f64::NAN);
            }
            Ok(s)
        }
        other => Err(CliError::Config(format!(
            "unknown entry command {other:?} (use profile, check, or probe)"
        ))),
    }
}

fn write_summary_csv(path: &Path, rows: &[EntrySummary]) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "name,command,status,metric,value")?;
    for s in rows {
        writeln!(f, "{},{},{},{},{}", s.name, s.command, s.status, s.metric, s.value)?;
    }
    Ok(())
}
