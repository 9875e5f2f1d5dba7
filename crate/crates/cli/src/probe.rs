//! `tlab probe`: boundary-behavior studies — level-set curvature limits,
//! edge sign dichotomies, blow-up family extrapolation, and the
//! scale-invariant curvature monitor.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use translator_lab::levelcurve::extract_level_curves;
use translator_lab::patch::GraphPatch;
use translator_lab::probe::{
    cmc_family_limit, curvature_estimate_monitor, limit_curvature_classify,
    sign_dichotomy_check, DichotomyOutcome, LimitCurvatureReport, MonitorReport, MonitorStatus,
    ProbeSubject, ProbeVerdict,
};
use translator_lab::profile::GraphMode;

use crate::config::{pick, pick_opt, resolve_out_dir, FileConfig, ProbeArgs, RunConfig};
use crate::registry::{probe_plan, ProbePlan};
use crate::report::{write_json, write_text, Outcome};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReportDoc {
    pub config: RunConfig,
    pub asset: String,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitCurvatureReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dichotomy: Option<DichotomyOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monitor: Option<MonitorReport>,
    pub outcome: Outcome,
}

pub fn resolve(args: &ProbeArgs, file: &FileConfig) -> Result<RunConfig, CliError> {
    let config = RunConfig {
        command: "probe".into(),
        surface: None,
        mode: None,
        h0: pick_opt(args.h0, file.h0),
        r_end: None,
        r_max: None,
        tol: 1e-10,
        family: None,
        suite: None,
        asset: Some(pick(args.asset.clone(), file.asset.clone(), "grim-reaper".into())),
        edge: Some(pick(args.edge.clone(), file.edge.clone(), "x+".into())),
        grids: Vec::new(),
        levels: pick(args.levels.clone(), file.levels.clone(), Vec::new()),
        radii: pick(args.radii.clone(), file.radii.clone(), Vec::new()),
        only: Vec::new(),
        seed: pick(args.common.seed, file.seed, 42),
    };
    config.validate()?;
    Ok(config)
}

pub fn run(args: ProbeArgs) -> Result<Outcome, CliError> {
    let file = FileConfig::load_opt(args.common.config.as_ref())?;
    let config = resolve(&args, &file)?;
    let out = resolve_out_dir("probe", args.common.out.as_ref(), file.out.as_ref());
    std::fs::create_dir_all(&out)?;
    let doc = execute(&config, &out)?;
    print_summary(&doc);
    Ok(doc.outcome)
}

pub fn execute(config: &RunConfig, out: &Path) -> Result<ProbeReportDoc, CliError> {
    let asset = config.asset.clone().unwrap_or_default();
    let levels_opt =
        if config.levels.is_empty() { None } else { Some(config.levels.clone()) };
    let radii_opt = if config.radii.is_empty() { None } else { Some(config.radii.clone()) };
    let plan = probe_plan(&asset, config.edge.as_deref(), levels_opt, config.h0, radii_opt)?;

    // Echo the effective inputs (registry defaults included) back into the
    // recorded config so the report says what actually ran.
    let mut config = config.clone();
    let mut doc = match plan {
        ProbePlan::Levels { patch, mode, levels, dichotomy } => {
            config.levels = levels.clone();
            let limit = if levels.is_empty() {
                None
            } else {
                write_level_curves(&out.join("level_curves.csv"), &patch, &levels)?;
                Some(limit_curvature_classify(ProbeSubject::Patch(&patch), &levels, mode)?)
            };
            let dich = match &dichotomy {
                Some((dpatch, edge)) => Some(sign_dichotomy_check(dpatch, *edge)?),
                None => None,
            };
            write_text(&out.join("plot.gp"), LEVELS_PLOT)?;
            ProbeReportDoc {
                config,
                asset,
                mode: mode_name(mode).into(),
                limit,
                dichotomy: dich,
                monitor: None,
                outcome: Outcome::Pass,
            }
        }
        ProbePlan::Family { surface, surface_name, h0, cs, n_nodes } => {
            config.h0 = Some(h0);
            config.levels = cs.clone();
            config.surface = Some(surface_name);
            let limit = cmc_family_limit(&surface, h0, &cs, n_nodes)?;
            write_family_csv(&out.join("family.csv"), &limit)?;
            write_text(&out.join("plot.gp"), FAMILY_PLOT)?;
            ProbeReportDoc {
                config,
                asset,
                mode: "cmc".into(),
                limit: Some(limit),
                dichotomy: None,
                monitor: None,
                outcome: Outcome::Pass,
            }
        }
        ProbePlan::Monitor { patch, center, radii } => {
            config.radii = radii.clone();
            let monitor = curvature_estimate_monitor(&patch, center, &radii)?;
            write_monitor_csv(&out.join("monitor.csv"), &monitor)?;
            write_text(&out.join("plot.gp"), MONITOR_PLOT)?;
            let mode = if asset == "hemisphere" { "cmc" } else { "translator" };
            ProbeReportDoc {
                config,
                asset,
                mode: mode.into(),
                limit: None,
                dichotomy: None,
                monitor: Some(monitor),
                outcome: Outcome::Pass,
            }
        }
    };
    doc.outcome = fold_outcome(&doc);
    write_json(&out.join("report.json"), &doc)?;
    Ok(doc)
}

fn mode_name(mode: GraphMode) -> &'static str {
    match mode {
        GraphMode::Translator => "translator",
        GraphMode::Minimal => "minimal",
        GraphMode::Cmc { .. } => "cmc",
    }
}

fn fold_outcome(doc: &ProbeReportDoc) -> Outcome {
    let mut outcome = Outcome::Pass;
    if let Some(l) = &doc.limit {
        outcome = outcome.worst(match l.verdict {
            ProbeVerdict::Pass => Outcome::Pass,
            ProbeVerdict::Fail => Outcome::Fail,
            ProbeVerdict::Inconclusive => Outcome::Inconclusive,
        });
    }
    if let Some(d) = &doc.dichotomy {
        outcome = outcome.worst(match d {
            DichotomyOutcome::Violated { .. } => Outcome::Fail,
            _ => Outcome::Pass,
        });
    }
    if let Some(m) = &doc.monitor {
        let hypothesis_failed =
            m.rows.iter().any(|r| r.status == MonitorStatus::HypothesisFailed);
        outcome = outcome.worst(if hypothesis_failed || m.bound.is_none() {
            Outcome::Inconclusive
        } else {
            Outcome::Pass
        });
    }
    outcome
}

fn print_summary(doc: &ProbeReportDoc) {
    if let Some(l) = &doc.limit {
        println!(
            "probe {} ({}): kappa_inf = {} (target {}, tol {}), fit condition {}",
            doc.asset, doc.mode, l.kappa_inf, l.target, l.tol, l.fit_condition
        );
        for ((c, k), th) in l.levels.iter().zip(&l.kappa_per_level).zip(&l.theta_min_per_level)
        {
            println!("  level {c}: mean |kappa| = {k}, theta_min = {th}");
        }
    }
    if let Some(d) = &doc.dichotomy {
        let word = match d {
            DichotomyOutcome::AllPlus => "all-plus",
            DichotomyOutcome::AllMinus => "all-minus",
            DichotomyOutcome::Violated { .. } => "violated",
        };
        println!("  sign dichotomy: {word}");
    }
    if let Some(m) = &doc.monitor {
        println!(
            "probe {} ({}): sup |A|^2 rho^2 over metric balls at ({}, {})",
            doc.asset, doc.mode, m.center[0], m.center[1]
        );
        for row in &m.rows {
            let status = match row.status {
                MonitorStatus::Ok => "ok",
                MonitorStatus::HypothesisFailed => "hypothesis failed: ball not interior",
            };
            println!("  rho {}: {} ({status})", row.rho, row.sup_a2_rho2);
        }
        match m.bound {
            Some(b) => println!("  single bound over interior balls: {b}"),
            None => println!("  no ball stayed interior; nothing to bound"),
        }
    }
    println!("probe {}: {}", doc.asset, doc.outcome.word().to_uppercase());
}

fn write_level_curves(
    path: &Path,
    patch: &GraphPatch,
    levels: &[f64],
) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "level,component,vertex,r,t,arclength,kappa")?;
    for &c in levels {
        let curves = extract_level_curves(patch, c)?;
        for (ci, curve) in curves.iter().enumerate() {
            for (vi, v) in curve.vertices.iter().enumerate() {
                let s = curve.arclength.get(vi).copied().unwrap_or(f64::NAN);
                let k = curve.kappa.get(vi).copied().unwrap_or(f64::NAN);
                writeln!(f, "{c},{ci},{vi},{},{},{s},{k}", v[0], v[1])?;
            }
        }
    }
    Ok(())
}

fn write_family_csv(path: &Path, limit: &LimitCurvatureReport) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "c,kappa,theta_min")?;
    for ((c, k), th) in
        limit.levels.iter().zip(&limit.kappa_per_level).zip(&limit.theta_min_per_level)
    {
        writeln!(f, "{c},{k},{th}")?;
    }
    Ok(())
}

fn write_monitor_csv(path: &Path, monitor: &MonitorReport) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "rho,sup_a2_rho2,status")?;
    for row in &monitor.rows {
        let status = match row.status {
            MonitorStatus::Ok => "ok",
            MonitorStatus::HypothesisFailed => "hypothesis_failed",
        };
        writeln!(f, "{},{},{status}", row.rho, row.sup_a2_rho2)?;
    }
    Ok(())
}

const LEVELS_PLOT: &str = "set datafile separator comma\n\
set key autotitle columnhead\n\
set xlabel 'r'\n\
set ylabel 't'\n\
plot 'level_curves.csv' using 4:5:1 with points pointsize 0.4 palette\n";

const FAMILY_PLOT: &str = "set datafile separator comma\n\
set key autotitle columnhead\n\
set xlabel 'family parameter c'\n\
plot 'family.csv' using 1:2 with linespoints\n";

const MONITOR_PLOT: &str = "set datafile separator comma\n\
set key autotitle columnhead\n\
set logscale x 2\n\
set xlabel 'ball radius rho'\n\
plot 'monitor.csv' using 1:2 with linespoints\n";
