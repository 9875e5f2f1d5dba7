//! `tlab profile`: integrate one radial graph profile (or trace a
//! tangency-circle blow-up family) and report the endpoint classification.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use translator_lab::profile::{
    cmc_blowup_family, cmc_tangency_radius, solve_radial,EndpointClass, GraphMode, Launch,
    ProfileMeta, RadialProfile, SolveOptions,
};

use crate::config::{pick, pick_opt, resolve_out_dir, FileConfig, ProfileArgs, RunConfig};
use crate::registry::build_surface;
use crate::report::{write_json, write_text, Outcome};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FamilyMember {
    pub c: f64,
    pub r_out: f64,
    pub kappa: f64,
    pub theta_end: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub config: RunConfig,
    pub profile: ProfileMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<FamilyMember>>,
}

pub fn resolve(args: &ProfileArgs, file: &FileConfig) -> Result<RunConfig, CliError> {
    let config = RunConfig {
        command: "profile".into(),
        surface: pick_opt(args.surface.clone(), file.surface.clone()),
        mode: Some(pick(args.mode.clone(), file.mode.clone(), "translator".into())),
        h0: pick_opt(args.h0, file.h0),
        r_end: Some(pick(args.r_end, file.r_end, 5.0)),
        r_max: pick_opt(args.r_max, file.r_max),
        tol: pick(args.tol, file.tol, 1e-10),
        family: pick_opt(args.family.clone(), file.family.clone()),
        suite: None,
        asset: None,
        edge: None,
        grids: Vec::new(),
        levels: Vec::new(),
        radii: Vec::new(),
        only: Vec::new(),
        seed: pick(args.common.seed, file.seed, 42),
    };
    config.validate()?;
    Ok(config)
}

fn graph_mode(config: &RunConfig) -> Result<GraphMode, CliError> {
    match config.mode.as_deref() {
        Some("translator") | None => Ok(GraphMode::Translator),
        Some("minimal") => Ok(GraphMode::Minimal),
        Some("cmc") => {
            let h0 = config.h0.ok_or_else(|| {
                CliError::Config("cmc mode needs --h0 (prescribed mean curvature)".into())
            })?;
            if h0 == 0.0 {
                return Err(CliError::Config("cmc mode needs h0 != 0".into()));
            }
            Ok(GraphMode::Cmc { h0 })
        }
        Some(other) => Err(CliError::Config(format!(
            "unknown mode {other:?} (use translator, minimal, or cmc)"
        ))),
    }
}

pub fn run(args: ProfileArgs) -> Result<Outcome, CliError> {
    let file = FileConfig::load_opt(args.common.config.as_ref())?;
    let config = resolve(&args, &file)?;
    let out = resolve_out_dir("profile", args.common.out.as_ref(), file.out.as_ref());
    std::fs::create_dir_all(&out)?;
    let outcome = execute(&config, &out)?;
    let report = &outcome.report;
    println!(
        "profile {} {}: endpoint {:?}, {} nodes",
        report.config.surface.as_deref().unwrap_or("?"),
        report.config.mode.as_deref().unwrap_or("?"),
        report.profile.endpoint,
        report.profile.n_nodes
    );
    if let (Some(r_star), Some(kappa)) = (report.r_star, report.kappa) {
        println!("tangency circle: r* = {r_star}, kappa = {kappa}");
    }
    Ok(Outcome::Pass)
}

/// Run the profile job and write `profile.csv`, `report.json`, `plot.gp`
/// (and `family.csv` for blow-up families) into `out`.
pub fn execute(config: &RunConfig, out: &Path) -> Result<ProfileOutcome, CliError> {
    let surface_name = config
        .surface
        .as_deref()
        .ok_or_else(|| CliError::Config("profile needs --surface".into()))?;
    if surface_name == "cartesian" {
        return Err(CliError::Config(
            "the cartesian chart has no pole to launch a radial profile from".into(),
        ));
    }
    let r_max = match (surface_name, config.r_max) {
        ("spherical", None) => Some(PI),
        (_, r) => r,
    };
    let surface = build_surface(surface_name, r_max)?;
    let mode = graph_mode(config)?;

    let (profile, r_star, kappa, family) = if config.family.as_deref() == Some("blowup") {
        let h0 = match mode {
            GraphMode::Cmc { h0 } => h0,
            _ => {
                return Err(CliError::Config(
                    "--family blowup needs --mode cmc with h0 < 0".into(),
                ));
            }
        };
        if !matches!(surface_name, "euclidean" | "hyperbolic") {
            return Err(CliError::Config(format!(
                "blow-up families live on euclidean or hyperbolic bases, not {surface_name}"
            )));
        }
        let r_star = cmc_tangency_radius(&surface, h0)?;
        let kappa = surface.circle_geodesic_curvature(r_star)?.abs();
        let cs = [2.0, 3.0, 4.0, 5.0, 6.0];
        let mut members = Vec::with_capacity(cs.len());
        let mut mid = None;
        for &c in &cs {
            let member = cmc_blowup_family(&surface, h0, c, 2001)?;
            let r_out = *member.r.last().expect("family member has nodes");
            members.push(FamilyMember {
                c,
                r_out,
                kappa: surface.circle_geodesic_curvature(r_out)?.abs(),
                theta_end: member.theta(member.len() - 1),
            });
            if c == 4.0 {
                mid = Some(member);
            }
        }
        let profile = mid.expect("family includes c = 4");
        (profile, Some(r_star), Some(kappa), Some(members))
    } else {
        let r_end = config.r_end.unwrap_or(5.0);
        let options = SolveOptions {
            tol: config.tol,
            r_stop: r_end,
            launch: Launch::Pole { u0: 0.0 },
            max_nodes: 400_000,
        };
        (solve_radial(&surface, mode, &options)?, None, None, None)
    };

    profile.write_csv(&out.join("profile.csv"))?;
    if let Some(members) = &family {
        write_family_csv(&out.join("family.csv"), members)?;
    }
    let meta = profile.meta();
    let report = ProfileReport {
        config: config.clone(),
        profile: meta,
        r_star,
        kappa,
        family,
    };
    write_json(&out.join("report.json"), &report)?;
    write_text(&out.join("plot.gp"), PROFILE_PLOT)?;
    Ok(ProfileOutcome { report, profile })
}

pub struct ProfileOutcome {
    pub report: ProfileReport,
    pub profile: RadialProfile,
}

impl ProfileOutcome {
    pub fn endpoint(&self) -> EndpointClass {
        self.report.profile.endpoint
    }
}

fn write_family_csv(path: &Path, members: &[FamilyMember]) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "c,r_out,kappa,theta_end")?;
    for m in members {
        writeln!(f, "{},{},{},{}", m.c, m.r_out, m.kappa, m.theta_end)?;
    }
    Ok(())
}

const PROFILE_PLOT: &str = "set datafile separator comma\n\
set key autotitle columnhead\n\
set xlabel 'r'\n\
plot 'profile.csv' using 1:2 with lines title 'u', \\\n\
     'profile.csv' using 1:3 with lines title 'u_r'\n";
