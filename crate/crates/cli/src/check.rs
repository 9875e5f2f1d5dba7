//! `tlab check`: identity and conformal check suites over catalog assets,
//! with grid-refinement order estimates where a single number cannot show
//! convergence.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use translator_lab::conformal::{
    bump_variation, second_variation_check, weighted_mean_curvature, weighted_sectional,
    CurvaturePlane, WeightedMetricContext,
};
use translator_lab::fdgeom;
use translator_lab::jacobi::graphic_identity_residual;
use translator_lab::patch::DiffMode;
use translator_lab::profile::GraphMode;
use translator_lab::shape::{residual_field, ResidualStyle};

use crate::config::{pick, pick_opt, resolve_out_dir, CheckArgs, FileConfig, RunConfig};
use crate::registry::{build_surface, check_patch};
use crate::report::{overall, write_json, write_rows_csv, write_text, CheckRow, Outcome};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReportDoc {
    pub config: RunConfig,
    pub suite: String,
    pub asset: String,
    pub rows: Vec<CheckRow>,
    pub pass: bool,
}

pub fn resolve(args: &CheckArgs, file: &FileConfig) -> Result<RunConfig, CliError> {
    let suite = pick(args.suite.clone(), file.suite.clone(), "identities".into());
    let asset = pick(args.asset.clone(), file.asset.clone(), "grim-reaper".into());
    let default_grids = match (suite.as_str(), asset.as_str()) {
        (_, "random-smooth") => vec![33, 65, 129, 257, 513],
        ("conformal", _) => vec![65, 129, 257],
        _ => vec![65],
    };
    let config = RunConfig {
        command: "check".into(),
        surface: pick_opt(args.surface.clone(), file.surface.clone()),
        mode: None,
        h0: None,
        r_end: None,
        r_max: None,
        tol: 1e-10,
        family: None,
        suite: Some(suite),
        asset: Some(asset),
        edge: None,
        grids: pick(args.grids.clone(), file.grids.clone(), default_grids),
        levels: Vec::new(),
        radii: Vec::new(),
        only: pick(args.only.clone(), file.only.clone(), Vec::new()),
        seed: pick(args.common.seed, file.seed, 42),
    };
    config.validate()?;
    if config.grids.is_empty() {
        return Err(CliError::Config("check needs at least one grid size".into()));
    }
    Ok(config)
}

pub fn run(args: CheckArgs) -> Result<Outcome, CliError> {
    let file = FileConfig::load_opt(args.common.config.as_ref())?;
    let config = resolve(&args, &file)?;
    let out = resolve_out_dir("check", args.common.out.as_ref(), file.out.as_ref());
    std::fs::create_dir_all(&out)?;
    let doc = execute(&config, &out)?;
    println!("check {} on {}:", doc.suite, doc.asset);
    for row in &doc.rows {
        row.println();
    }
    let outcome = overall(&doc.rows);
    println!("check {} on {}: {}", doc.suite, doc.asset, outcome.word().to_uppercase());
    Ok(outcome)
}

pub fn execute(config: &RunConfig, out: &Path) -> Result<CheckReportDoc, CliError> {
    let suite = config.suite.clone().unwrap_or_default();
    let asset = config.asset.clone().unwrap_or_default();
    let (rows, refinement) = match suite.as_str() {
        "identities" => identities_suite(config, &asset)?,
        "conformal" => conformal_suite(config, &asset)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown suite {other:?} (use identities or conformal)"
            )));
        }
    };
    let pass = overall(&rows) == Outcome::Pass;
    let doc = CheckReportDoc { config: config.clone(), suite, asset, rows, pass };
    write_json(&out.join("report.json"), &doc)?;
    write_rows_csv(&out.join("checks.csv"), &doc.rows)?;
    write_refinement_csv(&out.join("refinement.csv"), &refinement)?;
    write_text(&out.join("plot.gp"), CHECK_PLOT)?;
    Ok(doc)
}

/// Per-grid headline numbers for the refinement plot: one labeled series
/// per check that swept the grid list.
struct RefinementData {
    columns: Vec<String>,
    rows: Vec<(usize, Vec<f64>)>,
}

impl RefinementData {
    fn empty() -> RefinementData {
        RefinementData { columns: Vec::new(), rows: Vec::new() }
    }

    fn new(grids: &[usize], columns: &[&str]) -> RefinementData {
        RefinementData {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: grids.iter().map(|&n| (n, Vec::new())).collect(),
        }
    }

    fn push_series(&mut self, values: &[f64]) {
        for (row, &v) in self.rows.iter_mut().zip(values) {
            row.1.push(v);
        }
    }
}

fn write_refinement_csv(path: &Path, data: &RefinementData) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "n")?;
    for c in &data.columns {
        write!(f, ",{c}")?;
    }
    writeln!(f)?;
    for (n, values) in &data.rows {
        write!(f, "{n}")?;
        for v in values {
            write!(f, ",{v}")?;
        }
        writeln!(f)?;
    }
    Ok(())
}

/// Mean dyadic rate over the last two grid pairs (all pairs when only two
/// grids are given). Coarse pairs on curved charts sit pre-asymptotic, so
/// the slope is read from the finest spacings.
fn tail_order(sups: &[f64]) -> Option<f64> {
    if sups.len() < 2 || sups.iter().any(|s| !(*s > 0.0)) {
        return None;
    }
    let rates: Vec<f64> = sups.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let tail = &rates[rates.len().saturating_sub(2)..];
    Some(tail.iter().sum::<f64>() / tail.len() as f64)
}

fn pass_row(
    id: &str,
    metric: &str,
    value: f64,
    threshold: f64,
    upward: bool,
    detail: String,
) -> CheckRow {
    let ok = if upward { value >= threshold } else { value < threshold };
    CheckRow {
        id: id.into(),
        status: Outcome::from_pass(ok && value.is_finite()),
        metric: metric.into(),
        value,
        threshold,
        detail,
    }
}

fn identities_suite(
    config: &RunConfig,
    asset: &str,
) -> Result<(Vec<CheckRow>, RefinementData), CliError> {
    let surface_name = config.surface.as_deref();
    let n0 = config.grids[0];
    let mut rows = Vec::new();
    let mut refinement = RefinementData::new(&config.grids, &["graphic_identity_sup"]);

    let (patch, native) = check_patch(asset, n0, surface_name, config.seed)?;

    if let Some(mode) = native {
        if config.selected("equation-analytic") && patch.diff == DiffMode::Analytic {
            let field = residual_field(&patch, mode, ResidualStyle::Analytic);
            rows.push(pass_row(
                "equation-analytic",
                "sup-residual",
                field.sup,
                1e-10,
                false,
                format!("{} nodes evaluated", field.n_evaluated),
            ));
        }
        if config.selected("equation-flux") {
            let coarse = residual_field(&patch, mode, ResidualStyle::Flux).sup;
            let fine_patch = check_patch(asset, 2 * n0 - 1, surface_name, config.seed)?.0;
            let fine = residual_field(&fine_patch, mode, ResidualStyle::Flux).sup;
            let (value, threshold, upward, metric) = if fine < 1e-12 {
                (fine, 1e-12, false, "sup-residual")
            } else {
                (coarse / fine, 3.0, true, "refinement-ratio")
            };
            rows.push(pass_row(
                "equation-flux",
                metric,
                value,
                threshold,
                upward,
                format!("sup {coarse} at n = {n0}, {fine} refined"),
            ));
        }
    }

    if config.selected("graphic-identity") {
        let mut sups = Vec::with_capacity(config.grids.len());
        for &n in &config.grids {
            let p = check_patch(asset, n, surface_name, config.seed)?.0;
            sups.push(graphic_identity_residual(&p).sup);
        }
        refinement.push_series(&sups);
        if sups.last().copied().unwrap_or(f64::NAN) < 1e-12 {
            rows.push(pass_row(
                "graphic-identity",
                "sup-residual",
                *sups.last().unwrap(),
                1e-12,
                false,
                "identity vanishes identically".into(),
            ));
        } else if config.grids.len() >= 3 {
            let order = tail_order(&sups).unwrap_or(f64::NAN);
            rows.push(pass_row(
                "graphic-identity",
                "order",
                order,
                1.8,
                true,
                format!("sups {sups:?} over grids {:?}", config.grids),
            ));
        } else {
            let fine_patch = check_patch(asset, 2 * n0 - 1, surface_name, config.seed)?.0;
            let fine = graphic_identity_residual(&fine_patch).sup;
            rows.push(pass_row(
                "graphic-identity",
                "refinement-ratio",
                sups[0] / fine,
                3.0,
                true,
                format!("sup {} at n = {n0}, {fine} refined", sups[0]),
            ));
        }
    }

    Ok((rows, refinement))
}

fn conformal_suite(
    config: &RunConfig,
    asset: &str,
) -> Result<(Vec<CheckRow>, RefinementData), CliError> {
    let surface_name = config.surface.as_deref();
    let n0 = config.grids[0];
    let mut rows = Vec::new();
    let mut refinement = RefinementData::empty();

    let (patch, native) = check_patch(asset, n0, surface_name, config.seed)?;

    if native == Some(GraphMode::Translator) {
        if patch.diff == DiffMode::Analytic {
            if config.selected("weighted-mean-analytic") {
                let field = weighted_mean_curvature(&patch);
                rows.push(pass_row(
                    "weighted-mean-analytic",
                    "sup-residual",
                    field.sup,
                    1e-10,
                    false,
                    format!("{} nodes evaluated", field.n_evaluated),
                ));
            }
        } else if config.selected("weighted-mean-order") && config.grids.len() >= 2 {
            let mut sups = Vec::with_capacity(config.grids.len());
            for &n in &config.grids {
                let p = check_patch(asset, n, surface_name, config.seed)?.0;
                sups.push(weighted_mean_curvature(&p).sup);
            }
            refinement = RefinementData::new(
                &config.grids,
                &["weighted_mean_sup", "second_variation_rel"],
            );
            refinement.push_series(&sups);
            let order = tail_order(&sups).unwrap_or(f64::NAN);
            rows.push(pass_row(
                "weighted-mean-order",
                "order",
                order,
                1.8,
                true,
                format!("sups {sups:?} over grids {:?}", config.grids),
            ));
        }

        if (config.selected("second-variation-order")
            || config.selected("second-variation-final"))
            && config.grids.len() >= 2
        {
            let mut rels = Vec::with_capacity(config.grids.len());
            for &n in &config.grids {
                let p = check_patch(asset, n, surface_name, config.seed)?.0;
                let eta = bump_variation(&p);
                rels.push(second_variation_check(&p, &eta)?.rel_err);
            }
            if refinement.columns.is_empty() {
                refinement =
                    RefinementData::new(&config.grids, &["second_variation_rel"]);
            }
            refinement.push_series(&rels);
            if config.selected("second-variation-order") {
                let order = tail_order(&rels).unwrap_or(f64::NAN);
                rows.push(pass_row(
                    "second-variation-order",
                    "order",
                    order,
                    1.8,
                    true,
                    format!("rel errs {rels:?} over grids {:?}", config.grids),
                ));
            }
            if config.selected("second-variation-final") {
                rows.push(pass_row(
                    "second-variation-final",
                    "rel-err",
                    *rels.last().unwrap(),
                    1e-3,
                    false,
                    format!("finest grid {}", config.grids.last().unwrap()),
                ));
            }
        }

        if config.selected("stability-nonnegative") {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let dims = (patch.rect.nr, patch.rect.nt);
            let allowed: std::collections::HashSet<(usize, usize)> =
                patch.deep_interior(2).into_iter().collect();
            let mut worst = f64::INFINITY;
            for _ in 0..100 {
                let mut eta = Array2::zeros(dims);
                for i in 0..dims.0 {
                    for j in 0..dims.1 {
                        if allowed.contains(&(i, j)) {
                            eta[[i, j]] = rng.gen_range(-1.0..1.0);
                        }
                    }
                }
                let rep = second_variation_check(&patch, &eta)?;
                worst = worst.min(rep.lhs / rep.rhs.abs().max(1.0));
            }
            rows.push(pass_row(
                "stability-nonnegative",
                "min-scaled-form",
                worst,
                -1e-8,
                true,
                format!("100 seeded variations at n = {n0}, seed {}", config.seed),
            ));
        }
    }

    if config.selected("sectional-oracle") {
        rows.push(sectional_oracle_row(config.seed)?);
    }

    Ok((rows, refinement))
}

/// Compare the closed-form weighted sectional curvatures against a
/// finite-difference curvature oracle of the conformal ambient metric at 50
/// seeded points per catalog surface.
fn sectional_oracle_row(seed: u64) -> Result<CheckRow, CliError> {
    let mut max_rel = 0.0f64;
    let mut max_vertical = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for name in ["euclidean", "spherical", "hyperbolic", "cartesian"] {
        let surface = build_surface(name, None)?;
        let ctx = WeightedMetricContext { surface: surface.clone(), t0: None };
        let s = surface.clone();
        let g = move |x: [f64; 3]| {
            let h = s.h(x[0]);
            let e = x[2].exp();
            [[e, 0.0, 0.0], [0.0, e * h * h, 0.0], [0.0, 0.0, e]]
        };
        let (lo, hi) = surface.chart();
        let (rlo, rhi) = (lo.max(-2.0) + 0.3, hi.min(2.5) - 0.3);
        for _ in 0..50 {
            let r = rng.gen_range(rlo..rhi);
            let t = rng.gen_range(-1.0..1.0);
            let x = [r, 0.4, t];
            let closed = weighted_sectional(&ctx, r, t, CurvaturePlane::Horizontal12)?;
            let fd = fdgeom::sectional(&g, x, 0, 1, 4e-3);
            max_rel = max_rel.max((fd - closed).abs() / closed.abs().max(1e-3));
            max_vertical = max_vertical.max(fdgeom::sectional(&g, x, 0, 2, 4e-3).abs());
            max_vertical = max_vertical.max(fdgeom::sectional(&g, x, 1, 2, 4e-3).abs());
        }
    }
    let mut row = pass_row(
        "sectional-oracle",
        "max-rel-err",
        max_rel,
        1e-5,
        false,
        format!("max vertical-plane curvature {max_vertical} (threshold 1e-8)"),
    );
    if max_vertical >= 1e-8 {
        row.status = Outcome::Fail;
    }
    Ok(row)
}

const CHECK_PLOT: &str = "set datafile separator comma\n\
set key autotitle columnhead\n\
set logscale xy\n\
set xlabel 'grid nodes per axis'\n\
plot for [col=2:*] 'refinement.csv' using 1:col with linespoints\n";
