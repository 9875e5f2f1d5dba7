//! Built-in asset registry: closed-form patches, blow-up profile families,
//! and monitor scenes, each with tuned default geometry so commands work
//! out of the box.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::sync::Arc;

use translator_lab::assets;
use translator_lab::patch::{ChartRect, GraphPatch};
use translator_lab::probe::ProbeEdge;
use translator_lab::profile::GraphMode;
use translator_lab::surface::{SurfaceConfig, WarpedSurface};

use crate::CliError;

pub const CHECK_ASSETS: &[&str] = &[
    "grim-reaper",
    "scherk",
    "flat-slice",
    "hemisphere",
    "radial-translator",
    "bowl",
    "random-smooth",
];

pub const PROBE_ASSETS: &[&str] = &[
    "grim-reaper",
    "scherk",
    "oscillator",
    "euclidean-cmc-blowup",
    "hyperbolic-cmc-blowup",
    "bowl",
    "hemisphere",
];

/// Map a surface name to the catalog constructor. `r_max` truncates the
/// chart (and is the spherical cap radius).
pub fn build_surface(name: &str, r_max: Option<f64>) -> Result<Arc<WarpedSurface>, CliError> {
    let config = SurfaceConfig {
        kind: name.to_string(),
        r_max,
        profile_csv: None,
        injectivity_radius: None,
    };
    Ok(Arc::new(config.build(std::path::Path::new("."))?))
}

/// Chart rectangles used for seeded random graphs in identity refinement
/// studies, kept away from small warp factors where the next-order
/// truncation term dominates practical grids.
pub fn identity_chart(surface: &str, n: usize) -> Result<(Arc<WarpedSurface>, ChartRect), CliError> {
    let (lo, hi, t_hi) = match surface {
        "euclidean" | "hyperbolic" => (0.6, 1.8, 2.0),
        "spherical" => (0.5, 1.4, 2.0),
        "cartesian" => (-0.8, 0.8, 2.0),
        other => {
            return Err(CliError::Config(format!("unknown surface {other:?}")));
        }
    };
    let surface = build_surface(surface, None)?;
    Ok((surface, ChartRect::new(lo, hi, 0.0, t_hi, n, n)?))
}

/// Build a check-suite patch at `n` nodes per axis. Returns the patch and
/// its native graph mode (None for assets that solve no equation).
pub fn check_patch(
    asset: &str,
    n: usize,
    surface: Option<&str>,
    seed: u64,
) -> Result<(GraphPatch, Option<GraphMode>), CliError> {
    match asset {
        "grim-reaper" => {
            let rect = ChartRect::new(-1.2, 1.2, 0.0, 2.2, n, n)?;
            Ok((assets::grim_reaper(rect)?, Some(GraphMode::Translator)))
        }
        "scherk" => {
            let rect = ChartRect::new(-1.25, 1.25, -1.25, 1.25, n, n)?;
            Ok((assets::scherk(rect)?, Some(GraphMode::Minimal)))
        }
        "flat-slice" => {
            let rect = ChartRect::new(0.5, 1.5, 0.0, 2.0, n, n)?;
            let surface = build_surface("euclidean", None)?;
            Ok((assets::flat_slice(surface, rect, 1.0)?, Some(GraphMode::Minimal)))
        }
        "hemisphere" => {
            let rect = ChartRect::new(0.05, 0.95, 0.0, 6.2, n, n)?;
            Ok((assets::hemisphere(rect)?, Some(GraphMode::Cmc { h0: 2.0 })))
        }
        "radial-translator" => {
            let rect = ChartRect::new(0.5, 2.5, 0.0, 2.0, n, n)?;
            Ok((assets::radial_translator(rect)?, Some(GraphMode::Translator)))
        }
        "bowl" => Ok((assets::bowl(3.2, n)?, Some(GraphMode::Translator))),
        "random-smooth" => {
            let name = surface.unwrap_or("euclidean");
            let (surface, rect) = identity_chart(name, n)?;
            Ok((assets::random_smooth(surface, rect, seed)?, None))
        }
        other => Err(CliError::Config(format!(
            "unknown check asset {other:?} (known: {})",
            CHECK_ASSETS.join(", ")
        ))),
    }
}

/// What a probe run does for one asset.
pub enum ProbePlan {
    /// Marching-squares level study plus an edge sign dichotomy.
    Levels {
        patch: GraphPatch,
        mode: GraphMode,
        levels: Vec<f64>,
        dichotomy: Option<(GraphPatch, ProbeEdge)>,
    },
    /// Tangency-circle blow-up family extrapolation.
    Family {
        surface: Arc<WarpedSurface>,
        surface_name: String,
        h0: f64,
        cs: Vec<f64>,
        n_nodes: usize,
    },
    /// Curvature-product monitor over metric balls.
    Monitor {
        patch: GraphPatch,
        center: (f64, f64),
        radii: Vec<f64>,
    },
}

fn parse_edge(edge: Option<&str>) -> Result<ProbeEdge, CliError> {
    let text = edge.unwrap_or("x+");
    ProbeEdge::parse(text)
        .ok_or_else(|| CliError::Config(format!("unknown edge {text:?} (use x+, x-, y+, y-)")))
}

/// Assemble the probe plan for an asset, applying its tuned default
/// geometry and validating the requested edge against where the asset
/// actually blows up.
pub fn probe_plan(
    asset: &str,
    edge: Option<&str>,
    levels: Option<Vec<f64>>,
    h0: Option<f64>,
    radii: Option<Vec<f64>>,
) -> Result<ProbePlan, CliError> {
    match asset {
        "grim-reaper" => {
            let edge = parse_edge(edge)?;
            let levels = levels.unwrap_or_else(|| vec![2.0, 4.0, 6.0]);
            let rect = ChartRect::new(-1.5705, 1.5705, 0.0, 1.2, 257, 25)?;
            let patch = assets::grim_reaper(rect)?;
            let dich_rect = match edge {
                ProbeEdge::RPlus => ChartRect::new(0.0, FRAC_PI_2 - 1e-5, 0.0, 1.0, 65, 17)?,
                ProbeEdge::RMinus => {
                    ChartRect::new(-(FRAC_PI_2 - 1e-5), 0.0, 0.0, 1.0, 65, 17)?
                }
                _ => {
                    return Err(CliError::Config(
                        "grim-reaper heights stay bounded along y edges; probe x+ or x-".into(),
                    ));
                }
            };
            let dich = assets::grim_reaper(dich_rect)?;
            Ok(ProbePlan::Levels {
                patch,
                mode: GraphMode::Translator,
                levels,
                dichotomy: Some((dich, edge)),
            })
        }
        "scherk" => {
            let edge = parse_edge(edge)?;
            let levels = levels.unwrap_or_else(|| vec![2.0, 4.0, 6.0]);
            let hi = FRAC_PI_2 - 1e-4;
            // The height diverges to +inf along x edges and -inf along y
            // edges; the level list follows the probed edge's sign.
            let (rect, levels) = match edge {
                ProbeEdge::RPlus => {
                    (ChartRect::new(0.3, hi, -1.25, 1.25, 385, 129)?, levels)
                }
                ProbeEdge::RMinus => {
                    (ChartRect::new(-hi, -0.3, -1.25, 1.25, 385, 129)?, levels)
                }
                ProbeEdge::TPlus => (
                    ChartRect::new(-1.25, 1.25, 0.3, hi, 129, 385)?,
                    levels.iter().map(|l| -l.abs()).collect(),
                ),
                ProbeEdge::TMinus => (
                    ChartRect::new(-1.25, 1.25, -hi, -0.3, 129, 385)?,
                    levels.iter().map(|l| -l.abs()).collect(),
                ),
            };
            let patch = assets::scherk(rect)?;
            let dich_rect = match edge {
                ProbeEdge::RPlus | ProbeEdge::RMinus => rect,
                ProbeEdge::TPlus => ChartRect::new(-1.2, 1.2, 0.0, FRAC_PI_2 - 1e-5, 65, 65)?,
                ProbeEdge::TMinus => {
                    ChartRect::new(-1.2, 1.2, -(FRAC_PI_2 - 1e-5), 0.0, 65, 65)?
                }
            };
            let dich = assets::scherk(dich_rect)?;
            Ok(ProbePlan::Levels {
                patch,
                mode: GraphMode::Minimal,
                levels,
                dichotomy: Some((dich, edge)),
            })
        }
        "oscillator" => {
            let edge = parse_edge(edge)?;
            if edge != ProbeEdge::RPlus {
                return Err(CliError::Config(
                    "oscillator oscillates along x+ only; probe that edge".into(),
                ));
            }
            let rect = ChartRect::new(0.0, FRAC_PI_2 - 1e-4, 0.0, 1.0, 65, 9)?;
            let patch = assets::oscillator(rect)?;
            Ok(ProbePlan::Levels {
                patch,
                mode: GraphMode::Translator,
                levels: levels.unwrap_or_default(),
                dichotomy: Some((assets::oscillator(rect)?, edge)),
            })
        }
        "euclidean-cmc-blowup" | "hyperbolic-cmc-blowup" => {
            let surface_name = if asset.starts_with("euclidean") {
                "euclidean"
            } else {
                "hyperbolic"
            };
            let surface = build_surface(surface_name, None)?;
            let h0 = h0.unwrap_or(if surface_name == "euclidean" { -1.0 } else { -SQRT_2 });
            if !(h0 < 0.0) {
                return Err(CliError::Config(format!(
                    "blow-up families need h0 < 0, got {h0}"
                )));
            }
            let cs = levels.unwrap_or_else(|| vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
            Ok(ProbePlan::Family {
                surface,
                surface_name: surface_name.to_string(),
                h0,
                cs,
                n_nodes: 512,
            })
        }
        "bowl" => {
            let patch = assets::bowl(3.2, 129)?;
            Ok(ProbePlan::Monitor {
                patch,
                center: (0.0, 0.0),
                radii: radii.unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0]),
            })
        }
        "hemisphere" => {
            let rect = ChartRect::new(0.02, 0.999, 0.0, 6.28, 129, 65)?;
            let patch = assets::hemisphere(rect)?;
            Ok(ProbePlan::Monitor {
                patch,
                center: (0.9, PI),
                radii: radii.unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0]),
            })
        }
        other => Err(CliError::Config(format!(
            "unknown probe asset {other:?} (known: {})",
            PROBE_ASSETS.join(", ")
        ))),
    }
}
