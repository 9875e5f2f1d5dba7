//! Closed-form graph assets shared by tests, probes, and the command line.
//!
//! Every asset carries an analytic 2-jet, so derived geometry is exact up to
//! rounding rather than stencil truncation. Blow-up assets return `None`
//! outside their domain of definition and the patch constructors mark those
//! nodes excluded.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::patch::{ChartRect, GraphPatch, Jet2, PatchError};
use crate::profile::{solve_radial, GraphMode, SolveOptions};
use crate::surface::WarpedSurface;

fn grim_reaper_jet(x: f64, _y: f64) -> Option<Jet2> {
    if x.abs() >= FRAC_PI_2 {
        return None;
    }
    let c = x.cos();
    if c <= 1e-300 {
        return None;
    }
    Some(Jet2 {
        u: -c.ln(),
        ur: x.tan(),
        ut: 0.0,
        urr: 1.0 / (c * c),
        urt: 0.0,
        utt: 0.0,
    })
}

/// Grim reaper graph `u = -ln cos x` over the degenerate cartesian chart.
/// A translating soliton whose height diverges along `x = ±π/2`.
pub fn grim_reaper(rect: ChartRect) -> Result<GraphPatch, PatchError> {
    let surface = Arc::new(WarpedSurface::cartesian());
    GraphPatch::from_jet(surface, rect, "grim-reaper", Arc::new(grim_reaper_jet))
}

fn scherk_jet(x: f64, y: f64) -> Option<Jet2> {
    if x.abs() >= FRAC_PI_2 || y.abs() >= FRAC_PI_2 {
        return None;
    }
    let (cx, cy) = (x.cos(), y.cos());
    if cx <= 1e-300 || cy <= 1e-300 {
        return None;
    }
    Some(Jet2 {
        u: cy.ln() - cx.ln(),
        ur: x.tan(),
        ut: -y.tan(),
        urr: 1.0 / (cx * cx),
        urt: 0.0,
        utt: -1.0 / (cy * cy),
    })
}

/// Doubly periodic minimal graph `u = ln cos y - ln cos x` over the
/// cartesian chart, positive blow-up along `x = ±π/2`, negative along
/// `y = ±π/2`.
pub fn scherk(rect: ChartRect) -> Result<GraphPatch, PatchError> {
    let surface = Arc::new(WarpedSurface::cartesian());
    GraphPatch::from_jet(surface, rect, "scherk", Arc::new(scherk_jet))
}

fn hemisphere_jet(r: f64, _t: f64) -> Option<Jet2> {
    if r >= 1.0 {
        return None;
    }
    let s = (1.0 - r * r).sqrt();
    Some(Jet2 {
        u: s,
        ur: -r / s,
        ut: 0.0,
        urr: -1.0 / (s * s * s),
        urt: 0.0,
        utt: 0.0,
    })
}

/// Upper unit hemisphere `u = sqrt(1 - r^2)` over the flat polar chart:
/// constant mean curvature `H = 2` with a vertical tangent at `r = 1`.
pub fn hemisphere(rect: ChartRect) -> Result<GraphPatch, PatchError> {
    let surface = Arc::new(WarpedSurface::euclidean());
    GraphPatch::from_jet(surface, rect, "hemisphere", Arc::new(hemisphere_jet))
}

/// Horizontal slice `u ≡ c` over an arbitrary base surface.
pub fn flat_slice(
    surface: Arc<WarpedSurface>,
    rect: ChartRect,
    c: f64,
) -> Result<GraphPatch, PatchError> {
    let jet = move |_r: f64, _t: f64| {
        Some(Jet2 { u: c, ur: 0.0, ut: 0.0, urr: 0.0, urt: 0.0, utt: 0.0 })
    };
    GraphPatch::from_jet(surface, rect, "flat-slice", Arc::new(jet))
}

/// Rotationally symmetric translating bowl resampled onto the cartesian
/// chart, so the rotation axis sits at an interior node. Jets come from the
/// radial profile by the chain rule; at the axis the removable singularity
/// is filled with the shared series limit `p/rho -> 1/2`, `p' -> 1/2`.
pub fn bowl(half_width: f64, n: usize) -> Result<GraphPatch, PatchError> {
    let radial = Arc::new(WarpedSurface::euclidean());
    let reach = std::f64::consts::SQRT_2 * half_width + 0.5;
    let profile = Arc::new(solve_radial(
        &radial,
        GraphMode::Translator,
        &SolveOptions::from_pole(reach),
    )?);
    let chart = Arc::new(WarpedSurface::cartesian());
    let rect = ChartRect::new(-half_width, half_width, -half_width, half_width, n, n)?;
    let jet = move |x: f64, y: f64| -> Option<Jet2> {
        let rho = x.hypot(y);
        if rho < 1e-6 {
            let (u0, _) = profile.sample_height_slope(0.0)?;
            return Some(Jet2 {
                u: u0 + 0.25 * rho * rho,
                ur: 0.5 * x,
                ut: 0.5 * y,
                urr: 0.5,
                urt: 0.0,
                utt: 0.5,
            });
        }
        let (u, p) = profile.sample_height_slope(rho)?;
        let q = profile.mode.slope_derivative(&profile.surface, rho, p);
        let (cx, cy) = (x / rho, y / rho);
        Some(Jet2 {
            u,
            ur: p * cx,
            ut: p * cy,
            urr: q * cx * cx + p * cy * cy / rho,
            urt: (q - p / rho) * cx * cy,
            utt: q * cy * cy + p * cx * cx / rho,
        })
    };
    GraphPatch::from_jet(chart, rect, "bowl", Arc::new(jet))
}

fn oscillator_jet(x: f64, _y: f64) -> Option<Jet2> {
    let d = FRAC_PI_2 - x;
    if d <= 1e-9 {
        return None;
    }
    let (s, c) = (1.0 / d).sin_cos();
    Some(Jet2 {
        u: x * s,
        ur: s + x * c / (d * d),
        ut: 0.0,
        urr: 2.0 * c / (d * d) + 2.0 * x * c / (d * d * d) - x * s / (d * d * d * d),
        urt: 0.0,
        utt: 0.0,
    })
}

/// Bounded oscillating graph `u = x sin(1/(π/2 - x))` on the cartesian
/// chart. The height stays finite while its sign flips infinitely often on
/// approach to `x = π/2`, so no one-sided divergence exists there.
pub fn oscillator(rect: ChartRect) -> Result<GraphPatch, PatchError> {
    let surface = Arc::new(WarpedSurface::cartesian());
    GraphPatch::from_jet(surface, rect, "oscillator", Arc::new(oscillator_jet))
}

/// Seeded smooth trigonometric graph with O(1) slope for randomized
/// identity checks. Identical seeds reproduce identical coefficients.
pub fn random_smooth(
    surface: Arc<WarpedSurface>,
    rect: ChartRect,
    seed: u64,
) -> Result<GraphPatch, PatchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = [(0.0f64, 0.0f64, 0.0f64, 0.0f64); 4];
    for m in &mut modes {
        *m = (
            rng.gen_range(-0.25..0.25),
            rng.gen_range(0.4..1.8),
            rng.gen_range(0.4..1.8),
            rng.gen_range(0.0..TAU),
        );
    }
    let jet = move |r: f64, t: f64| -> Option<Jet2> {
        let mut j = Jet2 { u: 0.0, ur: 0.0, ut: 0.0, urr: 0.0, urt: 0.0, utt: 0.0 };
        for &(amp, ar, at, ph) in &modes {
            let arg = ar * r + at * t + ph;
            let (s, c) = arg.sin_cos();
            j.u += amp * s;
            j.ur += amp * ar * c;
            j.ut += amp * at * c;
            j.urr -= amp * ar * ar * s;
            j.urt -= amp * ar * at * s;
            j.utt -= amp * at * at * s;
        }
        Some(j)
    };
    let label = format!("random-smooth-{seed}");
    GraphPatch::from_jet(surface, rect, &label, Arc::new(jet))
}

/// Rotationally symmetric translator sampled as plain grid values over a
/// flat annulus, with derivatives left to the stencil. This is the gridded
/// counterpart of `bowl`: every derived quantity carries second-order
/// truncation error, which makes it the reference asset for refinement
/// studies.
pub fn radial_translator(rect: ChartRect) -> Result<GraphPatch, PatchError> {
    let surface = Arc::new(WarpedSurface::euclidean());
    let profile = solve_radial(
        &surface,
        GraphMode::Translator,
        &SolveOptions::from_pole(rect.r_hi + 0.5),
    )?;
    GraphPatch::from_values(surface, rect, "radial-translator", |r, _| {
        profile.sample_height_slope(r).map(|(u, _)| u)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::{residual_field, shape_at_node, ResidualStyle};

    #[test]
    fn grim_reaper_jets_match_stencil_differences() {
        let rect = ChartRect::new(-1.0, 1.0, 0.0, 1.0, 41, 11).unwrap();
        let patch = grim_reaper(rect).unwrap();
        let coarse = GraphPatch::from_values(
            Arc::new(WarpedSurface::cartesian()),
            rect,
            "grim-sampled",
            |x, y| grim_reaper_jet(x, y).map(|j| j.u),
        )
        .unwrap();
        let dx = rect.dr();
        for &(i, j) in &[(5usize, 5usize), (20, 3), (34, 7)] {
            let a = patch.jet_at(i, j).unwrap();
            let s = coarse.jet_at(i, j).unwrap();
            assert!((a.ur - s.ur).abs() < dx * dx * 10.0);
            assert!((a.urr - s.urr).abs() < dx * dx * 40.0);
        }
    }

    #[test]
    fn scherk_is_minimal_to_rounding() {
        let rect = ChartRect::new(-1.2, 1.2, -1.2, 1.2, 33, 33).unwrap();
        let patch = scherk(rect).unwrap();
        let res = residual_field(&patch, GraphMode::Minimal, ResidualStyle::Analytic);
        assert!(res.sup < 1e-10, "sup residual {}", res.sup);
    }

    #[test]
    fn bowl_jets_are_consistent_and_axis_curvature_is_half() {
        let patch = bowl(2.4, 49).unwrap();
        let c = 24usize;
        assert!(patch.r_at(c).abs() < 1e-12);
        let s = shape_at_node(&patch, c, c).unwrap();
        assert!((s.norm_a_sq - 0.5).abs() < 1e-9, "axis |A|^2 {}", s.norm_a_sq);
        let res = residual_field(&patch, GraphMode::Translator, ResidualStyle::Analytic);
        assert!(res.sup < 1e-7, "bowl translator residual {}", res.sup);
        let j = patch.jet_at(30, 18).unwrap();
        let x = patch.r_at(30);
        let y = patch.t_at(18);
        let d = 1e-5;
        let up = patch.sample_height(x + d, y).unwrap();
        let um = patch.sample_height(x - d, y).unwrap();
        assert!(((up - um) / (2.0 * d) - j.ur).abs() < 1e-6);
    }

    #[test]
    fn oscillator_flips_sign_approaching_the_edge() {
        let rect = ChartRect::new(0.0, FRAC_PI_2 - 1e-4, 0.0, 1.0, 65, 9).unwrap();
        let patch = oscillator(rect).unwrap();
        let mut flips = 0;
        let mut last = 0.0f64;
        for k in 0..400 {
            let x = FRAC_PI_2 - 0.05 * 0.97f64.powi(k);
            if let Some(u) = patch.sample_height(x, 0.5) {
                if u * last < 0.0 {
                    flips += 1;
                }
                last = u;
            }
        }
        assert!(flips > 6, "only {flips} sign flips");
    }

    #[test]
    fn random_smooth_is_seed_deterministic() {
        let surface = Arc::new(WarpedSurface::hyperbolic());
        let rect = ChartRect::new(0.5, 2.0, 0.0, 1.5, 17, 17).unwrap();
        let a = random_smooth(surface.clone(), rect, 7).unwrap();
        let b = random_smooth(surface.clone(), rect, 7).unwrap();
        let c = random_smooth(surface, rect, 8).unwrap();
        for ((ua, ub), uc) in a.u.iter().zip(b.u.iter()).zip(c.u.iter()) {
            assert_eq!(ua.to_bits(), ub.to_bits());
            let _ = uc;
        }
        assert!(a.u.iter().zip(c.u.iter()).any(|(x, y)| x != y));
    }

    #[test]
    fn hemisphere_jets_have_constant_mean_curvature() {
        let rect = ChartRect::new(0.05, 0.95, 0.0, 3.0, 21, 21).unwrap();
        let patch = hemisphere(rect).unwrap();
        for &(i, j) in &[(0usize, 0usize), (10, 10), (20, 20)] {
            let s = shape_at_node(&patch, i, j).unwrap();
            assert!((s.mean_curvature - 2.0).abs() < 1e-11);
        }
    }
}
