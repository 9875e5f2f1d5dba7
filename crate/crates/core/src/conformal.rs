//! Conformally weighted ambient geometry on `N^2 x R`.
//!
//! The ambient product metric `sigma + dt^2` is rescaled by `e^t`, the
//! conformal factor `e^{2f}` with `f = t/2`. Sectional curvatures of the
//! rescaled metric close in the warped chart: the horizontal plane carries
//! `e^{-t} (K - 1/4)` and every plane containing the vertical direction is
//! flat. Hypersurface data transforms by
//!
//! ```text
//! h~_ij = e^f (h_ij + df(v) g_ij)      H~ = e^{-f} (H + 2 df(v))
//! ```
//!
//! so upward graphs satisfy `H~ = e^{-u/2} (H + Theta)`: zero exactly on
//! translating solitons.

use ndarray::Array2;
use serde::Serialize;
use thiserror::Error;

use crate::jacobi::{jacobi_apply, node_geometry};
use crate::numeric::pairwise_sum;
use crate::patch::GraphPatch;
use crate::shape::ResidualField;
use crate::surface::{SurfaceError, WarpedSurface};
use std::sync::Arc;

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("surface: {0}")]
    Surface(#[from] SurfaceError),
    #[error("metric is not positive definite: {0}")]
    NotSpd(String),
    #[error("index placements disagree on the trace by {0:e}")]
    TraceMismatch(f64),
    #[error("{0}")]
    Config(String),
}

/// Ambient weighting context: the base surface plus an optional reference
/// height. A reference height rescales every curvature by the exact factor
/// `e^{-t0}`, applied as one multiply so the scaling is bitwise.
#[derive(Debug, Clone)]
pub struct WeightedMetricContext {
    pub surface: Arc<WarpedSurface>,
    pub t0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvaturePlane {
    /// Span of the two horizontal chart directions.
    Horizontal12,
    /// Span of the radial and vertical directions.
    Vertical13,
    /// Span of the angular and vertical directions.
    Vertical23,
}

/// Sectional curvature of the weighted ambient metric at chart radius `r`
/// and height `t`.
pub fn weighted_sectional(
    ctx: &WeightedMetricContext,
    r: f64,
    t: f64,
    plane: CurvaturePlane,
) -> Result<f64, ConformalError> {
    let base = match plane {
        CurvaturePlane::Horizontal12 => {
            (-t).exp() * (ctx.surface.gauss_curvature(r)? - 0.25)
        }
        CurvaturePlane::Vertical13 | CurvaturePlane::Vertical23 => 0.0,
    };
    Ok(match ctx.t0 {
        Some(t0) => (-t0).exp() * base,
        None => base,
    })
}

/// Second fundamental form of a hypersurface after the conformal change,
/// in both index placements.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConformalSecondForm {
    /// Covariant components `h~_ij = e^f (h_ij + df(v) g_ij)`.
    pub lower: [[f64; 2]; 2],
    /// Mixed components `h~_i^j = e^{-f} (h_i^j + df(v) d_i^j)`.
    pub mixed: [[f64; 2]; 2],
    /// Trace of the mixed form, `e^{-f} (H + 2 df(v))`.
    pub mean: f64,
}

/// Transform second-fundamental-form data under the conformal factor
/// `e^{2f}`, where `f_value` is `f` at the point and `df_normal` is `df`
/// evaluated on the chosen unit normal.
pub fn conformal_second_form(
    h: [[f64; 2]; 2],
    g: [[f64; 2]; 2],
    f_value: f64,
    df_normal: f64,
) -> Result<ConformalSecondForm, ConformalError> {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if !(g[0][0] > 0.0 && det > 0.0) || !det.is_finite() {
        return Err(ConformalError::NotSpd(format!("g11 = {}, det = {}", g[0][0], det)));
    }
    let ef = f_value.exp();
    let emf = (-f_value).exp();
    let ginv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    let mut lower = [[0.0; 2]; 2];
    let mut mixed = [[0.0; 2]; 2];
    let mut trace_h = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            lower[i][j] = ef * (h[i][j] + df_normal * g[i][j]);
            let hij_mixed = ginv[j][0] * h[0][i] + ginv[j][1] * h[1][i];
            mixed[i][j] = emf * (hij_mixed + if i == j { df_normal } else { 0.0 });
            trace_h += ginv[i][j] * h[i][j];
        }
    }
    let mean = emf * (trace_h + 2.0 * df_normal);
    let drift = (mixed[0][0] + mixed[1][1] - mean).abs();
    let scale = mean.abs().max(trace_h.abs()).max(1.0);
    if drift > 1e-10 * scale {
        return Err(ConformalError::TraceMismatch(drift));
    }
    Ok(ConformalSecondForm { lower, mixed, mean })
}

/// Weighted mean curvature field `H~ = e^{-u/2} (H + Theta)` over a patch,
/// evaluated at the total height of each node. Vanishes identically on
/// translating solitons.
pub fn weighted_mean_curvature(patch: &GraphPatch) -> ResidualField {
    let dims = (patch.rect.nr, patch.rect.nt);
    let mut values = Array2::from_elem(dims, f64::NAN);
    let mut sup = 0.0f64;
    let mut at = (0usize, 0usize);
    let mut n = 0usize;
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            let Some(sd) = crate::shape::shape_at_node(patch, i, j) else { continue };
            let v = (-0.5 * patch.height(i, j)).exp() * (sd.mean_curvature + sd.theta);
            values[[i, j]] = v;
            n += 1;
            if v.abs() > sup {
                sup = v.abs();
                at = (i, j);
            }
        }
    }
    ResidualField { values, sup, at, n_evaluated: n }
}

/// One grid-level report from an identity or convergence check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check_name: String,
    pub grid: (usize, usize),
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    pub order_estimate: Option<f64>,
}

/// Mean dyadic convergence order of a sequence of errors measured on
/// successively halved spacings.
pub fn convergence_order(errors: &[f64]) -> Option<f64> {
    if errors.len() < 2 || errors.iter().any(|e| !(*e > 0.0)) {
        return None;
    }
    let rates: Vec<f64> =
        errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Some(rates.iter().sum::<f64>() / rates.len() as f64)
}

/// Discrete stability identity for a compactly supported variation.
///
/// With `phi = eta * Theta` and the drifted stability operator `L`,
///
/// ```text
/// -sum phi (L phi) e^u dA  =  sum Theta^2 |grad eta|^2 e^u dA
/// ```
///
/// holds on translators up to quadrature error because `L Theta = 0` and the
/// conservative discretization is exactly self-adjoint for the weighted node
/// measure. `eta` must vanish on the two-node collar along the boundary and
/// every excluded region.
pub fn second_variation_check(
    patch: &GraphPatch,
    eta: &Array2<f64>,
) -> Result<CheckReport, ConformalError> {
    let dims = (patch.rect.nr, patch.rect.nt);
    if eta.dim() != dims {
        return Err(ConformalError::Config(format!(
            "eta has shape {:?}, patch grid is {:?}",
            eta.dim(),
            dims
        )));
    }
    let mut allowed = Array2::from_elem(dims, false);
    for (i, j) in patch.deep_interior(2) {
        allowed[[i, j]] = true;
    }
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            if eta[[i, j]] != 0.0 && !allowed[[i, j]] {
                return Err(ConformalError::Config(format!(
                    "variation support touches the boundary collar at ({i}, {j})"
                )));
            }
        }
    }

    let geom = node_geometry(patch);
    let mut phi = Array2::zeros(dims);
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            let th = geom.theta[[i, j]];
            if eta[[i, j]] != 0.0 && th.is_finite() {
                phi[[i, j]] = eta[[i, j]] * th;
            }
        }
    }
    let lphi = jacobi_apply(patch, &phi);
    let (dr, dt) = (patch.rect.dr(), patch.rect.dt());
    let cell = dr * dt;

    let mut lhs_terms = Vec::new();
    let mut rhs_terms = Vec::new();
    for i in 1..dims.0 - 1 {
        for j in 1..dims.1 - 1 {
            let weight = patch.height(i, j).exp() * geom.sqrt_g[[i, j]] * cell;
            if phi[[i, j]] != 0.0 {
                let l = lphi[[i, j]];
                if !l.is_finite() || !weight.is_finite() {
                    return Err(ConformalError::Config(format!(
                        "operator undefined inside the support at ({i}, {j})"
                    )));
                }
                lhs_terms.push(-phi[[i, j]] * l * weight);
            }
            let er = (eta[[i + 1, j]] - eta[[i - 1, j]]) / (2.0 * dr);
            let et = (eta[[i, j + 1]] - eta[[i, j - 1]]) / (2.0 * dt);
            if er != 0.0 || et != 0.0 {
                let th2 = geom.theta[[i, j]] * geom.theta[[i, j]];
                let quad = geom.ginv[0][[i, j]] * er * er
                    + 2.0 * geom.ginv[1][[i, j]] * er * et
                    + geom.ginv[2][[i, j]] * et * et;
                if !quad.is_finite() || !weight.is_finite() {
                    return Err(ConformalError::Config(format!(
                        "gradient term undefined inside the support at ({i}, {j})"
                    )));
                }
                rhs_terms.push(th2 * quad * weight);
            }
        }
    }
    let lhs = pairwise_sum(&lhs_terms);
    let rhs = pairwise_sum(&rhs_terms);
    let rel_err = (lhs - rhs).abs() / rhs.abs().max(1e-30);
    Ok(CheckReport {
        check_name: "second-variation".into(),
        grid: dims,
        lhs,
        rhs,
        rel_err,
        order_estimate: None,
    })
}

/// Smooth compactly supported test function for the stability identity: a
/// cubed quadratic bump centered in the chart rectangle, clearing the
/// two-node boundary collar that `second_variation_check` requires.
pub fn bump_variation(patch: &GraphPatch) -> Array2<f64> {
    let dims = (patch.rect.nr, patch.rect.nt);
    let mut eta = Array2::zeros(dims);
    let rect = &patch.rect;
    let (rc, tc) = (0.5 * (rect.r_lo + rect.r_hi), 0.5 * (rect.t_lo + rect.t_hi));
    let (rw, tw) = (0.36 * (rect.r_hi - rect.r_lo), 0.36 * (rect.t_hi - rect.t_lo));
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            let x = (rect.r_at(i) - rc) / rw;
            let y = (rect.t_at(j) - tc) / tw;
            let q = x * x + y * y;
            if q < 1.0 {
                eta[[i, j]] = (1.0 - q).powi(3);
            }
        }
    }
    eta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::fdgeom;
    use crate::patch::ChartRect;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pinned_horizontal_curvatures() {
        let sph = WeightedMetricContext { surface: Arc::new(WarpedSurface::spherical()), t0: None };
        let v = weighted_sectional(&sph, 0.5, 0.0, CurvaturePlane::Horizontal12).unwrap();
        assert_relative_eq!(v, 0.75, max_relative = 1e-14);
        let hyp =
            WeightedMetricContext { surface: Arc::new(WarpedSurface::hyperbolic()), t0: None };
        let v = weighted_sectional(&hyp, 1.0, 4.0f64.ln(), CurvaturePlane::Horizontal12).unwrap();
        assert_relative_eq!(v, -0.3125, max_relative = 1e-14);
        for plane in [CurvaturePlane::Vertical13, CurvaturePlane::Vertical23] {
            assert_eq!(weighted_sectional(&hyp, 1.0, 0.3, plane).unwrap(), 0.0);
        }
    }

    #[test]
    fn reference_height_scales_bitwise() {
        let surface = Arc::new(WarpedSurface::spherical());
        let plain = WeightedMetricContext { surface: surface.clone(), t0: None };
        let shifted = WeightedMetricContext { surface, t0: Some(0.7) };
        for r in [0.3, 0.8, 1.2] {
            for t in [-0.5, 0.0, 2.0] {
                let a =
                    weighted_sectional(&plain, r, t, CurvaturePlane::Horizontal12).unwrap();
                let b =
                    weighted_sectional(&shifted, r, t, CurvaturePlane::Horizontal12).unwrap();
                assert_eq!(b.to_bits(), ((-0.7f64).exp() * a).to_bits());
            }
        }
    }

    #[test]
    fn finite_difference_oracle_confirms_weighted_curvatures() {
        let surfaces = [
            WarpedSurface::euclidean(),
            WarpedSurface::spherical(),
            WarpedSurface::hyperbolic(),
            WarpedSurface::cartesian(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for surface in surfaces {
            let surface = Arc::new(surface);
            let ctx = WeightedMetricContext { surface: surface.clone(), t0: None };
            let s = surface.clone();
            let g = move |x: [f64; 3]| {
                let h = s.h(x[0]);
                let e = x[2].exp();
                [[e, 0.0, 0.0], [0.0, e * h * h, 0.0], [0.0, 0.0, e]]
            };
            let (lo, hi) = surface.chart();
            let (rlo, rhi) = (lo.max(-2.0) + 0.3, hi.min(2.5) - 0.3);
            for _ in 0..8 {
                let r = rng.gen_range(rlo..rhi);
                let t = rng.gen_range(-1.0..1.0);
                let x = [r, 0.4, t];
                let closed =
                    weighted_sectional(&ctx, r, t, CurvaturePlane::Horizontal12).unwrap();
                let fd = fdgeom::sectional(&g, x, 0, 1, 4e-3);
                assert_relative_eq!(fd, closed, max_relative = 2e-6, epsilon = 1e-9);
                assert!(fdgeom::sectional(&g, x, 0, 2, 4e-3).abs() < 1e-8);
                assert!(fdgeom::sectional(&g, x, 1, 2, 4e-3).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn slice_second_form_is_pure_trace() {
        let surface = WarpedSurface::hyperbolic();
        let t0 = 0.8;
        for r in [0.5, 1.0, 1.7] {
            let h2 = surface.h(r) * surface.h(r);
            let g = [[1.0, 0.0], [0.0, h2]];
            let out = conformal_second_form([[0.0; 2]; 2], g, t0 / 2.0, -0.5).unwrap();
            let scale = -0.5 * (t0 / 2.0).exp();
            assert_relative_eq!(out.lower[0][0], scale, max_relative = 1e-14);
            assert_relative_eq!(out.lower[1][1], scale * h2, max_relative = 1e-14);
            assert_eq!(out.lower[0][1], 0.0);
            assert_relative_eq!(out.mean, -(-t0 / 2.0f64).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn trace_free_part_scales_and_trace_shifts() {
        let g = [[1.3, 0.2], [0.2, 2.1]];
        let h = [[0.7, -0.1], [-0.1, 0.4]];
        let f = 0.9;
        let base = conformal_second_form(h, g, 0.0, 0.0).unwrap();
        let out = conformal_second_form(h, g, f, 0.25).unwrap();
        let tf_base = [
            [base.mixed[0][0] - base.mean / 2.0, base.mixed[0][1]],
            [base.mixed[1][0], base.mixed[1][1] - base.mean / 2.0],
        ];
        let tf_out = [
            [out.mixed[0][0] - out.mean / 2.0, out.mixed[0][1]],
            [out.mixed[1][0], out.mixed[1][1] - out.mean / 2.0],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(
                    tf_out[i][j],
                    (-f).exp() * tf_base[i][j],
                    epsilon = 1e-14,
                    max_relative = 1e-12
                );
            }
        }
        assert_relative_eq!(
            out.mean,
            (-f).exp() * (base.mean + 2.0 * 0.25),
            max_relative = 1e-13
        );
        let bad = conformal_second_form(h, [[1.0, 3.0], [3.0, 1.0]], 0.0, 0.0);
        assert!(bad.is_err());
    }

    #[test]
    fn weighted_mean_curvature_closed_forms() {
        let rect = ChartRect::new(-1.1, 1.1, 0.0, 2.0, 33, 33).unwrap();
        let grim = assets::grim_reaper(rect).unwrap();
        assert!(weighted_mean_curvature(&grim).sup < 1e-10);
        let slice = assets::flat_slice(
            Arc::new(WarpedSurface::hyperbolic()),
            ChartRect::new(0.4, 1.6, 0.0, 1.0, 17, 17).unwrap(),
            1.3,
        )
        .unwrap();
        let field = weighted_mean_curvature(&slice);
        assert_relative_eq!(field.sup, (-0.65f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn second_variation_identity_converges_on_grim_reaper() {
        let mut errs = Vec::new();
        for n in [65usize, 129, 257] {
            let rect = ChartRect::new(-1.1, 1.1, 0.0, 2.2, n, n).unwrap();
            let patch = assets::grim_reaper(rect).unwrap();
            let eta = bump_eta(&patch);
            let rep = second_variation_check(&patch, &eta).unwrap();
            assert!(rep.rhs > 0.0);
            errs.push(rep.rel_err);
        }
        let order = convergence_order(&errs).unwrap();
        assert!(order > 1.8, "order {order}, errs {errs:?}");
        assert!(errs[2] < 1e-3, "rel err at finest {:?}", errs);
    }

    use super::bump_variation as bump_eta;

    #[test]
    fn random_variations_are_nonnegative() {
        let rect = ChartRect::new(-1.1, 1.1, 0.0, 2.2, 49, 49).unwrap();
        let patch = assets::grim_reaper(rect).unwrap();
        let dims = (rect.nr, rect.nt);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let allowed: std::collections::HashSet<(usize, usize)> =
            patch.deep_interior(2).into_iter().collect();
        for _ in 0..20 {
            let mut eta = Array2::zeros(dims);
            for i in 0..dims.0 {
                for j in 0..dims.1 {
                    if allowed.contains(&(i, j)) {
                        eta[[i, j]] = rng.gen_range(-1.0..1.0);
                    }
                }
            }
            let rep = second_variation_check(&patch, &eta).unwrap();
            assert!(rep.rhs >= 0.0);
            let scale = rep.rhs.abs().max(1.0);
            assert!(rep.lhs >= -1e-8 * scale, "lhs {} rhs {}", rep.lhs, rep.rhs);
        }
    }

    #[test]
    fn support_touching_the_collar_is_rejected() {
        let rect = ChartRect::new(-1.0, 1.0, 0.0, 1.0, 17, 17).unwrap();
        let patch = assets::grim_reaper(rect).unwrap();
        let mut eta = Array2::zeros((17, 17));
        eta[[1, 8]] = 1.0;
        assert!(second_variation_check(&patch, &eta).is_err());
    }
}
