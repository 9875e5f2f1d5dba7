//! Stability operator and the angle-function identity on graph patches.
//!
//! The drifted stability operator acting on a node field `phi` is
//!
//! ```text
//! L phi = Delta_g phi + g^{ij} u_i phi_j + (|A|^2 + Ric(v, v)) phi
//! ```
//!
//! discretized in conservative form: the drift folds into the divergence as
//! the weight `e^u`, so `L` is exactly self-adjoint for the discrete measure
//! `e^u sqrt(g)` on the grid. On any graph the angle function satisfies
//!
//! ```text
//! Delta_g Theta + (|A|^2 + Ric(v, v)) Theta = g^{ij} H_i u_j
//! ```
//!
//! and on translators, where `H = -Theta`, the right side becomes a drift
//! term and `L Theta = 0`. [`graphic_identity_residual`] verifies the general
//! identity discretely; it decays at second order on smooth patches.

use ndarray::Array2;

use crate::patch::GraphPatch;
use crate::shape::{shape_at_node, ResidualField};

/// Per-node geometric coefficient fields for the conservative Laplacian.
/// Entries are NaN where the patch has no jet.
#[derive(Debug, Clone)]
pub struct NodeGeometry {
    pub theta: Array2<f64>,
    pub mean_curvature: Array2<f64>,
    /// `|A|^2 + Ric(v, v)`.
    pub potential: Array2<f64>,
    pub sqrt_g: Array2<f64>,
    pub ginv: [Array2<f64>; 3],
    /// Chart gradient `(u_r, u_t)` of the height.
    pub grad_u: [Array2<f64>; 2],
}

/// Evaluate shape data over the whole patch once.
pub fn node_geometry(patch: &GraphPatch) -> NodeGeometry {
    let dims = (patch.rect.nr, patch.rect.nt);
    let mut out = NodeGeometry {
        theta: Array2::from_elem(dims, f64::NAN),
        mean_curvature: Array2::from_elem(dims, f64::NAN),
        potential: Array2::from_elem(dims, f64::NAN),
        sqrt_g: Array2::from_elem(dims, f64::NAN),
        ginv: [
            Array2::from_elem(dims, f64::NAN),
            Array2::from_elem(dims, f64::NAN),
            Array2::from_elem(dims, f64::NAN),
        ],
        grad_u: [Array2::from_elem(dims, f64::NAN), Array2::from_elem(dims, f64::NAN)],
    };
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            let Some(jet) = patch.jet_at(i, j) else { continue };
            let sd = shape_at_node(patch, i, j).expect("jet exists");
            let Ok(ric) = patch.surface.ricci_normal(patch.r_at(i), sd.theta) else {
                continue;
            };
            out.theta[[i, j]] = sd.theta;
            out.mean_curvature[[i, j]] = sd.mean_curvature;
            out.potential[[i, j]] = sd.norm_a_sq + ric;
            out.sqrt_g[[i, j]] = sd.det_g.sqrt();
            out.ginv[0][[i, j]] = sd.metric_inv[0][0];
            out.ginv[1][[i, j]] = sd.metric_inv[0][1];
            out.ginv[2][[i, j]] = sd.metric_inv[1][1];
            out.grad_u[0][[i, j]] = jet.ur;
            out.grad_u[1][[i, j]] = jet.ut;
        }
    }
    out
}

fn get(a: &Array2<f64>, i: isize, j: isize) -> Option<f64> {
    if i < 0 || j < 0 || i >= a.nrows() as isize || j >= a.ncols() as isize {
        return None;
    }
    let v = a[[i as usize, j as usize]];
    v.is_finite().then_some(v)
}

/// Conservative Laplace-Beltrami operator at node `(i, j)`:
/// `(1 / (w sqrt g)) d_i (w sqrt g g^{ij} d_j phi)` with face coefficients
/// averaged from the adjacent nodes. `log_weight = Some(u)` turns the plain
/// Laplacian into the drifted operator `Delta_g + g^{ij} u_i d_j`.
pub fn flux_laplacian(
    geom: &NodeGeometry,
    patch: &GraphPatch,
    phi: &Array2<f64>,
    log_weight: Option<&Array2<f64>>,
    i: usize,
    j: usize,
) -> Option<f64> {
    let (ii, jj) = (i as isize, j as isize);
    let dr = patch.rect.dr();
    let dt = patch.rect.dt();

    // c_rr, c_rt, c_tt = w sqrt(g) g^{..} at a node.
    let coeff = |a: isize, b: isize| -> Option<[f64; 3]> {
        let sg = get(&geom.sqrt_g, a, b)?;
        let w = match log_weight {
            Some(lw) => get(lw, a, b)?.exp(),
            None => 1.0,
        };
        Some([
            w * sg * get(&geom.ginv[0], a, b)?,
            w * sg * get(&geom.ginv[1], a, b)?,
            w * sg * get(&geom.ginv[2], a, b)?,
        ])
    };
    let p = |a: isize, b: isize| get(phi, ii + a, jj + b);

    let radial_face = |side: isize| -> Option<f64> {
        let c0 = coeff(ii, jj)?;
        let c1 = coeff(ii + side, jj)?;
        let (lo, hi) = (side.min(0), side.max(0));
        let phi_r = (p(hi, 0)? - p(lo, 0)?) / dr;
        let phi_t = (p(0, 1)? - p(0, -1)? + p(side, 1)? - p(side, -1)?) / (4.0 * dt);
        Some(0.5 * (c0[0] + c1[0]) * phi_r + 0.5 * (c0[1] + c1[1]) * phi_t)
    };
    let angular_face = |side: isize| -> Option<f64> {
        let c0 = coeff(ii, jj)?;
        let c1 = coeff(ii, jj + side)?;
        let (lo, hi) = (side.min(0), side.max(0));
        let phi_t = (p(0, hi)? - p(0, lo)?) / dt;
        let phi_r = (p(1, 0)? - p(-1, 0)? + p(1, side)? - p(-1, side)?) / (4.0 * dr);
        Some(0.5 * (c0[1] + c1[1]) * phi_r + 0.5 * (c0[2] + c1[2]) * phi_t)
    };

    let fr_p = radial_face(1)?;
    let fr_m = radial_face(-1)?;
    let ft_p = angular_face(1)?;
    let ft_m = angular_face(-1)?;
    let sg0 = get(&geom.sqrt_g, ii, jj)?;
    let w0 = match log_weight {
        Some(lw) => get(lw, ii, jj)?.exp(),
        None => 1.0,
    };
    Some(((fr_p - fr_m) / dr + (ft_p - ft_m) / dt) / (w0 * sg0))
}

/// Apply the drifted stability operator to a node field. Nodes without the
/// full stencil hold NaN.
pub fn jacobi_apply(patch: &GraphPatch, phi: &Array2<f64>) -> Array2<f64> {
    let geom = node_geometry(patch);
    let dims = (patch.rect.nr, patch.rect.nt);
    let mut out = Array2::from_elem(dims, f64::NAN);
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            let Some(lap) = flux_laplacian(&geom, patch, phi, Some(&patch.u), i, j) else {
                continue;
            };
            let pot = geom.potential[[i, j]];
            let val = phi[[i, j]];
            if pot.is_finite() && val.is_finite() {
                out[[i, j]] = lap + pot * val;
            }
        }
    }
    out
}

/// Discrete residual of the angle-function identity
/// `Delta_g Theta + (|A|^2 + Ric) Theta - g^{ij} H_i u_j` over the patch.
///
/// Evaluation is restricted to margin-2 interior nodes: stencil-mode patches
/// switch from centered to one-sided differences along excluded seams, and
/// the truncation-error jump there does not cancel under the second
/// differences taken here. Every jet this touches is centered.
pub fn graphic_identity_residual(patch: &GraphPatch) -> ResidualField {
    let geom = node_geometry(patch);
    let dims = (patch.rect.nr, patch.rect.nt);
    let dr = patch.rect.dr();
    let dt = patch.rect.dt();
    let mut values = Array2::from_elem(dims, f64::NAN);
    let mut sup = 0.0;
    let mut at = (0, 0);
    let mut n = 0;
    for (i, j) in patch.deep_interior(2) {
        let (ii, jj) = (i as isize, j as isize);
        let Some(lap) = flux_laplacian(&geom, patch, &geom.theta, None, i, j) else {
            continue;
        };
        let hm = &geom.mean_curvature;
        let (Some(hr_p), Some(hr_m), Some(ht_p), Some(ht_m)) = (
            get(hm, ii + 1, jj),
            get(hm, ii - 1, jj),
            get(hm, ii, jj + 1),
            get(hm, ii, jj - 1),
        ) else {
            continue;
        };
        let h_r = (hr_p - hr_m) / (2.0 * dr);
        let h_t = (ht_p - ht_m) / (2.0 * dt);
        let (ur, ut) = (geom.grad_u[0][[i, j]], geom.grad_u[1][[i, j]]);
        let (grr, grt, gtt) =
            (geom.ginv[0][[i, j]], geom.ginv[1][[i, j]], geom.ginv[2][[i, j]]);
        let drift = grr * h_r * ur + grt * (h_r * ut + h_t * ur) + gtt * h_t * ut;
        let res = lap + geom.potential[[i, j]] * geom.theta[[i, j]] - drift;
        if !res.is_finite() {
            continue;
        }
        values[[i, j]] = res;
        n += 1;
        if res.abs() > sup {
            sup = res.abs();
            at = (i, j);
        }
    }
    ResidualField { values, sup, at, n_evaluated: n }
}
