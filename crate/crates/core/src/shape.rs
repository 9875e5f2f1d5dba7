//! Pointwise extrinsic geometry of graph patches.
//!
//! All quantities refer to the graph of `u` inside the Riemannian product of
//! the surface with a vertical line. Sign conventions: the angle function is
//! `Theta = 1/W > 0`, the second fundamental form is `-Hess u / W` with the
//! chart-covariant Hessian, and mean curvature is its trace in the induced
//! metric, so `H = -div(Du/W)` and upward translators satisfy `H = -Theta`.
//!
//! Two residual styles are provided. `Analytic` evaluates the graph equation
//! from second-order jets. `Flux` discretizes `div(Du/W)` in conservative
//! form with half-node gradients, which is the discretization the Dirichlet
//! solver drives to zero; comparing the two styles separates modeling error
//! from discretization error.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::patch::{GraphPatch, Jet2, PatchError};
use crate::profile::GraphMode;
use crate::surface::WarpedSurface;

/// Extrinsic data of a graph at one chart point.
#[derive(Debug, Clone, Copy)]
pub struct ShapeData {
    pub w: f64,
    pub theta: f64,
    /// Induced metric `[[g_rr, g_rt], [g_rt, g_tt]]`.
    pub metric: [[f64; 2]; 2],
    pub metric_inv: [[f64; 2]; 2],
    pub det_g: f64,
    /// Second fundamental form components `[[h_rr, h_rt], [h_rt, h_tt]]`.
    pub second_form: [[f64; 2]; 2],
    pub mean_curvature: f64,
    pub norm_a_sq: f64,
}

/// Extrinsic geometry from a second-order jet at radius `r`.
pub fn shape_at(surface: &WarpedSurface, r: f64, jet: &Jet2) -> ShapeData {
    let h = surface.h(r);
    let hp = surface.h_prime(r);
    let (ur, ut) = (jet.ur, jet.ut);
    let w2 = 1.0 + ur * ur + (ut / h) * (ut / h);
    let w = w2.sqrt();

    let metric = [[1.0 + ur * ur, ur * ut], [ur * ut, h * h + ut * ut]];
    let det_g = h * h * w2;
    let gtu = ut / (h * h);
    let metric_inv = [
        [1.0 - ur * ur / w2, -ur * gtu / w2],
        [-ur * gtu / w2, 1.0 / (h * h) - gtu * gtu / w2],
    ];

    let hess = [
        [jet.urr, jet.urt - surface.log_derivative(r) * ut],
        [jet.urt - surface.log_derivative(r) * ut, jet.utt + h * hp * ur],
    ];
    let second_form = [
        [-hess[0][0] / w, -hess[0][1] / w],
        [-hess[1][0] / w, -hess[1][1] / w],
    ];

    // Shape operator S^i_j = g^{ik} h_kj; H = tr S, |A|^2 = tr S^2.
    let mut s = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            s[i][j] = metric_inv[i][0] * second_form[0][j] + metric_inv[i][1] * second_form[1][j];
        }
    }
    let mean_curvature = s[0][0] + s[1][1];
    let norm_a_sq =
        s[0][0] * s[0][0] + 2.0 * s[0][1] * s[1][0] + s[1][1] * s[1][1];

    ShapeData {
        w,
        theta: 1.0 / w,
        metric,
        metric_inv,
        det_g,
        second_form,
        mean_curvature,
        norm_a_sq,
    }
}

/// Extrinsic geometry at a grid node, or `None` where no jet is available.
pub fn shape_at_node(patch: &GraphPatch, i: usize, j: usize) -> Option<ShapeData> {
    let jet = patch.jet_at(i, j)?;
    Some(shape_at(&patch.surface, patch.r_at(i), &jet))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualStyle {
    /// Evaluate `-H - rhs` from second-order jets.
    Analytic,
    /// Conservative half-node discretization of `div(Du/W) - rhs`.
    Flux,
}

/// Node-sampled residual of a graph equation over a patch. `values` holds
/// NaN at nodes where the chosen style could not evaluate.
#[derive(Debug, Clone)]
pub struct ResidualField {
    pub values: Array2<f64>,
    pub sup: f64,
    pub at: (usize, usize),
    pub n_evaluated: usize,
}

/// Discrete `div(Du/W)` at node `(i, j)` in conservative form: face fluxes
/// `h u_r / W` and `u_t / (h^2 W)` at half nodes, with tangential gradients
/// averaged from the adjacent centered differences. Requires the full 3 x 3
/// neighborhood.
pub fn flux_divergence(patch: &GraphPatch, i: usize, j: usize) -> Option<f64> {
    let (ii, jj) = (i as isize, j as isize);
    let v = |a: isize, b: isize| patch.value(ii + a, jj + b);
    let mut stencil = [[0.0; 3]; 3];
    for a in -1..=1 {
        for b in -1..=1 {
            stencil[(a + 1) as usize][(b + 1) as usize] = v(a, b)?;
        }
    }
    let u = |a: i32, b: i32| stencil[(a + 1) as usize][(b + 1) as usize];
    let dr = patch.rect.dr();
    let dt = patch.rect.dt();
    let r = patch.r_at(i);

    let radial_face = |side: i32| {
        let ur = (u(side.max(0), 0) - u(side.min(0), 0)) / dr;
        let ut = (u(0, 1) - u(0, -1) + u(side, 1) - u(side, -1)) / (4.0 * dt);
        let rh = r + 0.5 * (side as f64) * dr;
        let h = patch.surface.h(rh);
        let w = (1.0 + ur * ur + (ut / h) * (ut / h)).sqrt();
        h * ur / w
    };
    let angular_face = |side: i32| {
        let ut = (u(0, side.max(0)) - u(0, side.min(0))) / dt;
        let ur = (u(1, 0) - u(-1, 0) + u(1, side) - u(-1, side)) / (4.0 * dr);
        let h = patch.surface.h(r);
        let w = (1.0 + ur * ur + (ut / h) * (ut / h)).sqrt();
        ut / (h * h * w)
    };

    let h0 = patch.surface.h(r);
    let div_r = (radial_face(1) - radial_face(-1)) / (dr * h0);
    let div_t = (angular_face(1) - angular_face(-1)) / dt;
    Some(div_r + div_t)
}

fn node_theta_centered(patch: &GraphPatch, i: usize, j: usize) -> Option<f64> {
    let (ii, jj) = (i as isize, j as isize);
    let ur = (patch.value(ii + 1, jj)? - patch.value(ii - 1, jj)?) / (2.0 * patch.rect.dr());
    let ut = (patch.value(ii, jj + 1)? - patch.value(ii, jj - 1)?) / (2.0 * patch.rect.dt());
    let h = patch.surface.h(patch.r_at(i));
    Some(1.0 / (1.0 + ur * ur + (ut / h) * (ut / h)).sqrt())
}

/// Right-hand side of `div(Du/W) = rhs` for each graph mode; `theta` is the
/// node's angle function.
fn equation_rhs(mode: GraphMode, theta: f64) -> f64 {
    match mode {
        GraphMode::Translator => theta,
        GraphMode::Minimal => 0.0,
        GraphMode::Cmc { h0 } => -h0,
    }
}

/// Pointwise residual of the graph equation over all evaluable nodes.
pub fn residual_field(patch: &GraphPatch, mode: GraphMode, style: ResidualStyle) -> ResidualField {
    let (nr, nt) = (patch.rect.nr, patch.rect.nt);
    let mut values = Array2::from_elem((nr, nt), f64::NAN);
    let mut sup = 0.0;
    let mut at = (0, 0);
    let mut n = 0;
    for i in 0..nr {
        for j in 0..nt {
            let res = match style {
                ResidualStyle::Analytic => match shape_at_node(patch, i, j) {
                    Some(sd) => Some(-sd.mean_curvature - equation_rhs(mode, sd.theta)),
                    None => None,
                },
                ResidualStyle::Flux => match (
                    flux_divergence(patch, i, j),
                    node_theta_centered(patch, i, j),
                ) {
                    (Some(div), Some(theta)) => Some(div - equation_rhs(mode, theta)),
                    _ => None,
                },
            };
            if let Some(res) = res {
                values[[i, j]] = res;
                n += 1;
                if res.abs() > sup {
                    sup = res.abs();
                    at = (i, j);
                }
            }
        }
    }
    ResidualField { values, sup, at, n_evaluated: n }
}

/// Node-sampled extrinsic geometry over a whole patch. Arrays hold NaN at
/// nodes without jet data.
#[derive(Debug, Clone)]
pub struct ShapeOperatorField {
    pub w: Array2<f64>,
    pub theta: Array2<f64>,
    pub h_rr: Array2<f64>,
    pub h_rt: Array2<f64>,
    pub h_tt: Array2<f64>,
    pub mean_curvature: Array2<f64>,
    pub norm_a_sq: Array2<f64>,
    pub n_evaluated: usize,
}

pub fn shape_operator_field(patch: &GraphPatch) -> ShapeOperatorField {
    let (nr, nt) = (patch.rect.nr, patch.rect.nt);
    let nan = Array2::from_elem((nr, nt), f64::NAN);
    let mut field = ShapeOperatorField {
        w: nan.clone(),
        theta: nan.clone(),
        h_rr: nan.clone(),
        h_rt: nan.clone(),
        h_tt: nan.clone(),
        mean_curvature: nan.clone(),
        norm_a_sq: nan,
        n_evaluated: 0,
    };
    for i in 0..nr {
        for j in 0..nt {
            if let Some(sd) = shape_at_node(patch, i, j) {
                field.w[[i, j]] = sd.w;
                field.theta[[i, j]] = sd.theta;
                field.h_rr[[i, j]] = sd.second_form[0][0];
                field.h_rt[[i, j]] = sd.second_form[0][1];
                field.h_tt[[i, j]] = sd.second_form[1][1];
                field.mean_curvature[[i, j]] = sd.mean_curvature;
                field.norm_a_sq[[i, j]] = sd.norm_a_sq;
                field.n_evaluated += 1;
            }
        }
    }
    field
}

/// The angle function `Theta = 1/W` at every node, NaN where unavailable.
pub fn angle_function(patch: &GraphPatch) -> Array2<f64> {
    shape_operator_field(patch).theta
}

impl ShapeOperatorField {
    /// Flat per-node table; NaN marks nodes without data.
    pub fn write_csv(&self, patch: &GraphPatch, path: &std::path::Path) -> Result<(), PatchError> {
        use std::io::Write as _;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "r,t,w,theta,h_rr,h_rt,h_tt,mean_curvature,norm_a_sq")?;
        for i in 0..patch.rect.nr {
            for j in 0..patch.rect.nt {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{},{},{}",
                    patch.r_at(i),
                    patch.t_at(j),
                    self.w[[i, j]],
                    self.theta[[i, j]],
                    self.h_rr[[i, j]],
                    self.h_rt[[i, j]],
                    self.h_tt[[i, j]],
                    self.mean_curvature[[i, j]],
                    self.norm_a_sq[[i, j]],
                )?;
            }
        }
        Ok(())
    }
}
