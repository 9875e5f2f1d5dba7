//! Radial graph profiles: translating, minimal, and constant-mean-curvature
//! equations reduced to an ODE in the radius.
//!
//! With `p = u_r`, `W = sqrt(1 + p^2)`, `psi = p/W`, a rotationally symmetric
//! graph satisfies `div(Du/W) = psi' + (h'/h) psi`, and the three modes solve
//!
//! ```text
//! p' = (1 + p^2) (S - (h'/h) p),   S = 1 (translator)
//!                                  S = 0 (minimal)
//!                                  S = -H0 W (constant mean curvature)
//! ```
//!
//! under the sign convention `H = -div(Du/W)` for the upward unit normal.
//! Minimal and CMC flows conserve the first integral
//! `h psi + H0 A(r) = B` with `A' = h`.
//!
//! Runs stop either at the target radius or where `|psi|` reaches unity
//! (vertical tangent). The endpoint is classified from the tail of
//! `q = 1 - |psi|`: a simple zero means the graph ends at a vertical tangent
//! with finite height, a double zero means the slope integral diverges and
//! the height blows up.

use crate::numeric::{local_derivative, pairwise_sum, polyfit, NumericError};
use crate::ode::{integrate, OdeError, OdeOptions};
use crate::surface::{SurfaceError, WarpedSurface};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

/// Radius of the series launch off the pole.
const POLE_LAUNCH_R: f64 = 1e-3;
/// A run stops when `1 - |psi|` falls to this value.
pub const EVENT_EPS: f64 = 1e-6;
/// Residual verification skips the collar where `1 - |psi|` is below this.
pub const COLLAR_Q: f64 = 1e-3;
const FIT_WINDOW: usize = 50;
const RHO_DOUBLE: f64 = 0.1;
const RHO_SIMPLE: f64 = 0.5;
const FIT_COND_MAX: f64 = 1e6;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("pole launch requires a chart with a pole")]
    NoPole,
    #[error("bad solve range: {0}")]
    BadRange(String),
    #[error(
        "endpoint classification inconclusive (slope ratio {rho:.3e}, fit condition {condition:.3e})"
    )]
    Inconclusive { rho: f64, condition: f64 },
    #[error("no tangency radius with h'/h = {0} inside the chart")]
    NoTangency(f64),
    #[error("translator flows have no conserved first integral")]
    NoFirstIntegral,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GraphMode {
    Translator,
    Minimal,
    Cmc { h0: f64 },
}

impl fmt::Display for GraphMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphMode::Translator => write!(f, "translator"),
            GraphMode::Minimal => write!(f, "minimal"),
            GraphMode::Cmc { h0 } => write!(f, "cmc(h0={h0})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum EndpointClass {
    /// The run reached the requested radius with `|psi|` bounded away from 1.
    Regular,
    /// `|psi|` reaches 1 like a simple zero of `1 - |psi|`: the graph ends at
    /// finite height with a vertical tangent.
    VerticalTangent { r_star: f64 },
    /// `1 - |psi|` vanishes like a double zero: `u_r` is non-integrable and
    /// the height diverges toward `r_star`.
    HeightBlowUp { r_star: f64 },
}

/// Diagnostics from the endpoint fit; `condition` is the condition number of
/// the scaled quadratic least-squares system.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EndpointFit {
    pub rho: f64,
    pub condition: f64,
    pub window: usize,
}

#[derive(Debug, Clone, Copy)]
pub enum Launch {
    /// Series launch from the pole with height `u0`.
    Pole { u0: f64 },
    /// Start at an interior radius with prescribed height and slope.
    Interior { r0: f64, u0: f64, p0: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub r_stop: f64,
    pub launch: Launch,
    pub max_nodes: usize,
}

impl SolveOptions {
    pub fn from_pole(r_stop: f64) -> Self {
        SolveOptions { tol: 1e-10, r_stop, launch: Launch::Pole { u0: 0.0 }, max_nodes: 400_000 }
    }
}

/// A solved (or synthesized) radial profile. Nodes are stored in integration
/// order, so the final entry is the stopping end.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub surface: Arc<WarpedSurface>,
    pub mode: GraphMode,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Per-node defect of the graph equation, recomputed from the node table
    /// alone (not from the integrator's right-hand side).
    pub residual: Vec<f64>,
    pub endpoint: EndpointClass,
    pub fit: Option<EndpointFit>,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualReport {
    pub sup: f64,
    pub at_r: f64,
    pub n_used: usize,
    pub n_excluded: usize,
}

fn source_term(mode: GraphMode, w: f64) -> f64 {
    match mode {
        GraphMode::Translator => 1.0,
        GraphMode::Minimal => 0.0,
        GraphMode::Cmc { h0 } => -h0 * w,
    }
}

impl GraphMode {
    /// Right-hand side of the radial slope equation,
    /// `p' = (1 + p^2) (S - (h'/h) p)` with `S` this mode's source term.
    pub fn slope_derivative(&self, surface: &WarpedSurface, r: f64, p: f64) -> f64 {
        let w = p.hypot(1.0);
        (1.0 + p * p) * (source_term(*self, w) - surface.log_derivative(r) * p)
    }
}

/// Integrate the radial graph equation. The launch may sit on either side of
/// `r_stop`; integration runs toward `r_stop` and stops early at a vertical
/// tangent.
pub fn solve_radial(
    surface: &Arc<WarpedSurface>,
    mode: GraphMode,
    opts: &SolveOptions,
) -> Result<RadialProfile, ProfileError> {
    let (lo, hi) = surface.chart();
    if !(opts.r_stop > lo && opts.r_stop < hi) {
        return Err(ProfileError::BadRange(format!(
            "r_stop = {} outside open chart ({lo}, {hi})",
            opts.r_stop
        )));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(ProfileError::BadRange(format!("tol = {} not in (0, 1)", opts.tol)));
    }

    let (r0, y0, pole_u0) = match opts.launch {
        Launch::Pole { u0 } => {
            if !surface.has_pole() {
                return Err(ProfileError::NoPole);
            }
            if opts.r_stop <= POLE_LAUNCH_R {
                return Err(ProfileError::BadRange(format!(
                    "r_stop = {} must exceed the pole launch radius {POLE_LAUNCH_R}",
                    opts.r_stop
                )));
            }
            let (u, p) = pole_series(surface, mode, u0, POLE_LAUNCH_R);
            (POLE_LAUNCH_R, [u, p], Some(u0))
        }
        Launch::Interior { r0, u0, p0 } => {
            if !surface.contains(r0) || r0 == opts.r_stop {
                return Err(ProfileError::BadRange(format!("launch radius {r0} invalid")));
            }
            (r0, [u0, p0], None)
        }
    };

    let span = (opts.r_stop - r0).abs();
    let delta_out = (0.5 * opts.tol.powf(0.3)).clamp(span / 200_000.0, span / 64.0);
    let ode_opts = OdeOptions {
        rtol: (opts.tol / 50.0).max(1e-13),
        atol: (opts.tol / 50.0).max(1e-13) * 1e-2,
        max_step: delta_out,
        max_nodes: opts.max_nodes,
    };

    let rhs = |r: f64, y: &[f64; 2]| [y[1], mode.slope_derivative(surface, r, y[1])];
    let event = |_: f64, y: &[f64; 2]| {
        let p = y[1];
        1.0 - (p / p.hypot(1.0)).abs() - EVENT_EPS
    };
    let out = integrate(rhs, r0, opts.r_stop, y0, &ode_opts, Some(&event))?;

    let mut r = Vec::with_capacity(out.t.len() + 1);
    let mut u = Vec::with_capacity(out.t.len() + 1);
    let mut p = Vec::with_capacity(out.t.len() + 1);
    if let Some(u0) = pole_u0 {
        r.push(0.0);
        u.push(u0);
        p.push(0.0);
    }
    r.extend_from_slice(&out.t);
    u.extend(out.y.iter().map(|y| y[0]));
    p.extend(out.y.iter().map(|y| y[1]));

    // A rejected-then-shrunk closing step can leave a rounding-scale sliver
    // before the final node, which would poison derivative reconstruction.
    while r.len() >= 3 {
        let n = r.len();
        if (r[n - 1] - r[n - 2]).abs() < 1e-9 * span {
            r.remove(n - 2);
            u.remove(n - 2);
            p.remove(n - 2);
        } else {
            break;
        }
    }

    let psi: Vec<f64> = p.iter().map(|&p| p / p.hypot(1.0)).collect();
    let (endpoint, fit) = classify_endpoint(&r, &psi, !out.stopped_by_event)?;

    let mut profile = RadialProfile {
        surface: surface.clone(),
        mode,
        r,
        u,
        p,
        residual: Vec::new(),
        endpoint,
        fit,
        tol: opts.tol,
    };
    profile.residual = node_residuals(&profile);
    Ok(profile)
}

/// Slope and height of the power-series launch at radius `r` off the pole.
fn pole_series(surface: &WarpedSurface, mode: GraphMode, u0: f64, r: f64) -> (f64, f64) {
    // h = r + h3 r^3 + ..., with h3 = c1/2 for the pole expansion
    // coefficient c1 of h'/h.
    let h3 = 0.5 * surface.pole_expansion_c1();
    let (c1, c3) = match mode {
        GraphMode::Translator => (0.5, 1.0 / 32.0 - h3 / 4.0),
        GraphMode::Minimal => (0.0, 0.0),
        GraphMode::Cmc { h0 } => {
            let c1 = -h0 / 2.0;
            (c1, (c1 * c1 * c1 - h3 * c1) / 2.0)
        }
    };
    let p = c1 * r + c3 * r * r * r;
    let u = u0 + c1 * r * r / 2.0 + c3 * r.powi(4) / 4.0;
    (u, p)
}

/// Classify the stopping end from the tail of `q = 1 - |psi|`.
///
/// The fitted window is the trailing run of nodes with `q` below the collar
/// threshold, subsampled to a bounded count: adaptive steps cluster
/// geometrically toward a vertical tangent, so index-even subsampling covers
/// `q` across its decades, which a fixed node count from the end would not.
/// A quadratic in the scaled distance from the final node is fitted; the
/// slope of the fit at its nearest root, normalized by the window amplitude,
/// separates simple zeros (vertical tangent) from double zeros (height
/// blow-up).
pub fn classify_endpoint(
    r: &[f64],
    psi: &[f64],
    reached_stop: bool,
) -> Result<(EndpointClass, Option<EndpointFit>), ProfileError> {
    if reached_stop {
        return Ok((EndpointClass::Regular, None));
    }
    let n = r.len();
    if n < 8 {
        return Err(ProfileError::Inconclusive { rho: f64::NAN, condition: f64::NAN });
    }
    let q_all: Vec<f64> = psi.iter().map(|&s| 1.0 - s.abs()).collect();
    let mut start = n - 1;
    while start > 0 && q_all[start - 1] <= COLLAR_Q {
        start -= 1;
    }
    let run = n - start;
    let idx: Vec<usize> = if run < 8 {
        let m = FIT_WINDOW.min(n);
        (n - m..n).collect()
    } else if run <= FIT_WINDOW {
        (start..n).collect()
    } else {
        (0..FIT_WINDOW)
            .map(|j| start + (j * (run - 1)) / (FIT_WINDOW - 1))
            .collect()
    };
    let m = idx.len();
    let r_end = r[n - 1];
    let dir = (r_end - r[0]).signum();
    let w = (r_end - r[idx[0]]).abs();
    if w == 0.0 {
        return Err(ProfileError::Inconclusive { rho: f64::NAN, condition: f64::NAN });
    }
    let xi: Vec<f64> = idx.iter().map(|&i| (r_end - r[i]) * dir / w).collect();
    let q: Vec<f64> = idx.iter().map(|&i| q_all[i]).collect();
    let q_max = q.iter().cloned().fold(0.0f64, f64::max);
    let (coef, condition) = polyfit(&xi, &q, 2)?;
    let (a, b, c) = (coef[0], coef[1], coef[2]);

    // Root of the fitted quadratic nearest the final node.
    let root = if c.abs() < 1e-12 * (a.abs() + b.abs()).max(1e-300) {
        if b.abs() > 0.0 {
            Some(-a / b)
        } else {
            None
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let s = disc.sqrt();
            let r1 = (-b + s) / (2.0 * c);
            let r2 = (-b - s) / (2.0 * c);
            Some(if r1.abs() <= r2.abs() { r1 } else { r2 })
        } else {
            // Complex pair: the vertex is the contact point of a grazing
            // (double-zero) tail if the fit dips low enough.
            let v = -b / (2.0 * c);
            let qv = a + b * v + c * v * v;
            if qv.abs() <= 0.05 * q_max {
                Some(v)
            } else {
                None
            }
        }
    };
    let xi_star = match root {
        Some(x) if x.abs() <= 2.0 && condition <= FIT_COND_MAX => x,
        _ => {
            return Err(ProfileError::Inconclusive {
                rho: f64::NAN,
                condition,
            });
        }
    };
    let rho = (b + 2.0 * c * xi_star).abs() / q_max.max(1e-300);
    let r_star = r_end - dir * xi_star * w;
    let fit = EndpointFit { rho, condition, window: m };
    if rho < RHO_DOUBLE {
        Ok((EndpointClass::HeightBlowUp { r_star }, Some(fit)))
    } else if rho > RHO_SIMPLE {
        Ok((EndpointClass::VerticalTangent { r_star }, Some(fit)))
    } else {
        Err(ProfileError::Inconclusive { rho, condition })
    }
}

/// Per-node defect `psi' + (h'/h) psi - S/W`, with `psi'` reconstructed from
/// the node table by local quartic fits. At a pole node the defect vanishes
/// by the launch series and is recorded as zero.
fn node_residuals(profile: &RadialProfile) -> Vec<f64> {
    let n = profile.r.len();
    let mut res = vec![0.0; n];
    for i in 0..n {
        let ri = profile.r[i];
        if ri == 0.0 {
            continue;
        }
        let p = profile.p[i];
        let w = p.hypot(1.0);
        let dp = match local_derivative(&profile.r, &profile.p, i) {
            Ok(d) => d,
            Err(_) => continue,
        };
        let div = dp / (w * w * w) + profile.surface.log_derivative(ri) * p / w;
        res[i] = div - source_term(profile.mode, w) / w;
    }
    res
}

/// Sup-norm of the node residuals outside the vertical-tangent collar
/// (`1 - |psi| < COLLAR_Q`), where slope reconstruction degenerates.
pub fn verify_profile_residual(profile: &RadialProfile) -> ResidualReport {
    let mut sup = 0.0;
    let mut at_r = f64::NAN;
    let mut used = 0;
    let mut excluded = 0;
    for i in 0..profile.r.len() {
        let p = profile.p[i];
        let q = 1.0 - (p / p.hypot(1.0)).abs();
        if q < COLLAR_Q {
            excluded += 1;
            continue;
        }
        used += 1;
        if profile.residual[i].abs() > sup {
            sup = profile.residual[i].abs();
            at_r = profile.r[i];
        }
    }
    ResidualReport { sup, at_r, n_used: used, n_excluded: excluded }
}

/// Largest drift of the conserved quantity `h psi + H0 A(r)` across the
/// node table (`H0 = 0` for minimal graphs). Translators carry no such
/// integral.
pub fn first_integral_drift(profile: &RadialProfile) -> Result<f64, ProfileError> {
    let h0 = match profile.mode {
        GraphMode::Translator => return Err(ProfileError::NoFirstIntegral),
        GraphMode::Minimal => 0.0,
        GraphMode::Cmc { h0 } => h0,
    };
    let s = &profile.surface;
    let value = |i: usize| {
        let r = profile.r[i];
        let p = profile.p[i];
        let h = if r == 0.0 && s.has_pole() { 0.0 } else { s.h(r) };
        h * p / p.hypot(1.0) + h0 * s.h_antiderivative(r)
    };
    let b0 = value(0);
    let mut drift = 0.0f64;
    for i in 1..profile.r.len() {
        drift = drift.max((value(i) - b0).abs());
    }
    Ok(drift)
}

/// Radius where `h'/h` equals `|h0|`, found by a bracketed scan of
/// `h' - |h0| h`. This is where a constant-mean-curvature first-integral
/// branch can meet `|psi| = 1` tangentially.
pub fn cmc_tangency_radius(surface: &WarpedSurface, h0: f64) -> Result<f64, ProfileError> {
    let target = h0.abs();
    let (lo, hi) = surface.chart();
    let lo = if surface.has_pole() { 1e-6 } else { lo.max(-1e6) + 1e-6 };
    let hi = hi.min(1e6) - 1e-6;
    let g = |r: f64| surface.h_prime(r) - target * surface.h(r);
    let n = 4096;
    let mut prev_r = lo;
    let mut prev_g = g(lo);
    for i in 1..=n {
        let r = lo + (hi - lo) * i as f64 / n as f64;
        let gr = g(r);
        if prev_g == 0.0 {
            return Ok(prev_r);
        }
        if prev_g * gr < 0.0 {
            let root = crate::numeric::bisect(g, prev_r, r, 1e-14)?;
            return Ok(root);
        }
        prev_r = r;
        prev_g = gr;
    }
    Err(ProfileError::NoTangency(target))
}

/// Build a profile from a closed-form slope function `psi(r)` on the given
/// node radii (`|psi| < 1` required). Heights come from per-segment
/// Gauss-Legendre quadrature of `p = psi/sqrt(1-psi^2)` anchored at `u0`.
pub fn profile_from_slope(
    surface: &Arc<WarpedSurface>,
    mode: GraphMode,
    r_nodes: Vec<f64>,
    psi_fn: &dyn Fn(f64) -> f64,
    u0: f64,
    endpoint: EndpointClass,
) -> Result<RadialProfile, ProfileError> {
    const GL_X: [f64; 5] = [
        -0.906179845938664,
        -0.538469310105683,
        0.0,
        0.538469310105683,
        0.906179845938664,
    ];
    const GL_W: [f64; 5] = [
        0.236926885056189,
        0.478628670499366,
        0.568888888888889,
        0.478628670499366,
        0.236926885056189,
    ];
    let slope = |r: f64| {
        let psi = psi_fn(r);
        debug_assert!(psi.abs() < 1.0, "slope function must satisfy |psi| < 1");
        psi / (1.0 - psi * psi).sqrt()
    };
    let p: Vec<f64> = r_nodes.iter().map(|&r| slope(r)).collect();
    let mut u = Vec::with_capacity(r_nodes.len());
    let mut acc = u0;
    u.push(acc);
    for i in 1..r_nodes.len() {
        let (a, b) = (r_nodes[i - 1], r_nodes[i]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let seg: f64 = GL_X.iter().zip(GL_W).map(|(&x, w)| w * slope(mid + half * x)).sum::<f64>() * half;
        acc += seg;
        u.push(acc);
    }
    let mut profile = RadialProfile {
        surface: surface.clone(),
        mode,
        r: r_nodes,
        u,
        p,
        residual: Vec::new(),
        endpoint,
        fit: None,
        tol: 0.0,
    };
    profile.residual = node_residuals(&profile);
    Ok(profile)
}

/// One member of the algebraic family of constant-mean-curvature annular
/// graphs collapsing onto the cylinder over the tangency radius.
///
/// The member with parameter `c` is the exact first-integral branch whose
/// outer vertical tangent sits at `r_out = r_star + rho0 e^{-c}`; as `c`
/// grows the annulus tightens onto `r_star` and the geodesic curvature of
/// the boundary circle converges to `|h0|` at rate `e^{-c}`.
pub fn cmc_blowup_family(
    surface: &Arc<WarpedSurface>,
    h0: f64,
    c: f64,
    n_nodes: usize,
) -> Result<RadialProfile, ProfileError> {
    if h0 >= 0.0 {
        return Err(ProfileError::BadRange("family requires h0 < 0".into()));
    }
    let r_star = cmc_tangency_radius(surface, h0)?;
    let (_, hi) = surface.chart();
    let rho0 = 0.2 * (hi - r_star).min(r_star).min(1.0);
    if !(rho0 > 0.0) {
        return Err(ProfileError::BadRange("tangency radius too close to the chart edge".into()));
    }
    let r_out = r_star + rho0 * (-c).exp();
    // First-integral constant pinned so |psi| = 1 exactly at r_out.
    let b = surface.h(r_out) + h0 * surface.h_antiderivative(r_out);
    let psi = move |r: f64| (b - h0 * surface.h_antiderivative(r)) / surface.h(r);

    // Inner vertical tangent: psi = 1 again below r_star. Scan toward the
    // chart start for a sign change, then bisect.
    let g = |r: f64| 1.0 - psi(r);
    let (chart_lo, _) = surface.chart();
    let scan_lo = if surface.has_pole() { 1e-9 } else { chart_lo.max(-1e6) + 1e-9 };
    let m = 4096;
    let mut bracket = None;
    let mut prev = r_star;
    for i in 1..=m {
        let rr = r_star + (scan_lo - r_star) * i as f64 / m as f64;
        if g(rr) <= 0.0 {
            bracket = Some((rr, prev));
            break;
        }
        prev = rr;
    }
    let (blo, bhi) =
        bracket.ok_or_else(|| ProfileError::BadRange("no inner vertical tangent".into()))?;
    let r_in = crate::numeric::bisect(g, blo, bhi, 1e-15)?;

    // Keep nodes strictly between the two vertical tangents.
    let margin = 1e-6 * (r_out - r_in);
    let (inner, outer) = (r_in + margin, r_out - margin);
    let n = n_nodes.max(64);
    let nodes: Vec<f64> =
        (0..n).map(|i| inner + (outer - inner) * i as f64 / (n - 1) as f64).collect();
    profile_from_slope(
        surface,
        GraphMode::Cmc { h0 },
        nodes,
        &psi,
        0.0,
        EndpointClass::VerticalTangent { r_star: r_out },
    )
}

/// Synthetic branch grazing `|psi| = 1` from below with a double zero at the
/// tangency radius, mirroring the over-unity critical first-integral branch.
/// No genuine radial CMC graph attains this contact (the family above turns
/// around at simple zeros instead), so the classifier's double-zero path is
/// exercised with this witness.
pub fn cmc_tangency_branch(
    surface: &Arc<WarpedSurface>,
    h0: f64,
    n_nodes: usize,
) -> Result<RadialProfile, ProfileError> {
    if h0 >= 0.0 {
        return Err(ProfileError::BadRange("tangency branch requires h0 < 0".into()));
    }
    let r_star = cmc_tangency_radius(surface, h0)?;
    let b_c = surface.h(r_star) + h0 * surface.h_antiderivative(r_star);
    let psi_over = move |r: f64| (b_c - h0 * surface.h_antiderivative(r)) / surface.h(r);
    let psi = move |r: f64| 2.0 - psi_over(r);
    let rho0 = 0.2 * r_star.min(1.0);
    let r_end = crate::numeric::bisect(
        |r| (1.0 - psi(r)) - EVENT_EPS,
        r_star - rho0,
        r_star - 1e-12,
        1e-15,
    )?;
    let n = n_nodes.max(64);
    let start = r_star - rho0;
    let nodes: Vec<f64> =
        (0..n).map(|i| start + (r_end - start) * i as f64 / (n - 1) as f64).collect();
    profile_from_slope(
        surface,
        GraphMode::Cmc { h0 },
        nodes,
        &psi,
        0.0,
        EndpointClass::HeightBlowUp { r_star },
    )
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Slope angle sine `psi = p/W` at node `i`.
    pub fn psi(&self, i: usize) -> f64 {
        let p = self.p[i];
        p / p.hypot(1.0)
    }

    /// Angle function `1/W` at node `i`.
    pub fn theta(&self, i: usize) -> f64 {
        1.0 / self.p[i].hypot(1.0)
    }

    /// Radius where the height equals `level`, by cubic Hermite interpolation
    /// on the node table (`u' = p` supplies exact segment derivatives).
    pub fn level_radius(&self, level: f64) -> Option<f64> {
        let n = self.r.len();
        for i in 0..n.saturating_sub(1) {
            let (u0, u1) = (self.u[i], self.u[i + 1]);
            if (u0 - level) * (u1 - level) > 0.0 {
                continue;
            }
            if u0 == u1 {
                continue;
            }
            let (r0, r1) = (self.r[i], self.r[i + 1]);
            let d = r1 - r0;
            let (p0, p1) = (self.p[i] * d, self.p[i + 1] * d);
            let eval = |t: f64| {
                let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
                let h10 = t * (1.0 - t) * (1.0 - t);
                let h01 = t * t * (3.0 - 2.0 * t);
                let h11 = t * t * (t - 1.0);
                h00 * u0 + h10 * p0 + h01 * u1 + h11 * p1 - level
            };
            let (mut a, mut b) = (0.0, 1.0);
            let (fa, fb) = (eval(a), eval(b));
            if fa == 0.0 {
                return Some(r0);
            }
            if fb == 0.0 {
                return Some(r1);
            }
            if fa * fb > 0.0 {
                continue;
            }
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if eval(m) * eval(a) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
                if b - a < 1e-15 {
                    break;
                }
            }
            return Some(r0 + 0.5 * (a + b) * d);
        }
        None
    }

    /// Height and slope at an arbitrary radius inside the node table, by
    /// cubic Hermite interpolation per segment. The height segment uses
    /// `u' = p` for exact endpoint derivatives; the slope segment uses the
    /// governing equation for `p'` at the endpoints. Monotonicity of `r` is
    /// not assumed globally, only per segment.
    pub fn sample_height_slope(&self, r: f64) -> Option<(f64, f64)> {
        let n = self.r.len();
        for i in 0..n.saturating_sub(1) {
            let (r0, r1) = (self.r[i], self.r[i + 1]);
            if (r - r0) * (r - r1) > 0.0 || r0 == r1 {
                continue;
            }
            let d = r1 - r0;
            let t = (r - r0) / d;
            let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
            let h10 = t * (1.0 - t) * (1.0 - t);
            let h01 = t * t * (3.0 - 2.0 * t);
            let h11 = t * t * (t - 1.0);
            let (u0, u1) = (self.u[i], self.u[i + 1]);
            let (p0, p1) = (self.p[i], self.p[i + 1]);
            let u = h00 * u0 + h10 * p0 * d + h01 * u1 + h11 * p1 * d;
            // At the pole node the product (h'/h) p has the finite limit c1,
            // the leading series coefficient of p, so p'(0) = c1 exactly.
            let dp0 = if r0 == 0.0 {
                match self.mode {
                    GraphMode::Translator => 0.5,
                    GraphMode::Minimal => 0.0,
                    GraphMode::Cmc { h0 } => -0.5 * h0,
                }
            } else {
                self.mode.slope_derivative(&self.surface, r0, p0)
            };
            let dp1 = self.mode.slope_derivative(&self.surface, r1, p1);
            let p = h00 * p0 + h10 * dp0 * d + h01 * p1 + h11 * dp1 * d;
            return Some((u, p));
        }
        None
    }

    /// Height span of the node table.
    pub fn height_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.u {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Total height change along the profile via pairwise summation of
    /// segment increments (order-independent determinism).
    pub fn height_climb(&self) -> f64 {
        let incs: Vec<f64> = self.u.windows(2).map(|w| w[1] - w[0]).collect();
        pairwise_sum(&incs)
    }

    /// Write `r,u,u_r,residual` rows.
    pub fn write_csv(&self, path: &Path) -> Result<(), ProfileError> {
        use std::io::Write as _;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "r,u,u_r,residual")?;
        for i in 0..self.r.len() {
            writeln!(f, "{},{},{},{}", self.r[i], self.u[i], self.p[i], self.residual[i])?;
        }
        Ok(())
    }

    pub fn meta(&self) -> ProfileMeta {
        let report = verify_profile_residual(self);
        ProfileMeta {
            surface: self.surface.descriptor(),
            mode: self.mode,
            tol: self.tol,
            n_nodes: self.r.len(),
            endpoint: self.endpoint,
            fit: self.fit,
            r_last: *self.r.last().unwrap_or(&f64::NAN),
            u_last: *self.u.last().unwrap_or(&f64::NAN),
            sup_residual: report.sup,
            first_integral_drift: first_integral_drift(self).ok(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileMeta {
    pub surface: String,
    pub mode: GraphMode,
    pub tol: f64,
    pub n_nodes: usize,
    pub endpoint: EndpointClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<EndpointFit>,
    pub r_last: f64,
    pub u_last: f64,
    pub sup_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_integral_drift: Option<f64>,
}
