//! Cross-checks of the adaptive radial solver against an independent
//! fixed-step integrator written here, plus closed-form targets that do not
//! depend on any solver internals.

use std::sync::Arc;
use translator_lab::profile::{
    cmc_blowup_family, cmc_tangency_radius, solve_radial, EndpointClass, Launch, SolveOptions,
};
use translator_lab::{GraphMode, WarpedSurface};

/// Classic fourth-order Runge-Kutta on the system `(u' , p') = (p, f(r, p))`
/// between two radii, sharing nothing with the production integrator.
fn rk4_between(
    surface: &WarpedSurface,
    mode: GraphMode,
    r0: f64,
    u0: f64,
    p0: f64,
    r1: f64,
    n_steps: usize,
) -> (f64, f64) {
    let h = (r1 - r0) / n_steps as f64;
    let (mut u, mut p) = (u0, p0);
    let f = |r: f64, p: f64| mode.slope_derivative(surface, r, p);
    for k in 0..n_steps {
        let r = r0 + k as f64 * h;
        let (ku1, kp1) = (p, f(r, p));
        let (ku2, kp2) = (p + 0.5 * h * kp1, f(r + 0.5 * h, p + 0.5 * h * kp1));
        let (ku3, kp3) = (p + 0.5 * h * kp2, f(r + 0.5 * h, p + 0.5 * h * kp2));
        let (ku4, kp4) = (p + h * kp3, f(r + h, p + h * kp3));
        u += h / 6.0 * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4);
        p += h / 6.0 * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
    }
    (u, p)
}

fn node_at_or_after(rs: &[f64], target: f64) -> usize {
    rs.iter().position(|&r| r >= target).expect("target inside table")
}

#[test]
fn adaptive_translator_run_matches_fixed_step_rk4_on_flat_annulus() {
    let surface = Arc::new(WarpedSurface::euclidean());
    let prof =
        solve_radial(&surface, GraphMode::Translator, &SolveOptions::from_pole(5.0)).unwrap();
    let i0 = node_at_or_after(&prof.r, 0.25);
    let i1 = prof.r.len() - 1;
    let (u_rk, p_rk) = rk4_between(
        &surface,
        GraphMode::Translator,
        prof.r[i0],
        prof.u[i0],
        prof.p[i0],
        prof.r[i1],
        200_000,
    );
    let rel_p = (prof.p[i1] - p_rk).abs() / p_rk.abs();
    let rel_u = (prof.u[i1] - u_rk).abs() / u_rk.abs();
    assert!(rel_p < 1e-10, "slope mismatch {rel_p:.3e}");
    assert!(rel_u < 1e-10, "height mismatch {rel_u:.3e}");
}

#[test]
fn adaptive_spherical_run_matches_fixed_step_rk4_before_the_tangent() {
    let surface = Arc::new(WarpedSurface::spherical_cap(std::f64::consts::PI));
    let prof =
        solve_radial(&surface, GraphMode::Translator, &SolveOptions::from_pole(3.0)).unwrap();
    let i0 = node_at_or_after(&prof.r, 0.3);
    let i1 = node_at_or_after(&prof.r, 1.5);
    let (u_rk, p_rk) = rk4_between(
        &surface,
        GraphMode::Translator,
        prof.r[i0],
        prof.u[i0],
        prof.p[i0],
        prof.r[i1],
        200_000,
    );
    assert!((prof.p[i1] - p_rk).abs() / p_rk.abs() < 1e-9);
    assert!((prof.u[i1] - u_rk).abs() / u_rk.abs().max(1.0) < 1e-9);
}

#[test]
fn adaptive_cmc_run_matches_rk4_and_the_closed_form() {
    let surface = Arc::new(WarpedSurface::hyperbolic());
    let h0 = -(2.0f64.sqrt());
    let prof = solve_radial(&surface, GraphMode::Cmc { h0 }, &SolveOptions::from_pole(5.0))
        .unwrap();
    let i0 = node_at_or_after(&prof.r, 0.2);
    let i1 = node_at_or_after(&prof.r, 1.5);
    let (_, p_rk) = rk4_between(
        &surface,
        GraphMode::Cmc { h0 },
        prof.r[i0],
        prof.u[i0],
        prof.p[i0],
        prof.r[i1],
        200_000,
    );
    assert!((prof.p[i1] - p_rk).abs() / p_rk.abs() < 1e-9);
    // The first integral gives psi = sqrt(2) tanh(r/2) here: negative mean
    // curvature drives the graph upward.
    let r = prof.r[i1];
    let psi = prof.p[i1] / prof.p[i1].hypot(1.0);
    let psi_exact = (2.0f64.sqrt()) * (r / 2.0).tanh();
    assert!((psi - psi_exact).abs() < 1e-9, "psi {psi} vs {psi_exact}");
}

#[test]
fn flat_cmc_pole_launch_tangent_follows_the_first_integral() {
    // psi = |h0| r / 2 from the pole, so the slope turns vertical at 2/|h0|.
    let surface = Arc::new(WarpedSurface::euclidean());
    for h0 in [-0.5, -1.0, -2.0] {
        let prof = solve_radial(
            &surface,
            GraphMode::Cmc { h0 },
            &SolveOptions::from_pole(4.0 / h0.abs()),
        )
        .unwrap();
        match prof.endpoint {
            EndpointClass::VerticalTangent { r_star } => {
                let expected = 2.0 / h0.abs();
                assert!(
                    (r_star - expected).abs() < 1e-6,
                    "h0 {h0}: tangent at {r_star}, expected {expected}"
                );
            }
            other => panic!("h0 {h0}: expected a vertical tangent, got {other:?}"),
        }
    }
}

#[test]
fn flat_tangency_circle_radius_is_the_reciprocal_mean_curvature() {
    // The near-tangency annular family shrinks onto the circle whose
    // curvature h'/h = 1/r matches |h0|, and its members' tangent radii
    // converge to that circle at the prescribed exponential rate.
    let surface = Arc::new(WarpedSurface::euclidean());
    for h0 in [-0.5f64, -1.0, -2.0] {
        let r_star = cmc_tangency_radius(&surface, h0).unwrap();
        assert!(
            (r_star - 1.0 / h0.abs()).abs() < 1e-12,
            "h0 {h0}: tangency circle at {r_star}"
        );
        assert!(
            (surface.circle_geodesic_curvature(r_star).unwrap().abs() - h0.abs()).abs() < 1e-12
        );
        let member = cmc_blowup_family(&surface, h0, 6.0, 801).unwrap();
        match member.endpoint {
            EndpointClass::VerticalTangent { r_star: r_out } => {
                assert!(r_out > r_star && r_out - r_star < 0.01, "r_out {r_out} vs {r_star}");
            }
            other => panic!("h0 {h0}: expected a near-tangency member, got {other:?}"),
        }
    }
}

#[test]
fn interior_launch_reproduces_the_pole_launch_downstream() {
    let surface = Arc::new(WarpedSurface::euclidean());
    let base =
        solve_radial(&surface, GraphMode::Translator, &SolveOptions::from_pole(3.0)).unwrap();
    let i0 = node_at_or_after(&base.r, 1.0);
    let opts = SolveOptions {
        launch: Launch::Interior { r0: base.r[i0], u0: base.u[i0], p0: base.p[i0] },
        ..SolveOptions::from_pole(3.0)
    };
    let cont = solve_radial(&surface, GraphMode::Translator, &opts).unwrap();
    let pf_base = *base.p.last().unwrap();
    let pf_cont = *cont.p.last().unwrap();
    assert!((pf_base - pf_cont).abs() < 1e-9, "{pf_base} vs {pf_cont}");
    let uf_base = *base.u.last().unwrap();
    let uf_cont = *cont.u.last().unwrap();
    assert!((uf_base - uf_cont).abs() < 1e-9, "{uf_base} vs {uf_cont}");
}
