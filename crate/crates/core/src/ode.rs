//! Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4), FSAL).
//!
//! The accepted steps double as the output nodes: callers cap the step size
//! at their desired output spacing, so no dense-output interpolant is needed
//! and every reported node carries a solution value of full integration
//! accuracy. An optional scalar event function halts the run where it first
//! crosses zero from above; the crossing is localized by bisection with short
//! fixed-step re-integrations inside the offending step.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (step {step:.3e})")]
    StepUnderflow { t: f64, step: f64 },
    #[error("node budget of {0} exhausted")]
    TooManyNodes(usize),
    #[error("right-hand side returned a non-finite value at t = {0}")]
    NonFinite(f64),
    #[error("integration span is empty")]
    EmptySpan,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |step|; accepted steps are the output nodes.
    pub max_step: f64,
    pub max_nodes: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, max_step: f64::INFINITY, max_nodes: 400_000 }
    }
}

#[derive(Debug, Clone)]
pub struct OdeOutput<const D: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; D]>,
    /// Set when the event function stopped the run; the final node is the
    /// localized crossing.
    pub stopped_by_event: bool,
}

const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn axpy<const D: usize>(y: &[f64; D], h: f64, coeffs: &[f64], ks: &[[f64; D]]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in coeffs.iter().zip(ks) {
        if *c != 0.0 {
            for d in 0..D {
                out[d] += h * c * k[d];
            }
        }
    }
    out
}

/// One embedded 5(4) step from `(t, y)` with FSAL slope `k1` already
/// evaluated. Returns `(y5, err_norm, k_last)`.
fn dp_step<const D: usize>(
    f: &impl Fn(f64, &[f64; D]) -> [f64; D],
    t: f64,
    y: &[f64; D],
    h: f64,
    k1: &[f64; D],
    rtol: f64,
    atol: f64,
) -> ([f64; D], f64, [f64; D]) {
    let k2 = f(t + C[0] * h, &axpy(y, h, &A2, std::slice::from_ref(k1)));
    let k3 = f(t + C[1] * h, &axpy(y, h, &A3, &[*k1, k2]));
    let k4 = f(t + C[2] * h, &axpy(y, h, &A4, &[*k1, k2, k3]));
    let k5 = f(t + C[3] * h, &axpy(y, h, &A5, &[*k1, k2, k3, k4]));
    let k6 = f(t + C[4] * h, &axpy(y, h, &A6, &[*k1, k2, k3, k4, k5]));
    let y5 = axpy(y, h, &B, &[*k1, k2, k3, k4, k5, k6]);
    let k7 = f(t + h, &y5);
    let mut err_sq = 0.0;
    let ks = [*k1, k2, k3, k4, k5, k6, k7];
    for d in 0..D {
        let mut e = 0.0;
        for (w, k) in E.iter().zip(&ks) {
            e += w * k[d];
        }
        e *= h;
        let scale = atol + rtol * y[d].abs().max(y5[d].abs());
        err_sq += (e / scale) * (e / scale);
    }
    (y5, (err_sq / D as f64).sqrt(), k7)
}

/// Fixed-step classical RK4 from `(t0, y0)` to `t1`, used only to localize
/// event crossings inside a single accepted step.
fn rk4_to<const D: usize>(
    f: &impl Fn(f64, &[f64; D]) -> [f64; D],
    t0: f64,
    y0: &[f64; D],
    t1: f64,
    substeps: usize,
) -> [f64; D] {
    let mut y = *y0;
    let mut t = t0;
    let dt = (t1 - t0) / substeps as f64;
    for _ in 0..substeps {
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * dt, &axpy(&y, dt, &[0.5], std::slice::from_ref(&k1)));
        let k3 = f(t + 0.5 * dt, &axpy(&y, dt, &[0.0, 0.5], &[k1, k2]));
        let k4 = f(t + dt, &axpy(&y, dt, &[0.0, 0.0, 1.0], &[k1, k2, k3]));
        for d in 0..D {
            y[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
        t += dt;
    }
    y
}

fn initial_step<const D: usize>(
    f: &impl Fn(f64, &[f64; D]) -> [f64; D],
    t0: f64,
    y0: &[f64; D],
    f0: &[f64; D],
    dir: f64,
    opts: &OdeOptions,
) -> f64 {
    let scale = |y: &[f64; D], d: usize| opts.atol + opts.rtol * y[d].abs();
    let d0 = (0..D).map(|d| (y0[d] / scale(y0, d)).powi(2)).sum::<f64>().sqrt();
    let d1 = (0..D).map(|d| (f0[d] / scale(y0, d)).powi(2)).sum::<f64>().sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = axpy(y0, dir * h0, &[1.0], std::slice::from_ref(f0));
    let f1 = f(t0 + dir * h0, &y1);
    let d2 = (0..D)
        .map(|d| ((f1[d] - f0[d]) / scale(y0, d)).powi(2))
        .sum::<f64>()
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.max_step)
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `event`, when given, maps `(t, y)` to a scalar that is positive on the
/// admissible region; the run stops where it first reaches zero and the
/// localized crossing becomes the final node.
pub fn integrate<const D: usize>(
    f: impl Fn(f64, &[f64; D]) -> [f64; D],
    t0: f64,
    t_end: f64,
    y0: [f64; D],
    opts: &OdeOptions,
    event: Option<&dyn Fn(f64, &[f64; D]) -> f64>,
) -> Result<OdeOutput<D>, OdeError> {
    if t0 == t_end {
        return Err(OdeError::EmptySpan);
    }
    let dir = (t_end - t0).signum();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFinite(t));
    }
    let mut h = initial_step(&f, t, &y, &k1, dir, opts).min(opts.max_step).min((t_end - t0).abs());

    let mut out = OdeOutput { t: vec![t], y: vec![y], stopped_by_event: false };
    if let Some(g) = event {
        if g(t, &y) <= 0.0 {
            out.stopped_by_event = true;
            return Ok(out);
        }
    }

    loop {
        let remaining = (t_end - t) * dir;
        if remaining <= 0.0 {
            return Ok(out);
        }
        h = h.min(opts.max_step);
        // Stretch slightly over the cap rather than leaving a sliver step.
        if remaining <= 1.01 * h {
            h = remaining;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t, step: h });
        }

        let (y_new, err, k_last) = dp_step(&f, t, &y, dir * h, &k1, opts.rtol, opts.atol);
        if !err.is_finite() {
            return Err(OdeError::NonFinite(t));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };

        if err <= 1.0 {
            let t_new = t + dir * h;
            if let Some(g) = event {
                if g(t_new, &y_new) <= 0.0 {
                    let (te, ye) = localize_event(&f, g, t, &y, t_new);
                    out.t.push(te);
                    out.y.push(ye);
                    out.stopped_by_event = true;
                    return Ok(out);
                }
            }
            t = t_new;
            y = y_new;
            k1 = k_last;
            out.t.push(t);
            out.y.push(y);
            if out.t.len() > opts.max_nodes {
                return Err(OdeError::TooManyNodes(opts.max_nodes));
            }
        }
        h *= factor;
    }
}

fn localize_event<const D: usize>(
    f: &impl Fn(f64, &[f64; D]) -> [f64; D],
    g: &dyn Fn(f64, &[f64; D]) -> f64,
    t_lo: f64,
    y_lo: &[f64; D],
    t_hi: f64,
) -> (f64, [f64; D]) {
    let mut lo = t_lo;
    let mut hi = t_hi;
    for _ in 0..80 {
        if (hi - lo).abs() <= 1e-13 * t_hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let y_mid = rk4_to(f, t_lo, y_lo, mid, 8);
        if g(mid, &y_mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, rk4_to(f, t_lo, y_lo, hi, 8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, ..Default::default() };
        let out = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, 3.0, [1.0], &opts, None).unwrap();
        let t = *out.t.last().unwrap();
        assert_eq!(t, 3.0);
        assert_relative_eq!(out.y.last().unwrap()[0], (-3.0f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn harmonic_oscillator_long_run() {
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let out = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            20.0 * std::f64::consts::PI,
            [1.0, 0.0],
            &opts,
            None,
        )
        .unwrap();
        let yf = out.y.last().unwrap();
        assert_relative_eq!(yf[0], 1.0, epsilon = 1e-8);
        assert!(yf[1].abs() < 1e-8);
    }

    #[test]
    fn max_step_caps_node_spacing() {
        let opts = OdeOptions { max_step: 0.01, ..Default::default() };
        let out = integrate(|_, y: &[f64; 1]| [y[0]], 0.0, 1.0, [1.0], &opts, None).unwrap();
        for w in out.t.windows(2) {
            assert!(w[1] - w[0] <= 0.0101 + 1e-12);
        }
        assert!(out.t.len() >= 100);
    }

    #[test]
    fn backward_integration() {
        let opts = OdeOptions::default();
        let out = integrate(|t, _: &[f64; 1]| [2.0 * t], 2.0, 1.0, [4.0], &opts, None).unwrap();
        assert_relative_eq!(out.y.last().unwrap()[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn event_is_localized_to_high_accuracy() {
        // y' = y, event at y = e (t = 1).
        let opts = OdeOptions::default();
        let out = integrate(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            5.0,
            [1.0],
            &opts,
            Some(&|_, y: &[f64; 1]| std::f64::consts::E - y[0]),
        )
        .unwrap();
        assert!(out.stopped_by_event);
        assert_relative_eq!(*out.t.last().unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn event_never_reached_runs_to_end() {
        let opts = OdeOptions::default();
        let out = integrate(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            1.0,
            [1.0],
            &opts,
            Some(&|_, y: &[f64; 1]| y[0] + 10.0),
        )
        .unwrap();
        assert!(!out.stopped_by_event);
        assert_eq!(*out.t.last().unwrap(), 1.0);
    }

    #[test]
    fn blow_up_reports_underflow() {
        // y' = y^2 from y(0) = 1 blows up at t = 1.
        let opts = OdeOptions { max_nodes: 1_000_000, ..Default::default() };
        let err = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, 2.0, [1.0], &opts, None);
        assert!(matches!(err, Err(OdeError::StepUnderflow { .. }) | Err(OdeError::NonFinite(_))));
    }

    #[test]
    fn node_budget_enforced() {
        let opts = OdeOptions { max_step: 1e-5, max_nodes: 100, ..Default::default() };
        let err = integrate(|_, y: &[f64; 1]| [y[0]], 0.0, 1.0, [1.0], &opts, None);
        assert!(matches!(err, Err(OdeError::TooManyNodes(100))));
    }

    #[test]
    fn tolerance_scaling() {
        // Tighter tolerance must shrink the endpoint error substantially.
        let run = |rtol: f64| {
            let opts = OdeOptions { rtol, atol: rtol * 1e-2, ..Default::default() };
            let out = integrate(
                |t, y: &[f64; 2]| [y[1], -t.sin() * y[0]],
                0.0,
                10.0,
                [1.0, 0.0],
                &opts,
                None,
            )
            .unwrap();
            out.y.last().unwrap()[0]
        };
        let coarse = run(1e-6);
        let fine = run(1e-12);
        let finest = run(1e-13);
        assert!((coarse - finest).abs() > 10.0 * (fine - finest).abs());
    }
}
