//! Finite-difference Riemannian geometry on coordinate charts.
//!
//! Everything here is derived from a black-box metric field by five-point
//! stencils: metric derivatives give Christoffel symbols, their derivatives
//! plus the quadratic terms give the curvature tensor. No closed-form
//! curvature enters, so these routines serve as an independent oracle for
//! the analytic formulas used elsewhere.
//!
//! Conventions: `R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z -
//! nabla_[X,Y] Z`, sectional curvature `sec(X,Y) = <R(X,Y)Y, X> /
//! (|X|^2 |Y|^2 - <X,Y>^2)`, so the unit sphere has `sec = +1`.

use nalgebra::SMatrix;

/// Christoffel symbols `Gamma[k][i][j] = Gamma^k_ij` at `x`, from five-point
/// differences of the metric with spacing `step`.
pub fn christoffel<const N: usize>(
    g: &impl Fn([f64; N]) -> [[f64; N]; N],
    x: [f64; N],
    step: f64,
) -> [[[f64; N]; N]; N] {
    // dg[l][i][j] = partial_l g_ij
    let mut dg = [[[0.0; N]; N]; N];
    for l in 0..N {
        let shift = |s: f64| {
            let mut xs = x;
            xs[l] += s * step;
            g(xs)
        };
        let (m2, m1, p1, p2) = (shift(-2.0), shift(-1.0), shift(1.0), shift(2.0));
        for i in 0..N {
            for j in 0..N {
                dg[l][i][j] =
                    (m2[i][j] - 8.0 * m1[i][j] + 8.0 * p1[i][j] - p2[i][j]) / (12.0 * step);
            }
        }
    }
    let g0 = g(x);
    let gm = SMatrix::<f64, N, N>::from_fn(|i, j| g0[i][j]);
    let ginv = gm.try_inverse().expect("metric must be invertible");
    let mut gamma = [[[0.0; N]; N]; N];
    for k in 0..N {
        for i in 0..N {
            for j in 0..N {
                let mut acc = 0.0;
                for l in 0..N {
                    acc += ginv[(k, l)] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                }
                gamma[k][i][j] = 0.5 * acc;
            }
        }
    }
    gamma
}

/// Curvature tensor `R[l][k][i][j] = R^l_kij` with
/// `R(e_i, e_j) e_k = R^l_kij e_l`.
pub fn riemann<const N: usize>(
    g: &impl Fn([f64; N]) -> [[f64; N]; N],
    x: [f64; N],
    step: f64,
) -> [[[[f64; N]; N]; N]; N] {
    // dgamma[d][k][i][j] = partial_d Gamma^k_ij
    let mut dgamma = [[[[0.0; N]; N]; N]; N];
    for d in 0..N {
        let shift = |s: f64| {
            let mut xs = x;
            xs[d] += s * step;
            christoffel(g, xs, step)
        };
        let (m2, m1, p1, p2) = (shift(-2.0), shift(-1.0), shift(1.0), shift(2.0));
        for k in 0..N {
            for i in 0..N {
                for j in 0..N {
                    dgamma[d][k][i][j] = (m2[k][i][j] - 8.0 * m1[k][i][j] + 8.0 * p1[k][i][j]
                        - p2[k][i][j])
                        / (12.0 * step);
                }
            }
        }
    }
    let gamma = christoffel(g, x, step);
    let mut r = [[[[0.0; N]; N]; N]; N];
    for l in 0..N {
        for k in 0..N {
            for i in 0..N {
                for j in 0..N {
                    let mut acc = dgamma[i][l][j][k] - dgamma[j][l][i][k];
                    for m in 0..N {
                        acc += gamma[l][i][m] * gamma[m][j][k] - gamma[l][j][m] * gamma[m][i][k];
                    }
                    r[l][k][i][j] = acc;
                }
            }
        }
    }
    r
}

/// Sectional curvature of the plane spanned by the coordinate directions
/// `i` and `j`.
pub fn sectional<const N: usize>(
    g: &impl Fn([f64; N]) -> [[f64; N]; N],
    x: [f64; N],
    i: usize,
    j: usize,
    step: f64,
) -> f64 {
    assert!(i != j && i < N && j < N);
    let r = riemann(g, x, step);
    let g0 = g(x);
    let mut num = 0.0;
    for l in 0..N {
        num += g0[l][i] * r[l][j][i][j];
    }
    let den = g0[i][i] * g0[j][j] - g0[i][j] * g0[i][j];
    num / den
}

/// Ricci tensor `Ric[j][k]` by contraction of the curvature tensor.
pub fn ricci<const N: usize>(
    g: &impl Fn([f64; N]) -> [[f64; N]; N],
    x: [f64; N],
    step: f64,
) -> [[f64; N]; N] {
    let r = riemann(g, x, step);
    let mut ric = [[0.0; N]; N];
    for j in 0..N {
        for k in 0..N {
            let mut acc = 0.0;
            for i in 0..N {
                acc += r[i][k][i][j];
            }
            ric[j][k] = acc;
        }
    }
    ric
}

/// Quadratic form `Ric(v, v)` at `x`.
pub fn ricci_quadratic<const N: usize>(
    g: &impl Fn([f64; N]) -> [[f64; N]; N],
    x: [f64; N],
    v: [f64; N],
    step: f64,
) -> f64 {
    let ric = ricci(g, x, step);
    let mut acc = 0.0;
    for a in 0..N {
        for b in 0..N {
            acc += ric[a][b] * v[a] * v[b];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sphere2(x: [f64; 2]) -> [[f64; 2]; 2] {
        [[1.0, 0.0], [0.0, x[0].sin().powi(2)]]
    }

    fn hyperbolic2(x: [f64; 2]) -> [[f64; 2]; 2] {
        [[1.0, 0.0], [0.0, x[0].sinh().powi(2)]]
    }

    #[test]
    fn sphere_sectional_is_plus_one() {
        for r in [0.4, 0.9, 1.3] {
            let k = sectional(&sphere2, [r, 0.7], 0, 1, 5e-3);
            assert_relative_eq!(k, 1.0, max_relative = 1e-7);
        }
    }

    #[test]
    fn hyperbolic_sectional_is_minus_one() {
        for r in [0.5, 1.1, 2.0] {
            let k = sectional(&hyperbolic2, [r, 0.0], 0, 1, 5e-3);
            assert_relative_eq!(k, -1.0, max_relative = 1e-7);
        }
    }

    #[test]
    fn poincare_upper_half_space() {
        // g = delta / t^2 on {t > 0} has all sectional curvatures -1 and
        // Ric = -2 g.
        let g = |x: [f64; 3]| {
            let s = 1.0 / (x[2] * x[2]);
            [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]]
        };
        let x = [0.3, -0.2, 1.7];
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_relative_eq!(sectional(&g, x, i, j, 5e-3), -1.0, max_relative = 1e-6);
        }
        let ric = ricci(&g, x, 5e-3);
        let g0 = g(x);
        for a in 0..3 {
            for b in 0..3 {
                assert_relative_eq!(ric[a][b], -2.0 * g0[a][b], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn product_with_a_line_has_block_curvature() {
        // sigma + dt^2 over the spherical chart: the surface plane keeps
        // K = 1, mixed planes are flat, and the vertical direction is
        // Ricci-null.
        let g = |x: [f64; 3]| {
            [
                [1.0, 0.0, 0.0],
                [0.0, x[0].sin().powi(2), 0.0],
                [0.0, 0.0, 1.0],
            ]
        };
        let x = [0.8, 0.3, 0.0];
        assert_relative_eq!(sectional(&g, x, 0, 1, 5e-3), 1.0, max_relative = 1e-6);
        assert!(sectional(&g, x, 0, 2, 5e-3).abs() < 1e-9);
        assert!(sectional(&g, x, 1, 2, 5e-3).abs() < 1e-9);
        let ric = ricci(&g, x, 5e-3);
        assert_relative_eq!(ric[0][0], 1.0, max_relative = 1e-6);
        assert!(ric[2][2].abs() < 1e-9);
        assert!(ric[0][2].abs() < 1e-9);
    }

    #[test]
    fn ricci_quadratic_interpolates_with_tilt() {
        // On sigma + dt^2 a unit vector with vertical component theta has
        // Ric(v, v) = K (1 - theta^2).
        let g = |x: [f64; 3]| {
            [
                [1.0, 0.0, 0.0],
                [0.0, x[0].sinh().powi(2), 0.0],
                [0.0, 0.0, 1.0],
            ]
        };
        let x = [1.1, 0.0, 0.0];
        for theta in [0.0f64, 0.4, 0.9, 1.0] {
            let a = (1.0 - theta * theta).sqrt();
            let v = [a, 0.0, theta];
            let got = ricci_quadratic(&g, x, v, 5e-3);
            assert_relative_eq!(got, -(1.0 - theta * theta), epsilon = 1e-6);
        }
    }

    #[test]
    fn flat_metrics_have_no_curvature() {
        let g = |_: [f64; 3]| {
            [[2.5, 0.0, 0.0], [0.0, 2.5, 0.0], [0.0, 0.0, 2.5]]
        };
        let x = [0.1, 0.2, 0.3];
        assert!(sectional(&g, x, 0, 1, 1e-2).abs() < 1e-12);
        let ric = ricci(&g, x, 1e-2);
        assert!(ric.iter().flatten().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn christoffel_matches_sphere_closed_forms() {
        let r = 0.9f64;
        let gamma = christoffel(&sphere2, [r, 0.2], 5e-3);
        assert_relative_eq!(gamma[0][1][1], -r.sin() * r.cos(), max_relative = 1e-8);
        assert_relative_eq!(gamma[1][0][1], r.cos() / r.sin(), max_relative = 1e-8);
        assert!(gamma[0][0][0].abs() < 1e-12);
    }
}
