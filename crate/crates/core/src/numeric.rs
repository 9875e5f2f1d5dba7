//! Small numerical building blocks shared across the crate: deterministic
//! pairwise summation, polynomial least squares with conditioning report,
//! natural cubic splines, bracketed root finding, and local polynomial
//! differentiation on nonuniform node sets.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericError {
    #[error("root not bracketed on [{0}, {1}]")]
    NotBracketed(f64, f64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("abscissae must be strictly increasing")]
    NotIncreasing,
    #[error("least-squares system is rank deficient")]
    RankDeficient,
}

/// Pairwise (cascade) summation. The order of operations depends only on the
/// slice length, so reductions are reproducible across runs and worker counts.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Least-squares polynomial fit `y ~ sum c_k x^k` of the given degree.
/// Returns the coefficients (ascending degree) and the 2-norm condition
/// number of the design matrix. Callers should pre-scale `x` to O(1).
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<(Vec<f64>, f64), NumericError> {
    let n = x.len();
    if n < degree + 1 {
        return Err(NumericError::TooFewPoints { needed: degree + 1, got: n });
    }
    let mut a = DMatrix::zeros(n, degree + 1);
    for (i, &xi) in x.iter().enumerate() {
        let mut pw = 1.0;
        for k in 0..=degree {
            a[(i, k)] = pw;
            pw *= xi;
        }
    }
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 0.0 || !smin.is_finite() {
        return Err(NumericError::RankDeficient);
    }
    let sol = svd.solve(&b, 0.0).map_err(|_| NumericError::RankDeficient)?;
    Ok((sol.iter().copied().collect(), smax / smin))
}

/// Bisection on a bracketing interval; `f(lo)` and `f(hi)` must have opposite
/// signs. Converges to `xtol` on the abscissa.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64, NumericError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(NumericError::NotBracketed(lo, hi));
    }
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First derivative of tabulated data at index `i` from a local quartic fit
/// through up to five surrounding nodes. Handles nonuniform spacing; the
/// window is shifted near the ends of the table.
pub fn local_derivative(x: &[f64], y: &[f64], i: usize) -> Result<f64, NumericError> {
    let n = x.len();
    if n < 3 {
        return Err(NumericError::TooFewPoints { needed: 3, got: n });
    }
    let w = 5.min(n);
    let lo = i.saturating_sub(w / 2).min(n - w);
    let xs: Vec<f64> = x[lo..lo + w].iter().map(|&v| v - x[i]).collect();
    let scale = xs.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let xs: Vec<f64> = xs.iter().map(|&v| v / scale).collect();
    let ys = &y[lo..lo + w];
    let (c, _cond) = polyfit(&xs, ys, w - 1)?;
    Ok(c[1] / scale)
}

/// Natural cubic spline through strictly increasing abscissae. Evaluates the
/// value together with first and second derivatives.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots (natural ends: zero at both ends).
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, NumericError> {
        let n = x.len();
        if n < 3 {
            return Err(NumericError::TooFewPoints { needed: 3, got: n });
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NumericError::NotIncreasing);
        }
        // Tridiagonal system for interior second derivatives (Thomas algorithm).
        let mut sub = vec![0.0; n];
        let mut diag = vec![2.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            sub[i] = h0 / (h0 + h1);
            sup[i] = h1 / (h0 + h1);
            rhs[i] = 6.0 / (h0 + h1) * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { x, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.clamp(1, self.x.len() - 1) - 1,
        }
    }

    /// Value, first derivative, second derivative at `t` (clamped to domain).
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let v = a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0;
        let d = (self.y[i + 1] - self.y[i]) / h
            - (3.0 * a * a - 1.0) / 6.0 * h * self.m[i]
            + (3.0 * b * b - 1.0) / 6.0 * h * self.m[i + 1];
        let dd = a * self.m[i] + b * self.m[i + 1];
        (v, d, dd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pairwise_matches_naive_on_smooth_data() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert_relative_eq!(pairwise_sum(&xs), naive, epsilon = 1e-12);
    }

    #[test]
    fn pairwise_is_deterministic_under_split() {
        let xs: Vec<f64> = (0..777).map(|i| 1.0 / (1.0 + i as f64)).collect();
        assert_eq!(pairwise_sum(&xs).to_bits(), pairwise_sum(&xs).to_bits());
    }

    #[test]
    fn polyfit_recovers_quadratic() {
        let x: Vec<f64> = (0..20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&t| 2.0 - 3.0 * t + 0.5 * t * t).collect();
        let (c, cond) = polyfit(&x, &y, 2).unwrap();
        assert_relative_eq!(c[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(c[1], -3.0, epsilon = 1e-10);
        assert_relative_eq!(c[2], 0.5, epsilon = 1e-10);
        assert!(cond < 100.0);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn local_derivative_on_nonuniform_nodes() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 / 29.0).powf(1.3)).collect();
        let y: Vec<f64> = x.iter().map(|&t| (2.0 * t).sin()).collect();
        for i in [0, 7, 15, 29] {
            let d = local_derivative(&x, &y, i).unwrap();
            assert_relative_eq!(d, 2.0 * (2.0 * x[i]).cos(), epsilon = 1e-5);
        }
    }

    #[test]
    fn spline_reproduces_sinh_with_derivatives() {
        let n = 2000;
        let xs: Vec<f64> = (0..n).map(|i| 3.0 * i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&t| t.sinh()).collect();
        let sp = CubicSpline::new(xs, ys).unwrap();
        for &t in &[0.31, 1.0, 1.77, 2.5] {
            let (v, d, dd) = sp.eval(t);
            assert_relative_eq!(v, t.sinh(), epsilon = 1e-9);
            assert_relative_eq!(d, t.cosh(), epsilon = 1e-6);
            assert_relative_eq!(dd, t.sinh(), epsilon = 1e-4);
        }
    }
}
