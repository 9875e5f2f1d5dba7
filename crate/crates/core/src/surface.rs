//! Rotationally symmetric base surfaces `(N^2, dr^2 + h(r)^2 dtheta^2)`.
//!
//! A profile `h` with `h(0) = 0`, `h'(0) = 1` closes the metric smoothly at
//! the pole. The catalog carries the three constant-curvature models
//! (`h = r`, `sin r`, `sinh r`); custom profiles come from analytic callbacks
//! or densely tabulated samples. A degenerate Cartesian chart (`h == 1`,
//! flat, no pole) hosts assets given over `(x, y)` coordinates.
//!
//! All geometry of the base is derived from `h`:
//! Gauss curvature `K = -h''/h`, geodesic curvature of the coordinate circle
//! `h'/h`, Christoffel symbols `Gamma^r_tt = -h h'`, `Gamma^t_rt = h'/h`.

use crate::numeric::CubicSpline;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

/// Guard radius below which `h'/h` switches to its pole expansion
/// `1/r + c1*r`.
const POLE_GUARD_R: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("radius {r} outside chart ({lo}, {hi})")]
    OutOfChart { r: f64, lo: f64, hi: f64 },
    #[error("angle function value {0} outside [0, 1]")]
    ThetaRange(f64),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("profile table: {0}")]
    Table(#[from] crate::numeric::NumericError),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ProfileSpec {
    Euclidean,
    Spherical,
    Hyperbolic,
    /// Degenerate flat chart with `h == 1`; coordinates act as `(x, y)`.
    Cartesian,
    Analytic { h: ProfileFn, h1: ProfileFn, h2: ProfileFn },
    Tabulated(CubicSpline),
}

impl fmt::Debug for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Euclidean => write!(f, "Euclidean"),
            ProfileSpec::Spherical => write!(f, "Spherical"),
            ProfileSpec::Hyperbolic => write!(f, "Hyperbolic"),
            ProfileSpec::Cartesian => write!(f, "Cartesian"),
            ProfileSpec::Analytic { .. } => write!(f, "Analytic"),
            ProfileSpec::Tabulated(_) => write!(f, "Tabulated"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Euclidean,
    Spherical,
    Hyperbolic,
    Custom,
}

/// A rotationally symmetric surface chart together with the derived data the
/// rest of the crate needs (curvature bound, pole expansion coefficient).
#[derive(Debug, Clone)]
pub struct WarpedSurface {
    kind: SurfaceKind,
    profile: ProfileSpec,
    label: String,
    r_lo: f64,
    r_hi: f64,
    has_pole: bool,
    /// Coefficient `c1` in the pole expansion `h'/h = 1/r + c1 r + O(r^3)`.
    pole_c1: f64,
    /// `k` with `|K| + 1/4 <= k^2` on the chart.
    curvature_bound_k: f64,
    /// Reporting-only field; never enforced by any operation.
    injectivity_radius: Option<f64>,
    /// Cumulative antiderivative knots for custom profiles (see
    /// [`WarpedSurface::h_antiderivative`]).
    custom_antiderivative: Option<Arc<Vec<(f64, f64)>>>,
}

impl WarpedSurface {
    /// Flat plane in polar coordinates, `h = r`.
    pub fn euclidean() -> Self {
        Self::catalog(SurfaceKind::Euclidean, ProfileSpec::Euclidean, "euclidean", f64::INFINITY, 0.5)
    }

    /// Unit round hemisphere, `h = sin r` on `(0, pi/2)`.
    pub fn spherical() -> Self {
        Self::spherical_cap(std::f64::consts::FRAC_PI_2)
    }

    /// Spherical chart `h = sin r` on `(0, r_max)` with `r_max <= pi`.
    /// Beyond `pi/2` the coordinate circles shrink (`h' < 0`), which the
    /// endpoint studies rely on.
    pub fn spherical_cap(r_max: f64) -> Self {
        assert!(
            r_max > 0.0 && r_max <= std::f64::consts::PI,
            "spherical chart requires 0 < r_max <= pi"
        );
        let mut s = Self::catalog(
            SurfaceKind::Spherical,
            ProfileSpec::Spherical,
            "spherical",
            r_max,
            1.25f64.sqrt(),
        );
        s.pole_c1 = -1.0 / 3.0;
        s
    }

    /// Hyperbolic plane, `h = sinh r`.
    pub fn hyperbolic() -> Self {
        let mut s = Self::catalog(
            SurfaceKind::Hyperbolic,
            ProfileSpec::Hyperbolic,
            "hyperbolic",
            f64::INFINITY,
            1.25f64.sqrt(),
        );
        s.pole_c1 = 1.0 / 3.0;
        s
    }

    /// Degenerate flat chart `sigma = dx^2 + dy^2` (`h == 1`). There is no
    /// pole; both coordinates range over all reals.
    pub fn cartesian() -> Self {
        WarpedSurface {
            kind: SurfaceKind::Custom,
            profile: ProfileSpec::Cartesian,
            label: "cartesian".into(),
            r_lo: f64::NEG_INFINITY,
            r_hi: f64::INFINITY,
            has_pole: false,
            pole_c1: 0.0,
            curvature_bound_k: 0.5,
            injectivity_radius: None,
            custom_antiderivative: None,
        }
    }

    fn catalog(kind: SurfaceKind, profile: ProfileSpec, label: &str, r_max: f64, k: f64) -> Self {
        WarpedSurface {
            kind,
            profile,
            label: label.into(),
            r_lo: 0.0,
            r_hi: r_max,
            has_pole: true,
            pole_c1: 0.0,
            curvature_bound_k: k,
            injectivity_radius: None,
            custom_antiderivative: None,
        }
    }

    /// Custom profile from analytic callbacks `h, h', h''` on `(0, r_max)`.
    /// With `has_pole` the profile must satisfy `h(0) = 0`, `h'(0) = 1`,
    /// checked against the first-order Taylor expansion near the origin.
    pub fn from_analytic(
        label: &str,
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        h1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        h2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        r_max: f64,
        has_pole: bool,
    ) -> Result<Self, SurfaceError> {
        let spec = ProfileSpec::Analytic {
            h: Arc::new(h),
            h1: Arc::new(h1),
            h2: Arc::new(h2),
        };
        Self::finish_custom(label, spec, if has_pole { 0.0 } else { f64::NEG_INFINITY }, r_max, has_pole)
    }

    /// Custom profile from tabulated `(r, h)` samples, interpolated by a
    /// natural cubic spline. Samples must be strictly increasing in `r` and
    /// dense enough that the spline resolves `h''`.
    pub fn from_samples(label: &str, samples: &[(f64, f64)]) -> Result<Self, SurfaceError> {
        if samples.len() < 8 {
            return Err(SurfaceError::InvalidProfile(format!(
                "need at least 8 samples, got {}",
                samples.len()
            )));
        }
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        if ys.iter().skip(1).any(|&v| v <= 0.0) {
            return Err(SurfaceError::InvalidProfile("h must be positive away from the pole".into()));
        }
        let has_pole = xs[0] == 0.0 && ys[0].abs() < 1e-12;
        let spline = CubicSpline::new(xs.clone(), ys)?;
        Self::finish_custom(label, ProfileSpec::Tabulated(spline), xs[0], *xs.last().unwrap(), has_pole)
    }

    /// Two-column `r,h` CSV (header row optional).
    pub fn from_profile_csv(label: &str, path: &Path) -> Result<Self, SurfaceError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(false)
            .from_path(path)
            .map_err(|e| SurfaceError::Config(format!("csv: {e}")))?;
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| SurfaceError::Config(format!("csv: {e}")))?;
            if rec.len() < 2 {
                return Err(SurfaceError::Config("profile CSV needs two columns r,h".into()));
            }
            let r: Result<f64, _> = rec[0].trim().parse();
            let h: Result<f64, _> = rec[1].trim().parse();
            match (r, h) {
                (Ok(r), Ok(h)) => samples.push((r, h)),
                // Tolerate one non-numeric header row.
                _ if samples.is_empty() => continue,
                _ => return Err(SurfaceError::Config("non-numeric profile row".into())),
            }
        }
        Self::from_samples(label, &samples)
    }

    fn finish_custom(
        label: &str,
        spec: ProfileSpec,
        r_lo: f64,
        r_hi: f64,
        has_pole: bool,
    ) -> Result<Self, SurfaceError> {
        if !(r_hi > r_lo) {
            return Err(SurfaceError::InvalidProfile("empty chart".into()));
        }
        let mut s = WarpedSurface {
            kind: SurfaceKind::Custom,
            profile: spec,
            label: label.into(),
            r_lo,
            r_hi,
            has_pole,
            pole_c1: 0.0,
            curvature_bound_k: 0.5,
            injectivity_radius: None,
            custom_antiderivative: None,
        };
        if has_pole {
            let r0 = 1e-8;
            let h0 = s.h_raw(r0);
            if (h0 - r0).abs() > 1e-4 * r0 {
                return Err(SurfaceError::InvalidProfile(format!(
                    "pole conditions h(0)=0, h'(0)=1 violated: h({r0:.1e}) = {h0:.6e}"
                )));
            }
            let rr = 1e-3;
            s.pole_c1 = (s.h_raw(rr).recip() * s.h1_raw(rr) - 1.0 / rr) / rr;
        }
        s.curvature_bound_k = s.scan_curvature_bound();
        s.custom_antiderivative = Some(Arc::new(s.build_antiderivative()));
        Ok(s)
    }

    fn scan_curvature_bound(&self) -> f64 {
        let lo = if self.has_pole { 1e-3 } else { self.r_lo.max(-1e6) };
        let hi = self.r_hi.min(1e6);
        let n = 512;
        let mut sup: f64 = 0.0;
        for i in 0..=n {
            let r = lo + (hi - lo) * i as f64 / n as f64;
            let h = self.h_raw(r);
            if h.abs() > 1e-9 {
                sup = sup.max((self.h2_raw(r) / h).abs());
            }
        }
        (sup + 0.25).sqrt()
    }

    fn build_antiderivative(&self) -> Vec<(f64, f64)> {
        // Cumulative 5-point Gauss-Legendre per segment; `h` is smooth so the
        // per-segment error is negligible against every use of the integral.
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
        let lo = self.r_lo.max(-1e6);
        let hi = self.r_hi.min(1e6);
        let n = 2048;
        let dr = (hi - lo) / n as f64;
        let mut knots = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        knots.push((lo, 0.0));
        for i in 0..n {
            let a = lo + i as f64 * dr;
            let mid = a + 0.5 * dr;
            let seg: f64 = GL_X
                .iter()
                .zip(GL_W)
                .map(|(&x, w)| w * self.h_raw(mid + 0.5 * dr * x))
                .sum::<f64>()
                * 0.5
                * dr;
            acc += seg;
            knots.push((a + dr, acc));
        }
        knots
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_pole(&self) -> bool {
        self.has_pole
    }

    /// Open chart interval for the radial coordinate.
    pub fn chart(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.r_lo && r < self.r_hi
    }

    /// `k` with `|K| + 1/4 <= k^2` on the chart.
    pub fn curvature_bound_k(&self) -> f64 {
        self.curvature_bound_k
    }

    /// Reporting-only metadata; no operation conditions on it.
    pub fn injectivity_radius(&self) -> Option<f64> {
        self.injectivity_radius
    }

    pub fn with_injectivity_radius(mut self, i0: f64) -> Self {
        self.injectivity_radius = Some(i0);
        self
    }

    fn check(&self, r: f64) -> Result<(), SurfaceError> {
        if self.contains(r) {
            Ok(())
        } else {
            Err(SurfaceError::OutOfChart { r, lo: self.r_lo, hi: self.r_hi })
        }
    }

    #[inline]
    fn h_raw(&self, r: f64) -> f64 {
        match &self.profile {
            ProfileSpec::Euclidean => r,
            ProfileSpec::Spherical => r.sin(),
            ProfileSpec::Hyperbolic => r.sinh(),
            ProfileSpec::Cartesian => 1.0,
            ProfileSpec::Analytic { h, .. } => h(r),
            ProfileSpec::Tabulated(sp) => sp.eval(r).0,
        }
    }

    #[inline]
    fn h1_raw(&self, r: f64) -> f64 {
        match &self.profile {
            ProfileSpec::Euclidean => 1.0,
            ProfileSpec::Spherical => r.cos(),
            ProfileSpec::Hyperbolic => r.cosh(),
            ProfileSpec::Cartesian => 0.0,
            ProfileSpec::Analytic { h1, .. } => h1(r),
            ProfileSpec::Tabulated(sp) => sp.eval(r).1,
        }
    }

    #[inline]
    fn h2_raw(&self, r: f64) -> f64 {
        match &self.profile {
            ProfileSpec::Euclidean | ProfileSpec::Cartesian => 0.0,
            ProfileSpec::Spherical => -r.sin(),
            ProfileSpec::Hyperbolic => r.sinh(),
            ProfileSpec::Analytic { h2, .. } => h2(r),
            ProfileSpec::Tabulated(sp) => sp.eval(r).2,
        }
    }

    /// Warping factor `h(r)`; caller must stay inside the chart.
    #[inline]
    pub fn h(&self, r: f64) -> f64 {
        debug_assert!(self.contains(r), "r = {r} outside chart");
        self.h_raw(r)
    }

    #[inline]
    pub fn h_prime(&self, r: f64) -> f64 {
        debug_assert!(self.contains(r), "r = {r} outside chart");
        self.h1_raw(r)
    }

    #[inline]
    pub fn h_second(&self, r: f64) -> f64 {
        debug_assert!(self.contains(r), "r = {r} outside chart");
        self.h2_raw(r)
    }

    /// `h'/h` with the pole guard: for `r < 1e-4` on pole charts the Taylor
    /// form `1/r + c1 r` is used.
    #[inline]
    pub fn log_derivative(&self, r: f64) -> f64 {
        if self.has_pole && r < POLE_GUARD_R {
            1.0 / r + self.pole_c1 * r
        } else {
            self.h1_raw(r) / self.h_raw(r)
        }
    }

    /// Coefficient `c1` of the pole expansion `h'/h = 1/r + c1 r` (equals
    /// `-K(0)/3` for smooth profiles).
    pub fn pole_expansion_c1(&self) -> f64 {
        self.pole_c1
    }

    /// Gauss curvature `K = -h''/h`.
    pub fn gauss_curvature(&self, r: f64) -> Result<f64, SurfaceError> {
        self.check(r)?;
        if self.has_pole && r < POLE_GUARD_R {
            // K extends continuously to the pole; c1 = -K(0)/3.
            return Ok(-3.0 * self.pole_c1);
        }
        Ok(-self.h2_raw(r) / self.h_raw(r))
    }

    /// Geodesic curvature of the coordinate circle `{r = const}` with respect
    /// to the outward direction, `h'/h`.
    pub fn circle_geodesic_curvature(&self, r: f64) -> Result<f64, SurfaceError> {
        self.check(r)?;
        Ok(self.log_derivative(r))
    }

    /// Diagonal metric components `(sigma_rr, sigma_tt) = (1, h^2)`.
    pub fn metric_components(&self, r: f64) -> Result<(f64, f64), SurfaceError> {
        self.check(r)?;
        let h = self.h_raw(r);
        Ok((1.0, h * h))
    }

    /// Ambient Ricci curvature of the product `N^2 x R` in the unit normal of
    /// a graph with angle function `theta`: `Ric(v, v) = K(r) (1 - theta^2)`.
    pub fn ricci_normal(&self, r: f64, theta: f64) -> Result<f64, SurfaceError> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(SurfaceError::ThetaRange(theta));
        }
        Ok(self.gauss_curvature(r)? * (1.0 - theta * theta))
    }

    /// Antiderivative `A(r)` of `h` in the catalog normalization
    /// (`r^2/2`, `-cos r`, `cosh r`; `r` on the Cartesian chart). Custom
    /// profiles use the cumulative integral from the chart start. Appears in
    /// the first-integral form `h u_r / W = B - H0 A(r)` of the radial
    /// constant-mean-curvature equation.
    pub fn h_antiderivative(&self, r: f64) -> f64 {
        match &self.profile {
            ProfileSpec::Euclidean => 0.5 * r * r,
            ProfileSpec::Spherical => -r.cos(),
            ProfileSpec::Hyperbolic => r.cosh(),
            ProfileSpec::Cartesian => r,
            _ => {
                let knots = self
                    .custom_antiderivative
                    .as_ref()
                    .expect("custom profiles build their antiderivative at construction");
                // Cubic Hermite between knots; A' = h is known exactly.
                let n = knots.len();
                let lo = knots[0].0;
                let dr = knots[1].0 - lo;
                let i = (((r - lo) / dr).floor() as usize).min(n - 2);
                let (x0, a0) = knots[i];
                let (x1, a1) = knots[i + 1];
                let t = (r - x0) / (x1 - x0);
                let (d0, d1) = (self.h_raw(x0), self.h_raw(x1));
                let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
                let h10 = t * (1.0 - t) * (1.0 - t);
                let h01 = t * t * (3.0 - 2.0 * t);
                let h11 = t * t * (t - 1.0);
                h00 * a0 + h10 * (x1 - x0) * d0 + h01 * a1 + h11 * (x1 - x0) * d1
            }
        }
    }

    /// Short human-readable identifier for reports.
    pub fn descriptor(&self) -> String {
        if self.r_hi.is_finite() {
            format!("{}(r_max={})", self.label, self.r_hi)
        } else {
            self.label.clone()
        }
    }
}

/// On-disk description of a surface; accepted as TOML or JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Two-column `r,h` CSV with tabulated profile samples (custom only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injectivity_radius: Option<f64>,
}

impl SurfaceConfig {
    pub fn load(path: &Path) -> Result<Self, SurfaceError> {
        let text = std::fs::read_to_string(path)?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "toml" => toml::from_str(&text).map_err(|e| SurfaceError::Config(e.to_string())),
            "json" => serde_json::from_str(&text).map_err(|e| SurfaceError::Config(e.to_string())),
            other => Err(SurfaceError::Config(format!(
                "unsupported config extension {other:?} (use .toml or .json)"
            ))),
        }
    }

    /// Paths inside the config resolve relative to `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<WarpedSurface, SurfaceError> {
        let mut surface = match self.kind.as_str() {
            "euclidean" => WarpedSurface::euclidean(),
            "hyperbolic" => WarpedSurface::hyperbolic(),
            "cartesian" => WarpedSurface::cartesian(),
            "spherical" => {
                let r_max = self.r_max.unwrap_or(std::f64::consts::FRAC_PI_2);
                if !(r_max > 0.0 && r_max <= std::f64::consts::PI) {
                    return Err(SurfaceError::Config(format!(
                        "spherical r_max must lie in (0, pi], got {r_max}"
                    )));
                }
                WarpedSurface::spherical_cap(r_max)
            }
            "custom" => {
                let rel = self.profile_csv.as_ref().ok_or_else(|| {
                    SurfaceError::Config("custom surface requires profile_csv".into())
                })?;
                WarpedSurface::from_profile_csv("custom", &base_dir.join(rel))?
            }
            other => {
                return Err(SurfaceError::Config(format!("unknown surface kind {other:?}")));
            }
        };
        if let Some(r_max) = self.r_max {
            if surface.kind != SurfaceKind::Spherical {
                if !(r_max > surface.r_lo) {
                    return Err(SurfaceError::Config("r_max at or below chart start".into()));
                }
                surface.r_hi = surface.r_hi.min(r_max);
            }
        }
        surface.injectivity_radius = self.injectivity_radius;
        Ok(surface)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn catalog_curvatures() {
        assert_eq!(WarpedSurface::euclidean().gauss_curvature(1.0).unwrap(), 0.0);
        assert_relative_eq!(
            WarpedSurface::spherical().gauss_curvature(0.7).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            WarpedSurface::hyperbolic().gauss_curvature(2.3).unwrap(),
            -1.0,
            epsilon = 1e-14
        );
        assert_eq!(WarpedSurface::cartesian().gauss_curvature(0.0).unwrap(), 0.0);
    }

    #[test]
    fn catalog_circle_curvatures() {
        assert_relative_eq!(
            WarpedSurface::euclidean().circle_geodesic_curvature(2.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        // The equator of the sphere is a geodesic.
        assert!(
            WarpedSurface::spherical_cap(std::f64::consts::PI)
                .circle_geodesic_curvature(std::f64::consts::FRAC_PI_2)
                .unwrap()
                .abs()
                < 1e-12
        );
        let r = 1.0f64.asinh();
        assert_relative_eq!(
            WarpedSurface::hyperbolic().circle_geodesic_curvature(r).unwrap(),
            2.0f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn spherical_circle_curvature_monotone_on_hemisphere() {
        let s = WarpedSurface::spherical();
        let mut prev = f64::INFINITY;
        for i in 1..100 {
            let r = 1.5 * i as f64 / 100.0;
            let k = s.circle_geodesic_curvature(r).unwrap();
            assert!(k < prev);
            prev = k;
        }
    }

    #[test]
    fn metric_components_match_h_squared() {
        let s = WarpedSurface::euclidean();
        assert_eq!(s.metric_components(3.0).unwrap(), (1.0, 9.0));
        let s = WarpedSurface::spherical();
        assert_relative_eq!(s.metric_components(0.5236).unwrap().1, 0.5236f64.sin().powi(2));
        let s = WarpedSurface::hyperbolic();
        assert_relative_eq!(s.metric_components(1.0).unwrap().1, 1.0f64.sinh().powi(2));
    }

    #[test]
    fn pole_conditions_first_order() {
        for s in [
            WarpedSurface::euclidean(),
            WarpedSurface::spherical(),
            WarpedSurface::hyperbolic(),
        ] {
            let r = 1e-8;
            assert_relative_eq!(s.h(r), r, max_relative = 1e-8);
        }
    }

    #[test]
    fn pole_guard_matches_direct_ratio() {
        for s in [
            WarpedSurface::euclidean(),
            WarpedSurface::spherical(),
            WarpedSurface::hyperbolic(),
        ] {
            let r = POLE_GUARD_R * 0.5;
            let guarded = s.log_derivative(r);
            let direct = s.h_prime(r) / s.h(r);
            assert_relative_eq!(guarded, direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn ricci_normal_values() {
        let s = WarpedSurface::euclidean();
        assert_eq!(s.ricci_normal(1.0, 0.3).unwrap(), 0.0);
        let s = WarpedSurface::spherical();
        assert_relative_eq!(s.ricci_normal(0.5, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        // Vertical normal: the ambient Ricci term vanishes.
        assert_eq!(s.ricci_normal(0.5, 1.0).unwrap(), 0.0);
        assert!(s.ricci_normal(0.5, 1.5).is_err());
    }

    #[test]
    fn ricci_normal_respects_curvature_bound() {
        for s in [
            WarpedSurface::euclidean(),
            WarpedSurface::spherical(),
            WarpedSurface::hyperbolic(),
        ] {
            let bound = s.curvature_bound_k().powi(2) - 0.25;
            for i in 1..20 {
                let r = 0.07 * i as f64;
                for theta in [0.0, 0.3, 0.9, 1.0] {
                    assert!(s.ricci_normal(r, theta).unwrap().abs() <= bound + 1e-12);
                }
            }
        }
    }

    #[test]
    fn gauss_curvature_matches_log_profile_stencil() {
        // Independent check: K = -[(log h)'' + ((log h)')^2] via five-point
        // finite differences of log h.
        let surfaces = [
            WarpedSurface::euclidean(),
            WarpedSurface::spherical(),
            WarpedSurface::hyperbolic(),
        ];
        let mut rng_state = 88172645463325252u64;
        let mut next = move || {
            // xorshift64; test-local deterministic stream
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for s in surfaces {
            for _ in 0..100 {
                let r = 0.2 + 1.2 * next();
                let d = 1e-3;
                let lg = |x: f64| s.h(x).ln();
                let l1 = (lg(r - 2.0 * d) - 8.0 * lg(r - d) + 8.0 * lg(r + d) - lg(r + 2.0 * d))
                    / (-12.0 * d);
                let l2 = (-lg(r - 2.0 * d) + 16.0 * lg(r - d) - 30.0 * lg(r)
                    + 16.0 * lg(r + d)
                    - lg(r + 2.0 * d))
                    / (12.0 * d * d);
                let k_fd = -(l2 + l1 * l1);
                let k = s.gauss_curvature(r).unwrap();
                assert!(
                    (k - k_fd).abs() <= 1e-5 * k.abs().max(1.0),
                    "{}: K({r}) = {k} vs stencil {k_fd}",
                    s.label()
                );
            }
        }
    }

    #[test]
    fn tabulated_profile_tracks_hyperbolic() {
        let n = 3001;
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let r = 3.0 * i as f64 / (n - 1) as f64;
                (r, r.sinh())
            })
            .collect();
        let s = WarpedSurface::from_samples("tab-sinh", &samples).unwrap();
        assert!(s.has_pole());
        for &r in &[0.4, 1.1, 2.0, 2.7] {
            assert_relative_eq!(s.h(r), r.sinh(), max_relative = 1e-8);
            assert_relative_eq!(s.h_prime(r), r.cosh(), max_relative = 1e-5);
            assert_relative_eq!(s.gauss_curvature(r).unwrap(), -1.0, epsilon = 2e-3);
        }
        // Antiderivative normalization: custom profiles integrate from 0.
        assert_relative_eq!(s.h_antiderivative(2.0), 2.0f64.cosh() - 1.0, epsilon = 1e-8);
    }

    #[test]
    fn analytic_custom_profile_with_pole_validation() {
        let bad = WarpedSurface::from_analytic("bad", |r| 2.0 * r, |_| 2.0, |_| 0.0, 1.0, true);
        assert!(bad.is_err());
        let good = WarpedSurface::from_analytic(
            "scaled-sin",
            |r| (0.5 * r).sin() * 2.0,
            |r| (0.5 * r).cos(),
            |r| -(0.5 * r).sin() * 0.5,
            3.0,
            true,
        )
        .unwrap();
        assert_relative_eq!(good.gauss_curvature(1.0).unwrap(), 0.25, max_relative = 1e-10);
    }

    #[test]
    fn out_of_chart_is_an_error() {
        let s = WarpedSurface::spherical();
        assert!(s.gauss_curvature(2.0).is_err());
        assert!(s.metric_components(-0.1).is_err());
    }

    #[test]
    fn antiderivative_catalog_forms() {
        assert_relative_eq!(WarpedSurface::euclidean().h_antiderivative(3.0), 4.5);
        assert_relative_eq!(
            WarpedSurface::hyperbolic().h_antiderivative(1.0),
            1.0f64.cosh(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            WarpedSurface::spherical().h_antiderivative(1.0),
            -1.0f64.cos(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn config_round_trip_toml_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("s.toml");
        std::fs::write(&toml_path, "kind = \"spherical\"\nr_max = 3.0\n").unwrap();
        let s = SurfaceConfig::load(&toml_path).unwrap().build(dir.path()).unwrap();
        assert_eq!(s.kind(), SurfaceKind::Spherical);
        assert_eq!(s.chart().1, 3.0);

        let json_path = dir.path().join("s.json");
        std::fs::write(&json_path, "{\"kind\": \"hyperbolic\"}").unwrap();
        let s = SurfaceConfig::load(&json_path).unwrap().build(dir.path()).unwrap();
        assert_eq!(s.kind(), SurfaceKind::Hyperbolic);

        let bad = dir.path().join("s.yaml");
        std::fs::write(&bad, "kind: euclidean").unwrap();
        assert!(SurfaceConfig::load(&bad).is_err());
    }

    #[test]
    fn tabulated_csv_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let mut text = String::from("r,h\n");
        for i in 0..2000 {
            let r = 2.0 * i as f64 / 1999.0;
            text.push_str(&format!("{},{}\n", r, r.sinh()));
        }
        std::fs::write(&path, text).unwrap();
        let s = WarpedSurface::from_profile_csv("csv-sinh", &path).unwrap();
        assert_relative_eq!(s.h(1.0), 1.0f64.sinh(), max_relative = 1e-8);
    }
}
