//! Gridded graph patches over a surface chart.
//!
//! A patch stores heights on a uniform rectangle in the `(r, theta)`
//! coordinates of a [`WarpedSurface`] chart, together with a node mask and an
//! optional closed-form jet. Downstream geometry (shape operator, stability
//! operators, level curves) reads patches through [`GraphPatch::jet_at`], so
//! closed-form and finite-difference derivatives are interchangeable.
//!
//! Vertical translation is stored out-of-band in `height_offset`: the height
//! array is never touched, so every derivative-only quantity computed from a
//! translated patch is bitwise identical to the original.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{ProfileError, RadialProfile};
use crate::surface::{SurfaceError, WarpedSurface};

#[derive(Debug, Error)]
pub enum PatchError {
    #[error("invalid patch configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serialize(String),
}

/// Uniform grid rectangle in chart coordinates. Node `(i, j)` sits at
/// `(r_lo + i dr, t_lo + j dt)` with `i < nr`, `j < nt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartRect {
    pub r_lo: f64,
    pub r_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub nr: usize,
    pub nt: usize,
}

impl ChartRect {
    pub fn new(
        r_lo: f64,
        r_hi: f64,
        t_lo: f64,
        t_hi: f64,
        nr: usize,
        nt: usize,
    ) -> Result<Self, PatchError> {
        if !(r_lo.is_finite() && r_hi.is_finite() && t_lo.is_finite() && t_hi.is_finite()) {
            return Err(PatchError::Config("rectangle bounds must be finite".into()));
        }
        if !(r_lo < r_hi && t_lo < t_hi) {
            return Err(PatchError::Config(format!(
                "degenerate rectangle [{r_lo}, {r_hi}] x [{t_lo}, {t_hi}]"
            )));
        }
        if nr < 3 || nt < 3 {
            return Err(PatchError::Config(format!(
                "grid {nr} x {nt} too coarse; need at least 3 nodes per axis"
            )));
        }
        Ok(ChartRect { r_lo, r_hi, t_lo, t_hi, nr, nt })
    }

    pub fn dr(&self) -> f64 {
        (self.r_hi - self.r_lo) / (self.nr - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        (self.t_hi - self.t_lo) / (self.nt - 1) as f64
    }

    pub fn r_at(&self, i: usize) -> f64 {
        self.r_lo + i as f64 * self.dr()
    }

    pub fn t_at(&self, j: usize) -> f64 {
        self.t_lo + j as f64 * self.dt()
    }

    /// Halve both spacings, keeping the old nodes nested in the new grid.
    pub fn refine(&self) -> ChartRect {
        ChartRect { nr: 2 * self.nr - 1, nt: 2 * self.nt - 1, ..*self }
    }

    pub fn describe(&self) -> String {
        format!(
            "{}x{} on [{}, {}] x [{}, {}]",
            self.nr, self.nt, self.r_lo, self.r_hi, self.t_lo, self.t_hi
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeMask {
    Interior,
    Dirichlet,
    Excluded,
}

/// Second-order jet of the height function at a point. `u` is the total
/// height including any vertical offset; the derivatives never see offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub u: f64,
    pub ur: f64,
    pub ut: f64,
    pub urr: f64,
    pub urt: f64,
    pub utt: f64,
}

pub type JetFn = dyn Fn(f64, f64) -> Option<Jet2> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffMode {
    /// Derivatives come from the stored closed-form jet.
    Analytic,
    /// Derivatives come from second-order stencils on the height array.
    Stencil,
}

#[derive(Clone)]
pub struct GraphPatch {
    pub surface: Arc<WarpedSurface>,
    pub rect: ChartRect,
    /// Heights without the vertical offset. Excluded nodes hold NaN.
    pub u: Array2<f64>,
    pub mask: Array2<NodeMask>,
    pub jet: Option<Arc<JetFn>>,
    pub diff: DiffMode,
    pub height_offset: f64,
    pub label: String,
}

impl fmt::Debug for GraphPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphPatch")
            .field("label", &self.label)
            .field("rect", &self.rect)
            .field("diff", &self.diff)
            .field("height_offset", &self.height_offset)
            .field("has_jet", &self.jet.is_some())
            .finish()
    }
}

fn check_rect(surface: &WarpedSurface, rect: &ChartRect) -> Result<(), PatchError> {
    if !(surface.contains(rect.r_lo) && surface.contains(rect.r_hi)) {
        let (lo, hi) = surface.chart();
        return Err(PatchError::Config(format!(
            "rectangle [{}, {}] not inside the open chart ({lo}, {hi})",
            rect.r_lo, rect.r_hi
        )));
    }
    Ok(())
}

impl GraphPatch {
    /// Build a stencil-differentiated patch from a height closure. `None` or
    /// non-finite values mark nodes Excluded; the outermost grid ring is
    /// Dirichlet.
    pub fn from_values(
        surface: Arc<WarpedSurface>,
        rect: ChartRect,
        label: &str,
        f: impl Fn(f64, f64) -> Option<f64>,
    ) -> Result<Self, PatchError> {
        check_rect(&surface, &rect)?;
        let mut u = Array2::from_elem((rect.nr, rect.nt), f64::NAN);
        let mut mask = Array2::from_elem((rect.nr, rect.nt), NodeMask::Excluded);
        for i in 0..rect.nr {
            for j in 0..rect.nt {
                if let Some(v) = f(rect.r_at(i), rect.t_at(j)) {
                    if v.is_finite() {
                        u[[i, j]] = v;
                        mask[[i, j]] =
                            if i == 0 || j == 0 || i == rect.nr - 1 || j == rect.nt - 1 {
                                NodeMask::Dirichlet
                            } else {
                                NodeMask::Interior
                            };
                    }
                }
            }
        }
        Ok(GraphPatch {
            surface,
            rect,
            u,
            mask,
            jet: None,
            diff: DiffMode::Stencil,
            height_offset: 0.0,
            label: label.to_string(),
        })
    }

    /// Build an analytically differentiated patch from a jet closure.
    pub fn from_jet(
        surface: Arc<WarpedSurface>,
        rect: ChartRect,
        label: &str,
        jet: Arc<JetFn>,
    ) -> Result<Self, PatchError> {
        let jet_for_values = jet.clone();
        let mut patch = GraphPatch::from_values(surface, rect, label, move |r, t| {
            jet_for_values(r, t).map(|j| j.u)
        })?;
        patch.jet = Some(jet);
        patch.diff = DiffMode::Analytic;
        Ok(patch)
    }

    /// Resample a radial profile onto a rotationally symmetric patch. Heights
    /// and slopes interpolate the node table by cubic Hermite segments; the
    /// second radial derivative comes from the governing slope equation, so
    /// the jet satisfies it exactly at every sample.
    pub fn from_profile(
        profile: Arc<RadialProfile>,
        rect: ChartRect,
        label: &str,
    ) -> Result<Self, PatchError> {
        if rect.r_lo <= 0.0 && profile.surface.has_pole() {
            return Err(PatchError::Config(
                "rotational patches must avoid the pole node r = 0".into(),
            ));
        }
        let (mut t_lo, mut t_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in &profile.r {
            t_lo = t_lo.min(r);
            t_hi = t_hi.max(r);
        }
        if rect.r_lo < t_lo || rect.r_hi > t_hi {
            return Err(PatchError::Config(format!(
                "rectangle [{}, {}] outside the profile table [{t_lo}, {t_hi}]",
                rect.r_lo, rect.r_hi
            )));
        }
        let surface = profile.surface.clone();
        let prof = profile.clone();
        let jet: Arc<JetFn> = Arc::new(move |r, _t| {
            let (u, p) = prof.sample_height_slope(r)?;
            let urr = prof.mode.slope_derivative(&prof.surface, r, p);
            Some(Jet2 { u, ur: p, ut: 0.0, urr, urt: 0.0, utt: 0.0 })
        });
        GraphPatch::from_jet(surface, rect, label, jet)
    }

    pub fn describe(&self) -> String {
        format!("{} ({})", self.label, self.rect.describe())
    }

    /// Shift the graph vertically. Only `height_offset` changes; the height
    /// array and every derivative read from it are bitwise identical.
    pub fn vertical_translate(&self, dz: f64) -> GraphPatch {
        let mut out = self.clone();
        out.height_offset += dz;
        out
    }

    pub fn r_at(&self, i: usize) -> f64 {
        self.rect.r_at(i)
    }

    pub fn t_at(&self, j: usize) -> f64 {
        self.rect.t_at(j)
    }

    /// Total height at a node, offset included.
    pub fn height(&self, i: usize, j: usize) -> f64 {
        self.u[[i, j]] + self.height_offset
    }

    /// Total height at an arbitrary chart point: evaluated exactly when an
    /// analytic jet is attached, bilinear in the stored grid otherwise.
    /// `None` outside the rectangle or when the surrounding cell touches an
    /// excluded node.
    pub fn sample_height(&self, r: f64, t: f64) -> Option<f64> {
        if !(r >= self.rect.r_lo && r <= self.rect.r_hi && t >= self.rect.t_lo && t <= self.rect.t_hi)
        {
            return None;
        }
        if self.diff == DiffMode::Analytic {
            if let Some(jet) = &self.jet {
                return jet(r, t).map(|j| j.u + self.height_offset);
            }
        }
        let fi = (r - self.rect.r_lo) / self.rect.dr();
        let fj = (t - self.rect.t_lo) / self.rect.dt();
        let i0 = (fi.floor() as isize).clamp(0, self.rect.nr as isize - 2);
        let j0 = (fj.floor() as isize).clamp(0, self.rect.nt as isize - 2);
        let a = fi - i0 as f64;
        let b = fj - j0 as f64;
        let v00 = self.value(i0, j0)?;
        let v10 = self.value(i0 + 1, j0)?;
        let v01 = self.value(i0, j0 + 1)?;
        let v11 = self.value(i0 + 1, j0 + 1)?;
        let u = (1.0 - a) * ((1.0 - b) * v00 + b * v01) + a * ((1.0 - b) * v10 + b * v11);
        Some(u + self.height_offset)
    }

    /// Mask-aware height-array read; `None` outside the grid or on Excluded
    /// nodes. Offset-free: stencil readers difference this value.
    pub fn value(&self, i: isize, j: isize) -> Option<f64> {
        if i < 0 || j < 0 || i >= self.rect.nr as isize || j >= self.rect.nt as isize {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if self.mask[[i, j]] == NodeMask::Excluded {
            return None;
        }
        Some(self.u[[i, j]])
    }

    fn d1(&self, i: isize, j: isize, axis: usize) -> Option<f64> {
        let h = if axis == 0 { self.rect.dr() } else { self.rect.dt() };
        let at = |s: isize| {
            if axis == 0 {
                self.value(i + s, j)
            } else {
                self.value(i, j + s)
            }
        };
        if let (Some(m), Some(p)) = (at(-1), at(1)) {
            return Some((p - m) / (2.0 * h));
        }
        let v0 = at(0)?;
        if let (Some(p1), Some(p2)) = (at(1), at(2)) {
            return Some((-3.0 * v0 + 4.0 * p1 - p2) / (2.0 * h));
        }
        if let (Some(m1), Some(m2)) = (at(-1), at(-2)) {
            return Some((3.0 * v0 - 4.0 * m1 + m2) / (2.0 * h));
        }
        None
    }

    fn d2(&self, i: isize, j: isize, axis: usize) -> Option<f64> {
        let h = if axis == 0 { self.rect.dr() } else { self.rect.dt() };
        let at = |s: isize| {
            if axis == 0 {
                self.value(i + s, j)
            } else {
                self.value(i, j + s)
            }
        };
        let v0 = at(0)?;
        if let (Some(m), Some(p)) = (at(-1), at(1)) {
            return Some((p - 2.0 * v0 + m) / (h * h));
        }
        if let (Some(p1), Some(p2), Some(p3)) = (at(1), at(2), at(3)) {
            return Some((2.0 * v0 - 5.0 * p1 + 4.0 * p2 - p3) / (h * h));
        }
        if let (Some(m1), Some(m2), Some(m3)) = (at(-1), at(-2), at(-3)) {
            return Some((2.0 * v0 - 5.0 * m1 + 4.0 * m2 - m3) / (h * h));
        }
        None
    }

    fn d_cross(&self, i: isize, j: isize) -> Option<f64> {
        let dr = self.rect.dr();
        let row = |s: isize| self.d1(i + s, j, 1);
        if let (Some(m), Some(p)) = (row(-1), row(1)) {
            return Some((p - m) / (2.0 * dr));
        }
        let v0 = row(0)?;
        if let (Some(p1), Some(p2)) = (row(1), row(2)) {
            return Some((-3.0 * v0 + 4.0 * p1 - p2) / (2.0 * dr));
        }
        if let (Some(m1), Some(m2)) = (row(-1), row(-2)) {
            return Some((3.0 * v0 - 4.0 * m1 + m2) / (2.0 * dr));
        }
        None
    }

    /// Second-order jet at node `(i, j)`, or `None` where the configured
    /// differentiation cannot produce one. Stencil mode falls back to
    /// one-sided second-order differences beside Excluded nodes and grid
    /// edges.
    pub fn jet_at(&self, i: usize, j: usize) -> Option<Jet2> {
        if self.mask[[i, j]] == NodeMask::Excluded {
            return None;
        }
        match self.diff {
            DiffMode::Analytic => {
                let jet = self.jet.as_ref()?;
                let mut out = jet(self.r_at(i), self.t_at(j))?;
                out.u += self.height_offset;
                Some(out)
            }
            DiffMode::Stencil => {
                let (ii, jj) = (i as isize, j as isize);
                Some(Jet2 {
                    u: self.u[[i, j]] + self.height_offset,
                    ur: self.d1(ii, jj, 0)?,
                    ut: self.d1(ii, jj, 1)?,
                    urr: self.d2(ii, jj, 0)?,
                    urt: self.d_cross(ii, jj)?,
                    utt: self.d2(ii, jj, 1)?,
                })
            }
        }
    }

    /// Interior nodes whose full Chebyshev neighborhood of radius `margin`
    /// stays on the grid and off Excluded nodes.
    pub fn deep_interior(&self, margin: usize) -> Vec<(usize, usize)> {
        let m = margin as isize;
        let mut out = Vec::new();
        for i in 0..self.rect.nr {
            for j in 0..self.rect.nt {
                if self.mask[[i, j]] != NodeMask::Interior {
                    continue;
                }
                let (ii, jj) = (i as isize, j as isize);
                let mut ok = true;
                'scan: for a in -m..=m {
                    for b in -m..=m {
                        if self.value(ii + a, jj + b).is_none() {
                            ok = false;
                            break 'scan;
                        }
                    }
                }
                if ok {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// All nodes currently masked Interior.
    pub fn interior(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.rect.nr {
            for j in 0..self.rect.nt {
                if self.mask[[i, j]] == NodeMask::Interior {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Flat node table `r,t,u,mask`, row-major in `i` then `j`. Heights
    /// include the vertical offset; excluded nodes write NaN.
    pub fn write_csv(&self, path: &Path) -> Result<(), PatchError> {
        use std::io::Write as _;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "r,t,u,mask")?;
        for i in 0..self.rect.nr {
            for j in 0..self.rect.nt {
                let m = match self.mask[[i, j]] {
                    NodeMask::Interior => "interior",
                    NodeMask::Dirichlet => "dirichlet",
                    NodeMask::Excluded => "excluded",
                };
                writeln!(f, "{},{},{},{m}", self.r_at(i), self.t_at(j), self.height(i, j))?;
            }
        }
        Ok(())
    }

    /// Companion JSON header describing the grid: chart rectangle, spacings,
    /// surface identity, label, and node totals.
    pub fn write_header_json(&self, path: &Path) -> Result<(), PatchError> {
        #[derive(Serialize)]
        struct Header<'a> {
            surface: String,
            label: &'a str,
            rect: ChartRect,
            dr: f64,
            dt: f64,
            height_offset: f64,
            n_interior: usize,
            n_dirichlet: usize,
            n_excluded: usize,
        }
        let mut counts = [0usize; 3];
        for m in self.mask.iter() {
            counts[match m {
                NodeMask::Interior => 0,
                NodeMask::Dirichlet => 1,
                NodeMask::Excluded => 2,
            }] += 1;
        }
        let header = Header {
            surface: self.surface.descriptor(),
            label: &self.label,
            rect: self.rect,
            dr: self.rect.dr(),
            dt: self.rect.dt(),
            height_offset: self.height_offset,
            n_interior: counts[0],
            n_dirichlet: counts[1],
            n_excluded: counts[2],
        };
        let text = serde_json::to_string_pretty(&header)
            .map_err(|e| PatchError::Serialize(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{solve_radial, GraphMode, SolveOptions};
    use approx::assert_relative_eq;

    fn euclid() -> Arc<WarpedSurface> {
        Arc::new(WarpedSurface::euclidean())
    }

    #[test]
    fn rect_rejects_degenerate_and_coarse_input() {
        assert!(ChartRect::new(1.0, 1.0, 0.0, 1.0, 5, 5).is_err());
        assert!(ChartRect::new(0.0, 1.0, 0.0, 1.0, 2, 5).is_err());
        assert!(ChartRect::new(0.0, f64::INFINITY, 0.0, 1.0, 5, 5).is_err());
        assert!(ChartRect::new(0.5, 1.0, -1.0, 1.0, 17, 33).is_ok());
    }

    #[test]
    fn refine_keeps_nodes_nested() {
        let rect = ChartRect::new(0.5, 2.0, -0.3, 0.9, 9, 17).unwrap();
        let fine = rect.refine();
        assert_eq!(fine.nr, 17);
        for i in 0..rect.nr {
            assert_relative_eq!(fine.r_at(2 * i), rect.r_at(i), max_relative = 1e-14);
        }
        for j in 0..rect.nt {
            assert_relative_eq!(fine.t_at(2 * j), rect.t_at(j), max_relative = 1e-14);
        }
    }

    #[test]
    fn first_derivative_stencils_are_exact_on_quadratics() {
        // Centered and one-sided three-point first differences reproduce any
        // quadratic exactly, so edge and interior nodes all check at rounding.
        let rect = ChartRect::new(1.0, 2.0, 0.0, 1.0, 11, 11).unwrap();
        let f = |r: f64, t: f64| 0.3 * r * r - 0.4 * r * t + 0.7 * t * t + 1.1 * r - 0.2 * t;
        let patch =
            GraphPatch::from_values(euclid(), rect, "quadratic", |r, t| Some(f(r, t))).unwrap();
        for i in 0..rect.nr {
            for j in 0..rect.nt {
                let jet = patch.jet_at(i, j).expect("full grid must differentiate");
                let (r, t) = (rect.r_at(i), rect.t_at(j));
                assert_relative_eq!(jet.ur, 0.6 * r - 0.4 * t + 1.1, epsilon = 1e-12);
                assert_relative_eq!(jet.ut, -0.4 * r + 1.4 * t - 0.2, epsilon = 1e-12);
                assert_relative_eq!(jet.urr, 0.6, epsilon = 1e-10);
                assert_relative_eq!(jet.urt, -0.4, epsilon = 1e-10);
                assert_relative_eq!(jet.utt, 1.4, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn second_derivative_stencils_are_exact_on_cubics() {
        let rect = ChartRect::new(1.0, 2.0, 0.0, 1.0, 11, 11).unwrap();
        let f = |r: f64, t: f64| r * r * r - 2.0 * t * t * t;
        let patch =
            GraphPatch::from_values(euclid(), rect, "cubic", |r, t| Some(f(r, t))).unwrap();
        for i in 0..rect.nr {
            for j in 0..rect.nt {
                let jet = patch.jet_at(i, j).unwrap();
                let (r, t) = (rect.r_at(i), rect.t_at(j));
                assert_relative_eq!(jet.urr, 6.0 * r, epsilon = 1e-9);
                assert_relative_eq!(jet.utt, -12.0 * t, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn excluded_hole_triggers_one_sided_fallback() {
        let rect = ChartRect::new(1.0, 2.0, 0.0, 1.0, 11, 11).unwrap();
        let f = |r: f64, t: f64| 0.5 * r * r - 0.3 * r * t + t * t;
        let mut patch =
            GraphPatch::from_values(euclid(), rect, "holed", |r, t| Some(f(r, t))).unwrap();
        patch.mask[[5, 5]] = NodeMask::Excluded;
        patch.u[[5, 5]] = f64::NAN;
        assert!(patch.jet_at(5, 5).is_none());
        for (i, j) in [(4, 5), (6, 5), (5, 4), (5, 6)] {
            let jet = patch.jet_at(i, j).expect("neighbors fall back to one-sided stencils");
            let (r, t) = (rect.r_at(i), rect.t_at(j));
            assert_relative_eq!(jet.ur, r - 0.3 * t, epsilon = 1e-11);
            assert_relative_eq!(jet.ut, -0.3 * r + 2.0 * t, epsilon = 1e-11);
            assert_relative_eq!(jet.urt, -0.3, epsilon = 1e-9);
            assert_relative_eq!(jet.urr, 1.0, epsilon = 1e-9);
            assert_relative_eq!(jet.utt, 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn deep_interior_respects_margin_and_holes() {
        let rect = ChartRect::new(1.0, 2.0, 0.0, 1.0, 13, 13).unwrap();
        let mut patch =
            GraphPatch::from_values(euclid(), rect, "margins", |_, _| Some(0.0)).unwrap();
        patch.mask[[6, 6]] = NodeMask::Excluded;
        let deep = patch.deep_interior(2);
        for &(i, j) in &deep {
            assert!((2..=10).contains(&i) && (2..=10).contains(&j));
            let cheb = (i as isize - 6).abs().max((j as isize - 6).abs());
            assert!(cheb > 2, "node ({i}, {j}) sits within margin of the hole");
        }
        // 9 x 9 frame minus the Chebyshev ball of radius 2 around the hole.
        assert_eq!(deep.len(), 81 - 25);
    }

    #[test]
    fn analytic_patches_report_the_jet_verbatim() {
        let rect = ChartRect::new(0.5, 1.5, 0.0, 1.0, 5, 5).unwrap();
        let jet: Arc<JetFn> = Arc::new(|r, t| {
            Some(Jet2 { u: r * t, ur: t, ut: r, urr: 0.0, urt: 1.0, utt: 0.0 })
        });
        let patch = GraphPatch::from_jet(euclid(), rect, "bilinear", jet).unwrap();
        let got = patch.jet_at(2, 3).unwrap();
        assert_relative_eq!(got.u, rect.r_at(2) * rect.t_at(3), max_relative = 1e-15);
        assert_relative_eq!(got.urt, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn vertical_translate_shifts_height_but_not_derivatives() {
        let rect = ChartRect::new(1.0, 2.0, 0.0, 1.0, 9, 9).unwrap();
        let patch = GraphPatch::from_values(euclid(), rect, "base", |r, t| {
            Some((r * 1.3).sin() * (t * 0.7).cos())
        })
        .unwrap();
        let lifted = patch.vertical_translate(5.25);
        for (i, j) in patch.interior() {
            let a = patch.jet_at(i, j).unwrap();
            let b = lifted.jet_at(i, j).unwrap();
            assert_eq!(a.ur.to_bits(), b.ur.to_bits());
            assert_eq!(a.ut.to_bits(), b.ut.to_bits());
            assert_eq!(a.urr.to_bits(), b.urr.to_bits());
            assert_eq!(a.urt.to_bits(), b.urt.to_bits());
            assert_eq!(a.utt.to_bits(), b.utt.to_bits());
            assert_eq!(b.u.to_bits(), (a.u + 5.25).to_bits());
            assert_eq!(lifted.height(i, j).to_bits(), (patch.height(i, j) + 5.25).to_bits());
        }
    }

    #[test]
    fn profile_resample_matches_hemisphere_closed_form() {
        // The cap u = sqrt(1 - r^2) - 1 over the flat chart has constant mean
        // curvature; resampled jets must track u, u_r = -r/sqrt(1 - r^2), and
        // u_rr = -1/(1 - r^2)^{3/2}.
        let surface = euclid();
        let opts = SolveOptions::from_pole(0.9);
        let profile = Arc::new(
            solve_radial(&surface, GraphMode::Cmc { h0: 2.0 }, &opts).expect("cap profile"),
        );
        let rect = ChartRect::new(0.05, 0.85, 0.0, 1.0, 17, 5).unwrap();
        let patch = GraphPatch::from_profile(profile, rect, "cap").unwrap();
        for i in 0..rect.nr {
            let r = rect.r_at(i);
            let jet = patch.jet_at(i, 2).unwrap();
            let s = (1.0 - r * r).sqrt();
            assert_relative_eq!(jet.u, s - 1.0, epsilon = 1e-8);
            assert_relative_eq!(jet.ur, -r / s, epsilon = 1e-8);
            assert_relative_eq!(jet.urr, -1.0 / (s * s * s), epsilon = 1e-7);
            assert_eq!(jet.ut, 0.0);
            assert_eq!(jet.utt, 0.0);
        }
    }

    #[test]
    fn profile_resample_rejects_out_of_table_rectangles() {
        let surface = euclid();
        let opts = SolveOptions::from_pole(0.5);
        let profile =
            Arc::new(solve_radial(&surface, GraphMode::Translator, &opts).expect("profile"));
        let rect = ChartRect::new(0.1, 0.9, 0.0, 1.0, 9, 5).unwrap();
        assert!(GraphPatch::from_profile(profile, rect, "overreach").is_err());
    }

    #[test]
    fn csv_and_header_exports_round_trip() {
        let rect = ChartRect::new(0.5, 1.0, 0.0, 1.0, 5, 6).unwrap();
        let patch = GraphPatch::from_values(euclid(), rect, "table", |r, t| {
            if r > 0.9 && t > 0.9 {
                None
            } else {
                Some(r + 2.0 * t)
            }
        })
        .unwrap()
        .vertical_translate(0.25);
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("patch.csv");
        let json_path = dir.path().join("patch.json");
        patch.write_csv(&csv_path).unwrap();
        patch.write_header_json(&json_path).unwrap();

        let text = std::fs::read_to_string(&csv_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "r,t,u,mask");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), rect.nr * rect.nt);
        let first: Vec<&str> = rows[0].split(',').collect();
        assert_eq!(first[3], "dirichlet");
        assert_relative_eq!(first[2].parse::<f64>().unwrap(), 0.5 + 0.25);
        assert!(rows.iter().any(|row| row.ends_with(",excluded")));
        assert!(rows.iter().any(|row| row.ends_with(",interior")));

        let header: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(header["label"], "table");
        assert_eq!(header["rect"]["nr"], 5);
        assert_relative_eq!(header["dt"].as_f64().unwrap(), 0.2);
        assert_relative_eq!(header["height_offset"].as_f64().unwrap(), 0.25);
        assert_eq!(
            header["n_interior"].as_u64().unwrap()
                + header["n_dirichlet"].as_u64().unwrap()
                + header["n_excluded"].as_u64().unwrap(),
            30
        );
    }
}
