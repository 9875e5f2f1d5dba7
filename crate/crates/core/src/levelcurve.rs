//! Height level-set extraction and discrete geodesic curvature.
//!
//! Level curves come out of a marching-squares pass over the node grid with
//! linear interpolation along grid edges. Saddle cells are disambiguated by
//! the cell-center mean. Components are chained through a sorted edge-key
//! map, so extraction order is deterministic.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::patch::{GraphPatch, NodeMask};
use crate::surface::WarpedSurface;

#[derive(Debug, Error)]
pub enum LevelError {
    #[error("level {0} does not intersect the patch heights")]
    EmptyContour(f64),
    #[error("level {0} lies on a height plateau; the contour is degenerate")]
    DegeneratePlateau(f64),
    #[error("polyline needs at least 5 vertices, got {0}")]
    TooShort(usize),
    #[error("polyline contains a non-finite or repeated vertex at index {0}")]
    BadVertex(usize),
}

/// One connected component of a height level set, as a chart polyline with
/// cumulative intrinsic arclength and per-vertex geodesic curvature.
#[derive(Debug, Clone)]
pub struct LevelCurve {
    pub level: f64,
    /// Chart coordinates `(r, t)` of the polyline vertices.
    pub vertices: Vec<[f64; 2]>,
    /// Cumulative arclength of the base-surface metric, strictly increasing.
    pub arclength: Vec<f64>,
    /// Full intrinsic length, seam segment included for closed curves.
    pub total_length: f64,
    /// Discrete geodesic curvature at each vertex.
    pub kappa: Vec<f64>,
    pub closed: bool,
    /// Whether the component runs next to excluded nodes, where the
    /// interpolated crossing is less trustworthy.
    pub touches_excluded: bool,
}

impl LevelCurve {
    pub fn mean_abs_kappa(&self) -> f64 {
        if self.kappa.is_empty() {
            return f64::NAN;
        }
        self.kappa.iter().map(|k| k.abs()).sum::<f64>() / self.kappa.len() as f64
    }

    pub fn length(&self) -> f64 {
        self.total_length
    }
}

/// Grid edge identifier: node `(i, j)` to its neighbor along `axis`.
type EdgeKey = (usize, usize, u8);

fn edge_nodes(key: EdgeKey) -> [(usize, usize); 2] {
    let (i, j, axis) = key;
    if axis == 0 {
        [(i, j), (i + 1, j)]
    } else {
        [(i, j), (i, j + 1)]
    }
}

/// Extract every connected component of the level set `height = level`.
/// Components shorter than five vertices are grid-scale fragments and are
/// dropped; if nothing remains the contour is reported empty.
pub fn extract_level_curves(
    patch: &GraphPatch,
    level: f64,
) -> Result<Vec<LevelCurve>, LevelError> {
    let (nr, nt) = (patch.rect.nr, patch.rect.nt);
    let lvl = level - patch.height_offset;

    let mut n_eval = 0usize;
    let mut n_exact = 0usize;
    for i in 0..nr {
        for j in 0..nt {
            if let Some(v) = patch.value(i as isize, j as isize) {
                n_eval += 1;
                if v == lvl {
                    n_exact += 1;
                }
            }
        }
    }
    if n_eval == 0 || 4 * n_exact > n_eval {
        return Err(LevelError::DegeneratePlateau(level));
    }

    // Crossing positions on grid edges.
    let mut crossings: BTreeMap<EdgeKey, [f64; 2]> = BTreeMap::new();
    let mut probe_edge = |key: EdgeKey| -> bool {
        if crossings.contains_key(&key) {
            return true;
        }
        let [a, b] = edge_nodes(key);
        let (Some(va), Some(vb)) =
            (patch.value(a.0 as isize, a.1 as isize), patch.value(b.0 as isize, b.1 as isize))
        else {
            return false;
        };
        if (va >= lvl) == (vb >= lvl) {
            return false;
        }
        let s = (lvl - va) / (vb - va);
        let pos = if key.2 == 0 {
            [patch.rect.r_at(a.0) + s * patch.rect.dr(), patch.rect.t_at(a.1)]
        } else {
            [patch.rect.r_at(a.0), patch.rect.t_at(a.1) + s * patch.rect.dt()]
        };
        crossings.insert(key, pos);
        true
    };

    // Per-cell segments between crossed edges.
    let mut adjacency: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();
    let link = |a: EdgeKey, b: EdgeKey, adj: &mut BTreeMap<EdgeKey, Vec<EdgeKey>>| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    for i in 0..nr - 1 {
        for j in 0..nt - 1 {
            let corners = [
                patch.value(i as isize, j as isize),
                patch.value(i as isize + 1, j as isize),
                patch.value(i as isize + 1, j as isize + 1),
                patch.value(i as isize, j as isize + 1),
            ];
            let Some(vals) = corners.iter().copied().collect::<Option<Vec<_>>>() else {
                continue;
            };
            let south = (i, j, 0u8);
            let east = (i + 1, j, 1u8);
            let north = (i, j + 1, 0u8);
            let west = (i, j, 1u8);
            let crossed: Vec<EdgeKey> = [south, east, north, west]
                .into_iter()
                .filter(|k| probe_edge(*k))
                .collect();
            match crossed.len() {
                2 => link(crossed[0], crossed[1], &mut adjacency),
                4 => {
                    let center_in = vals.iter().sum::<f64>() / 4.0 >= lvl;
                    let corner0_in = vals[0] >= lvl;
                    // Connect the arcs around whichever diagonal pair the
                    // center joins to.
                    if center_in == corner0_in {
                        link(south, east, &mut adjacency);
                        link(north, west, &mut adjacency);
                    } else {
                        link(south, west, &mut adjacency);
                        link(north, east, &mut adjacency);
                    }
                }
                _ => {}
            }
        }
    }

    if adjacency.is_empty() {
        return Err(LevelError::EmptyContour(level));
    }

    // Walk components: open paths first (from degree-1 keys), then loops.
    let mut used: BTreeSet<(EdgeKey, EdgeKey)> = BTreeSet::new();
    let mark = |a: EdgeKey, b: EdgeKey, used: &mut BTreeSet<(EdgeKey, EdgeKey)>| {
        used.insert((a.min(b), a.max(b)));
    };
    let is_used = |a: EdgeKey, b: EdgeKey, used: &BTreeSet<(EdgeKey, EdgeKey)>| {
        used.contains(&(a.min(b), a.max(b)))
    };
    let mut components: Vec<(Vec<EdgeKey>, bool)> = Vec::new();
    let starts: Vec<EdgeKey> = adjacency
        .iter()
        .filter(|(_, n)| n.len() == 1)
        .map(|(k, _)| *k)
        .chain(adjacency.keys().copied())
        .collect();
    for start in starts {
        let fresh = adjacency[&start].iter().any(|n| !is_used(start, *n, &used));
        if !fresh {
            continue;
        }
        let mut path = vec![start];
        let mut here = start;
        loop {
            let next = adjacency[&here]
                .iter()
                .copied()
                .find(|n| !is_used(here, *n, &used));
            let Some(next) = next else { break };
            mark(here, next, &mut used);
            if next == start {
                path.push(next);
                break;
            }
            path.push(next);
            here = next;
        }
        let closed = path.len() > 2 && path.first() == path.last();
        if closed {
            path.pop();
        }
        components.push((path, closed));
    }

    // Crossings closer than a fifth of a cell merge: sub-cell slivers carry
    // no independent position information and destabilize the curvature
    // differences.
    let tol = 0.2 * patch.rect.dr().min(patch.rect.dt());
    let mut out = Vec::new();
    for (keys, closed) in components {
        let mut vertices: Vec<[f64; 2]> = Vec::with_capacity(keys.len());
        let mut touches = false;
        for key in &keys {
            let pos = crossings[key];
            if let Some(last) = vertices.last() {
                if (pos[0] - last[0]).abs() < tol && (pos[1] - last[1]).abs() < tol {
                    continue;
                }
            }
            for (ni, nj) in edge_nodes(*key) {
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (ci, cj) = (ni as i64 + di, nj as i64 + dj);
                        if ci >= 0
                            && cj >= 0
                            && (ci as usize) < nr
                            && (cj as usize) < nt
                            && patch.mask[[ci as usize, cj as usize]] == NodeMask::Excluded
                        {
                            touches = true;
                        }
                    }
                }
            }
            vertices.push(pos);
        }
        if closed && vertices.len() > 1 {
            let (f, l) = (vertices[0], *vertices.last().unwrap());
            if (f[0] - l[0]).abs() < tol && (f[1] - l[1]).abs() < tol {
                vertices.pop();
            }
        }
        if vertices.len() < 5 {
            continue;
        }
        let (arclength, kappa) =
            curve_geodesic_curvature(&patch.surface, &vertices, closed)?;
        let mut total_length = *arclength.last().unwrap();
        if closed {
            let (a, b) = (vertices[vertices.len() - 1], vertices[0]);
            let hm = patch.surface.h(0.5 * (a[0] + b[0]));
            let (dr, dt) = (b[0] - a[0], b[1] - a[1]);
            total_length += (dr * dr + hm * hm * dt * dt).sqrt();
        }
        out.push(LevelCurve {
            level,
            vertices,
            arclength,
            total_length,
            kappa,
            closed,
            touches_excluded: touches,
        });
    }
    if out.is_empty() {
        return Err(LevelError::EmptyContour(level));
    }
    Ok(out)
}

/// Cumulative arclength and discrete geodesic curvature of a chart polyline
/// with respect to the base-surface metric.
///
/// The curvature at a vertex is the covariant acceleration of the
/// arclength parametrization, from nonuniform three-point differences with
/// chart Christoffel symbols, projected on the intrinsic unit normal.
pub fn curve_geodesic_curvature(
    surface: &WarpedSurface,
    vertices: &[[f64; 2]],
    closed: bool,
) -> Result<(Vec<f64>, Vec<f64>), LevelError> {
    let n = vertices.len();
    if n < 5 {
        return Err(LevelError::TooShort(n));
    }
    for (k, v) in vertices.iter().enumerate() {
        if !v[0].is_finite() || !v[1].is_finite() {
            return Err(LevelError::BadVertex(k));
        }
    }
    let seg = |a: &[f64; 2], b: &[f64; 2]| -> f64 {
        let hm = surface.h(0.5 * (a[0] + b[0]));
        let (dr, dt) = (b[0] - a[0], b[1] - a[1]);
        (dr * dr + hm * hm * dt * dt).sqrt()
    };
    let mut arclength = Vec::with_capacity(n);
    arclength.push(0.0);
    for k in 1..n {
        let ds = seg(&vertices[k - 1], &vertices[k]);
        if !(ds > 0.0) {
            return Err(LevelError::BadVertex(k));
        }
        arclength.push(arclength[k - 1] + ds);
    }

    let mut kappa = vec![0.0f64; n];
    let at = |k: isize| -> Option<([f64; 2], f64)> {
        if closed {
            let m = k.rem_euclid(n as isize) as usize;
            // Unwrapped arclength for neighbors across the seam.
            let s = if k < 0 {
                arclength[m] - (arclength[n - 1] + seg(&vertices[n - 1], &vertices[0]))
            } else if k >= n as isize {
                arclength[m] + arclength[n - 1] + seg(&vertices[n - 1], &vertices[0])
            } else {
                arclength[m]
            };
            Some((vertices[m], s))
        } else if (0..n as isize).contains(&k) {
            Some((vertices[k as usize], arclength[k as usize]))
        } else {
            None
        }
    };
    let range = if closed { 0..n } else { 1..n - 1 };
    for k in range {
        let (xm, sm) = at(k as isize - 1).unwrap();
        let (x0, s0) = at(k as isize).unwrap();
        let (xp, sp) = at(k as isize + 1).unwrap();
        let (d1, d2) = (s0 - sm, sp - s0);
        let denom = d1 * d2 * (d1 + d2);
        let mut tvec = [0.0f64; 2];
        let mut acc = [0.0f64; 2];
        for a in 0..2 {
            tvec[a] = (d1 * d1 * xp[a] - d2 * d2 * xm[a] + (d2 * d2 - d1 * d1) * x0[a]) / denom;
            acc[a] = 2.0 * (d1 * xp[a] + d2 * xm[a] - (d1 + d2) * x0[a]) / denom;
        }
        let r = x0[0];
        let h = surface.h(r);
        let hp = surface.h_prime(r);
        // Renormalize the tangent so chord-length bias does not leak into
        // the projection.
        let tnorm = (tvec[0] * tvec[0] + h * h * tvec[1] * tvec[1]).sqrt();
        if !(tnorm > 0.0) {
            return Err(LevelError::BadVertex(k));
        }
        let t_unit = [tvec[0] / tnorm, tvec[1] / tnorm];
        let a_r = acc[0] - h * hp * t_unit[1] * t_unit[1];
        let a_t = acc[1] + 2.0 * (hp / h) * t_unit[0] * t_unit[1];
        let normal = [-h * t_unit[1], t_unit[0] / h];
        kappa[k] = a_r * normal[0] + h * h * a_t * normal[1];
        if !kappa[k].is_finite() {
            return Err(LevelError::BadVertex(k));
        }
    }
    if !closed {
        kappa[0] = kappa[1];
        kappa[n - 1] = kappa[n - 2];
    }
    Ok((arclength, kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::patch::ChartRect;
    use crate::profile::{solve_radial, GraphMode, SolveOptions};
    use std::sync::Arc;

    fn check_invariants(curve: &LevelCurve, patch: &GraphPatch) {
        assert!(curve.vertices.len() >= 5);
        for w in curve.arclength.windows(2) {
            assert!(w[1] > w[0], "arclength not strictly increasing");
        }
        for w in curve.vertices.windows(2) {
            assert!((w[1][0] - w[0][0]).abs() <= 2.0 * patch.rect.dr() + 1e-12);
            assert!((w[1][1] - w[0][1]).abs() <= 2.0 * patch.rect.dt() + 1e-12);
        }
        for k in &curve.kappa {
            assert!(k.is_finite());
        }
    }

    #[test]
    fn grim_reaper_levels_are_two_straight_lines() {
        let rect = ChartRect::new(-1.55, 1.55, 0.0, 1.0, 129, 33).unwrap();
        let patch = assets::grim_reaper(rect).unwrap();
        let curves = extract_level_curves(&patch, 2.0).unwrap();
        assert_eq!(curves.len(), 2);
        let target = (-2.0f64).exp().acos();
        let mut sides = Vec::new();
        for c in &curves {
            check_invariants(c, &patch);
            assert!(!c.closed);
            let x0 = c.vertices[0][0];
            assert!((x0.abs() - target).abs() < 2e-3, "x = {x0}");
            for v in &c.vertices {
                assert!((v[0] - x0).abs() < 1e-12, "line not straight: {} vs {x0}", v[0]);
            }
            assert!(c.mean_abs_kappa() < 1e-10, "kappa {}", c.mean_abs_kappa());
            sides.push(x0.signum());
        }
        sides.sort_by(f64::total_cmp);
        assert_eq!(sides, vec![-1.0, 1.0]);
    }

    #[test]
    fn plateau_and_empty_levels_error() {
        let surface = Arc::new(crate::surface::WarpedSurface::hyperbolic());
        let rect = ChartRect::new(0.4, 1.4, 0.0, 1.0, 17, 17).unwrap();
        let patch = assets::flat_slice(surface, rect, 1.0).unwrap();
        assert!(matches!(
            extract_level_curves(&patch, 1.0),
            Err(LevelError::DegeneratePlateau(_))
        ));
        assert!(matches!(extract_level_curves(&patch, 2.0), Err(LevelError::EmptyContour(_))));
    }

    #[test]
    fn hyperbolic_radial_level_is_a_circle_with_second_order_curvature() {
        let surface = Arc::new(crate::surface::WarpedSurface::hyperbolic());
        let profile = Arc::new(
            solve_radial(&surface, GraphMode::Translator, &SolveOptions::from_pole(2.5)).unwrap(),
        );
        let mut errs = Vec::new();
        for n in [33usize, 65] {
            let rect = ChartRect::new(0.4, 1.8, 0.0, 2.8, n, n).unwrap();
            let patch =
                crate::patch::GraphPatch::from_profile(profile.clone(), rect, "radial").unwrap();
            let mid = 0.5
                * (patch.sample_height(0.5, 0.0).unwrap()
                    + patch.sample_height(1.6, 0.0).unwrap());
            let curves = extract_level_curves(&patch, mid).unwrap();
            assert_eq!(curves.len(), 1);
            check_invariants(&curves[0], &patch);
            let r_true = profile.level_radius(mid).unwrap();
            let target = surface.circle_geodesic_curvature(r_true).unwrap();
            let worst = curves[0]
                .kappa
                .iter()
                .map(|k| (k - target).abs())
                .fold(0.0f64, f64::max);
            errs.push(worst);
        }
        assert!(errs[0] < 5.0 * (1.4f64 / 32.0).powi(2), "coarse err {}", errs[0]);
        assert!(errs[1] < errs[0] / 2.5, "no refinement: {errs:?}");
    }

    #[test]
    fn spherical_equator_is_a_geodesic() {
        let surface = Arc::new(crate::surface::WarpedSurface::spherical_cap(3.0));
        let rect = ChartRect::new(0.8, 2.2, 0.0, 3.0, 33, 33).unwrap();
        let patch = crate::patch::GraphPatch::from_values(surface, rect, "ramp", |r, _| Some(r))
            .unwrap();
        let curves = extract_level_curves(&patch, std::f64::consts::FRAC_PI_2).unwrap();
        assert_eq!(curves.len(), 1);
        for k in &curves[0].kappa {
            assert!(k.abs() < 1e-10, "equator kappa {k}");
        }
    }

    #[test]
    fn saddle_cells_split_into_two_branches() {
        let surface = Arc::new(crate::surface::WarpedSurface::cartesian());
        let rect = ChartRect::new(-1.0, 1.0, -1.0, 1.0, 20, 20).unwrap();
        let patch =
            crate::patch::GraphPatch::from_values(surface, rect, "saddle", |x, y| Some(x * y))
                .unwrap();
        let curves = extract_level_curves(&patch, 1e-4).unwrap();
        assert_eq!(curves.len(), 2, "hyperbola branches");
        for c in &curves {
            check_invariants(c, &patch);
        }
    }

    #[test]
    fn exclusion_contact_is_flagged() {
        let rect = ChartRect::new(0.0, 1.58, 0.0, 1.0, 80, 21).unwrap();
        let patch = assets::grim_reaper(rect).unwrap();
        let curves = extract_level_curves(&patch, 4.0).unwrap();
        assert!(curves.iter().any(|c| c.touches_excluded));
        let far = extract_level_curves(&patch, 1.0).unwrap();
        assert!(far.iter().all(|c| !c.touches_excluded));
    }

    #[test]
    fn closed_loops_wrap_cleanly() {
        let surface = Arc::new(crate::surface::WarpedSurface::cartesian());
        let rect = ChartRect::new(-1.0, 1.0, -1.0, 1.0, 41, 41).unwrap();
        let patch = crate::patch::GraphPatch::from_values(surface, rect, "paraboloid", |x, y| {
            Some(x * x + y * y)
        })
        .unwrap();
        let curves = extract_level_curves(&patch, 0.25).unwrap();
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        assert!(c.closed);
        check_invariants(c, &patch);
        for k in &c.kappa {
            assert!(k.abs() > 0.8 && k.abs() < 5.0, "circle curvature {k}");
        }
        assert!((c.mean_abs_kappa() - 2.0).abs() < 0.08, "mean {}", c.mean_abs_kappa());
        assert!((c.length() - std::f64::consts::PI).abs() < 0.05);
    }
}
