//! Randomized invariants: the angle function inverts the area factor for
//! arbitrary jets, vertical translation never touches derivative data, and
//! dyadic refinement keeps grid nodes bitwise nested.

use std::sync::Arc;

use proptest::prelude::*;
use translator_lab::assets;
use translator_lab::patch::{ChartRect, Jet2};
use translator_lab::shape::{shape_at, shape_at_node};
use translator_lab::WarpedSurface;

fn surface_for(index: u8) -> (WarpedSurface, f64, f64) {
    match index % 4 {
        0 => (WarpedSurface::euclidean(), 0.3, 2.0),
        1 => (WarpedSurface::spherical(), 0.2, 1.3),
        2 => (WarpedSurface::hyperbolic(), 0.3, 2.0),
        _ => (WarpedSurface::cartesian(), -1.0, 1.0),
    }
}

proptest! {
    #[test]
    fn prop_angle_function_inverts_the_area_factor(
        index in 0u8..4,
        frac in 0.0f64..1.0,
        ur in -3.0f64..3.0,
        ut in -3.0f64..3.0,
        urr in -4.0f64..4.0,
        urt in -4.0f64..4.0,
        utt in -4.0f64..4.0,
    ) {
        let (surface, rlo, rhi) = surface_for(index);
        let r = rlo + frac * (rhi - rlo);
        let jet = Jet2 { u: 0.0, ur, ut, urr, urt, utt };
        let data = shape_at(&surface, r, &jet);
        prop_assert!(data.w >= 1.0);
        prop_assert!(data.theta > 0.0 && data.theta <= 1.0);
        prop_assert!((data.theta * data.w - 1.0).abs() <= 4.0 * f64::EPSILON);
        prop_assert!(data.norm_a_sq >= -1e-12 * (1.0 + data.norm_a_sq.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn prop_vertical_translation_is_invisible_to_derivatives(
        seed in 0u64..1000,
        dz in -10.0f64..10.0,
    ) {
        let surface = Arc::new(WarpedSurface::hyperbolic());
        let rect = ChartRect::new(0.5, 1.8, 0.0, 1.5, 9, 9).unwrap();
        let patch = assets::random_smooth(surface, rect, seed).unwrap();
        let moved = patch.vertical_translate(dz);
        for i in 0..rect.nr {
            for j in 0..rect.nt {
                let (a, b) = (shape_at_node(&patch, i, j), shape_at_node(&moved, i, j));
                match (a, b) {
                    (Some(a), Some(b)) => {
                        prop_assert_eq!(a.w.to_bits(), b.w.to_bits());
                        prop_assert_eq!(a.theta.to_bits(), b.theta.to_bits());
                        prop_assert_eq!(
                            a.mean_curvature.to_bits(),
                            b.mean_curvature.to_bits()
                        );
                        prop_assert_eq!(a.norm_a_sq.to_bits(), b.norm_a_sq.to_bits());
                    }
                    (None, None) => {}
                    _ => prop_assert!(false, "translation changed node coverage"),
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn prop_refined_charts_nest_their_parent_nodes_bitwise(
        r_lo in -3.0f64..3.0,
        r_width in 0.05f64..4.0,
        t_lo in -3.0f64..3.0,
        t_width in 0.05f64..4.0,
        nr in 3usize..40,
        nt in 3usize..40,
    ) {
        let rect =
            ChartRect::new(r_lo, r_lo + r_width, t_lo, t_lo + t_width, nr, nt).unwrap();
        let fine = rect.refine();
        prop_assert_eq!(fine.dr().to_bits(), (rect.dr() / 2.0).to_bits());
        prop_assert_eq!(fine.dt().to_bits(), (rect.dt() / 2.0).to_bits());
        for i in 0..rect.nr {
            prop_assert_eq!(fine.r_at(2 * i).to_bits(), rect.r_at(i).to_bits());
        }
        for j in 0..rect.nt {
            prop_assert_eq!(fine.t_at(2 * j).to_bits(), rect.t_at(j).to_bits());
        }
    }
}
