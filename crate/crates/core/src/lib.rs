//! Numerical workbench for translating, minimal, and constant-mean-curvature
//! graphs over rotationally symmetric surfaces, with finite-difference
//! geometry checks, conformal-change diagnostics, and level-curve probes.

pub mod assets;
pub mod conformal;
pub mod dirichlet;
pub mod fdgeom;
pub mod jacobi;
pub mod levelcurve;
pub mod numeric;
pub mod ode;
pub mod patch;
pub mod probe;
pub mod profile;
pub mod shape;
pub mod surface;

pub use profile::{GraphMode, RadialProfile};
pub use surface::WarpedSurface;
