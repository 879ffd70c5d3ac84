//! Space-time grids, periodic fields, spectral transforms and the
//! steady/oscillatory projections.

mod field;
mod grid;
pub mod io;
pub mod ops;

pub use field::Field;
pub use grid::{Backend, BoundaryCell, ObstacleMask, PeriodicGrid, Region};
pub use ops::{
    advect, curl, dealias, diff, diff2, divergence, filter_time_nyquist, gradient, laplacian,
    leray_project, oscillatory_profile, profile_product, project_oscillatory, project_steady, Axis,
};
