//! Discrete domains, cell-centred fields and the zero-flux Laplacian.

mod field;
mod format;
mod grid;

pub use field::ScalarField;
pub use format::{read_csv, read_snapshot, write_csv, write_snapshot, SnapshotHeader, SNAPSHOT_MAGIC};
pub(crate) use grid::lp_norm_slice;
pub use grid::{build_grid, unit_sphere_area, Face, Geometry, Grid, GridSpec, GridTag};
