//! Numerical laboratory for the parabolic-elliptic chemotaxis system with
//! signal-dependent motility,
//!
//! ```text
//! ∂ₜu = Δ(u γ(v)),   (I − Δ)v = u,   zero-flux boundary,
//! ```
//!
//! on intervals, rectangles and radially symmetric balls.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: cell-centred finite-volume grids, fields, the Neumann
//!   Laplacian, quadrature and the binary/CSV field formats.
//! * [`motility`]: motility families γ with γ′, Γ = ∫ₐˢ γ, the tail
//!   envelope K_s and sampled assumption checks.
//! * [`helmholtz`]: the screened Poisson solver (I − Δ_h)⁻¹ and its discrete
//!   Green kernel.
//! * [`stepper`]: the positivity-preserving, mass-conserving time stepper.
//! * [`diagnostics`]: numerical monitors for the identities and inequalities
//!   satisfied by solutions.
//! * [`harness`]: scenario files, sweeps and convergence studies.
//! * [`cli`]: the `mlab` command-line front end.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
mod error;
pub mod harness;
pub mod helmholtz;
mod linalg;
pub mod mesh;
pub mod motility;
pub mod stepper;

pub use error::{Error, Result};
pub use helmholtz::HelmholtzSolver;
pub use mesh::{build_grid, Geometry, Grid, GridSpec, GridTag, ScalarField};
pub use motility::{Family, Motility};
pub use stepper::{SimState, StepperConfig};
