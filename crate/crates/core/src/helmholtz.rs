//! The screened Poisson solver (I − Δ_h)⁻¹ with zero-flux boundary.
//!
//! The assembled matrix is `V (I − Δ_h) = V − L`, where `V` holds the cell
//! volumes and `L` the symmetric face couplings. It is a Stieltjes matrix, so
//! the solve is sign-preserving (discrete maximum principle) and its inverse
//! has strictly positive entries on a connected grid.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::linalg::{FaceSystem, SpdSolver};
use crate::mesh::{lp_norm_slice, Grid, ScalarField};
use crate::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-11;

/// Iterative-refinement sweeps applied when a solve misses the tolerance.
const MAX_REFINEMENTS: usize = 3;

/// Multiple of the unit roundoff allowed on the componentwise scale
/// ‖|I − Δ_h| |v|‖₂. Evaluating (I − Δ_h)v in floating point already errs
/// by about 4ε/dx² relative, which exceeds 1e−11 once dx < ~2e−3.
const ROUNDING_FLOOR: f64 = 16.0 * f64::EPSILON;

#[derive(Debug)]
pub struct HelmholtzSolver {
    grid: Arc<Grid>,
    solver: SpdSolver,
    tolerance: f64,
    green_min: OnceLock<f64>,
}

pub(crate) fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl HelmholtzSolver {
    pub fn new(grid: Arc<Grid>) -> Result<Self> {
        Self::with_tolerance(grid, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(grid: Arc<Grid>, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::config(format!("solver tolerance must lie in (0, 1), got {tolerance}")));
        }
        let mut diag = grid.volumes().to_vec();
        let couplings = grid
            .faces()
            .iter()
            .map(|f| {
                let t = f.transmissibility();
                diag[f.lo] += t;
                diag[f.hi] += t;
                (f.lo, f.hi, t)
            })
            .collect();
        // The PCG residual is measured on the volume-scaled system, so ask a
        // little more of it than the contract.
        let solver = SpdSolver::new(FaceSystem { diag, couplings }, 0.1 * tolerance)?;
        Ok(HelmholtzSolver { grid, solver, tolerance, green_min: OnceLock::new() })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Whether the banded direct factorization is in use (as opposed to PCG).
    pub fn is_direct(&self) -> bool {
        self.solver.is_direct()
    }

    /// (I − Δ_h)v on raw values.
    pub(crate) fn apply_slice(&self, v: &[f64]) -> Vec<f64> {
        let mut lap = vec![0.0; v.len()];
        self.grid.laplacian_into(v, &mut lap);
        v.iter().zip(&lap).map(|(a, l)| a - l).collect()
    }

    /// ‖ |I − Δ_h| |v| ‖₂, the scale of the rounding error in evaluating
    /// (I − Δ_h)v.
    fn abs_operator_norm(&self, v: &[f64]) -> f64 {
        let mut acc: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        let vols = self.grid.volumes();
        for face in self.grid.faces() {
            let t = face.transmissibility();
            let s = t * (v[face.lo].abs() + v[face.hi].abs());
            acc[face.lo] += s / vols[face.lo];
            acc[face.hi] += s / vols[face.hi];
        }
        euclid(&acc)
    }

    /// Largest residual norm accepted for `v` as a solution with data `f`:
    /// `tolerance · ‖f‖₂`, or the floating-point floor of the residual
    /// evaluation when that is larger.
    pub(crate) fn residual_allowance(&self, v: &[f64], f: &[f64]) -> f64 {
        (self.tolerance * euclid(f)).max(ROUNDING_FLOOR * self.abs_operator_norm(v))
    }

    /// Whether `v` satisfies (I − Δ_h)v = f within `factor` times the
    /// solver allowance.
    pub(crate) fn satisfies(&self, v: &[f64], f: &[f64], factor: f64) -> bool {
        let r: Vec<f64> = self.apply_slice(v).iter().zip(f).map(|(a, b)| a - b).collect();
        euclid(&r) <= factor * self.residual_allowance(v, f)
    }

    /// Relative contract residual ‖(I − Δ_h)v − f‖₂ / ‖f‖₂.
    pub(crate) fn relative_residual(&self, v: &[f64], f: &[f64]) -> f64 {
        let r: Vec<f64> = self.apply_slice(v).iter().zip(f).map(|(a, b)| a - b).collect();
        let fnorm = euclid(f);
        if fnorm == 0.0 {
            euclid(&r)
        } else {
            euclid(&r) / fnorm
        }
    }

    pub(crate) fn solve_slice(&self, f: &[f64]) -> Result<Vec<f64>> {
        let fnorm = euclid(f);
        if fnorm == 0.0 {
            return Ok(vec![0.0; f.len()]);
        }
        let vols = self.grid.volumes();
        let rhs: Vec<f64> = f.iter().zip(vols).map(|(a, w)| a * w).collect();
        let mut v = self.solver.solve(&rhs, None)?;
        for _ in 0..=MAX_REFINEMENTS {
            let r: Vec<f64> = f.iter().zip(self.apply_slice(&v)).map(|(a, b)| a - b).collect();
            if euclid(&r) <= self.residual_allowance(&v, f) {
                return Ok(v);
            }
            let scaled: Vec<f64> = r.iter().zip(vols).map(|(a, w)| a * w).collect();
            let dv = self.solver.solve(&scaled, None)?;
            v.iter_mut().zip(dv).for_each(|(a, d)| *a += d);
        }
        if self.satisfies(&v, f, 1.0) {
            Ok(v)
        } else {
            Err(Error::Solver { residual: self.relative_residual(&v, f), iterations: MAX_REFINEMENTS })
        }
    }

    /// v = (I − Δ_h)⁻¹ f.
    pub fn solve(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.check(f)?;
        let v = self.solve_slice(f.values())?;
        ScalarField::new(&self.grid, v)
    }

    /// (I − Δ_h) v.
    pub fn apply(&self, v: &ScalarField) -> Result<ScalarField> {
        self.grid.check(v)?;
        ScalarField::new(&self.grid, self.apply_slice(v.values()))
    }

    /// Column j of the discrete Green kernel, the response to the normalized
    /// indicator of cell j (unit mass in cell j).
    pub fn green_column(&self, j: usize) -> Result<ScalarField> {
        if j >= self.grid.len() {
            return Err(Error::config(format!("cell {j} outside grid of {} cells", self.grid.len())));
        }
        ScalarField::new(&self.grid, self.green_column_slice(j)?)
    }

    fn green_column_slice(&self, j: usize) -> Result<Vec<f64>> {
        let mut f = vec![0.0; self.grid.len()];
        f[j] = 1.0 / self.grid.volumes()[j];
        self.solve_slice(&f)
    }

    /// c_Ω = min over all cell pairs of the Green kernel, so that
    /// `min v ≥ c_Ω ∫f` for every f ≥ 0. Computed once, column by column in
    /// parallel, then cached.
    pub fn green_min(&self) -> Result<f64> {
        if let Some(&c) = self.green_min.get() {
            return Ok(c);
        }
        let c = (0..self.grid.len())
            .into_par_iter()
            .map(|j| self.green_column_slice(j).map(|col| col.into_iter().fold(f64::INFINITY, f64::min)))
            .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;
        Ok(*self.green_min.get_or_init(|| c))
    }

    /// max_j ‖G(·, j)‖_q: the smallest C with ‖(I − Δ_h)⁻¹f‖_q ≤ C‖f‖₁ for
    /// all f ≥ 0 on this grid.
    pub fn l1_to_lq_constant(&self, q: f64) -> Result<f64> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::domain(format!("Lq norm needs q >= 1, got {q}")));
        }
        (0..self.grid.len())
            .into_par_iter()
            .map(|j| lp_norm_slice(self.grid.volumes(), &self.green_column_slice(j)?, q))
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, Geometry, GridSpec};

    fn solver(spec: GridSpec) -> HelmholtzSolver {
        HelmholtzSolver::new(Arc::new(build_grid(&spec).unwrap())).unwrap()
    }

    #[test]
    fn constants_are_fixed() {
        for spec in [GridSpec::interval(2.0, 7), GridSpec::rectangle(1.0, 3.0, 5, 4), GridSpec::radial(1.0, 3, 9)] {
            let h = solver(spec);
            let c = ScalarField::constant(h.grid(), 2.5);
            let v = h.solve(&c).unwrap();
            assert!(v.max_abs_diff(&c).unwrap() < 1e-13);
            assert!(h.apply(&c).unwrap().max_abs_diff(&c).unwrap() < 1e-13);
        }
    }

    #[test]
    fn cosine_eigenfunction() {
        let h = solver(GridSpec::interval(std::f64::consts::PI, 200));
        let f = ScalarField::from_fn(h.grid(), |x| 1.0 + x[0].cos());
        let v = h.solve(&f).unwrap();
        let exact = ScalarField::from_fn(h.grid(), |x| 1.0 + 0.5 * x[0].cos());
        assert!(v.max_abs_diff(&exact).unwrap() < 1e-4);
        let c = ScalarField::from_fn(h.grid(), |x| x[0].cos());
        let twice = ScalarField::from_fn(h.grid(), |x| 2.0 * x[0].cos());
        assert!(h.apply(&c).unwrap().max_abs_diff(&twice).unwrap() < 1e-4);
    }

    #[test]
    fn mean_is_preserved_and_roundtrip_holds() {
        let h = solver(GridSpec::rectangle(2.0, 1.0, 9, 6));
        let f = ScalarField::from_fn(h.grid(), |x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let v = h.solve(&f).unwrap();
        let (iv, i_f) = (h.grid().integrate(&v).unwrap(), h.grid().integrate(&f).unwrap());
        assert!((iv - i_f).abs() <= 1e-10 * i_f.abs());
        let back = h.apply(&v).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-10);
    }

    #[test]
    fn single_cell_green_kernel() {
        let grid = Grid::assemble(Geometry::Interval { length: 0.25 }, &[1]).unwrap();
        let h = HelmholtzSolver::new(Arc::new(grid)).unwrap();
        assert!((h.green_min().unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn green_min_is_positive_and_cached() {
        let h = solver(GridSpec::radial(1.0, 2, 16));
        let c = h.green_min().unwrap();
        assert!(c > 0.0);
        assert_eq!(h.green_min().unwrap(), c);
    }

    #[test]
    fn rejects_bad_tolerance_and_mismatch() {
        let g = Arc::new(build_grid(&GridSpec::interval(1.0, 5)).unwrap());
        assert!(HelmholtzSolver::with_tolerance(g.clone(), 0.0).is_err());
        let h = HelmholtzSolver::new(g).unwrap();
        let other = build_grid(&GridSpec::interval(1.0, 6)).unwrap();
        assert!(matches!(h.solve(&ScalarField::constant(&other, 1.0)), Err(Error::GridMismatch { .. })));
        assert!(h.green_column(5).is_err());
    }
}
