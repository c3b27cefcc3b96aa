//! Self-convergence studies: refine dx (with dt ∝ dx²) or halve dt, compare
//! consecutive final densities and report observed orders.

use std::io::Write;
use std::sync::Arc;

use super::config::ScenarioConfig;
use super::run::Setup;
use crate::mesh::{build_grid, Grid, ScalarField};
use crate::stepper::{self, HaltReason, StepperConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    /// Cells doubled per axis and dt divided by four at every level.
    Space,
    /// dt halved at every level on the scenario grid.
    Time,
}

impl Refinement {
    pub fn label(self) -> &'static str {
        match self {
            Refinement::Space => "space",
            Refinement::Time => "time",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLevel {
    pub level: usize,
    pub cells: usize,
    pub dt: f64,
    /// L² distance between this level's final u and the next level's,
    /// measured on the coarser grid (NaN on the last level).
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    pub refinement: Refinement,
    pub levels: Vec<ConvergenceLevel>,
    /// log₂(d_l / d_{l+1}) for consecutive differences; the order in dt for
    /// [`Refinement::Time`] and in dx for [`Refinement::Space`].
    pub orders: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub space: ConvergenceSeries,
    pub time: ConvergenceSeries,
}

impl ConvergenceStudy {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "refinement,level,cells,dt,difference,order")?;
        for s in [&self.space, &self.time] {
            for l in &s.levels {
                let order = s.orders.get(l.level).copied().unwrap_or(f64::NAN);
                writeln!(w, "{},{},{},{},{},{}", s.refinement.label(), l.level, l.cells, l.dt, l.difference, order)?;
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let fmt = |s: &ConvergenceSeries| s.orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(", ");
        format!("space orders (dx): {}\ntime orders (dt): {}\n", fmt(&self.space), fmt(&self.time))
    }
}

fn final_density(cfg: &ScenarioConfig, grid: Arc<Grid>, stepper_cfg: &StepperConfig) -> Result<ScalarField> {
    let u_in = super::initial::initial_density(&grid, &cfg.initial)?;
    let setup = Setup::from_density(cfg, grid, u_in, cfg.gamma.family)?;
    let out = stepper::run(&setup.solver, &setup.u_in, &setup.motility, stepper_cfg, &mut [])?;
    if out.halt != HaltReason::Completed {
        return Err(Error::config(format!("convergence run did not complete: {}", out.halt)));
    }
    Ok(out.state.u().clone())
}

fn l2_distance(grid: &Grid, a: &ScalarField, b: &ScalarField) -> Result<f64> {
    let d = a.zip_with(b, |x, y| x - y)?;
    grid.lp_norm(&d, 2.0)
}

fn orders(levels: &[ConvergenceLevel]) -> Vec<f64> {
    levels
        .windows(2)
        .filter(|w| !w[1].difference.is_nan())
        .map(|w| (w[0].difference / w[1].difference).log2())
        .collect()
}

pub fn convergence_series(cfg: &ScenarioConfig, levels: usize, refinement: Refinement) -> Result<ConvergenceSeries> {
    if levels < 3 {
        return Err(Error::config(format!("convergence needs at least 3 levels, got {levels}")));
    }
    let mut grids = Vec::with_capacity(levels);
    let mut finals = Vec::with_capacity(levels);
    let mut dts = Vec::with_capacity(levels);
    for l in 0..levels {
        let (grid_cfg, dt) = match refinement {
            Refinement::Space => (cfg.grid.refined(1 << l), cfg.stepper.dt / 4f64.powi(l as i32)),
            Refinement::Time => (cfg.grid.clone(), cfg.stepper.dt / 2f64.powi(l as i32)),
        };
        let grid = Arc::new(build_grid(&grid_cfg.spec())?);
        let mut sc = cfg.stepper.clone();
        sc.dt = dt;
        sc.dt_cap = None;
        sc.record_every = usize::MAX;
        finals.push(final_density(cfg, grid.clone(), &sc)?);
        grids.push(grid);
        dts.push(dt);
    }
    let mut out = Vec::with_capacity(levels);
    for l in 0..levels {
        let difference = if l + 1 < levels {
            let next = match refinement {
                Refinement::Space => grids[l].coarsen(&grids[l + 1], &finals[l + 1], 2)?,
                Refinement::Time => finals[l + 1].clone(),
            };
            l2_distance(&grids[l], &finals[l], &next)?
        } else {
            f64::NAN
        };
        out.push(ConvergenceLevel { level: l, cells: grids[l].len(), dt: dts[l], difference });
    }
    let orders = orders(&out);
    Ok(ConvergenceSeries { refinement, levels: out, orders })
}

pub fn convergence_study(cfg: &ScenarioConfig, levels: usize) -> Result<ConvergenceStudy> {
    Ok(ConvergenceStudy {
        space: convergence_series(cfg, levels, Refinement::Space)?,
        time: convergence_series(cfg, levels, Refinement::Time)?,
    })
}
