//! Time stepping for ∂ₜu = Δ(u γ(v)), (I − Δ)v = u.
//!
//! One step freezes γ at the current signal and solves the linear implicit
//! Euler problem for `w = γ(vⁿ) u^{n+1}`:
//!
//! ```text
//! (V / γ(vⁿ) − dt L) w = V uⁿ,    u^{n+1} = w / γ(vⁿ),
//! ```
//!
//! with `V` the cell volumes and `L = V Δ_h` the symmetric face coupling
//! matrix. The left side is a Stieltjes matrix for every dt > 0, so w ≥ 0
//! whenever uⁿ ≥ 0, and summing the rows gives Σ V u^{n+1} = Σ V uⁿ. The
//! signal is then recomputed from u^{n+1} by one elliptic solve.

mod checkpoint;
mod observers;

use serde::{Deserialize, Serialize};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use observers::{Control, GrowthDetector, Observer, Trajectory, TrajectoryRecorder};

use crate::diagnostics::DiagnosticsReport;
use crate::helmholtz::HelmholtzSolver;
use crate::linalg::{FaceSystem, SpdSolver};
use crate::mesh::{Grid, ScalarField};
use crate::motility::Motility;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ImplicitFrozenGamma,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    1.0
}
fn default_floor() -> f64 {
    1e-12
}
fn default_growth() -> f64 {
    1e6
}
fn default_record_every() -> usize {
    1
}
fn default_norms() -> Vec<f64> {
    vec![2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// γ is evaluated at max(v, floor).
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Halt once max u exceeds this multiple of its value at the start of
    /// the run.
    #[serde(default = "default_growth")]
    pub growth_factor: f64,
    /// Report rows are taken every this many steps (and at the last step).
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Exponents p of the ‖v‖_p columns in the report.
    #[serde(default = "default_norms")]
    pub norms: Vec<f64>,
    /// Optional accuracy cap dt ≤ C dx² / max γ. Off unless set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_cap: Option<f64>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: default_dt(),
            t_end: default_t_end(),
            floor: default_floor(),
            scheme: Scheme::default(),
            growth_factor: default_growth(),
            record_every: default_record_every(),
            norms: default_norms(),
            dt_cap: None,
        }
    }
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        StepperConfig { dt, t_end, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.dt) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        // t_end = 0 is accepted and yields the initial state.
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if !(self.floor.is_finite() && self.floor >= 0.0) {
            return Err(Error::config(format!("floor must be non-negative, got {}", self.floor)));
        }
        if !(self.growth_factor > 1.0) {
            return Err(Error::config(format!("growth_factor must exceed 1, got {}", self.growth_factor)));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every must be at least 1"));
        }
        if let Some(&p) = self.norms.iter().find(|p| p.is_nan() || **p < 1.0) {
            return Err(Error::config(format!("norm exponent {p} is below 1")));
        }
        if let Some(c) = self.dt_cap {
            if !positive(c) {
                return Err(Error::config(format!("dt_cap must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// (t, u, v) with v = (I − Δ_h)⁻¹u.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub(crate) t: f64,
    pub(crate) step: u64,
    pub(crate) u: ScalarField,
    pub(crate) v: ScalarField,
}

impl SimState {
    /// Reassembles a state from stored parts, recomputing nothing but
    /// checking the elliptic constraint against `h`.
    pub fn from_parts(h: &HelmholtzSolver, t: f64, step: u64, u: ScalarField, v: ScalarField) -> Result<Self> {
        h.grid().check(&u)?;
        h.grid().check(&v)?;
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Format(format!("invalid state time {t}")));
        }
        let state = SimState { t, step, u, v };
        if !state.satisfies_constraint(h) {
            let r = state.constraint_residual(h);
            return Err(Error::Format(format!("stored v violates (I - Δ)v = u: relative residual {r:e}")));
        }
        Ok(state)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    pub fn v(&self) -> &ScalarField {
        &self.v
    }

    /// ‖(I − Δ_h)v − u‖₂ / ‖u‖₂.
    pub fn constraint_residual(&self, h: &HelmholtzSolver) -> f64 {
        h.relative_residual(self.v.values(), self.u.values())
    }

    /// The elliptic constraint to 10× the solver allowance.
    pub fn satisfies_constraint(&self, h: &HelmholtzSolver) -> bool {
        h.satisfies(self.v.values(), self.u.values(), 10.0)
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        grid.integrate_slice(self.u.values())
    }
}

/// t = 0, v = (I − Δ_h)⁻¹ u_in.
pub fn init_state(h: &HelmholtzSolver, u_in: &ScalarField) -> Result<SimState> {
    h.grid().check(u_in)?;
    if let Some((cell, &x)) = u_in.values().iter().enumerate().find(|(_, x)| **x < 0.0) {
        return Err(Error::config(format!("initial density is negative ({x}) at cell {cell}")));
    }
    if h.grid().integrate(u_in)? <= 0.0 {
        return Err(Error::config("initial density vanishes identically"));
    }
    let v = h.solve(u_in)?;
    Ok(SimState { t: 0.0, step: 0, u: u_in.clone(), v })
}

/// γ(max(v, floor)) per cell; fails on non-finite or non-positive values.
pub(crate) fn frozen_gamma(m: &Motility, v: &[f64], floor: f64) -> Result<Vec<f64>> {
    v.iter()
        .enumerate()
        .map(|(cell, &x)| {
            let g = m.eval(x.max(floor));
            if g.is_finite() && g > 0.0 {
                Ok(g)
            } else {
                Err(Error::NonFinite { cell, value: g })
            }
        })
        .collect()
}

/// Time step actually taken from `s`, honouring the optional cap and the
/// end time.
fn step_size(s: &SimState, gamma: &[f64], grid: &Grid, cfg: &StepperConfig) -> f64 {
    let mut dt = cfg.dt;
    if let Some(c) = cfg.dt_cap {
        let gmax = gamma.iter().copied().fold(0.0, f64::max);
        let dx = grid.min_spacing();
        dt = dt.min(c * dx * dx / gmax);
    }
    let remaining = cfg.t_end - s.t;
    if remaining > 0.0 && remaining < dt * (1.0 + 1e-9) {
        remaining
    } else {
        dt
    }
}

fn step_with_dt(s: &SimState, h: &HelmholtzSolver, gamma: &[f64], dt: f64) -> Result<SimState> {
    let grid = h.grid();
    let vols = grid.volumes();
    let mut diag: Vec<f64> = vols.iter().zip(gamma).map(|(w, g)| w / g).collect();
    let couplings = grid
        .faces()
        .iter()
        .map(|f| {
            let c = dt * f.transmissibility();
            diag[f.lo] += c;
            diag[f.hi] += c;
            (f.lo, f.hi, c)
        })
        .collect();
    let solver = SpdSolver::new(FaceSystem { diag, couplings }, 0.1 * h.tolerance())?;
    let rhs: Vec<f64> = s.u.values().iter().zip(vols).map(|(u, w)| u * w).collect();
    let guess: Vec<f64> = s.u.values().iter().zip(gamma).map(|(u, g)| u * g).collect();
    let w = solver.solve(&rhs, Some(&guess))?;
    let mut u: Vec<f64> = w.iter().zip(gamma).map(|(w, g)| w / g).collect();
    // The row sums cancel only up to the solve's backward error, which is
    // amplified by dt·T/V on fine grids (drift ~1e−13 per step). A uniform
    // rescale by 1 + O(1e−13) restores the mass without touching signs.
    let (m0, m1) = (grid.integrate_slice(s.u.values()), grid.integrate_slice(&u));
    if m1 > 0.0 {
        let scale = m0 / m1;
        u.iter_mut().for_each(|x| *x *= scale);
    }
    if let Some((cell, &value)) = u.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::NonFinite { cell, value });
    }
    let v = h.solve_slice(&u)?;
    Ok(SimState { t: s.t + dt, step: s.step + 1, u: ScalarField::new(grid, u)?, v: ScalarField::new(grid, v)? })
}

/// One implicit step of size `cfg.dt` (or less, at the end time or under the
/// optional cap).
pub fn step(s: &SimState, m: &Motility, h: &HelmholtzSolver, cfg: &StepperConfig) -> Result<SimState> {
    cfg.validate()?;
    h.grid().check(&s.u)?;
    let gamma = frozen_gamma(m, s.v.values(), cfg.floor)?;
    let dt = if cfg.t_end > s.t { step_size(s, &gamma, h.grid(), cfg) } else { cfg.dt };
    step_with_dt(s, h, &gamma, dt)
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum HaltReason {
    Completed,
    /// max u exceeded `growth_factor` times its starting value.
    GrowthThreshold {
        ratio: f64,
    },
    /// A step produced non-finite values or the linear solve failed; the
    /// returned state is the last good one.
    StepFailure(String),
    /// An observer asked to stop.
    Observer(String),
}

impl std::fmt::Display for HaltReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HaltReason::Completed => write!(f, "completed"),
            HaltReason::GrowthThreshold { ratio } => write!(f, "growth threshold (max u ratio {ratio:.4e})"),
            HaltReason::StepFailure(msg) => write!(f, "step failure: {msg}"),
            HaltReason::Observer(msg) => write!(f, "observer halt: {msg}"),
        }
    }
}

impl HaltReason {
    pub fn is_growth(&self) -> bool {
        matches!(self, HaltReason::GrowthThreshold { .. })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: SimState,
    pub report: DiagnosticsReport,
    pub halt: HaltReason,
}

/// Runs from `u_in` until `cfg.t_end`, a growth halt, a step failure or an
/// observer halt.
pub fn run(
    h: &HelmholtzSolver,
    u_in: &ScalarField,
    m: &Motility,
    cfg: &StepperConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutcome> {
    let state = init_state(h, u_in)?;
    run_from(h, state, m, cfg, observers)
}

/// Continues a run from an arbitrary state, e.g. a loaded checkpoint. The
/// growth threshold is relative to max u of `state`.
pub fn run_from(
    h: &HelmholtzSolver,
    state: SimState,
    m: &Motility,
    cfg: &StepperConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutcome> {
    cfg.validate()?;
    h.grid().check(&state.u)?;
    let grid = h.grid().clone();
    let mut report = DiagnosticsReport::new(cfg.norms.clone());
    let mut state = state;
    if state.t >= cfg.t_end {
        report.halt = Some(HaltReason::Completed.to_string());
        return Ok(RunOutcome { state, report, halt: HaltReason::Completed });
    }
    report.record(&grid, &state)?;
    for obs in observers.iter_mut() {
        if let Control::Halt(msg) = obs.start(&state) {
            let halt = HaltReason::Observer(msg);
            report.halt = Some(halt.to_string());
            return Ok(RunOutcome { state, report, halt });
        }
    }
    let reference = state.u.max();
    let threshold = cfg.growth_factor * reference;
    let mut halt = HaltReason::Completed;
    let mut last_recorded = state.step;
    while state.t < cfg.t_end * (1.0 - 1e-12) {
        let next = match frozen_gamma(m, state.v.values(), cfg.floor).and_then(|gamma| {
            let dt = step_size(&state, &gamma, &grid, cfg);
            step_with_dt(&state, h, &gamma, dt)
        }) {
            Ok(next) => next,
            Err(e) => {
                halt = HaltReason::StepFailure(e.to_string());
                break;
            }
        };
        let mut stop = None;
        for obs in observers.iter_mut() {
            if let Control::Halt(msg) = obs.observe(&state, &next) {
                stop.get_or_insert(HaltReason::Observer(msg));
            }
        }
        let max_u = next.u.max();
        if stop.is_none() && max_u > threshold {
            stop = Some(HaltReason::GrowthThreshold { ratio: max_u / reference });
        }
        state = next;
        if (state.step - last_recorded) as usize >= cfg.record_every || stop.is_some() {
            report.record(&grid, &state)?;
            last_recorded = state.step;
        }
        if let Some(reason) = stop {
            halt = reason;
            break;
        }
    }
    if last_recorded != state.step {
        report.record(&grid, &state)?;
    }
    report.halt = Some(halt.to_string());
    Ok(RunOutcome { state, report, halt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, GridSpec};
    use crate::motility::Family;
    use std::sync::Arc;

    fn solver(spec: GridSpec) -> HelmholtzSolver {
        HelmholtzSolver::new(Arc::new(build_grid(&spec).unwrap())).unwrap()
    }

    fn power(k: f64) -> Motility {
        Motility::new(Family::Power { k }, 0.1).unwrap()
    }

    #[test]
    fn constant_state_is_steady() {
        let h = solver(GridSpec::rectangle(1.0, 1.0, 6, 5));
        let u = ScalarField::constant(h.grid(), 1.7);
        let s0 = init_state(&h, &u).unwrap();
        let s1 = step(&s0, &power(2.0), &h, &StepperConfig::new(10.0, 100.0)).unwrap();
        assert!(s1.u.max_abs_diff(&u).unwrap() < 1e-13);
        assert!(s1.v.max_abs_diff(&u).unwrap() < 1e-13);
        assert_eq!(s1.step, 1);
        assert_eq!(s1.t, 10.0);
    }

    #[test]
    fn rejects_bad_initial_data() {
        let h = solver(GridSpec::interval(1.0, 4));
        let zero = ScalarField::constant(h.grid(), 0.0);
        assert!(matches!(init_state(&h, &zero), Err(Error::Config(_))));
        let neg = ScalarField::new(h.grid(), vec![1.0, -0.1, 1.0, 1.0]).unwrap();
        assert!(matches!(init_state(&h, &neg), Err(Error::Config(_))));
    }

    #[test]
    fn mass_and_positivity_one_step() {
        let h = solver(GridSpec::radial(1.0, 3, 20));
        let u = ScalarField::from_fn(h.grid(), |x| (-30.0 * x[0] * x[0]).exp());
        let s0 = init_state(&h, &u).unwrap();
        let m0 = s0.mass(h.grid());
        let s1 = step(&s0, &power(1.0), &h, &StepperConfig::new(0.5, 1.0)).unwrap();
        assert!(s1.u.min() >= 0.0);
        assert!((s1.mass(h.grid()) - m0).abs() <= 1e-14 * m0);
        assert!(s1.satisfies_constraint(&h));
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let h = solver(GridSpec::interval(1.0, 8));
        let u = ScalarField::from_fn(h.grid(), |x| 1.0 + x[0]);
        let out = run(&h, &u, &power(1.0), &StepperConfig::new(0.1, 0.0), &mut []).unwrap();
        assert_eq!(out.state.t, 0.0);
        assert!(out.report.rows.is_empty());
        assert_eq!(out.halt, HaltReason::Completed);
    }

    #[test]
    fn last_step_lands_on_t_end() {
        let h = solver(GridSpec::interval(1.0, 8));
        let u = ScalarField::from_fn(h.grid(), |x| 1.0 + x[0]);
        let mut cfg = StepperConfig::new(0.3, 1.0);
        cfg.record_every = 2;
        let out = run(&h, &u, &power(1.0), &cfg, &mut []).unwrap();
        assert_eq!(out.state.step, 4);
        assert!((out.state.t - 1.0).abs() < 1e-15);
        let steps: Vec<u64> = out.report.rows.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 2, 4]);
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::new(0.0, 1.0).validate().is_err());
        assert!(StepperConfig::new(0.1, -1.0).validate().is_err());
        let mut cfg = StepperConfig::new(0.1, 1.0);
        cfg.norms = vec![0.5];
        assert!(cfg.validate().is_err());
    }
}
