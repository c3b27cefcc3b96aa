//! Single scenario runs: setup, the standard battery of checks and the
//! artifact bundle.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::{GridConfig, ScenarioConfig};
use super::initial::initial_density;
use crate::diagnostics::{
    conservation_check, gamma_bound_trajectory, gronwall_envelope_check, key_identity_residual, lower_bound_check,
    lp_ladder, lq_cap_check, positivity_check, stabilization_rate, DiagnosticsReport, Stabilization, Verdict,
    DEFAULT_CONSERVATION_TOL, DEFAULT_ENVELOPE_SLACK, DEFAULT_LADDER_DEPTH,
};
use crate::helmholtz::HelmholtzSolver;
use crate::mesh::{build_grid, write_csv, write_snapshot, Geometry, Grid, ScalarField};
use crate::motility::{Family, Motility};
use crate::stepper::{self, write_checkpoint, Control, HaltReason, Observer, SimState, Trajectory, TrajectoryRecorder};
use crate::{Error, Result};

/// Grids above this size skip the checks that need every Green kernel
/// column, and must state the lower limit `a` explicitly.
pub const GREEN_CELL_LIMIT: usize = 20_000;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a run needs, built from a scenario.
#[derive(Debug)]
pub struct Setup {
    pub grid: Arc<Grid>,
    pub solver: HelmholtzSolver,
    pub motility: Motility,
    pub u_in: ScalarField,
    /// green_min · ∫u^{in}, when computed.
    pub v_star: Option<f64>,
}

impl Setup {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        Self::with_grid(cfg, &cfg.grid)
    }

    pub fn with_grid(cfg: &ScenarioConfig, grid_cfg: &GridConfig) -> Result<Self> {
        let grid = Arc::new(build_grid(&grid_cfg.spec())?);
        let u_in = initial_density(&grid, &cfg.initial)?;
        Self::from_density(cfg, grid, u_in, cfg.gamma.family)
    }

    pub(crate) fn from_density(
        cfg: &ScenarioConfig,
        grid: Arc<Grid>,
        u_in: ScalarField,
        family: Family,
    ) -> Result<Self> {
        let solver = HelmholtzSolver::new(grid.clone())?;
        let mass = grid.integrate(&u_in)?;
        let v_star = if grid.len() <= GREEN_CELL_LIMIT { Some(solver.green_min()? * mass) } else { None };
        let default_a = match (cfg.gamma.a, v_star) {
            (Some(a), _) => a,
            (None, Some(vs)) => 0.5 * vs,
            (None, None) => {
                return Err(Error::config(format!("grids above {GREEN_CELL_LIMIT} cells need gamma.a set explicitly")))
            }
        };
        let mut gamma = cfg.gamma.clone();
        gamma.family = family;
        let motility = gamma.motility(default_a)?;
        Ok(Setup { grid, solver, motility, u_in, v_star })
    }
}

/// Largest key-identity residual over every step of a run.
pub struct KeyIdentityTracker<'a> {
    m: &'a Motility,
    h: &'a HelmholtzSolver,
    pub worst: f64,
    pub at: f64,
    pub error: Option<String>,
}

impl<'a> KeyIdentityTracker<'a> {
    pub fn new(m: &'a Motility, h: &'a HelmholtzSolver) -> Self {
        KeyIdentityTracker { m, h, worst: 0.0, at: f64::NAN, error: None }
    }

    pub fn verdict(&self) -> Verdict {
        match (&self.error, self.at.is_nan()) {
            (Some(e), _) => Verdict::not_applicable(format!("residual unavailable: {e}")),
            (None, true) => Verdict::not_applicable("no steps taken"),
            (None, false) => Verdict::info(self.worst, self.at, "max sup-norm key identity residual"),
        }
    }
}

impl Observer for KeyIdentityTracker<'_> {
    fn observe(&mut self, prev: &SimState, next: &SimState) -> Control {
        if self.error.is_none() {
            match key_identity_residual(prev, next, self.m, self.h) {
                Ok(r) if r > self.worst || self.at.is_nan() => {
                    self.worst = r;
                    self.at = next.t();
                }
                Ok(_) => {}
                Err(e) => self.error = Some(e.to_string()),
            }
        }
        Control::Continue
    }
}

/// Writes u and v snapshots at the first step at or after each requested
/// time.
struct SnapshotWriter<'a> {
    grid: &'a Grid,
    dir: PathBuf,
    times: Vec<f64>,
    next: usize,
    written: Vec<PathBuf>,
    error: Option<String>,
}

impl SnapshotWriter<'_> {
    fn write(&mut self, s: &SimState) {
        while self.next < self.times.len() && s.t() >= self.times[self.next] * (1.0 - 1e-12) {
            let i = self.next;
            self.next += 1;
            for (name, field) in [("u", s.u()), ("v", s.v())] {
                let path = self.dir.join(format!("snapshot_{i:03}_{name}.mlab"));
                let result = File::create(&path).map_err(Error::from).and_then(|f| {
                    let mut w = BufWriter::new(f);
                    write_snapshot(&mut w, self.grid, field)?;
                    w.flush().map_err(Error::from)
                });
                match result {
                    Ok(()) => self.written.push(path),
                    Err(e) => {
                        self.error.get_or_insert(e.to_string());
                    }
                }
            }
        }
    }
}

impl Observer for SnapshotWriter<'_> {
    fn start(&mut self, initial: &SimState) -> Control {
        self.write(initial);
        Control::Continue
    }

    fn observe(&mut self, _prev: &SimState, next: &SimState) -> Control {
        self.write(next);
        match &self.error {
            Some(e) => Control::Halt(format!("snapshot write failed: {e}")),
            None => Control::Continue,
        }
    }
}

/// Result of one simulated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: DiagnosticsReport,
    pub halt: HaltReason,
    pub final_state: SimState,
    pub trajectory: Trajectory,
    pub stabilization: Stabilization,
    /// Files written, in order (empty when no output directory was given).
    pub artifacts: Vec<PathBuf>,
}

impl ScenarioRun {
    pub fn failing(&self) -> Vec<String> {
        self.report.failing()
    }
}

fn radial_dim(g: Geometry) -> Option<u32> {
    match g {
        Geometry::RadialBall { dim, .. } => Some(dim),
        _ => None,
    }
}

/// Runs the scenario on its own grid and evaluates the standard checks.
/// With `out` set, the artifact bundle is written there.
pub fn run_scenario(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<ScenarioRun> {
    let setup = Setup::new(cfg)?;
    simulate(cfg, &setup, out)
}

/// [`run_scenario`] on a prepared setup.
pub fn simulate(cfg: &ScenarioConfig, setup: &Setup, out: Option<&Path>) -> Result<ScenarioRun> {
    let (h, m) = (&setup.solver, &setup.motility);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let mut recorder = TrajectoryRecorder::new(cfg.output.trajectory_every);
    let mut tracker = KeyIdentityTracker::new(m, h);
    let mut snapshots = out.map(|dir| SnapshotWriter {
        grid: &setup.grid,
        dir: dir.to_path_buf(),
        times: cfg.output.snapshot_times.clone(),
        next: 0,
        written: Vec::new(),
        error: None,
    });
    let outcome = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut recorder, &mut tracker];
        if let Some(s) = snapshots.as_mut() {
            observers.push(s);
        }
        stepper::run(h, &setup.u_in, m, &cfg.stepper, &mut observers)?
    };
    let mut trajectory = recorder.into_trajectory();
    if trajectory.last().map(|s| s.step_index()) != Some(outcome.state.step_index()) {
        trajectory.states.push(outcome.state.clone());
    }
    let mut report = outcome.report;
    evaluate(&mut report, &trajectory, setup, &outcome.halt)?;
    report.insert("key_identity", tracker.verdict());
    let stabilization = stabilization_rate(&trajectory, &setup.grid);
    let rate = stabilization.rate().unwrap_or(f64::NAN);
    report.insert("stabilization", Verdict::info(rate, outcome.state.t(), stabilization.to_string()));

    let mut run = ScenarioRun {
        report,
        halt: outcome.halt,
        final_state: outcome.state,
        trajectory,
        stabilization,
        artifacts: Vec::new(),
    };
    if let Some(dir) = out {
        let snaps = snapshots.map(|s| s.written).unwrap_or_default();
        run.artifacts = write_bundle(dir, cfg, setup, &run, snaps)?;
    }
    Ok(run)
}

/// Adds the asserted checks to `report`.
pub fn evaluate(report: &mut DiagnosticsReport, traj: &Trajectory, setup: &Setup, halt: &HaltReason) -> Result<()> {
    let (h, m) = (&setup.solver, &setup.motility);
    report.insert("conservation", conservation_check(report, DEFAULT_CONSERVATION_TOL));
    report.insert("positivity", positivity_check(report));
    let small = setup.grid.len() <= GREEN_CELL_LIMIT;
    report.insert(
        "lower_bound",
        if small {
            lower_bound_check(traj, h)?
        } else {
            Verdict::not_applicable("grid too large for the kernel minimum")
        },
    );
    report.insert("gronwall_envelope", gronwall_envelope_check(traj, m, DEFAULT_ENVELOPE_SLACK)?);
    report.insert("gamma_bound", gamma_bound_trajectory(traj, m, h)?);
    report.insert(
        "lq_cap",
        if small {
            lq_cap_check(traj, h, 2.0)?
        } else {
            Verdict::not_applicable("grid too large for the kernel norms")
        },
    );
    if let Some(last) = traj.last() {
        let allowance = 10.0 * h.residual_allowance(last.v().values(), last.u().values());
        let r: Vec<f64> = h.apply_slice(last.v().values()).iter().zip(last.u().values()).map(|(a, b)| a - b).collect();
        let ratio = crate::helmholtz::euclid(&r) / allowance;
        report.insert(
            "constraint",
            Verdict::from_margin(1.0 - ratio, last.t(), format!("residual is {ratio:.3e} of the allowance")),
        );
    }
    report.insert(
        "step",
        match halt {
            HaltReason::StepFailure(msg) => Verdict::from_margin(-1.0, traj.last().map_or(0.0, |s| s.t()), msg.clone()),
            other => Verdict::info(0.0, traj.last().map_or(0.0, |s| s.t()), other.to_string()),
        },
    );
    match (radial_dim(setup.grid.geometry()), m.declared_k()) {
        (Some(dim), Some(k)) if dim >= 3 => {
            let table = lp_ladder(traj, &setup.grid, dim, k, DEFAULT_LADDER_DEPTH)?;
            let last = table.rows.last().map_or(f64::NAN, |r| r.sup_norm);
            let word = if table.bounded { "bounded" } else { "not bounded" };
            report
                .insert("ladder", Verdict::info(last, f64::NAN, format!("{word}, sup max v = {:.6e}", table.sup_max)));
        }
        _ => report.insert("ladder", Verdict::not_applicable("needs a radial grid with N >= 3 and a declared k")),
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub(crate) fn manifest_text(cfg: &ScenarioConfig, halt: &str, extra: &[(&str, String)]) -> Result<String> {
    let mut s = String::new();
    s.push_str(&format!("mlab {CODE_VERSION}\n"));
    s.push_str(&format!("scenario: {}\n", cfg.name));
    s.push_str(&format!("halt: {halt}\n"));
    for (k, v) in extra {
        s.push_str(&format!("{k}: {v}\n"));
    }
    s.push_str("\n[config]\n");
    s.push_str(&cfg.to_toml()?);
    Ok(s)
}

fn write_bundle(
    dir: &Path,
    cfg: &ScenarioConfig,
    setup: &Setup,
    run: &ScenarioRun,
    snapshots: Vec<PathBuf>,
) -> Result<Vec<PathBuf>> {
    let mut files = snapshots;
    let csv = dir.join("trajectory.csv");
    let mut w = create(&csv)?;
    run.report.write_csv(&mut w)?;
    w.flush()?;
    files.push(csv);

    let report = dir.join("report.txt");
    fs::write(&report, run.report.summary())?;
    files.push(report);

    for (name, field) in [("final_u.csv", run.final_state.u()), ("final_v.csv", run.final_state.v())] {
        let path = dir.join(name);
        let mut w = create(&path)?;
        write_csv(&mut w, field)?;
        w.flush()?;
        files.push(path);
    }

    let ck = dir.join("checkpoint.mlck");
    let mut w = create(&ck)?;
    write_checkpoint(&mut w, &setup.solver, &run.final_state)?;
    w.flush()?;
    files.push(ck);

    let extra = [
        ("grid", setup.grid.tag().to_string()),
        ("lower_limit_a", format!("{}", setup.motility.lower_limit())),
        ("v_star", setup.v_star.map_or("not computed".into(), |v| format!("{v}"))),
        ("failing", if run.failing().is_empty() { "none".into() } else { run.failing().join(", ") }),
    ];
    let manifest = dir.join("manifest.txt");
    fs::write(&manifest, manifest_text(cfg, &run.halt.to_string(), &extra)?)?;
    files.push(manifest);
    Ok(files)
}

/// Loads the checkpoint written by a previous run of `cfg`.
pub fn load_checkpoint(cfg: &ScenarioConfig, path: &Path) -> Result<(Setup, SimState)> {
    let setup = Setup::new(cfg)?;
    let mut r = std::io::BufReader::new(File::open(path)?);
    let state = stepper::read_checkpoint(&mut r, &setup.solver)?;
    Ok((setup, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::Status;

    fn constant_cfg() -> ScenarioConfig {
        ScenarioConfig::from_toml_str(
            r#"
schema = 1
gamma = { family = "power", k = 2.0 }
[grid]
geometry = "interval"
length = 1.0
cells = 16
[initial]
kind = "constant"
value = 1.0
[stepper]
dt = 0.01
t_end = 0.1
"#,
        )
        .unwrap()
    }

    #[test]
    fn constant_scenario_passes_and_is_flat() {
        let run = run_scenario(&constant_cfg(), None).unwrap();
        assert!(run.failing().is_empty(), "{}", run.report.summary());
        assert_eq!(run.halt, HaltReason::Completed);
        assert!(run.report.rows.iter().all(|r| r.dev_u_inf < 1e-13));
        assert_eq!(run.report.verdicts["conservation"].status, Status::Pass);
    }

    #[test]
    fn bundle_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = constant_cfg();
        cfg.output.snapshot_times = vec![0.0, 0.05];
        let run = run_scenario(&cfg, Some(dir.path())).unwrap();
        for name in ["trajectory.csv", "report.txt", "manifest.txt", "checkpoint.mlck", "snapshot_001_v.mlab"] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        assert_eq!(run.artifacts.len(), 4 + 6);
        let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.contains("halt: completed"));
    }
}
