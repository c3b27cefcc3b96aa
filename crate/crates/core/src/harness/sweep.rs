//! Parameter sweeps at two resolutions with a finite-horizon
//! plateau/growth classification.
//!
//! Policy: split [0, t_end] into quarters and let S_q be the sup of the
//! monitored maximum over quarter q. A run is a *plateau* when
//! |S₄ − S₃| ≤ 2% of S₃, *growing* when the growth detector halted it or
//! S₂, S₃, S₄ each exceed the previous quarter by more than 20%, and
//! *undecided* otherwise. A parameter whose two resolutions disagree is
//! undecided.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{GridConfig, ScenarioConfig};
use super::initial::{initial_density, scale_to_mass};
use super::run::{manifest_text, Setup};
use crate::diagnostics::{
    conservation_check, positivity_check, DiagnosticsReport, SeriesRow, DEFAULT_CONSERVATION_TOL,
};
use crate::mesh::{build_grid, Geometry, Grid};
use crate::motility::Family;
use crate::stepper::{self, HaltReason};
use crate::{Error, Result};

pub const PLATEAU_TOLERANCE: f64 = 0.02;
pub const GROWTH_PER_QUARTER: f64 = 0.2;
/// Environment variable capping the number of sweep workers.
pub const THREADS_ENV: &str = "MLAB_THREADS";

pub const POLICY: &str = "quarters of [0, t_end]; plateau if |S4 - S3| <= 2% of S3; \
growing if the growth detector fired or each quarter sup exceeds the previous by > 20%; \
otherwise undecided; undecided when the two resolutions disagree";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Plateau,
    Growing,
    Undecided,
    Failed,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::Plateau => "plateau",
            Class::Growing => "growing",
            Class::Undecided => "undecided",
            Class::Failed => "failed",
        })
    }
}

/// Quarter sups of `(t, value)` samples over [0, t_end]; None if a quarter
/// holds no sample.
pub fn quarter_sups(samples: &[(f64, f64)], t_end: f64) -> Option<[f64; 4]> {
    let mut s = [f64::NEG_INFINITY; 4];
    for &(t, x) in samples {
        let q = ((4.0 * t / t_end).ceil() as usize).clamp(1, 4) - 1;
        s[q] = s[q].max(x);
    }
    s.iter().all(|x| x.is_finite()).then_some(s)
}

pub fn classify(samples: &[(f64, f64)], t_end: f64, halt: &HaltReason) -> Class {
    match halt {
        HaltReason::GrowthThreshold { .. } => return Class::Growing,
        HaltReason::Completed => {}
        _ => return Class::Undecided,
    }
    let Some(s) = quarter_sups(samples, t_end) else {
        return Class::Undecided;
    };
    if (s[3] - s[2]).abs() <= PLATEAU_TOLERANCE * s[2] {
        Class::Plateau
    } else if s.windows(2).all(|w| w[1] > (1.0 + GROWTH_PER_QUARTER) * w[0]) {
        Class::Growing
    } else {
        Class::Undecided
    }
}

/// Which per-row maximum a sweep monitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monitored {
    MaxV,
    MaxU,
}

impl Monitored {
    fn pick(self, r: &SeriesRow) -> f64 {
        match self {
            Monitored::MaxV => r.max_v,
            Monitored::MaxU => r.max_u,
        }
    }
}

/// One simulation of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub cells: usize,
    pub class: Class,
    pub halt: String,
    /// sup over the run of the monitored maximum.
    pub sup: f64,
    pub final_time: f64,
    /// Names of failed checks (conservation, positivity), or the error.
    pub failing: Vec<String>,
}

impl SweepRun {
    fn failed(cells: usize, e: &Error) -> Self {
        SweepRun {
            cells,
            class: Class::Failed,
            halt: format!("error: {e}"),
            sup: f64::NAN,
            final_time: f64::NAN,
            failing: vec!["run".into()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: f64,
    pub coarse: SweepRun,
    pub fine: SweepRun,
    pub class: Class,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    /// "k" or "mass".
    pub param_name: &'static str,
    pub rows: Vec<SweepRow>,
}

fn bracket_of(rows: &[SweepRow], class: impl Fn(&SweepRow) -> Class) -> Option<(f64, f64)> {
    let hi = rows.iter().filter(|r| class(r) == Class::Growing).map(|r| r.param).fold(f64::INFINITY, f64::min);
    let lo = rows
        .iter()
        .filter(|r| class(r) == Class::Plateau && r.param < hi)
        .map(|r| r.param)
        .fold(f64::NEG_INFINITY, f64::max);
    (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
}

impl SweepTable {
    /// (largest plateau parameter below the smallest growing one, smallest
    /// growing parameter) from the combined classification.
    pub fn bracket(&self) -> Option<(f64, f64)> {
        bracket_of(&self.rows, |r| r.class)
    }

    pub fn coarse_bracket(&self) -> Option<(f64, f64)> {
        bracket_of(&self.rows, |r| r.coarse.class)
    }

    pub fn fine_bracket(&self) -> Option<(f64, f64)> {
        bracket_of(&self.rows, |r| r.fine.class)
    }

    /// Whether the plateau rows form an initial segment of the sorted
    /// parameter list.
    pub fn plateau_is_initial_segment(&self) -> bool {
        let mut rows: Vec<&SweepRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.param.total_cmp(&b.param));
        let first_other = rows.iter().position(|r| r.class != Class::Plateau).unwrap_or(rows.len());
        rows[first_other..].iter().all(|r| r.class != Class::Plateau)
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(
            w,
            "{},class,coarse_cells,coarse_class,coarse_sup,coarse_halt,coarse_failing,fine_cells,fine_class,fine_sup,fine_halt,fine_failing",
            self.param_name
        )?;
        let clean = |s: &str| s.replace(',', ";");
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.param,
                r.class,
                r.coarse.cells,
                r.coarse.class,
                r.coarse.sup,
                clean(&r.coarse.halt),
                r.coarse.failing.join(";"),
                r.fine.cells,
                r.fine.class,
                r.fine.sup,
                clean(&r.fine.halt),
                r.fine.failing.join(";"),
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{:>10}  {:<10}  {:<10}  {:<10}  {:>14}  {:>14}\n",
            self.param_name, "class", "coarse", "fine", "coarse_sup", "fine_sup"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:>10}  {:<10}  {:<10}  {:<10}  {:>14.6e}  {:>14.6e}\n",
                r.param, r.class, r.coarse.class, r.fine.class, r.coarse.sup, r.fine.sup
            ));
        }
        if let Some((lo, hi)) = self.bracket() {
            s.push_str(&format!("transition bracket: [{lo}, {hi}]\n"));
        }
        s
    }

    pub fn manifest(&self, cfg: &ScenarioConfig) -> Result<String> {
        let bracket = |b: Option<(f64, f64)>| b.map_or("none".into(), |(lo, hi)| format!("[{lo}, {hi}]"));
        let extra = [
            ("policy", POLICY.to_string()),
            ("bracket", bracket(self.bracket())),
            ("coarse_bracket", bracket(self.coarse_bracket())),
            ("fine_bracket", bracket(self.fine_bracket())),
        ];
        manifest_text(cfg, "sweep finished", &extra)
    }
}

/// Worker pool honouring `MLAB_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(text) = std::env::var(THREADS_ENV) {
        let n: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::config(format!("{THREADS_ENV} must be a positive integer, got `{text}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::config(format!("cannot start worker pool: {e}")))
}

struct Job {
    param: f64,
    fine: bool,
    grid: Arc<Grid>,
    family: Family,
    mass: Option<f64>,
}

fn run_job(cfg: &ScenarioConfig, job: &Job, monitored: Monitored) -> Result<SweepRun> {
    let mut u_in = initial_density(&job.grid, &cfg.initial)?;
    if let Some(mass) = job.mass {
        u_in = scale_to_mass(&job.grid, &u_in, mass)?;
    }
    let setup = Setup::from_density(cfg, job.grid.clone(), u_in, job.family)?;
    let mut stepper_cfg = cfg.stepper.clone();
    stepper_cfg.growth_factor = cfg.growth_factor;
    let outcome = stepper::run(&setup.solver, &setup.u_in, &setup.motility, &stepper_cfg, &mut [])?;
    let samples: Vec<(f64, f64)> = outcome.report.rows.iter().map(|r| (r.t, monitored.pick(r))).collect();
    let class = classify(&samples, stepper_cfg.t_end, &outcome.halt);
    let report: &DiagnosticsReport = &outcome.report;
    let failing = [
        ("conservation", conservation_check(report, DEFAULT_CONSERVATION_TOL)),
        ("positivity", positivity_check(report)),
    ]
    .into_iter()
    .filter(|(_, v)| !v.passed())
    .map(|(n, _)| n.to_string())
    .collect();
    Ok(SweepRun {
        cells: job.grid.len(),
        class,
        halt: outcome.halt.to_string(),
        sup: samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max),
        final_time: outcome.state.t(),
        failing,
    })
}

fn combine(coarse: Class, fine: Class) -> Class {
    if coarse == fine {
        coarse
    } else if coarse == Class::Failed || fine == Class::Failed {
        Class::Failed
    } else {
        Class::Undecided
    }
}

fn sweep(
    cfg: &ScenarioConfig,
    params: &[f64],
    param_name: &'static str,
    monitored: Monitored,
    job_of: impl Fn(f64) -> (Family, Option<f64>) + Sync,
) -> Result<SweepTable> {
    let grids = [Arc::new(build_grid(&cfg.grid.spec())?), Arc::new(build_grid(&cfg.grid.refined(2).spec())?)];
    let jobs: Vec<Job> = params
        .iter()
        .flat_map(|&param| {
            let (family, mass) = job_of(param);
            grids.iter().enumerate().map(move |(i, g)| Job { param, fine: i == 1, grid: g.clone(), family, mass })
        })
        .collect();
    let pool = thread_pool()?;
    let results: Vec<SweepRun> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_job(cfg, job, monitored).unwrap_or_else(|e| SweepRun::failed(job.grid.len(), &e)))
            .collect()
    });
    let mut rows = Vec::with_capacity(params.len());
    for (pair, chunk) in jobs.chunks(2).zip(results.chunks(2)) {
        debug_assert!(!pair[0].fine && pair[1].fine);
        let (coarse, fine) = (chunk[0].clone(), chunk[1].clone());
        let class = combine(coarse.class, fine.class);
        rows.push(SweepRow { param: pair[0].param, coarse, fine, class });
    }
    Ok(SweepTable { param_name, rows })
}

/// Power-law motility s^{−k} on a radial ball, one row per k, monitoring
/// max v.
pub fn k_sweep_radial(cfg: &ScenarioConfig, ks: &[f64]) -> Result<SweepTable> {
    if !matches!(cfg.grid, GridConfig::Radial { .. }) {
        return Err(Error::config("k sweep needs a radial grid"));
    }
    if let Some(k) = ks.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
        return Err(Error::config(format!("k must be finite and >= 0, got {k}")));
    }
    sweep(cfg, ks, "k", Monitored::MaxV, |k| (Family::Power { k }, None))
}

/// Exponential motility e^{−χs} on a two-dimensional domain, one row per
/// initial mass (the configured profile rescaled), monitoring max u.
pub fn mass_sweep_2d(cfg: &ScenarioConfig, chi: f64, masses: &[f64]) -> Result<SweepTable> {
    let two_d = match cfg.grid.geometry() {
        Geometry::Rectangle { .. } => true,
        Geometry::RadialBall { dim, .. } => dim == 2,
        Geometry::Interval { .. } => false,
    };
    if !two_d {
        return Err(Error::config("mass sweep needs a rectangle or a radial disk (dim = 2)"));
    }
    if !(chi.is_finite() && chi > 0.0) {
        return Err(Error::config(format!("chi must be positive, got {chi}")));
    }
    if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::config(format!("masses must be positive, got {m}")));
    }
    sweep(cfg, masses, "mass", Monitored::MaxU, |m| (Family::Exponential { chi }, Some(m)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..=100).map(|i| (i as f64, f(i as f64))).collect()
    }

    #[test]
    fn classification_policy() {
        let done = HaltReason::Completed;
        assert_eq!(classify(&series(|_| 3.0), 100.0, &done), Class::Plateau);
        assert_eq!(classify(&series(|t| 1.0 + 10.0 * (-t).exp()), 100.0, &done), Class::Plateau);
        assert_eq!(classify(&series(|t| (0.05 * t).exp()), 100.0, &done), Class::Growing);
        assert_eq!(classify(&series(|t| 1.0 + 0.0005 * t), 100.0, &done), Class::Plateau);
        assert_eq!(classify(&series(|t| 1.0 + 0.01 * t), 100.0, &done), Class::Undecided);
        let grew = HaltReason::GrowthThreshold { ratio: 3.0 };
        assert_eq!(classify(&series(|_| 1.0), 100.0, &grew), Class::Growing);
        assert_eq!(classify(&[(0.0, 1.0)], 100.0, &done), Class::Undecided);
    }

    #[test]
    fn brackets_and_segments() {
        let run = |class| SweepRun { cells: 1, class, halt: String::new(), sup: 0.0, final_time: 0.0, failing: vec![] };
        let row = |p, c| SweepRow { param: p, coarse: run(c), fine: run(c), class: c };
        let t = SweepTable {
            param_name: "mass",
            rows: vec![
                row(1.0, Class::Plateau),
                row(2.0, Class::Plateau),
                row(3.0, Class::Undecided),
                row(4.0, Class::Growing),
            ],
        };
        assert_eq!(t.bracket(), Some((2.0, 4.0)));
        assert!(t.plateau_is_initial_segment());
        let bad = SweepTable { param_name: "k", rows: vec![row(1.0, Class::Growing), row(2.0, Class::Plateau)] };
        assert!(!bad.plateau_is_initial_segment());
        assert_eq!(bad.bracket(), None);
    }
}
