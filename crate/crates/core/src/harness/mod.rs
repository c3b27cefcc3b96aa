//! Reproducible experiments: scenario files, single runs with the standard
//! checks, parameter sweeps and convergence studies, with their artifacts.

mod config;
mod convergence;
mod initial;
mod run;
mod sweep;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use config::{
    ExperimentConfig, GammaConfig, GridConfig, InitialConfig, OutputConfig, ScenarioConfig, SCHEMA_VERSION,
};
pub use convergence::{
    convergence_series, convergence_study, ConvergenceLevel, ConvergenceSeries, ConvergenceStudy, Refinement,
};
pub use initial::{initial_density, scale_to_mass};
pub use run::{
    evaluate, load_checkpoint, run_scenario, simulate, KeyIdentityTracker, ScenarioRun, Setup, CODE_VERSION,
    GREEN_CELL_LIMIT,
};
pub use sweep::{
    classify, k_sweep_radial, mass_sweep_2d, quarter_sups, thread_pool, Class, SweepRow, SweepRun, SweepTable,
    GROWTH_PER_QUARTER, PLATEAU_TOLERANCE, POLICY, THREADS_ENV,
};

use crate::Result;

/// Writes a sweep's summary CSV and manifest into `dir`.
pub fn write_sweep(dir: &Path, cfg: &ScenarioConfig, table: &SweepTable) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("sweep.csv"))?);
    table.write_csv(&mut w)?;
    w.flush()?;
    fs::write(dir.join("manifest.txt"), table.manifest(cfg)?)?;
    Ok(())
}

/// Writes a convergence study's CSV and manifest into `dir`.
pub fn write_convergence(dir: &Path, cfg: &ScenarioConfig, study: &ConvergenceStudy) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("convergence.csv"))?);
    study.write_csv(&mut w)?;
    w.flush()?;
    let orders = study.summary().replace('\n', "; ");
    fs::write(dir.join("manifest.txt"), run::manifest_text(cfg, "convergence finished", &[("orders", orders)])?)?;
    Ok(())
}
