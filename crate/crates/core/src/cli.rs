//! The `mlab` command line.
//!
//! Exit codes: 0 when every asserted diagnostic passes, 1 when one fails
//! (the failing check names go to standard error), 2 on configuration
//! errors (missing or malformed scenario files, bad overrides, invalid
//! parameters).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{moser_lemma_check, MoserParams, Verdict, DEFAULT_MOSER_DEPTH};
use crate::harness::{
    convergence_study, k_sweep_radial, mass_sweep_2d, run_scenario, write_convergence, write_sweep, Class,
    ExperimentConfig, ScenarioConfig, ScenarioRun, SweepTable,
};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTIC: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mlab",
    version,
    about = "Simulation and verification laboratory for chemotaxis with signal-dependent motility"
)]
pub struct Cli {
    /// Print only errors and failing checks.
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    /// Print per-check details and the files written.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario file (TOML, schema = 1).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Override a configuration key, e.g. `--set stepper.dt=0.01`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (defaults to `output.dir` of the scenario).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenario's experiment and write its artifacts.
    Run(ScenarioArgs),
    /// Run a single scenario at its resolution and at twice it, and gate on
    /// the combined verdicts.
    Check(ScenarioArgs),
    /// Power-law sweep over k on a radial grid.
    SweepK {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated k values (defaults to the scenario's list).
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<f64>>,
    },
    /// Exponential-motility sweep over the initial mass on a 2D domain.
    SweepMass {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated masses (defaults to the scenario's list).
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
        /// χ in γ(s) = exp(−χs) (defaults to the scenario's value, or 1).
        #[arg(long)]
        chi: Option<f64>,
    },
    /// Self-convergence study in dx and in dt.
    Converge {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Number of refinement levels (at least 3).
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Evaluate the recursive Moser-type inequality and report its bound.
    #[command(allow_negative_numbers = true)]
    Moser {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        delta0: f64,
        #[arg(long)]
        b: f64,
        #[arg(long = "C0")]
        c0: f64,
        #[arg(long = "C1")]
        c1: f64,
        /// Number of recurrence terms.
        #[arg(long, default_value_t = DEFAULT_MOSER_DEPTH)]
        depth: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Verbosity {
    Quiet,
    Normal,
    Verbose,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    level: Verbosity,
}

impl Io<'_> {
    fn say(&mut self, level: Verbosity, text: &str) {
        if self.level >= level {
            let _ = write!(self.out, "{text}");
        }
    }

    fn fail(&mut self, text: &str) {
        let _ = writeln!(self.err, "{text}");
    }
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::GridMismatch { .. } => EXIT_CONFIG,
        _ => EXIT_DIAGNOSTIC,
    }
}

fn load(args: &ScenarioArgs) -> Result<(ScenarioConfig, PathBuf), Error> {
    let cfg = ScenarioConfig::load_with_overrides(&args.config, &args.overrides)?;
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok((cfg, dir))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let level = if cli.quiet {
        Verbosity::Quiet
    } else if cli.verbose {
        Verbosity::Verbose
    } else {
        Verbosity::Normal
    };
    let mut io = Io { out, err, level };
    match execute(&cli.command, &mut io) {
        Ok(code) => code,
        Err(e) => {
            io.fail(&format!("error: {e}"));
            exit_for(&e)
        }
    }
}

fn execute(cmd: &Command, io: &mut Io<'_>) -> Result<i32, Error> {
    match cmd {
        Command::Run(args) => {
            let (cfg, dir) = load(args)?;
            match &cfg.experiment {
                ExperimentConfig::Single => single(&cfg, &dir, io),
                ExperimentConfig::KSweep { ks } => k_sweep(&cfg, ks, &dir, io),
                ExperimentConfig::MassSweep { masses, chi } => mass_sweep(&cfg, *chi, masses, &dir, io),
                ExperimentConfig::Convergence { levels } => converge(&cfg, *levels, &dir, io),
            }
        }
        Command::Check(args) => {
            let (cfg, dir) = load(args)?;
            check(&cfg, &dir, io)
        }
        Command::SweepK { scenario, ks } => {
            let (cfg, dir) = load(scenario)?;
            let ks = match (ks, &cfg.experiment) {
                (Some(ks), _) => ks.clone(),
                (None, ExperimentConfig::KSweep { ks }) => ks.clone(),
                _ => return Err(Error::config("no k values: pass --ks or use a k_sweep scenario")),
            };
            k_sweep(&cfg, &ks, &dir, io)
        }
        Command::SweepMass { scenario, masses, chi } => {
            let (cfg, dir) = load(scenario)?;
            let (list, scenario_chi) = match &cfg.experiment {
                ExperimentConfig::MassSweep { masses, chi } => (Some(masses.clone()), *chi),
                _ => (None, 1.0),
            };
            let masses = masses
                .clone()
                .or(list)
                .ok_or_else(|| Error::config("no masses: pass --masses or use a mass_sweep scenario"))?;
            mass_sweep(&cfg, chi.unwrap_or(scenario_chi), &masses, &dir, io)
        }
        Command::Converge { scenario, levels } => {
            let (cfg, dir) = load(scenario)?;
            let levels = match (levels, &cfg.experiment) {
                (Some(l), _) => *l,
                (None, ExperimentConfig::Convergence { levels }) => *levels,
                _ => 3,
            };
            converge(&cfg, levels, &dir, io)
        }
        Command::Moser { rho, c, delta0, b, c0, c1, depth } => {
            let params = MoserParams::new(*rho, *b, *c, *c0, *c1, *delta0)?;
            let outcome = moser_lemma_check(&params, *depth)?;
            io.say(Verbosity::Quiet, &format!("bound: {:.12e}\n", outcome.bound));
            io.say(Verbosity::Normal, &format!("stabilized: {}\n", outcome.stabilized));
            io.say(Verbosity::Verbose, &format!("last relative increment: {:.3e}\n", outcome.last_increment));
            if outcome.stabilized {
                Ok(EXIT_OK)
            } else {
                io.fail("failing checks: moser_stabilization");
                Ok(EXIT_DIAGNOSTIC)
            }
        }
    }
}

fn report_failures(io: &mut Io<'_>, failing: &[String]) -> i32 {
    if failing.is_empty() {
        EXIT_OK
    } else {
        io.fail(&format!("failing checks: {}", failing.join(", ")));
        EXIT_DIAGNOSTIC
    }
}

fn describe(io: &mut Io<'_>, run: &ScenarioRun) {
    io.say(Verbosity::Normal, &run.report.summary());
    for path in &run.artifacts {
        io.say(Verbosity::Verbose, &format!("wrote {}\n", path.display()));
    }
}

fn single(cfg: &ScenarioConfig, dir: &Path, io: &mut Io<'_>) -> Result<i32, Error> {
    let run = run_scenario(cfg, Some(dir))?;
    describe(io, &run);
    Ok(report_failures(io, &run.failing()))
}

fn check(cfg: &ScenarioConfig, dir: &Path, io: &mut Io<'_>) -> Result<i32, Error> {
    let coarse = run_scenario(cfg, Some(&dir.join("coarse")))?;
    let mut fine_cfg = cfg.clone();
    fine_cfg.grid = cfg.grid.refined(2);
    let fine = run_scenario(&fine_cfg, Some(&dir.join("fine")))?;
    let mut combined = coarse.report.clone();
    combined.verdicts.clear();
    for (name, c) in &coarse.report.verdicts {
        let v = match fine.report.verdicts.get(name) {
            Some(f) => Verdict::combine_resolutions(c, f),
            None => c.clone(),
        };
        combined.insert(name.clone(), v);
    }
    combined.halt = Some(format!("coarse: {}; fine: {}", coarse.halt, fine.halt));
    io.say(Verbosity::Verbose, "coarse run:\n");
    io.say(Verbosity::Verbose, &coarse.report.summary());
    io.say(Verbosity::Verbose, "fine run:\n");
    io.say(Verbosity::Verbose, &fine.report.summary());
    io.say(Verbosity::Normal, &combined.summary());
    Ok(report_failures(io, &combined.failing()))
}

fn finish_sweep(cfg: &ScenarioConfig, table: &SweepTable, dir: &Path, io: &mut Io<'_>) -> Result<i32, Error> {
    write_sweep(dir, cfg, table)?;
    io.say(Verbosity::Normal, &table.summary());
    io.say(Verbosity::Verbose, &format!("wrote {}\n", dir.join("sweep.csv").display()));
    let mut failing = Vec::new();
    for r in &table.rows {
        for (label, run) in [("coarse", &r.coarse), ("fine", &r.fine)] {
            if run.class == Class::Failed {
                failing.push(format!("{}={} {label}: {}", table.param_name, r.param, run.halt));
            }
            for name in &run.failing {
                failing.push(format!("{}={} {label}: {name}", table.param_name, r.param));
            }
        }
    }
    Ok(report_failures(io, &failing))
}

fn k_sweep(cfg: &ScenarioConfig, ks: &[f64], dir: &Path, io: &mut Io<'_>) -> Result<i32, Error> {
    let table = k_sweep_radial(cfg, ks)?;
    finish_sweep(cfg, &table, dir, io)
}

fn mass_sweep(cfg: &ScenarioConfig, chi: f64, masses: &[f64], dir: &Path, io: &mut Io<'_>) -> Result<i32, Error> {
    let table = mass_sweep_2d(cfg, chi, masses)?;
    finish_sweep(cfg, &table, dir, io)
}

fn converge(cfg: &ScenarioConfig, levels: usize, dir: &Path, io: &mut Io<'_>) -> Result<i32, Error> {
    let study = convergence_study(cfg, levels)?;
    write_convergence(dir, cfg, &study)?;
    io.say(Verbosity::Normal, &study.summary());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli(std::iter::once("mlab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn moser_prints_bound() {
        let (code, out, _) =
            call(&["moser", "--rho", "1.6667", "--c", "-1", "--delta0", "5.5", "--b", "1", "--C0", "2", "--C1", "2"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.starts_with("bound: "));
    }

    #[test]
    fn bad_invocations_are_config_errors() {
        assert_eq!(call(&["run", "--config", "/nonexistent/missing.toml"]).0, EXIT_CONFIG);
        assert_eq!(
            call(&["moser", "--rho", "0.5", "--c", "0", "--delta0", "1", "--b", "0", "--C0", "1", "--C1", "1"]).0,
            EXIT_CONFIG
        );
        assert_eq!(call(&["frobnicate"]).0, EXIT_CONFIG);
    }

    #[test]
    fn help_lists_subcommands() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        for name in ["run", "check", "sweep-k", "sweep-mass", "converge", "moser"] {
            assert!(out.contains(name), "{name} missing from help");
        }
    }
}
