//! Scenario files (TOML, `schema = 1`).
//!
//! ```toml
//! schema = 1
//! name = "gaussian-2d"
//! gamma = { family = "exponential", chi = 1.0 }
//!
//! [grid]
//! geometry = "rectangle"
//! lx = 1.0
//! ly = 1.0
//! nx = 32
//! ny = 32
//!
//! [initial]
//! kind = "gaussian"
//! center = [0.5, 0.5]
//! width = 0.1
//! mass = 2.0
//!
//! [stepper]
//! dt = 0.01
//! t_end = 5.0
//!
//! [output]
//! dir = "out/gaussian-2d"
//!
//! [experiment]
//! kind = "single"
//! ```
//!
//! `gamma` takes the motility family keys (see [`crate::motility`]) plus the
//! optional `a`, `declared_k`, `declared_l` and `monotone`. When `a` is
//! absent it defaults to v_*/2 with v_* = green_min · ∫u^{in}.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mesh::{Geometry, GridSpec};
use crate::motility::{Family, Motility};
use crate::stepper::StepperConfig;
use crate::{Error, Result};

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridConfig {
    Interval { length: f64, cells: usize },
    Rectangle { lx: f64, ly: f64, nx: usize, ny: usize },
    Radial { radius: f64, dim: u32, cells: usize },
}

impl GridConfig {
    pub fn spec(&self) -> GridSpec {
        match *self {
            GridConfig::Interval { length, cells } => GridSpec::interval(length, cells),
            GridConfig::Rectangle { lx, ly, nx, ny } => GridSpec::rectangle(lx, ly, nx, ny),
            GridConfig::Radial { radius, dim, cells } => GridSpec::radial(radius, dim, cells),
        }
    }

    /// The same domain with every axis refined by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        match *self {
            GridConfig::Interval { length, cells } => GridConfig::Interval { length, cells: cells * factor },
            GridConfig::Rectangle { lx, ly, nx, ny } => {
                GridConfig::Rectangle { lx, ly, nx: nx * factor, ny: ny * factor }
            }
            GridConfig::Radial { radius, dim, cells } => GridConfig::Radial { radius, dim, cells: cells * factor },
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.spec().geometry
    }
}

/// Motility family plus the lower limit of Γ and tail metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaConfig {
    pub family: Family,
    pub a: Option<f64>,
    pub declared_k: Option<f64>,
    pub declared_l: Option<f64>,
    pub monotone: Option<bool>,
}

impl GammaConfig {
    pub fn new(family: Family) -> Self {
        GammaConfig { family, a: None, declared_k: None, declared_l: None, monotone: None }
    }

    /// Builds the motility with lower limit `a` (the configured one wins).
    pub fn motility(&self, default_a: f64) -> Result<Motility> {
        let mut m = Motility::new(self.family, self.a.unwrap_or(default_a))?;
        if self.declared_k.is_some() || self.declared_l.is_some() {
            let (k, l) = (self.declared_k.or(m.declared_k()), self.declared_l.or(m.declared_l()));
            m = m.with_exponents(k, l);
        }
        if let Some(flag) = self.monotone {
            m = m.with_monotone(flag);
        }
        Ok(m)
    }
}

const GAMMA_EXTRAS: [&str; 4] = ["a", "declared_k", "declared_l", "monotone"];

impl<'de> Deserialize<'de> for GammaConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut table = toml::Table::deserialize(d)?;
        let float = |t: &mut toml::Table, key: &str| -> std::result::Result<Option<f64>, D::Error> {
            match t.remove(key) {
                None => Ok(None),
                Some(toml::Value::Float(x)) => Ok(Some(x)),
                Some(toml::Value::Integer(i)) => Ok(Some(i as f64)),
                Some(other) => Err(D::Error::custom(format!("gamma.{key} must be a number, got {other}"))),
            }
        };
        let a = float(&mut table, "a")?;
        let declared_k = float(&mut table, "declared_k")?;
        let declared_l = float(&mut table, "declared_l")?;
        let monotone = match table.remove("monotone") {
            None => None,
            Some(toml::Value::Boolean(b)) => Some(b),
            Some(other) => return Err(D::Error::custom(format!("gamma.monotone must be a boolean, got {other}"))),
        };
        let family: Family = toml::Value::Table(table).try_into().map_err(D::Error::custom)?;
        Ok(GammaConfig { family, a, declared_k, declared_l, monotone })
    }
}

impl Serialize for GammaConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        let value = toml::Value::try_from(self.family).map_err(S::Error::custom)?;
        let toml::Value::Table(mut table) = value else {
            return Err(S::Error::custom("family did not serialize to a table"));
        };
        let values = [self.a, self.declared_k, self.declared_l];
        for (key, v) in GAMMA_EXTRAS.iter().zip(values) {
            if let Some(x) = v {
                table.insert((*key).into(), toml::Value::Float(x));
            }
        }
        if let Some(b) = self.monotone {
            table.insert("monotone".into(), toml::Value::Boolean(b));
        }
        table.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Constant {
        value: f64,
    },
    /// exp(−|x − center|²/width²) scaled to the given mass. Radial grids
    /// use only center[0] = 0 implicitly (the bump sits at the origin).
    Gaussian {
        #[serde(default)]
        center: Vec<f64>,
        width: f64,
        mass: f64,
    },
    /// mean · (1 + amplitude · ξ) with ξ uniform in [−1, 1] per cell.
    Random {
        mean: f64,
        amplitude: f64,
        seed: u64,
    },
    /// exp(−(r − radius)²/width²) scaled to the given mass; r measured from
    /// the domain centre (origin for radial grids).
    Annular {
        radius: f64,
        width: f64,
        mass: f64,
    },
    /// mean · (1 + amplitude · cos(mode π x / L)) on the first axis (radius
    /// for radial grids).
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        mode: u32,
    },
}

fn one() -> u32 {
    1
}

fn default_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Times at which u and v snapshots are written (first step at or after
    /// each time).
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Full states kept for trajectory checks every this many steps.
    #[serde(default = "default_every")]
    pub trajectory_every: usize,
}

fn default_dir() -> String {
    "out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), snapshot_times: Vec::new(), trajectory_every: 1 }
    }
}

fn default_factor() -> f64 {
    1e6
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    #[default]
    Single,
    /// Power-law sweep over k on the scenario grid and its 2× refinement.
    KSweep { ks: Vec<f64> },
    /// Exponential-motility sweep over the initial mass.
    MassSweep {
        masses: Vec<f64>,
        #[serde(default = "one_f")]
        chi: f64,
    },
    /// Self-convergence: `levels` spatial refinements (dt ∝ dx²) and
    /// `levels` dt halvings.
    Convergence { levels: usize },
}

fn one_f() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: i64,
    #[serde(default = "default_name")]
    pub name: String,
    pub gamma: GammaConfig,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    /// Multiple of the initial max u at which sweeps classify a run as
    /// growing (also used as the stepper's halt threshold in sweeps).
    #[serde(default = "default_factor")]
    pub growth_factor: f64,
}

fn default_name() -> String {
    "scenario".into()
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::config(e.message().trim()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Loads `path` and applies `key=value` overrides on dotted keys, which
    /// must already exist in the (defaulted) configuration.
    pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<Self> {
        Self::load(path)?.with_overrides(overrides)
    }

    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut value = toml::Value::try_from(self).map_err(|e| Error::config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        let cfg: ScenarioConfig = value.try_into().map_err(|e: toml::de::Error| Error::config(e.message().trim()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        self.gamma.family.validate()?;
        crate::mesh::build_grid(&self.grid.spec())?;
        self.stepper.validate()?;
        if self.output.trajectory_every == 0 {
            return Err(Error::config("output.trajectory_every must be at least 1"));
        }
        if !(self.growth_factor > 1.0) {
            return Err(Error::config(format!("growth_factor must exceed 1, got {}", self.growth_factor)));
        }
        match &self.experiment {
            ExperimentConfig::KSweep { ks } if ks.is_empty() || ks.iter().any(|k| !(*k >= 0.0)) => {
                Err(Error::config("k_sweep needs a non-empty list of k >= 0"))
            }
            ExperimentConfig::MassSweep { masses, chi } => {
                if masses.is_empty() || masses.iter().any(|m| !(*m > 0.0)) {
                    Err(Error::config("mass_sweep needs a non-empty list of positive masses"))
                } else if !(*chi > 0.0) {
                    Err(Error::config(format!("mass_sweep chi must be positive, got {chi}")))
                } else {
                    Ok(())
                }
            }
            ExperimentConfig::Convergence { levels } if *levels < 3 => {
                Err(Error::config(format!("convergence needs at least 3 levels, got {levels}")))
            }
            _ => Ok(()),
        }
    }
}

fn parse_value(text: &str) -> toml::Value {
    let text = text.trim();
    match toml::from_str::<toml::Table>(&format!("v = {text}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(text.into())),
        Err(_) => toml::Value::String(text.into()),
    }
}

fn apply_override(root: &mut toml::Value, ov: &str) -> Result<()> {
    let (key, raw) =
        ov.split_once('=').ok_or_else(|| Error::config(format!("override `{ov}` is not of the form key=value")))?;
    let key = key.trim();
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("override key `{key}`: `{}` is not a table", parts[..i].join("."))))?;
        node = table.get_mut(*part).ok_or_else(|| Error::config(format!("override key `{key}` does not exist")))?;
    }
    let mut value = parse_value(raw);
    // Integers given where floats live stay floats.
    if let (toml::Value::Float(_), toml::Value::Integer(i)) = (&*node, &value) {
        value = toml::Value::Float(*i as f64);
    }
    *node = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
schema = 1
name = "t"
gamma = { family = "power", k = 2.0 }

[grid]
geometry = "interval"
length = 1.0
cells = 16

[initial]
kind = "constant"
value = 1.0
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ScenarioConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(cfg.gamma.family, Family::Power { k: 2.0 });
        assert_eq!(cfg.stepper, StepperConfig::default());
        assert_eq!(cfg.experiment, ExperimentConfig::Single);
    }

    #[test]
    fn overrides_round_trip() {
        let cfg = ScenarioConfig::from_toml_str(BASIC).unwrap();
        let new = cfg.with_overrides(&["stepper.dt=0.5".into(), "gamma.k=1".into(), "name=other".into()]).unwrap();
        assert_eq!(new.stepper.dt, 0.5);
        assert_eq!(new.gamma.family, Family::Power { k: 1.0 });
        assert_eq!(new.name, "other");
        let echoed = ScenarioConfig::from_toml_str(&new.to_toml().unwrap()).unwrap();
        assert_eq!(echoed, new);
    }

    #[test]
    fn unknown_keys_rejected() {
        let cfg = ScenarioConfig::from_toml_str(BASIC).unwrap();
        assert!(matches!(cfg.with_overrides(&["stepper.nope=1".into()]), Err(Error::Config(_))));
        assert!(matches!(cfg.with_overrides(&["stepper".into()]), Err(Error::Config(_))));
        let bad = BASIC.replace("schema = 1", "schema = 2");
        assert!(ScenarioConfig::from_toml_str(&bad).is_err());
        let typo = BASIC.replace("cells = 16", "cels = 16");
        assert!(ScenarioConfig::from_toml_str(&typo).is_err());
    }

    #[test]
    fn gamma_extras() {
        let text = BASIC.replace(
            r#"gamma = { family = "power", k = 2.0 }"#,
            r#"gamma = { family = "bump", center = 2.0, width = 1.0, a = 0.3, monotone = false }"#,
        );
        let cfg = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.gamma.a, Some(0.3));
        let m = cfg.gamma.motility(1.0).unwrap();
        assert_eq!(m.lower_limit(), 0.3);
        assert!(!m.is_monotone());
    }
}
