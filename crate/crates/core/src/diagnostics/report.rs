use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::mesh::{lp_norm_slice, Grid};
use crate::stepper::SimState;
use crate::Result;

/// Scalars monitored at one time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub step: u64,
    pub mass: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    /// ‖u − ū‖∞ with ū = ∫u / |Ω|.
    pub dev_u_inf: f64,
    /// Largest face difference quotient of v.
    pub grad_v_inf: f64,
    /// ‖v‖_p for each configured p.
    pub v_norms: Vec<f64>,
}

impl SeriesRow {
    pub fn sample(grid: &Grid, state: &SimState, norms: &[f64]) -> Result<Self> {
        let (u, v) = (state.u(), state.v());
        let mass = grid.integrate(u)?;
        let mean = mass / grid.measure();
        Ok(SeriesRow {
            t: state.t(),
            step: state.step_index(),
            mass,
            min_u: u.min(),
            max_u: u.max(),
            min_v: v.min(),
            max_v: v.max(),
            dev_u_inf: u.values().iter().fold(0.0, |m, x| m.max((x - mean).abs())),
            grad_v_inf: grid.gradient_sup(v)?,
            v_norms: norms.iter().map(|&p| lp_norm_slice(grid.volumes(), v.values(), p)).collect::<Result<_>>()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Precondition not met (e.g. a check reserved for monotone γ).
    NotApplicable,
    /// Reported, not asserted.
    Info,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::NotApplicable => "n/a",
            Status::Info => "info",
        })
    }
}

/// Outcome of one check. Margins are `bound − observed`: negative means the
/// inequality is violated.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: Status,
    pub worst_margin: f64,
    pub worst_time: f64,
    pub detail: String,
}

impl Verdict {
    pub fn from_margin(worst_margin: f64, worst_time: f64, detail: impl Into<String>) -> Self {
        let status = if worst_margin >= 0.0 { Status::Pass } else { Status::Fail };
        Verdict { status, worst_margin, worst_time, detail: detail.into() }
    }

    pub fn not_applicable(detail: impl Into<String>) -> Self {
        Verdict { status: Status::NotApplicable, worst_margin: f64::NAN, worst_time: f64::NAN, detail: detail.into() }
    }

    pub fn info(value: f64, time: f64, detail: impl Into<String>) -> Self {
        Verdict { status: Status::Info, worst_margin: value, worst_time: time, detail: detail.into() }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    /// Merges the same check run at two resolutions: it fails only if both
    /// fail. Margin and time are reported from the finer run.
    pub fn combine_resolutions(coarse: &Verdict, fine: &Verdict) -> Verdict {
        let status = match (coarse.status, fine.status) {
            (Status::Fail, Status::Fail) => Status::Fail,
            (Status::Fail, _) | (_, Status::Fail) => Status::Pass,
            (a, _) => a,
        };
        let detail = if coarse.status != fine.status {
            format!("{} (coarse: {}, fine: {})", fine.detail, coarse.status, fine.status)
        } else {
            fine.detail.clone()
        };
        Verdict { status, worst_margin: fine.worst_margin, worst_time: fine.worst_time, detail }
    }

    /// The worse of two verdicts for the same check on different slices.
    pub fn worst(self, other: Verdict) -> Verdict {
        match (self.status, other.status) {
            (Status::NotApplicable, _) => other,
            (_, Status::NotApplicable) => self,
            _ if other.worst_margin < self.worst_margin => other,
            _ => self,
        }
    }
}

/// Time series and per-check verdicts of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsReport {
    pub norms: Vec<f64>,
    pub rows: Vec<SeriesRow>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub halt: Option<String>,
}

impl DiagnosticsReport {
    pub fn new(norms: Vec<f64>) -> Self {
        DiagnosticsReport { norms, ..Default::default() }
    }

    pub fn record(&mut self, grid: &Grid, state: &SimState) -> Result<()> {
        let row = SeriesRow::sample(grid, state, &self.norms)?;
        self.rows.push(row);
        Ok(())
    }

    pub fn insert(&mut self, name: impl Into<String>, verdict: Verdict) {
        self.verdicts.insert(name.into(), verdict);
    }

    /// Names of failed checks, sorted.
    pub fn failing(&self) -> Vec<String> {
        self.verdicts.iter().filter(|(_, v)| v.status == Status::Fail).map(|(k, _)| k.clone()).collect()
    }

    fn norm_label(p: f64) -> String {
        if p.is_infinite() {
            "v_Linf".into()
        } else {
            format!("v_L{p}")
        }
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "t,step,mass,min_u,max_u,min_v,max_v,dev_u_inf,grad_v_inf")?;
        for &p in &self.norms {
            write!(w, ",{}", Self::norm_label(p))?;
        }
        writeln!(w)?;
        for r in &self.rows {
            write!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.t, r.step, r.mass, r.min_u, r.max_u, r.min_v, r.max_v, r.dev_u_inf, r.grad_v_inf
            )?;
            for x in &r.v_norms {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Plain-text block: halt reason, then one line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "halt: {}", self.halt.as_deref().unwrap_or("not run"));
        let _ = writeln!(s, "samples: {}", self.rows.len());
        let width = self.verdicts.keys().map(String::len).max().unwrap_or(5).max(5);
        let _ =
            writeln!(s, "{:<width$}  {:<6}  {:>14}  {:>12}  detail", "check", "status", "worst_margin", "worst_time");
        for (name, v) in &self.verdicts {
            let _ = writeln!(
                s,
                "{:<width$}  {:<6}  {:>14.6e}  {:>12.6}  {}",
                name, v.status, v.worst_margin, v.worst_time, v.detail
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_needs_two_failures() {
        let pass = Verdict::from_margin(1.0, 0.0, "");
        let fail = Verdict::from_margin(-1.0, 2.0, "");
        assert_eq!(Verdict::combine_resolutions(&fail, &pass).status, Status::Pass);
        assert_eq!(Verdict::combine_resolutions(&pass, &fail).status, Status::Pass);
        assert_eq!(Verdict::combine_resolutions(&fail, &fail).status, Status::Fail);
        let na = Verdict::not_applicable("x");
        assert_eq!(Verdict::combine_resolutions(&na, &na).status, Status::NotApplicable);
    }

    #[test]
    fn worst_keeps_smallest_margin() {
        let a = Verdict::from_margin(0.5, 1.0, "a");
        let b = Verdict::from_margin(-0.1, 2.0, "b");
        let w = a.worst(b);
        assert_eq!(w.detail, "b");
        assert_eq!(w.status, Status::Fail);
    }

    #[test]
    fn csv_header_and_failing_list() {
        let mut r = DiagnosticsReport::new(vec![2.0, f64::INFINITY]);
        r.insert("b", Verdict::from_margin(-1.0, 0.0, ""));
        r.insert("a", Verdict::from_margin(-1.0, 0.0, ""));
        r.insert("c", Verdict::from_margin(1.0, 0.0, ""));
        assert_eq!(r.failing(), vec!["a".to_string(), "b".to_string()]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,step,mass,min_u,max_u,min_v,max_v,dev_u_inf,grad_v_inf,v_L2,v_Linf\n"
        );
        assert!(r.summary().contains("FAIL"));
    }
}
