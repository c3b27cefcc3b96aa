//! Trajectory-wide bounds: conservation, positivity, the lower bound
//! v ≥ c_Ω ∫u^{in}, the exponential envelope for v and the L¹ → L^q cap.

use super::{DiagnosticsReport, Verdict};
use crate::helmholtz::HelmholtzSolver;
use crate::mesh::Grid;
use crate::motility::Motility;
use crate::stepper::Trajectory;
use crate::Result;

pub const DEFAULT_ENVELOPE_SLACK: f64 = 0.05;
pub const DEFAULT_CONSERVATION_TOL: f64 = 1e-10;
pub const LOWER_BOUND_SLACK: f64 = 1e-10;

/// max_t |∫u(t) − ∫u(0)| / ∫u(0) ≤ tol over the report rows.
pub fn conservation_check(report: &DiagnosticsReport, tol: f64) -> Verdict {
    let Some(first) = report.rows.first() else {
        return Verdict::not_applicable("no samples");
    };
    let (mut worst, mut at) = (0.0f64, first.t);
    for r in &report.rows {
        let dev = (r.mass - first.mass).abs() / first.mass.abs();
        if dev > worst {
            worst = dev;
            at = r.t;
        }
    }
    Verdict::from_margin(tol - worst, at, format!("max relative mass drift {worst:.3e}"))
}

/// min u ≥ 0 over the report rows.
pub fn positivity_check(report: &DiagnosticsReport) -> Verdict {
    match report.rows.iter().min_by(|a, b| a.min_u.total_cmp(&b.min_u)) {
        Some(r) => Verdict::from_margin(r.min_u, r.t, "min u"),
        None => Verdict::not_applicable("no samples"),
    }
}

fn lower_bound_margin(rows: impl Iterator<Item = (f64, f64)>, c_omega: f64, mass: f64) -> Verdict {
    let bound = c_omega * mass - LOWER_BOUND_SLACK;
    let mut worst = (f64::INFINITY, f64::NAN);
    for (t, min_v) in rows {
        if min_v - bound < worst.0 {
            worst = (min_v - bound, t);
        }
    }
    if worst.1.is_nan() {
        return Verdict::not_applicable("no samples");
    }
    Verdict::from_margin(worst.0, worst.1, format!("c_Ω = {c_omega:.6e}, ∫u_in = {mass:.6e}"))
}

/// min_x v(t) ≥ green_min · ∫u^{in} − 1e−10 at every trajectory sample.
pub fn lower_bound_check(traj: &Trajectory, h: &HelmholtzSolver) -> Result<Verdict> {
    let Some(first) = traj.first() else {
        return Ok(Verdict::not_applicable("empty trajectory"));
    };
    let mass = first.mass(h.grid());
    let c = h.green_min()?;
    Ok(lower_bound_margin(traj.iter().map(|s| (s.t(), s.v().min())), c, mass))
}

/// [`lower_bound_check`] on report rows (whose first row holds ∫u^{in}).
pub fn lower_bound_from_report(report: &DiagnosticsReport, c_omega: f64) -> Verdict {
    let Some(first) = report.rows.first() else {
        return Verdict::not_applicable("no samples");
    };
    lower_bound_margin(report.rows.iter().map(|r| (r.t, r.min_v)), c_omega, first.mass)
}

/// Pointwise v(t, x) ≤ v^{in}(x) e^{K_* t} (1 + slack), with K_* the tail
/// envelope of γ at the smallest v seen along the trajectory.
pub fn gronwall_envelope_check(traj: &Trajectory, m: &Motility, slack: f64) -> Result<Verdict> {
    let Some(first) = traj.first() else {
        return Ok(Verdict::not_applicable("empty trajectory"));
    };
    let v_min = traj.iter().map(|s| s.v().min()).fold(f64::INFINITY, f64::min);
    let k_star = m.tail_envelope_k(v_min)?;
    let v_in = first.v().values();
    let (mut worst, mut at) = (f64::INFINITY, first.t());
    for s in traj.iter() {
        let growth = (k_star * s.t()).exp() * (1.0 + slack);
        for (v, v0) in s.v().values().iter().zip(v_in) {
            let margin = v0 * growth - v;
            if margin < worst {
                worst = margin;
                at = s.t();
            }
        }
    }
    Ok(Verdict::from_margin(worst, at, format!("K_* = {k_star:.6e} at min v = {v_min:.6e}")))
}

/// sup_t ‖v(t)‖_q ≤ C_q ∫u^{in}, with C_q the grid's L¹ → L^q constant of
/// (I − Δ_h)⁻¹ on non-negative data.
pub fn lq_cap_check(traj: &Trajectory, h: &HelmholtzSolver, q: f64) -> Result<Verdict> {
    let Some(first) = traj.first() else {
        return Ok(Verdict::not_applicable("empty trajectory"));
    };
    let cap = h.l1_to_lq_constant(q)? * first.mass(h.grid());
    let (mut worst, mut at) = (f64::INFINITY, first.t());
    for s in traj.iter() {
        let margin = cap - h.grid().lp_norm(s.v(), q)?;
        if margin < worst {
            worst = margin;
            at = s.t();
        }
    }
    Ok(Verdict::from_margin(worst, at, format!("q = {q}, cap = {cap:.6e}")))
}

/// Fitted constants of the Lᵖ energy inequality
/// d/dt ‖v‖_pᵖ + λ ‖v‖_{p−k}^{p−k} ≤ C ∫(v^{p−1} Γ(v) + v^{p−1}).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrend {
    pub p: f64,
    pub lambda: f64,
    /// Smallest C making the inequality hold at every sampled interval
    /// for the fitted λ.
    pub c: f64,
    /// (t, d/dt ‖v‖_pᵖ, ‖v‖_{p−k}^{p−k}, ∫ v^{p−1}(Γ(v) + 1)).
    pub samples: Vec<(f64, f64, f64, f64)>,
}

/// Report-only monitor; the constants involved have no computable
/// continuum value.
pub fn energy_trend(traj: &Trajectory, grid: &Grid, m: &Motility, p: f64, k: f64) -> Result<EnergyTrend> {
    let integral =
        |f: &dyn Fn(f64) -> f64, v: &[f64]| -> f64 { v.iter().zip(grid.volumes()).map(|(&x, w)| f(x) * w).sum() };
    let mut samples = Vec::new();
    for pair in traj.states.windows(2) {
        let (s0, s1) = (&pair[0], &pair[1]);
        let dt = s1.t() - s0.t();
        if dt <= 0.0 {
            continue;
        }
        let v = s1.v().values();
        let e0 = integral(&|x| x.abs().powf(p), s0.v().values());
        let e1 = integral(&|x| x.abs().powf(p), v);
        let lower = integral(&|x| x.abs().powf(p - k), v);
        let rhs = integral(&|x| x.abs().powf(p - 1.0) * (m.antiderivative(x) + 1.0), v);
        samples.push((s1.t(), (e1 - e0) / dt, lower, rhs));
    }
    // Least squares for D ≈ −λ A + C B, clamped to λ ≥ 0.
    let (mut aa, mut ab, mut bb, mut da, mut db) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(_, d, a, b) in &samples {
        aa += a * a;
        ab += a * b;
        bb += b * b;
        da += d * a;
        db += d * b;
    }
    let det = aa * bb - ab * ab;
    let lambda = if det.abs() > 1e-300 { (-(da * bb - db * ab) / det).max(0.0) } else { 0.0 };
    let c = samples.iter().map(|&(_, d, a, b)| (d + lambda * a) / b).fold(0.0, f64::max);
    Ok(EnergyTrend { p, lambda, c, samples })
}
