//! The nonlocal source φ = (I − Δ)⁻¹[u γ(v)], the key identity
//! ∂ₜv + u γ(v) = φ, and the pointwise bound φ ≤ Γ(v) + a γ(a).

use super::{Verdict, DEFAULT_FLOOR};
use crate::helmholtz::HelmholtzSolver;
use crate::mesh::ScalarField;
use crate::motility::Motility;
use crate::stepper::{frozen_gamma, SimState, Trajectory};
use crate::{Error, Result};

/// φ at one time slice together with the flux u γ(v) it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalSource {
    pub values: ScalarField,
    pub flux: ScalarField,
}

impl NonlocalSource {
    /// |∫φ − ∫uγ(v)| / ∫uγ(v).
    pub fn mass_defect(&self, h: &HelmholtzSolver) -> Result<f64> {
        let a = h.grid().integrate(&self.values)?;
        let b = h.grid().integrate(&self.flux)?;
        Ok(if b == 0.0 { a.abs() } else { (a - b).abs() / b.abs() })
    }
}

fn flux(state: &SimState, m: &Motility) -> Result<Vec<f64>> {
    let g = frozen_gamma(m, state.v().values(), DEFAULT_FLOOR)?;
    Ok(state.u().values().iter().zip(g).map(|(u, g)| u * g).collect())
}

pub fn nonlocal_source(state: &SimState, m: &Motility, h: &HelmholtzSolver) -> Result<NonlocalSource> {
    h.grid().check(state.u())?;
    let f = flux(state, m)?;
    let phi = h.solve_slice(&f)?;
    Ok(NonlocalSource { values: ScalarField::new(h.grid(), phi)?, flux: ScalarField::new(h.grid(), f)? })
}

fn time_step(prev: &SimState, next: &SimState) -> Result<f64> {
    let dt = next.t() - prev.t();
    if !(dt > 0.0) || next.step_index() <= prev.step_index() {
        return Err(Error::config(format!(
            "states at t = {} (step {}) and t = {} (step {}) are not in order",
            prev.t(),
            prev.step_index(),
            next.t(),
            next.step_index()
        )));
    }
    Ok(dt)
}

fn identity_residual(v0: &[f64], v1: &[f64], g0: &[f64], g1: &[f64], dt: f64, h: &HelmholtzSolver) -> Result<f64> {
    let mid: Vec<f64> = g0.iter().zip(g1).map(|(a, b)| 0.5 * (a + b)).collect();
    let phi = h.solve_slice(&mid)?;
    Ok((0..v0.len()).map(|i| ((v1[i] - v0[i]) / dt + mid[i] - phi[i]).abs()).fold(0.0, f64::max))
}

/// ‖(v^{n+1} − vⁿ)/dt + (uγ(v))^{n+½} − φ^{n+½}‖∞ with midpoint averages.
pub fn key_identity_residual(prev: &SimState, next: &SimState, m: &Motility, h: &HelmholtzSolver) -> Result<f64> {
    h.grid().check(prev.u())?;
    h.grid().check(next.u())?;
    let dt = time_step(prev, next)?;
    identity_residual(prev.v().values(), next.v().values(), &flux(prev, m)?, &flux(next, m)?, dt, h)
}

/// Same residual with u reconstructed from v as (I − Δ_h)v instead of
/// read from the state.
pub fn key_identity_residual_via_apply(
    prev: &SimState,
    next: &SimState,
    m: &Motility,
    h: &HelmholtzSolver,
) -> Result<f64> {
    h.grid().check(prev.v())?;
    h.grid().check(next.v())?;
    let dt = time_step(prev, next)?;
    let recon = |s: &SimState| -> Result<Vec<f64>> {
        let u = h.apply_slice(s.v().values());
        let g = frozen_gamma(m, s.v().values(), DEFAULT_FLOOR)?;
        Ok(u.iter().zip(g).map(|(u, g)| u * g).collect())
    };
    identity_residual(prev.v().values(), next.v().values(), &recon(prev)?, &recon(next)?, dt, h)
}

/// Largest key-identity residual over consecutive trajectory samples, as an
/// info verdict.
pub fn key_identity_monitor(traj: &Trajectory, m: &Motility, h: &HelmholtzSolver) -> Result<Verdict> {
    let mut worst = (0.0, f64::NAN);
    for pair in traj.states.windows(2) {
        if pair[1].step_index() != pair[0].step_index() + 1 {
            continue;
        }
        let r = key_identity_residual(&pair[0], &pair[1], m, h)?;
        if r > worst.0 || worst.1.is_nan() {
            worst = (r, pair[1].t());
        }
    }
    if worst.1.is_nan() {
        return Ok(Verdict::not_applicable("no consecutive steps recorded"));
    }
    Ok(Verdict::info(worst.0, worst.1, "max sup-norm key identity residual"))
}

/// Pointwise φ ≤ Γ(v) + aγ(a) + tol and φ ≥ −tol with
/// tol = 1e−8 + 0.01·aγ(a). Only defined for monotone γ.
pub fn gamma_bound_check(state: &SimState, m: &Motility, h: &HelmholtzSolver) -> Result<Verdict> {
    if !m.is_monotone() {
        return Ok(Verdict::not_applicable("motility is not monotone"));
    }
    let a = m.lower_limit();
    let aga = a * m.eval(a);
    let tol = 1e-8 + 0.01 * aga;
    let phi = nonlocal_source(state, m, h)?;
    let mut worst = f64::INFINITY;
    for (&p, &v) in phi.values.values().iter().zip(state.v().values()) {
        let upper = m.antiderivative(v) + aga + tol - p;
        worst = worst.min(upper).min(p + tol);
    }
    Ok(Verdict::from_margin(worst, state.t(), format!("a = {a}, tol = {tol:.3e}")))
}

/// [`gamma_bound_check`] over every trajectory sample.
pub fn gamma_bound_trajectory(traj: &Trajectory, m: &Motility, h: &HelmholtzSolver) -> Result<Verdict> {
    let mut out: Option<Verdict> = None;
    for s in traj.iter() {
        let v = gamma_bound_check(s, m, h)?;
        out = Some(match out {
            None => v,
            Some(prev) => prev.worst(v),
        });
    }
    Ok(out.unwrap_or_else(|| Verdict::not_applicable("empty trajectory")))
}

/// ‖φ − Γ(v) − (I − Δ_h)⁻¹[f(v, ∇v) − Γ(v)]‖∞ with
/// f(s, ξ) = sγ(s) + γ′(s)|ξ|² and the discrete central gradient. Zero in
/// the continuum; O(dx²) on smooth slices.
pub fn nonlocal_decomposition_defect(state: &SimState, m: &Motility, h: &HelmholtzSolver) -> Result<f64> {
    let phi = nonlocal_source(state, m, h)?;
    let grad2 = h.grid().gradient_squared(state.v())?;
    let v = state.v().values();
    let big: Vec<f64> = v.iter().map(|&s| m.antiderivative(s)).collect();
    let rhs: Vec<f64> =
        (0..v.len()).map(|i| v[i] * m.eval(v[i]) + m.eval_prime(v[i]) * grad2.values()[i] - big[i]).collect();
    let corr = h.solve_slice(&rhs)?;
    Ok((0..v.len()).map(|i| (phi.values.values()[i] - big[i] - corr[i]).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, GridSpec};
    use crate::motility::Family;
    use crate::stepper::{init_state, step, StepperConfig};
    use std::sync::Arc;

    fn setup() -> (HelmholtzSolver, Motility) {
        let h = HelmholtzSolver::new(Arc::new(build_grid(&GridSpec::interval(1.0, 32)).unwrap())).unwrap();
        (h, Motility::new(Family::Power { k: 2.0 }, 0.5).unwrap())
    }

    #[test]
    fn constant_state_identity_and_bound() {
        let (h, m) = setup();
        let s0 = init_state(&h, &ScalarField::constant(h.grid(), 2.0)).unwrap();
        let s1 = step(&s0, &m, &h, &StepperConfig::new(0.1, 1.0)).unwrap();
        assert!(key_identity_residual(&s0, &s1, &m, &h).unwrap() < 1e-12);
        let phi = nonlocal_source(&s0, &m, &h).unwrap();
        assert!(phi.values.max_abs_diff(&ScalarField::constant(h.grid(), 0.5)).unwrap() < 1e-13);
        assert!(gamma_bound_check(&s0, &m, &h).unwrap().passed());
    }

    #[test]
    fn non_monotone_is_not_applicable() {
        let (h, _) = setup();
        let m = Motility::new(Family::Bump { center: 2.0, width: 1.0 }, 0.5).unwrap();
        let s0 = init_state(&h, &ScalarField::constant(h.grid(), 2.0)).unwrap();
        assert_eq!(gamma_bound_check(&s0, &m, &h).unwrap().status, super::super::Status::NotApplicable);
    }

    #[test]
    fn out_of_order_states_rejected() {
        let (h, m) = setup();
        let s0 = init_state(&h, &ScalarField::constant(h.grid(), 2.0)).unwrap();
        assert!(key_identity_residual(&s0, &s0, &m, &h).is_err());
    }
}
