//! Worst case of the recursive inequality
//! η_{j+1} ≤ C0 δ_{j+1}^b max{C1^{δ_{j+1}}, η_j^ρ}, δ_{j+1} = ρ δ_j + c,
//! evaluated in log space so that η_j itself never overflows.

use crate::{Error, Result};

pub const DEFAULT_MOSER_DEPTH: usize = 60;
/// Window and tolerance of the stabilization test on the running max.
pub const MOSER_WINDOW: usize = 10;
pub const MOSER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoserParams {
    pub rho: f64,
    pub b: f64,
    pub c: f64,
    pub c0: f64,
    pub c1: f64,
    pub delta0: f64,
}

impl MoserParams {
    /// Validates ρ > 1, b ≥ 0, C0 ≥ 1, C1 ≥ 1, δ0 + c/(ρ − 1) > 0 and, so
    /// that δ_j^b is real for every j ≥ 1, δ1 = ρδ0 + c > 0.
    pub fn new(rho: f64, b: f64, c: f64, c0: f64, c1: f64, delta0: f64) -> Result<Self> {
        let p = MoserParams { rho, b, c, c0, c1, delta0 };
        if [rho, b, c, c0, c1, delta0].iter().any(|x| !x.is_finite()) {
            return Err(Error::config("Moser parameters must be finite"));
        }
        if rho <= 1.0 {
            return Err(Error::config(format!("rho must exceed 1, got {rho}")));
        }
        if b < 0.0 {
            return Err(Error::config(format!("b must be non-negative, got {b}")));
        }
        if c0 < 1.0 || c1 < 1.0 {
            return Err(Error::config(format!("C0 and C1 must be at least 1, got {c0} and {c1}")));
        }
        if delta0 + c / (rho - 1.0) <= 0.0 {
            return Err(Error::config(format!(
                "delta0 + c/(rho - 1) must be positive, got {}",
                delta0 + c / (rho - 1.0)
            )));
        }
        if rho * delta0 + c <= 0.0 {
            return Err(Error::config(format!("delta1 = rho*delta0 + c must be positive, got {}", rho * delta0 + c)));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoserOutcome {
    /// max_j η_j^{1/δ_j} over the terms with δ_j > 0.
    pub bound: f64,
    /// Running max after each term (NaN until the first admissible term).
    pub running_max: Vec<f64>,
    /// Relative growth of the running max over the last window.
    pub last_increment: f64,
    pub stabilized: bool,
}

/// (δ_j, ln η_j) for j = 0..=depth.
pub fn moser_log_sequence(p: &MoserParams, depth: usize) -> Vec<(f64, f64)> {
    let (ln_c0, ln_c1) = (p.c0.ln(), p.c1.ln());
    let mut out = Vec::with_capacity(depth + 1);
    let (mut delta, mut log_eta) = (p.delta0, p.delta0 * ln_c1);
    out.push((delta, log_eta));
    for _ in 0..depth {
        delta = p.rho * delta + p.c;
        log_eta = ln_c0 + p.b * delta.ln() + (delta * ln_c1).max(p.rho * log_eta);
        out.push((delta, log_eta));
    }
    out
}

pub fn moser_lemma_check(p: &MoserParams, depth: usize) -> Result<MoserOutcome> {
    let p = MoserParams::new(p.rho, p.b, p.c, p.c0, p.c1, p.delta0)?;
    if depth < MOSER_WINDOW {
        return Err(Error::config(format!("need at least {MOSER_WINDOW} terms, got {depth}")));
    }
    let mut best = f64::NEG_INFINITY;
    let running_max: Vec<f64> = moser_log_sequence(&p, depth)
        .into_iter()
        .map(|(delta, log_eta)| {
            if delta > 0.0 {
                best = best.max(log_eta / delta);
            }
            if best.is_finite() {
                best.exp()
            } else {
                f64::NAN
            }
        })
        .collect();
    let last = running_max[depth];
    let earlier = running_max[depth - MOSER_WINDOW];
    let last_increment = (last - earlier) / earlier;
    let stabilized = last.is_finite() && last_increment.abs() < MOSER_TOLERANCE;
    Ok(MoserOutcome { bound: last, running_max, last_increment, stabilized })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_sequence() {
        let p = MoserParams::new(2.0, 0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        let out = moser_lemma_check(&p, 60).unwrap();
        assert_eq!(out.bound, 1.0);
        assert!(out.stabilized);
    }

    #[test]
    fn constraint_violations_rejected() {
        assert!(MoserParams::new(2.0, 0.0, -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(MoserParams::new(1.0, 0.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(MoserParams::new(2.0, -0.5, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(MoserParams::new(2.0, 0.0, 0.0, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn ladder_parameters_stabilize() {
        let p = MoserParams::new(5.0 / 3.0, 1.0, -1.0, 2.0, 2.0, 5.5).unwrap();
        let out = moser_lemma_check(&p, DEFAULT_MOSER_DEPTH).unwrap();
        assert!(out.stabilized, "increment {}", out.last_increment);
        assert!(out.bound > 2.0 && out.bound.is_finite());
    }
}
