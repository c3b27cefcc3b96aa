//! The exponent ladder p_{j+1} = ((N + 2)/N) p_j − k from
//! p₀ = kN/2 + 2(N − 1)/(N − 2), and the time-sup of ‖v‖_{p_j} along it.

use crate::mesh::Grid;
use crate::stepper::Trajectory;
use crate::{Error, Result};

pub const DEFAULT_LADDER_DEPTH: usize = 8;

/// Relative noise level below which ladder increments are treated as zero.
const LADDER_NOISE: f64 = 1e-10;

/// p₀, …, p_J.
pub fn ladder_exponents(dim: u32, k: f64, depth: usize) -> Result<Vec<f64>> {
    if dim < 3 {
        return Err(Error::domain(format!("exponent ladder needs N >= 3, got N = {dim}")));
    }
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::domain(format!("ladder exponent k must be non-negative, got {k}")));
    }
    let n = dim as f64;
    let mut p = vec![k * n / 2.0 + 2.0 * (n - 1.0) / (n - 2.0)];
    for j in 0..depth {
        p.push((n + 2.0) / n * p[j] - k);
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow {
    pub j: usize,
    pub p: f64,
    /// X_j^{1/p_j} = sup_t ‖v(t)‖_{p_j}.
    pub sup_norm: f64,
    pub sup_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderTable {
    pub rows: Vec<LadderRow>,
    /// sup_t ‖v‖∞, the limit of the ladder for a bounded trajectory.
    pub sup_max: f64,
    /// Boundedness signature: over the second half of the ladder the
    /// increments |X_{j+1}^{1/p_{j+1}} − X_j^{1/p_j}| do not grow beyond
    /// noise, and every entry is finite and at most sup_t ‖v‖∞ · max(1, |Ω|).
    /// Peaked profiles have growing increments on the first rungs.
    pub bounded: bool,
}

pub fn lp_ladder(traj: &Trajectory, grid: &Grid, dim: u32, k: f64, depth: usize) -> Result<LadderTable> {
    let ps = ladder_exponents(dim, k, depth)?;
    if traj.is_empty() {
        return Err(Error::config("lp_ladder needs a non-empty trajectory"));
    }
    let mut rows = Vec::with_capacity(ps.len());
    for (j, &p) in ps.iter().enumerate() {
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        for s in traj.iter() {
            let n = grid.lp_norm(s.v(), p)?;
            if n > best.0 {
                best = (n, s.t());
            }
        }
        rows.push(LadderRow { j, p, sup_norm: best.0, sup_time: best.1 });
    }
    let sup_max = traj.iter().map(|s| s.v().max()).fold(0.0, f64::max);
    let x: Vec<f64> = rows.iter().map(|r| r.sup_norm).collect();
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = LADDER_NOISE * scale;
    let increments: Vec<f64> = x.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let tail = &increments[increments.len() / 2..];
    let shrinking = tail.windows(2).all(|d| d[1] <= d[0] + noise);
    let cap = sup_max * grid.measure().max(1.0) * (1.0 + LADDER_NOISE);
    let bounded = shrinking && x.iter().all(|v| v.is_finite() && *v <= cap);
    Ok(LadderTable { rows, sup_max, bounded })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_k_one() {
        let p = ladder_exponents(3, 1.0, 2).unwrap();
        assert_eq!(p[0], 5.5);
        // (5/3)·(11/2) − 1 = 49/6.
        assert!((p[1] - 49.0 / 6.0).abs() < 1e-14);
        assert!((p[2] - (5.0 / 3.0 * 49.0 / 6.0 - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn low_dimension_rejected() {
        assert!(matches!(ladder_exponents(2, 1.0, 8), Err(Error::Domain(_))));
    }
}
