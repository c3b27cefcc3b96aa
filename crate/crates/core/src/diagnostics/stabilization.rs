//! Exponential decay rate of ‖u(t) − ū‖∞ toward the constant state.

use super::DiagnosticsReport;
use crate::mesh::Grid;
use crate::stepper::Trajectory;

/// Deviations below this multiple of ū are treated as round-off.
pub const NOISE_FLOOR: f64 = 1e-11;
/// Decades of decay required before a rate is fitted.
pub const REQUIRED_DECADES: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Stabilization {
    AlreadyAtEquilibrium,
    NoDecay(String),
    Decay {
        /// λ in ‖u − ū‖∞ ≈ A e^{−λt}, fitted over the final decade.
        rate: f64,
        /// log-space residuals of the fit, one per sample in the window.
        residuals: Vec<f64>,
        /// (first, last) time of the fitting window.
        window: (f64, f64),
    },
}

impl std::fmt::Display for Stabilization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stabilization::AlreadyAtEquilibrium => write!(f, "already at equilibrium"),
            Stabilization::NoDecay(why) => write!(f, "no decay detected ({why})"),
            Stabilization::Decay { rate, window, .. } => {
                write!(f, "rate {rate:.6e} fitted on t in [{}, {}]", window.0, window.1)
            }
        }
    }
}

impl Stabilization {
    pub fn rate(&self) -> Option<f64> {
        match self {
            Stabilization::Decay { rate, .. } => Some(*rate),
            _ => None,
        }
    }
}

/// Fits the decay of `(t, ‖u − ū‖∞)` samples.
pub fn stabilization_rate_series(samples: &[(f64, f64)], mean: f64) -> Stabilization {
    let floor = NOISE_FLOOR * mean.abs().max(f64::MIN_POSITIVE);
    let peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    if peak <= floor {
        return Stabilization::AlreadyAtEquilibrium;
    }
    let valid: Vec<(f64, f64)> = samples.iter().copied().filter(|s| s.1 > floor).collect();
    let last = valid.last().expect("peak above floor").1;
    if peak / last < 10f64.powf(REQUIRED_DECADES) {
        return Stabilization::NoDecay(format!("only {:.2} decades resolved", (peak / last).log10()));
    }
    // Final decade: from the last sample above 10·last onwards.
    let start = valid.iter().rposition(|s| s.1 >= 10.0 * last).unwrap_or(0);
    let window = &valid[start..];
    if window.len() < 3 {
        return Stabilization::NoDecay(format!("{} samples in the final decade", window.len()));
    }
    let n = window.len() as f64;
    let (st, sy) = window.iter().fold((0.0, 0.0), |(a, b), s| (a + s.0, b + s.1.ln()));
    let (mt, my) = (st / n, sy / n);
    let (mut stt, mut sty) = (0.0, 0.0);
    for s in window {
        stt += (s.0 - mt) * (s.0 - mt);
        sty += (s.0 - mt) * (s.1.ln() - my);
    }
    let slope = sty / stt;
    let rate = -slope;
    if !(rate > 0.0) {
        return Stabilization::NoDecay(format!("fitted rate {rate:.3e}"));
    }
    let residuals = window.iter().map(|s| s.1.ln() - (my + slope * (s.0 - mt))).collect();
    Stabilization::Decay { rate, residuals, window: (window[0].0, window[window.len() - 1].0) }
}

/// Decay fit over a trajectory.
pub fn stabilization_rate(traj: &Trajectory, grid: &Grid) -> Stabilization {
    let Some(first) = traj.first() else {
        return Stabilization::NoDecay("empty trajectory".into());
    };
    let mean = first.mass(grid) / grid.measure();
    let samples: Vec<(f64, f64)> =
        traj.iter().map(|s| (s.t(), s.u().values().iter().fold(0.0f64, |m, x| m.max((x - mean).abs())))).collect();
    stabilization_rate_series(&samples, mean)
}

/// Decay fit over the report's `dev_u_inf` column.
pub fn stabilization_from_report(report: &DiagnosticsReport, grid: &Grid) -> Stabilization {
    let Some(first) = report.rows.first() else {
        return Stabilization::NoDecay("no samples".into());
    };
    let samples: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.t, r.dev_u_inf)).collect();
    stabilization_rate_series(&samples, first.mass / grid.measure())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let s: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 * 0.1, 3.0 * (-2.5 * i as f64 * 0.1).exp())).collect();
        let fit = stabilization_rate_series(&s, 1.0);
        assert!((fit.rate().unwrap() - 2.5).abs() < 1e-10);
    }

    #[test]
    fn flat_and_stalled_series() {
        let flat = vec![(0.0, 0.0), (1.0, 1e-14)];
        assert_eq!(stabilization_rate_series(&flat, 1.0), Stabilization::AlreadyAtEquilibrium);
        let stalled: Vec<(f64, f64)> = (0..50).map(|i| (i as f64, 1.0 + 0.001 * i as f64)).collect();
        assert!(matches!(stabilization_rate_series(&stalled, 1.0), Stabilization::NoDecay(_)));
    }

    #[test]
    fn noise_floor_is_ignored() {
        let mut s: Vec<(f64, f64)> = (0..60).map(|i| (i as f64 * 0.5, (-(i as f64) * 0.5).exp())).collect();
        s.extend((60..80).map(|i| (i as f64 * 0.5, 1e-13)));
        let fit = stabilization_rate_series(&s, 1.0);
        assert!((fit.rate().unwrap() - 1.0).abs() < 1e-9);
    }
}
