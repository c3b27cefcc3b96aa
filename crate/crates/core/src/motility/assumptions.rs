use super::Motility;

/// Sampled evidence for the structural assumptions on γ.
///
/// * `a0_holds`: γ positive and finite at every probe, K_s finite.
/// * `a1_holds`: no probe with γ′ > 1e−12.
/// * `a2_holds`: declared k ≥ l ≥ 0, s^k γ stays bounded away from zero and
///   s^l γ stays bounded over the tail probes s ∈ [10³, 10⁶].
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub a0_holds: bool,
    pub a1_holds: bool,
    pub a2_holds: bool,
    /// Whether the declared monotone flag agrees with `a1_holds`.
    pub monotone_flag_consistent: bool,
    /// (s, s^k γ(s), s^l γ(s)) over the probe set; NaN where no exponent is
    /// declared.
    pub tail_products: Vec<(f64, f64, f64)>,
    /// (s, K_s) at every decade of the probe range.
    pub k_table: Vec<(f64, f64)>,
}

const PROBE_LO_EXP: i32 = -3;
const PROBE_HI_EXP: i32 = 6;
const PER_DECADE: usize = 20;
const TAIL_START: f64 = 1e3;
const A1_TOLERANCE: f64 = 1e-12;
/// s^k γ over the last tail decade must stay above this fraction of its
/// maximum over the whole tail window.
const LOWER_TAIL_RATIO: f64 = 1e-2;
/// s^l γ over the last tail decade may not exceed this multiple of its
/// maximum over the first tail decade.
const UPPER_TAIL_RATIO: f64 = 10.0;

fn probes() -> Vec<f64> {
    let decades = (PROBE_HI_EXP - PROBE_LO_EXP) as usize;
    (0..=decades * PER_DECADE).map(|i| 10f64.powf(PROBE_LO_EXP as f64 + i as f64 / PER_DECADE as f64)).collect()
}

pub(super) fn check(m: &Motility) -> AssumptionReport {
    let s = probes();
    let gamma: Vec<f64> = s.iter().map(|&x| m.eval(x)).collect();
    let gamma_prime: Vec<f64> = s.iter().map(|&x| m.eval_prime(x)).collect();

    let k_table: Vec<(f64, f64)> = (PROBE_LO_EXP..=PROBE_HI_EXP)
        .map(|e| {
            let x = 10f64.powi(e);
            (x, m.tail_envelope_k(x).unwrap_or(f64::NAN))
        })
        .collect();
    let a0_holds =
        gamma.iter().all(|g| g.is_finite() && *g > 0.0) && k_table.iter().all(|(_, k)| k.is_finite() && *k > 0.0);
    let a1_holds = gamma_prime.iter().all(|&d| d.is_finite() && d <= A1_TOLERANCE);

    let (k, l) = (m.declared_k(), m.declared_l());
    let tail_products: Vec<(f64, f64, f64)> = s
        .iter()
        .zip(&gamma)
        .map(|(&x, &g)| (x, k.map_or(f64::NAN, |k| x.powf(k) * g), l.map_or(f64::NAN, |l| x.powf(l) * g)))
        .collect();

    let a2_holds = match (k, l) {
        (Some(k), Some(l)) if k >= l && l >= 0.0 => {
            let tail: Vec<&(f64, f64, f64)> = tail_products.iter().filter(|p| p.0 >= TAIL_START).collect();
            let last_decade_start = 10f64.powi(PROBE_HI_EXP - 1);
            let first_decade_end = TAIL_START * 10.0;
            let max_of = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
            let min_of = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);

            let lower_tail_max = max_of(&mut tail.iter().map(|p| p.1));
            let lower_last_min = min_of(&mut tail.iter().filter(|p| p.0 >= last_decade_start).map(|p| p.1));
            let lower_ok = lower_last_min.is_finite()
                && lower_last_min > 0.0
                && lower_last_min >= LOWER_TAIL_RATIO * lower_tail_max;

            let upper_first_max = max_of(&mut tail.iter().filter(|p| p.0 <= first_decade_end).map(|p| p.2));
            let upper_last_max = max_of(&mut tail.iter().filter(|p| p.0 >= last_decade_start).map(|p| p.2));
            let upper_ok = upper_last_max.is_finite() && upper_last_max <= UPPER_TAIL_RATIO * upper_first_max;
            lower_ok && upper_ok
        }
        _ => false,
    };

    AssumptionReport {
        a0_holds,
        a1_holds,
        a2_holds,
        monotone_flag_consistent: m.is_monotone() == a1_holds,
        tail_products,
        k_table,
    }
}

#[cfg(test)]
mod tests {
    use crate::motility::{Family, Motility};

    #[test]
    fn power_law_satisfies_everything() {
        let r = Motility::new(Family::Power { k: 2.0 }, 0.1).unwrap().check_assumptions();
        assert!(r.a0_holds && r.a1_holds && r.a2_holds && r.monotone_flag_consistent);
    }

    #[test]
    fn exponential_fails_tail_lower_bound() {
        for k in [0.0, 1.0, 5.0, 50.0] {
            let m = Motility::new(Family::Exponential { chi: 1.0 }, 0.1).unwrap().with_exponents(Some(k), Some(0.0));
            let r = m.check_assumptions();
            assert!(r.a1_holds);
            assert!(!r.a2_holds, "k = {k}");
        }
    }

    #[test]
    fn bump_is_not_monotone() {
        let m = Motility::new(Family::Bump { center: 2.0, width: 1.0 }, 0.1).unwrap();
        let r = m.check_assumptions();
        assert!(!r.a1_holds);
        assert!(r.monotone_flag_consistent);
        // Declaring it monotone is flagged as inconsistent.
        assert!(!m.with_monotone(true).check_assumptions().monotone_flag_consistent);
    }

    #[test]
    fn overstated_l_is_caught() {
        let m = Motility::new(Family::Power { k: 1.0 }, 0.1).unwrap().with_exponents(Some(2.0), Some(2.0));
        // s^2 · s^{-1} grows without bound.
        assert!(!m.check_assumptions().a2_holds);
    }

    #[test]
    fn other_families() {
        let sum = Motility::new(Family::SumOfPowers { a1: 0.0, k1: 1.0, a2: 1.0, k2: 2.0 }, 0.1).unwrap();
        assert!(sum.check_assumptions().a2_holds);
        let log = Motility::new(Family::LogCorrectedPower { a1: 1.0, k1: 1.0, a2: 2.0, k2: 1.0 }, 0.1).unwrap();
        let r = log.check_assumptions();
        assert!(r.a1_holds && r.a2_holds);
        let c = Motility::new(Family::Constant { c: 2.0 }, 0.1).unwrap();
        assert!(c.check_assumptions().a2_holds);
        let stretched = Motility::new(Family::StretchedExponential { chi: 1.0, beta: 0.5 }, 0.1).unwrap();
        assert!(!stretched.check_assumptions().a2_holds);
    }
}
