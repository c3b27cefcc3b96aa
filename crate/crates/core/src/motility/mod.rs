//! Motility functions γ and the quantities derived from them.
//!
//! Family names in scenario files (`gamma = { family = "...", ... }`):
//!
//! | family                  | γ(s)                                   | parameters            |
//! |-------------------------|----------------------------------------|-----------------------|
//! | `power`                 | s^(−k)                                 | `k`                   |
//! | `shifted_power`         | (a1 + s)^(−k1)                         | `a1`, `k1`            |
//! | `exponential`           | exp(−χ s)                              | `chi`                 |
//! | `stretched_exponential` | exp(−χ s^β)                            | `chi`, `beta`         |
//! | `log_corrected_power`   | (a1 + s)^(−k1) · log(a2 + s)^(−k2)     | `a1`, `k1`, `a2`, `k2`|
//! | `sum_of_powers`         | (a1 + s)^(−k1) + (a2 + s)^(−k2)        | `a1`, `k1`, `a2`, `k2`|
//! | `constant`              | c                                      | `c`                   |
//! | `bump`                  | exp(−((s − center)/width)²)            | `center`, `width`     |
//!
//! `bump` is not monotone; it exercises the non-monotone code paths.

mod assumptions;
mod quadrature;

pub use assumptions::AssumptionReport;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Power { k: f64 },
    ShiftedPower { a1: f64, k1: f64 },
    Exponential { chi: f64 },
    StretchedExponential { chi: f64, beta: f64 },
    LogCorrectedPower { a1: f64, k1: f64, a2: f64, k2: f64 },
    SumOfPowers { a1: f64, k1: f64, a2: f64, k2: f64 },
    Constant { c: f64 },
    Bump { center: f64, width: f64 },
}

/// Extra exponent above k1 declared for the log-corrected family: the
/// logarithm makes liminf s^k1 γ(s) = 0, while any larger k works.
const LOG_CORRECTION_MARGIN: f64 = 0.05;

impl Family {
    pub(crate) fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("motility parameter {name} must be finite and >= 0, got {x}")))
            }
        };
        let pos = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("motility parameter {name} must be finite and > 0, got {x}")))
            }
        };
        match *self {
            Family::Power { k } => nonneg("k", k),
            Family::ShiftedPower { a1, k1 } => nonneg("a1", a1).and(nonneg("k1", k1)),
            Family::Exponential { chi } => nonneg("chi", chi),
            Family::StretchedExponential { chi, beta } => nonneg("chi", chi).and(pos("beta", beta)),
            Family::LogCorrectedPower { a1, k1, a2, k2 } => {
                nonneg("a1", a1)?;
                nonneg("k1", k1)?;
                nonneg("k2", k2)?;
                if !(a2.is_finite() && a2 >= 1.0) {
                    return Err(Error::config(format!(
                        "log_corrected_power needs a2 >= 1 so log(a2 + s) > 0, got {a2}"
                    )));
                }
                Ok(())
            }
            Family::SumOfPowers { a1, k1, a2, k2 } => {
                nonneg("a1", a1).and(nonneg("k1", k1)).and(nonneg("a2", a2)).and(nonneg("k2", k2))
            }
            Family::Constant { c } => pos("c", c),
            Family::Bump { center, width } => {
                if !center.is_finite() {
                    return Err(Error::config("bump center must be finite"));
                }
                pos("width", width)
            }
        }
    }

    /// Natural (k, l) tail exponents and monotonicity.
    fn default_metadata(&self) -> (Option<f64>, Option<f64>, bool) {
        match *self {
            Family::Power { k } => (Some(k), Some(k), true),
            Family::ShiftedPower { k1, .. } => (Some(k1), Some(k1), true),
            Family::Exponential { .. } | Family::StretchedExponential { .. } => (None, None, true),
            Family::LogCorrectedPower { k1, k2, .. } => {
                let k = if k2 > 0.0 { k1 + LOG_CORRECTION_MARGIN } else { k1 };
                (Some(k), Some(k1), true)
            }
            Family::SumOfPowers { k1, k2, .. } => {
                let k = k1.min(k2);
                (Some(k), Some(k), true)
            }
            Family::Constant { .. } => (Some(0.0), Some(0.0), true),
            Family::Bump { .. } => (None, None, false),
        }
    }
}

/// A motility function with the metadata used by the bounds: the lower
/// integration limit `a` of Γ, the declared tail exponents (k, l) and the
/// declared monotonicity.
#[derive(Debug, Clone, PartialEq)]
pub struct Motility {
    family: Family,
    lower_limit: f64,
    declared_k: Option<f64>,
    declared_l: Option<f64>,
    monotone: bool,
}

impl Motility {
    /// `lower_limit` is the point a where Γ(a) = 0; it should lie in (0, v_*).
    pub fn new(family: Family, lower_limit: f64) -> Result<Self> {
        family.validate()?;
        if !(lower_limit.is_finite() && lower_limit > 0.0) {
            return Err(Error::config(format!("lower limit a must be positive, got {lower_limit}")));
        }
        let (declared_k, declared_l, monotone) = family.default_metadata();
        Ok(Motility { family, lower_limit, declared_k, declared_l, monotone })
    }

    pub fn with_lower_limit(mut self, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::config(format!("lower limit a must be positive, got {a}")));
        }
        self.lower_limit = a;
        Ok(self)
    }

    /// Override the declared tail exponents.
    pub fn with_exponents(mut self, k: Option<f64>, l: Option<f64>) -> Self {
        self.declared_k = k;
        self.declared_l = l;
        self
    }

    pub fn with_monotone(mut self, monotone: bool) -> Self {
        self.monotone = monotone;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn lower_limit(&self) -> f64 {
        self.lower_limit
    }

    pub fn declared_k(&self) -> Option<f64> {
        self.declared_k
    }

    pub fn declared_l(&self) -> Option<f64> {
        self.declared_l
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    /// γ(s) without the domain check. Callers guarantee s > 0.
    #[inline]
    pub(crate) fn eval(&self, s: f64) -> f64 {
        match self.family {
            Family::Power { k } => s.powf(-k),
            Family::ShiftedPower { a1, k1 } => (a1 + s).powf(-k1),
            Family::Exponential { chi } => (-chi * s).exp(),
            Family::StretchedExponential { chi, beta } => (-chi * s.powf(beta)).exp(),
            Family::LogCorrectedPower { a1, k1, a2, k2 } => (a1 + s).powf(-k1) * (a2 + s).ln().powf(-k2),
            Family::SumOfPowers { a1, k1, a2, k2 } => (a1 + s).powf(-k1) + (a2 + s).powf(-k2),
            Family::Constant { c } => c,
            Family::Bump { center, width } => {
                let z = (s - center) / width;
                (-z * z).exp()
            }
        }
    }

    #[inline]
    pub(crate) fn eval_prime(&self, s: f64) -> f64 {
        match self.family {
            Family::Power { k } => -k * s.powf(-k - 1.0),
            Family::ShiftedPower { a1, k1 } => -k1 * (a1 + s).powf(-k1 - 1.0),
            Family::Exponential { chi } => -chi * (-chi * s).exp(),
            Family::StretchedExponential { chi, beta } => {
                -chi * beta * s.powf(beta - 1.0) * (-chi * s.powf(beta)).exp()
            }
            Family::LogCorrectedPower { a1, k1, a2, k2 } => {
                let log = (a2 + s).ln();
                self.eval(s) * (-k1 / (a1 + s) - k2 / ((a2 + s) * log))
            }
            Family::SumOfPowers { a1, k1, a2, k2 } => -k1 * (a1 + s).powf(-k1 - 1.0) - k2 * (a2 + s).powf(-k2 - 1.0),
            Family::Constant { .. } => 0.0,
            Family::Bump { center, width } => -2.0 * (s - center) / (width * width) * self.eval(s),
        }
    }

    fn check_positive(s: f64) -> Result<()> {
        if s.is_finite() && s > 0.0 {
            Ok(())
        } else {
            Err(Error::domain(format!("motility is defined for s > 0, got {s}")))
        }
    }

    pub fn gamma(&self, s: f64) -> Result<f64> {
        Self::check_positive(s)?;
        Ok(self.eval(s))
    }

    pub fn gamma_prime(&self, s: f64) -> Result<f64> {
        Self::check_positive(s)?;
        Ok(self.eval_prime(s))
    }

    /// ∫ₐˢ γ for any s > 0 (negative when s < a).
    pub(crate) fn antiderivative(&self, s: f64) -> f64 {
        let a = self.lower_limit;
        if s == a {
            return 0.0;
        }
        let shifted_power = |shift: f64, k: f64| {
            let (x, y) = (shift + s, shift + a);
            if (k - 1.0).abs() < 1e-12 {
                (x / y).ln()
            } else {
                (x.powf(1.0 - k) - y.powf(1.0 - k)) / (1.0 - k)
            }
        };
        match self.family {
            Family::Power { k } => shifted_power(0.0, k),
            Family::ShiftedPower { a1, k1 } => shifted_power(a1, k1),
            Family::SumOfPowers { a1, k1, a2, k2 } => shifted_power(a1, k1) + shifted_power(a2, k2),
            Family::Exponential { chi } if chi > 0.0 => ((-chi * a).exp() - (-chi * s).exp()) / chi,
            Family::Exponential { .. } => s - a,
            Family::Constant { c } => c * (s - a),
            Family::StretchedExponential { .. } | Family::LogCorrectedPower { .. } | Family::Bump { .. } => {
                // In t = ln η the integrand γ(eᵗ)eᵗ is smooth across many decades.
                quadrature::integrate(
                    |t| {
                        let eta = t.exp();
                        self.eval(eta) * eta
                    },
                    a.ln(),
                    s.ln(),
                    1e-12,
                )
            }
        }
    }

    /// Γ(s) = ∫ₐˢ γ(η) dη for s ≥ a.
    pub fn big_gamma(&self, s: f64) -> Result<f64> {
        Self::check_positive(s)?;
        if s < self.lower_limit {
            return Err(Error::domain(format!("Γ(s) needs s >= a = {}, got {s}", self.lower_limit)));
        }
        Ok(self.antiderivative(s))
    }

    /// K_s = sup_{τ ≥ s} γ(τ). Exact for monotone families; otherwise the
    /// maximum over a log-spaced probe of [s, max(10³, 10³ s)] inflated by
    /// 1.01, an upper estimate only.
    pub fn tail_envelope_k(&self, s: f64) -> Result<f64> {
        Self::check_positive(s)?;
        if self.monotone {
            return Ok(self.eval(s));
        }
        let s_max = (1e3f64).max(1e3 * s);
        let decades = (s_max / s).log10();
        let points = (decades * 2000.0).ceil() as usize + 1;
        let sup =
            (0..=points).map(|i| self.eval(s * 10f64.powf(decades * i as f64 / points as f64))).fold(0.0, f64::max);
        Ok(1.01 * sup)
    }

    /// Constant C with s^l γ(s) ≤ C for all s ≥ a, probed over [a, 10⁶·max(1, a)]
    /// and inflated by 1.01. `None` without a declared l.
    pub fn tail_constant(&self) -> Option<f64> {
        let l = self.declared_l?;
        let a = self.lower_limit;
        let hi = 1e6 * a.max(1.0);
        let decades = (hi / a).log10();
        let points = (decades * 200.0).ceil() as usize;
        let sup = (0..=points)
            .map(|i| {
                let s = a * 10f64.powf(decades * i as f64 / points as f64);
                s.powf(l) * self.eval(s)
            })
            .fold(0.0, f64::max);
        Some(1.01 * sup)
    }

    /// Γ_*(s): C log(s/a) when l = 1, C (s^{1−l} − a^{1−l}) / (1 − l) otherwise,
    /// with C from [`Motility::tail_constant`].
    pub fn big_gamma_envelope(&self, s: f64) -> Result<Option<f64>> {
        let (Some(l), Some(c)) = (self.declared_l, self.tail_constant()) else {
            return Ok(None);
        };
        Self::check_positive(s)?;
        let a = self.lower_limit;
        if s < a {
            return Err(Error::domain(format!("Γ_* needs s >= a = {a}, got {s}")));
        }
        Ok(Some(if (l - 1.0).abs() < 1e-12 {
            c * (s / a).ln()
        } else {
            c * (s.powf(1.0 - l) - a.powf(1.0 - l)) / (1.0 - l)
        }))
    }

    pub fn check_assumptions(&self) -> AssumptionReport {
        assumptions::check(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(f: Family) -> Motility {
        Motility::new(f, 1.0).unwrap()
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(m(Family::Power { k: 2.0 }).gamma(1.0).unwrap(), 1.0);
        let e = m(Family::Exponential { chi: 1.0 }).gamma(0.5).unwrap();
        assert!((e - 0.606_530_659_712_633_4).abs() < 1e-15);
        let sum = m(Family::SumOfPowers { a1: 0.0, k1: 1.0, a2: 1.0, k2: 2.0 }).gamma(1.0).unwrap();
        assert!((sum - 1.25).abs() < 1e-15);
    }

    #[test]
    fn gamma_prime_examples() {
        assert_eq!(m(Family::Power { k: 2.0 }).gamma_prime(1.0).unwrap(), -2.0);
        assert_eq!(m(Family::Constant { c: 4.0 }).gamma_prime(7.0).unwrap(), 0.0);
        let g = m(Family::StretchedExponential { chi: 1.0, beta: 0.5 }).gamma_prime(4.0).unwrap();
        assert!((g + 0.25 * (-2.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn domain_errors() {
        let p = m(Family::Power { k: 1.0 });
        assert!(matches!(p.gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(p.gamma_prime(-1.0), Err(Error::Domain(_))));
        assert!(matches!(p.gamma(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(p.big_gamma(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn big_gamma_examples() {
        let p = Motility::new(Family::Power { k: 2.0 }, 0.5).unwrap();
        assert_eq!(p.big_gamma(0.5).unwrap(), 0.0);
        assert!((p.big_gamma(2.0).unwrap() - 1.5).abs() < 1e-15);
        let log = Motility::new(Family::Power { k: 1.0 }, 2.0).unwrap();
        assert!((log.big_gamma(2.0 * std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        let c = m(Family::Constant { c: 3.0 });
        assert_eq!(c.big_gamma(3.0).unwrap(), 6.0);
    }

    #[test]
    fn tail_envelope_examples() {
        assert_eq!(m(Family::Power { k: 1.0 }).tail_envelope_k(2.0).unwrap(), 0.5);
        assert_eq!(m(Family::Constant { c: 3.0 }).tail_envelope_k(123.0).unwrap(), 3.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Motility::new(Family::Power { k: -1.0 }, 1.0).is_err());
        assert!(Motility::new(Family::Constant { c: 0.0 }, 1.0).is_err());
        assert!(Motility::new(Family::LogCorrectedPower { a1: 0.0, k1: 1.0, a2: 0.5, k2: 1.0 }, 1.0).is_err());
        assert!(Motility::new(Family::StretchedExponential { chi: 1.0, beta: 0.0 }, 1.0).is_err());
        assert!(Motility::new(Family::Power { k: 1.0 }, 0.0).is_err());
    }

    #[test]
    fn config_grammar() {
        #[derive(Deserialize)]
        struct Doc {
            gamma: Family,
        }
        let d: Doc = toml::from_str(r#"gamma = { family = "power", k = 2.0 }"#).unwrap();
        assert_eq!(d.gamma, Family::Power { k: 2.0 });
        let d: Doc =
            toml::from_str(r#"gamma = { family = "log_corrected_power", a1 = 1.0, k1 = 0.5, a2 = 2.0, k2 = 1.0 }"#)
                .unwrap();
        assert_eq!(d.gamma, Family::LogCorrectedPower { a1: 1.0, k1: 0.5, a2: 2.0, k2: 1.0 });
        assert!(toml::from_str::<Doc>(r#"gamma = { family = "power", q = 2.0 }"#).is_err());
    }
}
