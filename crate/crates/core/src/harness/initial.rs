//! Initial densities described by [`InitialConfig`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::InitialConfig;
use crate::mesh::{Geometry, Grid, ScalarField};
use crate::{Error, Result};

/// Centre of the domain in grid coordinates (the origin for radial grids).
fn domain_center(geometry: Geometry) -> [f64; 2] {
    match geometry {
        Geometry::Interval { length } => [0.5 * length, 0.0],
        Geometry::Rectangle { lx, ly } => [0.5 * lx, 0.5 * ly],
        Geometry::RadialBall { .. } => [0.0, 0.0],
    }
}

fn first_axis_length(geometry: Geometry) -> f64 {
    match geometry {
        Geometry::Interval { length } => length,
        Geometry::Rectangle { lx, .. } => lx,
        Geometry::RadialBall { radius, .. } => radius,
    }
}

fn distance(geometry: Geometry, x: [f64; 2], c: [f64; 2]) -> f64 {
    match geometry {
        Geometry::Interval { .. } => (x[0] - c[0]).abs(),
        Geometry::Rectangle { .. } => (x[0] - c[0]).hypot(x[1] - c[1]),
        Geometry::RadialBall { .. } => x[0],
    }
}

/// Rescales a non-negative field to the given mass.
pub fn scale_to_mass(grid: &Grid, f: &ScalarField, mass: f64) -> Result<ScalarField> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::config(format!("initial mass must be positive, got {mass}")));
    }
    let current = grid.integrate(f)?;
    if !(current > 0.0) {
        return Err(Error::config("initial profile has no mass on this grid (width too small?)"));
    }
    f.map(|x| x * mass / current)
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("initial {name} must be positive, got {x}")))
    }
}

fn amplitude_ok(a: f64) -> Result<()> {
    if a.is_finite() && (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::config(format!("relative amplitude must lie in [0, 1] to keep u >= 0, got {a}")))
    }
}

pub fn initial_density(grid: &Grid, init: &InitialConfig) -> Result<ScalarField> {
    let geometry = grid.geometry();
    match init {
        InitialConfig::Constant { value } => {
            positive("value", *value)?;
            Ok(ScalarField::constant(grid, *value))
        }
        InitialConfig::Gaussian { center, width, mass } => {
            positive("width", *width)?;
            let mut c = domain_center(geometry);
            if !center.is_empty() {
                if center.len() != geometry.axes() {
                    return Err(Error::config(format!(
                        "gaussian center has {} coordinates, the grid has {} axes",
                        center.len(),
                        geometry.axes()
                    )));
                }
                c[..center.len()].copy_from_slice(center);
            }
            let raw = ScalarField::from_fn(grid, |x| (-(distance(geometry, x, c) / width).powi(2)).exp());
            scale_to_mass(grid, &raw, *mass)
        }
        InitialConfig::Random { mean, amplitude, seed } => {
            positive("mean", *mean)?;
            amplitude_ok(*amplitude)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let values = (0..grid.len()).map(|_| mean * (1.0 + amplitude * rng.random_range(-1.0..=1.0))).collect();
            ScalarField::new(grid, values)
        }
        InitialConfig::Annular { radius, width, mass } => {
            positive("width", *width)?;
            let c = domain_center(geometry);
            let raw = ScalarField::from_fn(grid, |x| (-((distance(geometry, x, c) - radius) / width).powi(2)).exp());
            scale_to_mass(grid, &raw, *mass)
        }
        InitialConfig::Cosine { mean, amplitude, mode } => {
            positive("mean", *mean)?;
            amplitude_ok(*amplitude)?;
            let l = first_axis_length(geometry);
            let kx = *mode as f64 * std::f64::consts::PI / l;
            Ok(ScalarField::from_fn(grid, |x| mean * (1.0 + amplitude * (kx * x[0]).cos())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, GridSpec};

    #[test]
    fn gaussian_has_requested_mass() {
        for spec in [GridSpec::interval(1.0, 40), GridSpec::rectangle(1.0, 2.0, 10, 20), GridSpec::radial(2.0, 2, 30)] {
            let grid = build_grid(&spec).unwrap();
            let init = InitialConfig::Gaussian { center: vec![], width: 0.3, mass: 2.5 };
            let u = initial_density(&grid, &init).unwrap();
            assert!((grid.integrate(&u).unwrap() - 2.5).abs() < 1e-12);
            assert!(u.min() >= 0.0);
        }
    }

    #[test]
    fn random_is_seeded() {
        let grid = build_grid(&GridSpec::rectangle(1.0, 1.0, 8, 8)).unwrap();
        let init = InitialConfig::Random { mean: 2.0, amplitude: 0.5, seed: 7 };
        let a = initial_density(&grid, &init).unwrap();
        let b = initial_density(&grid, &init).unwrap();
        assert_eq!(a, b);
        assert!(a.min() >= 1.0 && a.max() <= 3.0);
        let other = initial_density(&grid, &InitialConfig::Random { mean: 2.0, amplitude: 0.5, seed: 8 }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn rejects_negative_profiles() {
        let grid = build_grid(&GridSpec::interval(1.0, 8)).unwrap();
        assert!(initial_density(&grid, &InitialConfig::Cosine { mean: 1.0, amplitude: 1.5, mode: 1 }).is_err());
        assert!(initial_density(&grid, &InitialConfig::Constant { value: 0.0 }).is_err());
        let wrong = InitialConfig::Gaussian { center: vec![0.1, 0.2], width: 0.1, mass: 1.0 };
        assert!(initial_density(&grid, &wrong).is_err());
    }
}
