use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ScalarField;
use crate::{Error, Result};

/// Shape of the physical domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Interval {
        length: f64,
    },
    Rectangle {
        lx: f64,
        ly: f64,
    },
    /// Ball of the given radius in ℝᴺ, resolved in the radial coordinate only.
    RadialBall {
        radius: f64,
        dim: u32,
    },
}

impl Geometry {
    /// Spatial dimension N of the physical domain.
    pub fn spatial_dim(&self) -> u32 {
        match *self {
            Geometry::Interval { .. } => 1,
            Geometry::Rectangle { .. } => 2,
            Geometry::RadialBall { dim, .. } => dim,
        }
    }

    /// Number of resolved axes (1 for intervals and radial balls).
    pub fn axes(&self) -> usize {
        match self {
            Geometry::Rectangle { .. } => 2,
            _ => 1,
        }
    }
}

/// Geometry plus resolution: input of [`build_grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub geometry: Geometry,
    pub cells: Vec<usize>,
}

impl GridSpec {
    pub fn interval(length: f64, cells: usize) -> Self {
        GridSpec { geometry: Geometry::Interval { length }, cells: vec![cells] }
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        GridSpec { geometry: Geometry::Rectangle { lx, ly }, cells: vec![nx, ny] }
    }

    pub fn radial(radius: f64, dim: u32, cells: usize) -> Self {
        GridSpec { geometry: Geometry::RadialBall { radius, dim }, cells: vec![cells] }
    }

    /// The same domain with every axis refined by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        GridSpec { geometry: self.geometry, cells: self.cells.iter().map(|n| n * factor).collect() }
    }
}

/// Identity of a grid: fields carry it and operations reject foreign fields.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTag {
    geometry: Geometry,
    cells: [usize; 2],
}

impl fmt::Display for GridTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.geometry {
            Geometry::Interval { length } => write!(f, "interval(L={length}, n={})", self.cells[0]),
            Geometry::Rectangle { lx, ly } => {
                write!(f, "rectangle({lx}x{ly}, {}x{})", self.cells[0], self.cells[1])
            }
            Geometry::RadialBall { radius, dim } => {
                write!(f, "radial(R={radius}, N={dim}, n={})", self.cells[0])
            }
        }
    }
}

/// Interior face between two cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub lo: usize,
    pub hi: usize,
    /// Face measure (including the angular constant for radial grids).
    pub area: f64,
    /// Distance between the two cell centres.
    pub distance: f64,
}

impl Face {
    #[inline]
    pub fn transmissibility(&self) -> f64 {
        self.area / self.distance
    }
}

/// Cell-centred finite-volume grid with zero-flux boundary.
///
/// Rectangle cells are numbered row-major, `index = iy * nx + ix`. Boundary
/// faces carry no flux and are not stored; the discrete Laplacian is
///
/// ```text
/// (Δ_h f)_i = (1 / V_i) Σ_{faces (i,j)} (A_ij / d_ij) (f_j − f_i),
/// ```
///
/// which has zero row sums and is symmetric under the volume-weighted inner
/// product.
#[derive(Debug, Clone)]
pub struct Grid {
    geometry: Geometry,
    cells: [usize; 2],
    spacing: [f64; 2],
    volumes: Vec<f64>,
    centers: Vec<[f64; 2]>,
    faces: Vec<Face>,
}

/// Measure of the unit sphere S^{N−1} ⊂ ℝᴺ, 2π^{N/2} / Γ(N/2).
pub fn unit_sphere_area(dim: u32) -> f64 {
    // Γ(N/2) by the recurrence Γ(x + 1) = xΓ(x) from Γ(1) = 1 or Γ(1/2) = √π.
    let mut half_gamma = if dim.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut x = if dim.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < dim as f64 / 2.0 {
        half_gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(dim as f64 / 2.0) / half_gamma
}

/// Build a grid from geometry and resolution.
pub fn build_grid(spec: &GridSpec) -> Result<Grid> {
    let axes = spec.geometry.axes();
    if spec.cells.len() != axes {
        return Err(Error::config(format!("{axes} resolution value(s) required, got {}", spec.cells.len())));
    }
    if let Some(n) = spec.cells.iter().find(|&&n| n < 3) {
        return Err(Error::config(format!("at least 3 cells per axis required, got {n}")));
    }
    Grid::assemble(spec.geometry, &spec.cells)
}

impl Grid {
    /// Assembly without the minimum-resolution policy of [`build_grid`].
    pub(crate) fn assemble(geometry: Geometry, cells: &[usize]) -> Result<Grid> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be positive and finite, got {x}")))
            }
        };
        if cells.contains(&0) {
            return Err(Error::config("resolution must be positive"));
        }
        match geometry {
            Geometry::Interval { length } => {
                positive("length", length)?;
                let n = cells[0];
                let dx = length / n as f64;
                let centers = (0..n).map(|i| [(i as f64 + 0.5) * dx, 0.0]).collect();
                let faces =
                    (0..n.saturating_sub(1)).map(|i| Face { lo: i, hi: i + 1, area: 1.0, distance: dx }).collect();
                Ok(Grid { geometry, cells: [n, 1], spacing: [dx, 0.0], volumes: vec![dx; n], centers, faces })
            }
            Geometry::Rectangle { lx, ly } => {
                positive("lx", lx)?;
                positive("ly", ly)?;
                let (nx, ny) = (cells[0], cells[1]);
                let (dx, dy) = (lx / nx as f64, ly / ny as f64);
                let mut centers = Vec::with_capacity(nx * ny);
                let mut faces = Vec::with_capacity(2 * nx * ny);
                for iy in 0..ny {
                    for ix in 0..nx {
                        let i = iy * nx + ix;
                        centers.push([(ix as f64 + 0.5) * dx, (iy as f64 + 0.5) * dy]);
                        if ix + 1 < nx {
                            faces.push(Face { lo: i, hi: i + 1, area: dy, distance: dx });
                        }
                        if iy + 1 < ny {
                            faces.push(Face { lo: i, hi: i + nx, area: dx, distance: dy });
                        }
                    }
                }
                Ok(Grid {
                    geometry,
                    cells: [nx, ny],
                    spacing: [dx, dy],
                    volumes: vec![dx * dy; nx * ny],
                    centers,
                    faces,
                })
            }
            Geometry::RadialBall { radius, dim } => {
                positive("radius", radius)?;
                if dim < 1 {
                    return Err(Error::config("radial dimension must be at least 1"));
                }
                let n = cells[0];
                let dr = radius / n as f64;
                let omega = unit_sphere_area(dim);
                let nd = dim as f64;
                let edge = |i: usize| {
                    // The outer edge is pinned to the radius so the total
                    // measure telescopes to the exact ball volume.
                    if i == n {
                        radius
                    } else {
                        i as f64 * dr
                    }
                };
                let volumes =
                    (0..n).map(|i| omega * (edge(i + 1).powi(dim as i32) - edge(i).powi(dim as i32)) / nd).collect();
                let centers = (0..n).map(|i| [(i as f64 + 0.5) * dr, 0.0]).collect();
                let faces = (0..n.saturating_sub(1))
                    .map(|i| Face { lo: i, hi: i + 1, area: omega * edge(i + 1).powi(dim as i32 - 1), distance: dr })
                    .collect();
                Ok(Grid { geometry, cells: [n, 1], spacing: [dr, 0.0], volumes, centers, faces })
            }
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn tag(&self) -> GridTag {
        GridTag { geometry: self.geometry, cells: self.cells }
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    /// Cells per resolved axis.
    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.geometry.axes()]
    }

    /// Spacing per resolved axis.
    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.geometry.axes()]
    }

    /// Smallest spacing over the resolved axes.
    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Cell centres; the second coordinate is zero on one-axis grids. On
    /// radial grids the first coordinate is the radius.
    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// |Ω| = Σ cell volumes.
    pub fn measure(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub(crate) fn check(&self, field: &ScalarField) -> Result<()> {
        let tag = self.tag();
        if *field.tag() != tag {
            return Err(Error::GridMismatch { expected: tag.to_string(), found: field.tag().to_string() });
        }
        Ok(())
    }

    /// Raw Laplacian on slices; `out` is overwritten.
    pub(crate) fn laplacian_into(&self, f: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for face in &self.faces {
            let flux = face.transmissibility() * (f[face.hi] - f[face.lo]);
            out[face.lo] += flux;
            out[face.hi] -= flux;
        }
        for (o, v) in out.iter_mut().zip(&self.volumes) {
            *o /= v;
        }
    }

    /// Second-order zero-flux Laplacian in flux form.
    pub fn apply_laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        let mut out = vec![0.0; self.len()];
        self.laplacian_into(f.values(), &mut out);
        ScalarField::new(self, out)
    }

    /// ∫_Ω f = Σ f_i V_i.
    pub fn integrate(&self, f: &ScalarField) -> Result<f64> {
        self.check(f)?;
        Ok(self.integrate_slice(f.values()))
    }

    pub(crate) fn integrate_slice(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.volumes).map(|(a, v)| a * v).sum()
    }

    /// Volume-weighted inner product ⟨f, g⟩ = Σ f_i g_i V_i.
    pub fn inner(&self, f: &ScalarField, g: &ScalarField) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(f.values().iter().zip(g.values()).zip(&self.volumes).map(|((a, b), v)| a * b * v).sum())
    }

    /// ‖f‖_p for p ≥ 1; `f64::INFINITY` selects the max norm.
    pub fn lp_norm(&self, f: &ScalarField, p: f64) -> Result<f64> {
        self.check(f)?;
        lp_norm_slice(&self.volumes, f.values(), p)
    }

    /// Largest face difference quotient |f_j − f_i| / d_ij: a W^{1,∞} proxy.
    pub fn gradient_sup(&self, f: &ScalarField) -> Result<f64> {
        self.check(f)?;
        let v = f.values();
        Ok(self.faces.iter().map(|face| (v[face.hi] - v[face.lo]).abs() / face.distance).fold(0.0, f64::max))
    }

    /// Cell-centred |∇f|² from central face differences; boundary cells use
    /// the reflected ghost value, so their one missing face contributes 0.
    pub fn gradient_squared(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check(f)?;
        let v = f.values();
        let axes = self.geometry.axes();
        // Per cell and axis: sum of the two face differences / (2 d).
        let mut comp = vec![[0.0f64; 2]; self.len()];
        let nx = self.cells[0];
        for face in &self.faces {
            let axis = if axes == 2 && face.hi - face.lo == nx && nx > 1 { 1 } else { 0 };
            let q = (v[face.hi] - v[face.lo]) / (2.0 * face.distance);
            comp[face.lo][axis] += q;
            comp[face.hi][axis] += q;
        }
        let out = comp.iter().map(|c| c[0] * c[0] + c[1] * c[1]).collect();
        ScalarField::new(self, out)
    }

    /// Volume-weighted restriction of a field on the `factor`-refined version
    /// of this grid.
    pub fn coarsen(&self, fine_grid: &Grid, fine: &ScalarField, factor: usize) -> Result<ScalarField> {
        fine_grid.check(fine)?;
        if fine_grid.geometry != self.geometry
            || fine_grid.cells().iter().zip(self.cells()).any(|(f, c)| *f != c * factor)
        {
            return Err(Error::config(format!("{} is not a {factor}x refinement of {}", fine_grid.tag(), self.tag())));
        }
        let mut acc = vec![0.0; self.len()];
        let (fnx, nx) = (fine_grid.cells[0], self.cells[0]);
        for (i, (&value, &vol)) in fine.values().iter().zip(fine_grid.volumes()).enumerate() {
            let (fx, fy) = (i % fnx, i / fnx);
            let coarse = (fy / factor) * nx + fx / factor;
            acc[coarse] += value * vol;
        }
        for (a, v) in acc.iter_mut().zip(&self.volumes) {
            *a /= v;
        }
        ScalarField::new(self, acc)
    }
}

pub(crate) fn lp_norm_slice(volumes: &[f64], f: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::domain(format!("Lp norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    let s: f64 = f.iter().zip(volumes).map(|(x, v)| x.abs().powf(p) * v).sum();
    Ok(s.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_partition() {
        let g = build_grid(&GridSpec::interval(1.0, 4)).unwrap();
        assert_eq!(g.spacing(), &[0.25]);
        let c: Vec<f64> = g.centers().iter().map(|c| c[0]).collect();
        assert_eq!(c, vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn rectangle_partition() {
        let g = build_grid(&GridSpec::rectangle(1.0, 2.0, 8, 16)).unwrap();
        assert_eq!(g.len(), 128);
        assert!(g.volumes().iter().all(|&v| v == 0.125 * 0.125));
        assert_eq!(g.faces().len(), 7 * 16 + 8 * 15);
    }

    #[test]
    fn radial_ball_volume() {
        for n in [3, 7, 64, 513] {
            let g = build_grid(&GridSpec::radial(1.0, 3, n)).unwrap();
            assert!((g.measure() - 4.0 * PI / 3.0).abs() < 1e-12);
        }
        let disk = build_grid(&GridSpec::radial(2.0, 2, 50)).unwrap();
        assert!((disk.measure() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(build_grid(&GridSpec::interval(0.0, 8)), Err(Error::Config(_))));
        assert!(matches!(build_grid(&GridSpec::interval(1.0, 2)), Err(Error::Config(_))));
        assert!(matches!(build_grid(&GridSpec::radial(-1.0, 3, 8)), Err(Error::Config(_))));
        assert!(matches!(build_grid(&GridSpec::rectangle(1.0, f64::NAN, 4, 4)), Err(Error::Config(_))));
        let bad_axes = GridSpec { geometry: Geometry::Rectangle { lx: 1.0, ly: 1.0 }, cells: vec![4] };
        assert!(build_grid(&bad_axes).is_err());
    }

    #[test]
    fn integrate_examples() {
        let g = build_grid(&GridSpec::interval(2.0, 10)).unwrap();
        assert!((g.integrate(&ScalarField::constant(&g, 1.0)).unwrap() - 2.0).abs() < 1e-14);

        let ball = build_grid(&GridSpec::radial(1.0, 3, 40)).unwrap();
        let three = ScalarField::constant(&ball, 3.0);
        assert!((ball.integrate(&three).unwrap() - 4.0 * PI).abs() < 1e-12);

        let g = build_grid(&GridSpec::interval(1.0, 4)).unwrap();
        let f = ScalarField::new(&g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(g.integrate(&f).unwrap(), 2.5);
    }

    #[test]
    fn lp_norm_examples() {
        let g = build_grid(&GridSpec::interval(3.0, 6)).unwrap();
        let c = ScalarField::constant(&g, 2.0);
        for p in [1.0, 2.0, 3.5] {
            let expected = 2.0 * 3.0f64.powf(1.0 / p);
            assert!((g.lp_norm(&c, p).unwrap() - expected).abs() < 1e-13);
        }
        let g2 = Grid::assemble(Geometry::Interval { length: 1.0 }, &[2]).unwrap();
        let f = ScalarField::new(&g2, vec![-3.0, 2.0]).unwrap();
        assert_eq!(g2.lp_norm(&f, f64::INFINITY).unwrap(), 3.0);
        assert!(matches!(g2.lp_norm(&f, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn mismatched_field_rejected() {
        let a = build_grid(&GridSpec::interval(1.0, 4)).unwrap();
        let b = build_grid(&GridSpec::interval(1.0, 5)).unwrap();
        let f = ScalarField::constant(&b, 1.0);
        assert!(matches!(a.integrate(&f), Err(Error::GridMismatch { .. })));
        assert!(matches!(a.apply_laplacian(&f), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn coarsen_preserves_integral() {
        let coarse = build_grid(&GridSpec::radial(1.0, 3, 8)).unwrap();
        let fine = build_grid(&GridSpec::radial(1.0, 3, 16)).unwrap();
        let f = ScalarField::from_fn(&fine, |x| 1.0 + x[0] * x[0]);
        let c = coarse.coarsen(&fine, &f, 2).unwrap();
        assert!((coarse.integrate(&c).unwrap() - fine.integrate(&f).unwrap()).abs() < 1e-13);

        let coarse = build_grid(&GridSpec::rectangle(1.0, 1.0, 4, 3)).unwrap();
        let fine = build_grid(&GridSpec::rectangle(1.0, 1.0, 8, 6)).unwrap();
        let f = ScalarField::from_fn(&fine, |x| x[0] + 10.0 * x[1]);
        let c = coarse.coarsen(&fine, &f, 2).unwrap();
        for (v, x) in c.values().iter().zip(coarse.centers()) {
            assert!((v - (x[0] + 10.0 * x[1])).abs() < 1e-12);
        }
    }
}
