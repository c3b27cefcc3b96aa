use super::{Grid, GridTag};
use crate::{Error, Result};

/// One finite value per cell of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    tag: GridTag,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config(format!(
                "field has {} values, grid {} has {} cells",
                values.len(),
                grid.tag(),
                grid.len()
            )));
        }
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { cell, value });
        }
        Ok(ScalarField { tag: grid.tag(), values })
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        assert!(c.is_finite(), "constant field value must be finite");
        ScalarField { tag: grid.tag(), values: vec![c; grid.len()] }
    }

    /// Samples `f` at the cell centres.
    ///
    /// # Panics
    /// If `f` returns a non-finite value.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values: Vec<f64> = grid.centers().iter().map(|&x| f(x)).collect();
        Self::new(grid, values).expect("sampled field must be finite")
    }

    pub fn tag(&self) -> &GridTag {
        &self.tag
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise map, staying on the same grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { cell, value });
        }
        Ok(ScalarField { tag: self.tag.clone(), values })
    }

    /// Pointwise combination with a field on the same grid.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.tag != other.tag {
            return Err(Error::GridMismatch { expected: self.tag.to_string(), found: other.tag.to_string() });
        }
        let values: Vec<f64> = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { cell, value });
        }
        Ok(ScalarField { tag: self.tag.clone(), values })
    }

    /// Largest pointwise |self − other|.
    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| (a - b).abs())?.max())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, GridSpec};

    #[test]
    fn rejects_wrong_length_and_nan() {
        let g = build_grid(&GridSpec::interval(1.0, 4)).unwrap();
        assert!(matches!(ScalarField::new(&g, vec![1.0; 3]), Err(Error::Config(_))));
        assert!(matches!(ScalarField::new(&g, vec![1.0, f64::NAN, 0.0, 0.0]), Err(Error::NonFinite { cell: 1, .. })));
        let f = ScalarField::constant(&g, 1.0);
        assert!(f.map(|x| x / 0.0).is_err());
    }
}
