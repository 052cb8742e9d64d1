use crate::error::{Error, Result};

use super::window::{LatticeWindow, Site};

/// A real function on `Z^d` supported on a window; it evaluates to exactly 0
/// outside.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    window: LatticeWindow,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(window: LatticeWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for a window of {} sites",
                values.len(),
                window.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        Ok(ScalarField { window, values })
    }

    pub fn zeros(window: LatticeWindow) -> Self {
        let n = window.len();
        ScalarField {
            window,
            values: vec![0.0; n],
        }
    }

    /// Kronecker delta at `at`; `at` must lie in the window.
    pub fn delta(window: LatticeWindow, at: &Site) -> Result<Self> {
        let idx = window
            .index_of(at)
            .ok_or_else(|| Error::InvalidArgument(format!("{at} is outside the window")))?;
        let mut f = Self::zeros(window);
        f.values[idx] = 1.0;
        Ok(f)
    }

    pub fn from_fn(window: LatticeWindow, mut f: impl FnMut(&Site) -> f64) -> Self {
        let values = window.sites().map(|s| f(&s)).collect();
        ScalarField { window, values }
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, x: &Site) -> f64 {
        self.window.index_of(x).map_or(0.0, |i| self.values[i])
    }

    pub fn get_coords(&self, c: &[i64]) -> f64 {
        self.window.index_of_coords(c).map_or(0.0, |i| self.values[i])
    }

    /// The same function represented on another window (values outside
    /// `target` are dropped).
    pub fn resampled(&self, target: &LatticeWindow) -> ScalarField {
        let mut c = vec![0; target.dim()];
        let values = (0..target.len())
            .map(|i| {
                target.coords_into(i, &mut c);
                self.get_coords(&c)
            })
            .collect();
        ScalarField {
            window: target.clone(),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
