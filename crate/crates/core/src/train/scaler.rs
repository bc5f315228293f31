use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Min-max scaler: `y = (x - min) / (max - min)`, fitted on the training
/// partition only so the test range never leaks into training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    min: f64,
    max: f64,
}

impl Scaler {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("scaler_fit: empty series".into()));
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::from_bounds(min, max)
    }

    pub fn from_bounds(min: f64, max: f64) -> Result<Self> {
        if !(max > min) {
            return Err(Error::Data(format!(
                "scaler: degenerate series (min {min} == max {max})"
            )));
        }
        Ok(Scaler { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn invert(&self, y: f64) -> f64 {
        y * (self.max - self.min) + self.min
    }

    pub fn apply_slice(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn invert_slice(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.invert(y)).collect()
    }
}
