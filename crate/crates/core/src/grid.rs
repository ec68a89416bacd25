use serde::{Deserialize, Serialize};

use crate::Error;

/// Uniform 1-D grid with `n >= 3` points on `[x0, x1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x0: f64,
    x1: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x0: f64, x1: f64, n: usize) -> Result<Self, Error> {
        if !(x0.is_finite() && x1.is_finite()) || x1 <= x0 {
            return Err(Error::InvalidInput(format!(
                "grid needs finite x0 < x1, got [{x0}, {x1}]"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidInput(format!("grid needs at least 3 points, got {n}")));
        }
        Ok(Self { x0, x1, n })
    }

    /// Grid on `[x0, x1]` whose spacing is `dx` (rounded to the nearest
    /// whole number of cells).
    pub fn with_spacing(x0: f64, x1: f64, dx: f64) -> Result<Self, Error> {
        let cells = ((x1 - x0) / dx).round();
        if !(cells.is_finite() && cells >= 2.0) {
            return Err(Error::InvalidInput(format!("bad spacing {dx} for [{x0}, {x1}]")));
        }
        Self::new(x0, x1, cells as usize + 1)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x1
        } else {
            self.x0 + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Same interval with twice the resolution.
    pub fn refined(&self) -> Grid1D {
        Grid1D {
            n: 2 * self.n - 1,
            ..*self
        }
    }
}
