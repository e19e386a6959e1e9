//! Uniform one-dimensional grids and grid functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Comoving,
}

/// `n` nodes `x_min + i·dx`, `i < n`, with `n·dx = x_max − x_min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub dx: f64,
    pub frame: Frame,
    pub periodic: bool,
}

impl Grid1D {
    pub fn with_points(x_min: f64, x_max: f64, n: usize, frame: Frame, periodic: bool) -> Result<Self> {
        if !(x_max > x_min) || n < 5 {
            return Err(Error::Domain(format!("bad grid [{x_min}, {x_max}] with {n} points")));
        }
        Ok(Grid1D { x_min, x_max, n, dx: (x_max - x_min) / n as f64, frame, periodic })
    }

    /// Rounds `n` so that the spacing is as close as possible to `dx`.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64, frame: Frame, periodic: bool) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::Domain("grid spacing must be positive".into()));
        }
        let n = ((x_max - x_min) / dx).round() as usize;
        Self::with_points(x_min, x_max, n, frame, periodic)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Index of the node nearest to `x` (clamped).
    pub fn index_of(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.dx).round();
        i.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n == other.n
            && self.periodic == other.periodic
            && self.frame == other.frame
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.length()
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
    }

    pub fn require_same(&self, other: &Grid1D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Values on a grid; `V` is `f64` or `Complex64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field1D<V> {
    pub grid: Grid1D,
    pub values: Vec<V>,
}

impl<V: Clone> Field1D<V> {
    pub fn new(grid: Grid1D, values: Vec<V>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!("{} values on a {}-point grid", values.len(), grid.n)));
        }
        Ok(Field1D { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> V) -> Self {
        Field1D { values: grid.xs().into_iter().map(f).collect(), grid }
    }
}

/// Second-order centred first derivative; one-sided at the ends of a non-periodic grid.
pub fn gradient(grid: &Grid1D, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let h = grid.dx;
    (0..n)
        .map(|i| {
            if grid.periodic {
                (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * h)
            } else if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}
