//! Piecewise-linear functions on uniform grids over the hull.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::floor;
use crate::systems::Interval;

/// Uniform nodes `lo = x₀ < x₁ < … < x_{len−1} = hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    len: usize,
}

impl Grid {
    /// `len` uniform nodes spanning `hull`.
    pub fn uniform(hull: Interval, len: usize) -> Result<Grid> {
        if len < 2 {
            return Err(Error::param("grid_size", "at least two nodes are required"));
        }
        if !(hull.hi > hull.lo) {
            return Err(Error::param("hull", "must have positive length"));
        }
        Ok(Grid {
            lo: hull.lo,
            hi: hull.hi,
            len,
        })
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false: a grid has at least two nodes.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing.
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.len - 1) as f64
    }

    /// The spanned interval.
    pub fn hull(&self) -> Interval {
        Interval {
            lo: self.lo,
            hi: self.hi,
        }
    }

    /// Node `k`; the last node is exactly `hi`.
    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.len {
            self.hi
        } else {
            self.lo + k as f64 * self.step()
        }
    }

    /// All nodes.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.node(k)).collect()
    }

    /// Cell index `k ∈ [0, len−2]` and local coordinate `θ ∈ [0, 1]` with
    /// `x = (1−θ)·x_k + θ·x_{k+1}`. Points outside the hull are clamped.
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let step = self.step();
        let s = (x - self.lo) / step;
        let last = self.len - 2;
        let k = if s <= 0.0 {
            0
        } else {
            (floor(s) as usize).min(last)
        };
        let theta = (s - k as f64).clamp(0.0, 1.0);
        (k, theta)
    }

    /// The grid with every other node, available when `len` is odd.
    pub fn coarsened(&self) -> Option<Grid> {
        if self.len % 2 == 1 && self.len >= 5 {
            Some(Grid {
                lo: self.lo,
                hi: self.hi,
                len: self.len.div_ceil(2),
            })
        } else {
            None
        }
    }
}

/// A continuous function stored by its node values and interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    /// Wrap node values; the length must match the grid.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Mismatch(alloc::format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param(
                "values",
                "grid function values must be finite",
            ));
        }
        Ok(GridFunction { grid, values })
    }

    /// Sample `f` at the nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.node(k))).collect();
        GridFunction { grid, values }
    }

    /// The constant function.
    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction {
            grid,
            values: alloc::vec![c; grid.len()],
        }
    }

    /// Underlying grid.
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Node values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Consume into node values.
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Linear interpolant at `x`.
    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        let (k, theta) = self.grid.locate(x);
        (1.0 - theta) * self.values[k] + theta * self.values[k + 1]
    }

    /// Smallest node value.
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest node value.
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Node-wise map.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.grid.node(k), v))
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }

    /// Node-wise product with another function on the same grid.
    pub fn product(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.grid != other.grid {
            return Err(Error::Mismatch(
                "grid functions live on different grids".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(GridFunction {
            grid: self.grid,
            values,
        })
    }

    /// Largest node-wise absolute difference from another function on the same grid.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Mismatch(
                "grid functions live on different grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max(crate::math::abs(a - b))))
    }
}
