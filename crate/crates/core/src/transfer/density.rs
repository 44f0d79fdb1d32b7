use alloc::vec::Vec;

use super::Grid;
use crate::error::{Error, Result};
use crate::map::Side;
use crate::math::abs;

/// Piecewise-constant density on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDensity {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl StepDensity {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid);
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Invalid("densities must be nonnegative"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = alloc::vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Constant density with integral one over the support.
    pub fn uniform(grid: Grid) -> Self {
        let (u, v) = grid.support();
        let values = alloc::vec![1.0 / (v - u); grid.len()];
        Self { grid, values }
    }

    /// Normalized indicator of `[lo, hi]` (cells partially inside get their overlap fraction).
    pub fn indicator(grid: Grid, lo: f64, hi: f64) -> Self {
        let mut values = alloc::vec![0.0; grid.len()];
        for i in grid.cells_overlapping(lo, hi) {
            let (a, b) = grid.cell(i);
            values[i] = (b.min(hi) - a.max(lo)).max(0.0) / (b - a);
        }
        let mut d = Self { grid, values };
        d.normalize();
        d
    }

    /// Density from cell masses.
    pub fn from_masses(grid: Grid, masses: &[f64]) -> Self {
        let values = masses
            .iter()
            .enumerate()
            .map(|(i, m)| (m / grid.width(i)).max(0.0))
            .collect();
        Self { grid, values }
    }

    pub fn masses(&self) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.grid.width(i))
            .collect()
    }

    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.grid.width(i))
            .sum()
    }

    /// `∫_lo^hi f`, exact for the step function.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let mut s = 0.0;
        for i in self.grid.cells_overlapping(lo, hi) {
            let (a, b) = self.grid.cell(i);
            s += self.values[i] * (b.min(hi) - a.max(lo)).max(0.0);
        }
        s
    }

    /// Cell value at `x` (zero outside the support).
    pub fn value_at(&self, x: f64) -> f64 {
        self.grid.locate(x).map_or(0.0, |i| self.values[i])
    }

    /// One-sided cell value at `x`.
    pub fn value_at_side(&self, x: f64, side: Side) -> f64 {
        self.grid.locate_side(x, side).map_or(0.0, |i| self.values[i])
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Rescale to integral one; returns the integral before scaling.
    pub fn normalize(&mut self) -> f64 {
        let s = self.integral();
        if s > 0.0 {
            for v in &mut self.values {
                *v /= s;
            }
        }
        s
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `a·self + b·other` on the shared grid.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Grid);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    /// Total variation of the step function: the sum of absolute jumps
    /// between adjacent cells (the function is taken as zero outside the support
    /// only through its cells, so boundary values do not count as jumps).
    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| abs(w[1] - w[0])).sum()
    }

    /// Total variation plus `L¹` norm.
    pub fn bv_norm(&self) -> f64 {
        self.total_variation() + self.l1_norm()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| abs(*v) * self.grid.width(i))
            .sum()
    }

    /// `∫ |f - g|`, on the common refinement when the grids differ.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.grid == other.grid {
            return Ok(self
                .values
                .iter()
                .zip(&other.values)
                .enumerate()
                .map(|(i, (a, b))| abs(a - b) * self.grid.width(i))
                .sum());
        }
        if self.grid.support() != other.grid.support() {
            return Err(Error::Grid);
        }
        let mut edges: Vec<f64> = self
            .grid
            .edges()
            .iter()
            .chain(other.grid.edges())
            .copied()
            .collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        Ok(edges
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                abs(self.value_at(mid) - other.value_at(mid)) * (w[1] - w[0])
            })
            .sum())
    }
}
