use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::map::Side;

/// Ordered cells tiling a support interval `[u, v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    edges: Vec<f64>,
}

impl Grid {
    pub fn uniform(u: f64, v: f64, m: usize) -> Result<Self> {
        if m < 2 || !(v > u) {
            return Err(Error::Invalid("uniform grid needs m >= 2 and u < v"));
        }
        let h = (v - u) / m as f64;
        let mut edges: Vec<f64> = (0..=m).map(|i| u + h * i as f64).collect();
        edges[m] = v;
        Ok(Self { edges })
    }

    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 3 {
            return Err(Error::Invalid("grid needs at least two cells"));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("grid edges must be strictly increasing"));
        }
        Ok(Self { edges })
    }

    /// Two uniform blocks `[lo, mid]` and `[mid, hi]` with roughly equal cell
    /// widths and `m` cells in total; `mid` is always an edge.
    pub fn two_block(lo: f64, mid: f64, hi: f64, m: usize) -> Result<Self> {
        let frac = (mid - lo) / (hi - lo);
        let m_left = (libm::round(m as f64 * frac) as usize).max(2);
        let m_right = m.saturating_sub(m_left).max(2);
        let left = Self::uniform(lo, mid, m_left)?;
        let right = Self::uniform(mid, hi, m_right)?;
        let mut edges = left.edges;
        edges.extend_from_slice(&right.edges[1..]);
        Ok(Self { edges })
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn support(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.edges[i], self.edges[i + 1])
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Cell with `lo ≤ x < hi`; the right end of the support maps to the last cell.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let (u, v) = self.support();
        if !(x >= u && x <= v) {
            return None;
        }
        let i = self.edges.partition_point(|&e| e <= x);
        Some(i.saturating_sub(1).min(self.len() - 1))
    }

    /// Cell containing `x` as a one-sided limit: `Left` picks `lo < x ≤ hi`.
    pub fn locate_side(&self, x: f64, side: Side) -> Option<usize> {
        match side {
            Side::Right => self.locate(x),
            Side::Left => {
                let (u, v) = self.support();
                if !(x >= u && x <= v) {
                    return None;
                }
                let i = self.edges.partition_point(|&e| e < x);
                Some(i.saturating_sub(1).min(self.len() - 1))
            }
        }
    }

    /// Index range of cells meeting the open interval `(lo, hi)`.
    pub fn cells_overlapping(&self, lo: f64, hi: f64) -> core::ops::Range<usize> {
        let (u, v) = self.support();
        let lo = lo.max(u);
        let hi = hi.min(v);
        if !(hi > lo) {
            return 0..0;
        }
        let first = self.locate(lo).unwrap_or(0);
        let last = self.locate_side(hi, Side::Left).unwrap_or(self.len() - 1);
        first..last + 1
    }
}
