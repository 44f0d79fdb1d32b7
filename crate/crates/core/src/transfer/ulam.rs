use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{Grid, StepDensity};
use crate::error::{Error, Result};
use crate::math::abs;

/// Preimages of target points under one monotone branch.
///
/// `points` holds `(y, x)` pairs sorted by increasing `y`, with `T(x) = y`;
/// the first and last pairs are the image endpoints.
#[derive(Debug, Clone, Copy)]
pub struct BranchPreimages<'a> {
    pub domain: (f64, f64),
    pub points: &'a [(f64, f64)],
}

/// A piecewise monotone system that can report branch preimages.
pub trait PiecewiseMonotone {
    /// Interval the system acts on.
    fn support(&self) -> (f64, f64);

    /// Calls `visit` once per monotone branch with the preimages of those
    /// `targets` (sorted) that fall inside the branch image.
    fn visit_branches(
        &self,
        targets: &[f64],
        visit: &mut dyn FnMut(BranchPreimages<'_>),
    ) -> Result<()>;

    /// Lebesgue measure of `[lo, hi]` not covered by any branch domain.
    fn uncovered_in(&self, lo: f64, hi: f64) -> f64;
}

/// Row-wise accumulator with a dense column span per row.
struct RowAccumulator {
    starts: Vec<usize>,
    spans: Vec<Vec<f64>>,
}

impl RowAccumulator {
    fn new(m: usize) -> Self {
        Self { starts: alloc::vec![0; m], spans: (0..m).map(|_| Vec::new()).collect() }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let span = &mut self.spans[i];
        if span.is_empty() {
            self.starts[i] = j;
            span.push(v);
            return;
        }
        let start = self.starts[i];
        if j < start {
            let shift = start - j;
            let mut grown = alloc::vec![0.0; shift];
            grown.extend_from_slice(span);
            *span = grown;
            self.starts[i] = j;
            span[0] += v;
        } else {
            let k = j - start;
            if k >= span.len() {
                span.resize(k + 1, 0.0);
            }
            span[k] += v;
        }
    }
}

/// Sparse row-stochastic (up to leak) Ulam matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamOperator {
    pub grid: Grid,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Fraction of each cell's mass whose image is not represented.
    pub leak: Vec<f64>,
    /// Target distribution of the last visited branch, used to redistribute leak.
    pub tail_profile: Vec<(usize, f64)>,
    /// Lebesgue-weighted leak mass moved by `redistribute_leak`.
    pub redistributed: f64,
}

impl UlamOperator {
    /// Assemble the operator of `system` on `grid` from exact branch geometry.
    pub fn build(system: &dyn PiecewiseMonotone, grid: &Grid) -> Result<Self> {
        let m = grid.len();
        let mut acc = RowAccumulator::new(m);
        let mut profile: Vec<(usize, f64)> = Vec::new();
        let edges = grid.edges();
        system.visit_branches(edges, &mut |b: BranchPreimages<'_>| {
            profile.clear();
            for w in b.points.windows(2) {
                let ((y0, x0), (y1, x1)) = (w[0], w[1]);
                if !(y1 > y0) {
                    continue;
                }
                let Some(j) = grid.locate(0.5 * (y0 + y1)) else {
                    continue;
                };
                let (xl, xr) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
                if !(xr > xl) {
                    continue;
                }
                let mut total = 0.0;
                for i in grid.cells_overlapping(xl, xr) {
                    let (a, c) = grid.cell(i);
                    let overlap = c.min(xr) - a.max(xl);
                    if overlap > 0.0 {
                        acc.add(i, j, overlap);
                        total += overlap;
                    }
                }
                match profile.last_mut() {
                    Some((pj, pv)) if *pj == j => *pv += total,
                    _ => profile.push((j, total)),
                }
            }
        })?;
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut leak = Vec::with_capacity(m);
        for i in 0..m {
            let w = grid.width(i);
            let start = acc.starts[i];
            for (k, v) in acc.spans[i].iter().enumerate() {
                if *v > 0.0 {
                    cols.push(start + k);
                    vals.push((v / w).min(1.0));
                }
            }
            row_ptr.push(cols.len());
            let (a, c) = grid.cell(i);
            leak.push((system.uncovered_in(a, c) / w).clamp(0.0, 1.0));
        }
        let total: f64 = profile.iter().map(|p| p.1).sum();
        if total > 0.0 {
            for p in &mut profile {
                p.1 /= total;
            }
        }
        profile.sort_by_key(|p| p.0);
        Ok(Self { grid: grid.clone(), row_ptr, cols, vals, leak, tail_profile: profile, redistributed: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum()
    }

    /// `max_i |Σ_j P_ij + leak_i − 1|`.
    pub fn stochasticity_defect(&self) -> f64 {
        (0..self.dim())
            .map(|i| abs(self.row_sum(i) + self.leak[i] - 1.0))
            .fold(0.0, f64::max)
    }

    /// Lebesgue-weighted total leak `Σ leak_i |I_i|`.
    pub fn leak_total(&self) -> f64 {
        self.leak.iter().enumerate().map(|(i, l)| l * self.grid.width(i)).sum()
    }

    /// Move every row's leak onto `tail_profile`; returns the moved Lebesgue mass.
    pub fn redistribute_leak(&mut self) -> f64 {
        if self.tail_profile.is_empty() {
            return 0.0;
        }
        let m = self.dim();
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        row_ptr.push(0);
        let mut moved = 0.0;
        for i in 0..m {
            let l = self.leak[i];
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            if l <= 0.0 {
                cols.extend_from_slice(&self.cols[r.clone()]);
                vals.extend_from_slice(&self.vals[r]);
            } else {
                moved += l * self.grid.width(i);
                let mut a = r.start;
                let mut b = 0;
                let prof = &self.tail_profile;
                while a < r.end || b < prof.len() {
                    let ca = if a < r.end { self.cols[a] } else { usize::MAX };
                    let cb = if b < prof.len() { prof[b].0 } else { usize::MAX };
                    if ca < cb {
                        cols.push(ca);
                        vals.push(self.vals[a]);
                        a += 1;
                    } else if cb < ca {
                        cols.push(cb);
                        vals.push(l * prof[b].1);
                        b += 1;
                    } else {
                        cols.push(ca);
                        vals.push(self.vals[a] + l * prof[b].1);
                        a += 1;
                        b += 1;
                    }
                }
                self.leak[i] = 0.0;
            }
            row_ptr.push(cols.len());
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
        self.redistributed += moved;
        moved
    }

    /// One transfer step on cell masses: `out = v P`.
    pub fn apply_masses(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.cols[k]] += vi * self.vals[k];
            }
        }
    }

    /// One discrete transfer-operator step on a density.
    pub fn apply_pf(&self, f: &StepDensity) -> Result<StepDensity> {
        if f.grid != self.grid {
            return Err(Error::Grid);
        }
        let v = f.masses();
        let mut out = alloc::vec![0.0; v.len()];
        self.apply_masses(&v, &mut out);
        Ok(StepDensity::from_masses(self.grid.clone(), &out))
    }

    /// Left fixed vector by power iteration from the uniform density.
    pub fn stationary_density(&self, tol: f64, max_iter: usize) -> Result<StepDensity> {
        self.stationary_from(&StepDensity::uniform(self.grid.clone()), tol, max_iter)
    }

    /// Left fixed vector by power iteration from `start`, normalized to integral one.
    pub fn stationary_from(
        &self,
        start: &StepDensity,
        tol: f64,
        max_iter: usize,
    ) -> Result<StepDensity> {
        if start.grid != self.grid {
            return Err(Error::Grid);
        }
        let mut v = start.masses();
        let s: f64 = v.iter().sum();
        if !(s > 0.0) {
            return Err(Error::Invalid("start vector has no mass"));
        }
        v.iter_mut().for_each(|x| *x /= s);
        let mut next = alloc::vec![0.0; v.len()];
        let mut residual = f64::INFINITY;
        for _ in 0..max_iter {
            self.apply_masses(&v, &mut next);
            let s: f64 = next.iter().sum();
            if !(s > 0.0) {
                return Err(Error::Convergence { what: "power iteration", residual: f64::NAN });
            }
            next.iter_mut().for_each(|x| *x /= s);
            residual = v.iter().zip(&next).map(|(a, b)| abs(a - b)).sum();
            core::mem::swap(&mut v, &mut next);
            if residual <= tol {
                return Ok(StepDensity::from_masses(self.grid.clone(), &v));
            }
        }
        Err(Error::Convergence { what: "power iteration", residual })
    }

    /// Coordinate-list export: a header line, then `row col value` per entry.
    pub fn to_coo_string(&self) -> String {
        let (u, v) = self.grid.support();
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# m={} support=[{u},{v}] leak_total={:e} nnz={}",
            self.dim(),
            self.leak_total(),
            self.nnz()
        );
        for i in 0..self.dim() {
            for (j, p) in self.row(i) {
                let _ = writeln!(s, "{i} {j} {p:e}");
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Finitely many linear branches `x ↦ a + s (x - lo)` on `[lo, hi]`.
    struct Linear(Vec<(f64, f64, f64, f64)>, (f64, f64));

    impl PiecewiseMonotone for Linear {
        fn support(&self) -> (f64, f64) {
            self.1
        }
        fn visit_branches(
            &self,
            targets: &[f64],
            visit: &mut dyn FnMut(BranchPreimages<'_>),
        ) -> Result<()> {
            for &(lo, hi, a, s) in &self.0 {
                let (y0, y1) = (a, a + s * (hi - lo));
                let (ylo, yhi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
                let mut pts = alloc::vec![(ylo, lo + (ylo - a) / s)];
                pts.extend(
                    targets
                        .iter()
                        .filter(|&&y| y > ylo && y < yhi)
                        .map(|&y| (y, lo + (y - a) / s)),
                );
                pts.push((yhi, lo + (yhi - a) / s));
                visit(BranchPreimages { domain: (lo, hi), points: &pts });
            }
            Ok(())
        }
        fn uncovered_in(&self, _lo: f64, _hi: f64) -> f64 {
            0.0
        }
    }

    #[test]
    fn identity_map_gives_identity_matrix() {
        let g = Grid::uniform(0.0, 1.0, 16).unwrap();
        let op = UlamOperator::build(&Linear(alloc::vec![(0.0, 1.0, 0.0, 1.0)], (0.0, 1.0)), &g).unwrap();
        for i in 0..16 {
            let row: Vec<_> = op.row(i).collect();
            assert_eq!(row, alloc::vec![(i, 1.0)]);
        }
        let f = StepDensity::indicator(g.clone(), 0.1, 0.3);
        let s = op.stationary_from(&f, 1e-14, 10).unwrap();
        assert!(s.l1_distance(&f).unwrap() < 1e-14);
    }

    #[test]
    fn slope_four_map_has_quarter_rows() {
        let g = Grid::uniform(0.0, 1.0, 16).unwrap();
        let branches = (0..4).map(|k| (k as f64 / 4.0, (k + 1) as f64 / 4.0, 0.0, 4.0)).collect();
        let op = UlamOperator::build(&Linear(branches, (0.0, 1.0)), &g).unwrap();
        for i in 0..16 {
            let row: Vec<_> = op.row(i).collect();
            assert_eq!(row.len(), 4);
            assert!(row.iter().all(|(_, p)| (p - 0.25).abs() < 1e-14));
        }
        assert!(op.stochasticity_defect() < 1e-12);
        let u = StepDensity::uniform(g);
        assert!(op.apply_pf(&u).unwrap().l1_distance(&u).unwrap() < 1e-14);
        assert!(op.to_coo_string().starts_with("# m=16"));
    }
}
