//! First-return system on `Δ = [1/4, 1]`.
//!
//! With `b_0 = 1/4` and `b_{n+1} = T1^{-1}(b_n)`, the gaps
//! `W_n = (b_n, b_{n-1})` satisfy `T1(W_n) = W_{n-1}`. Cylinder `Z_n` is the
//! set of points of `Δ` returning after exactly `n` steps; it has a piece in
//! the domain of `T2` and one in the domain of `T3`:
//!
//! * left piece `(a_{n-1}, a_n]` with `a_0 = 1/4`, `a_n = T2^{-1}(b_{n-1})`,
//! * right piece `[a'_n, a'_{n-1})` with `a'_n = T3^{-1}(b_{n-1})`, and
//!   `Z_1` additionally owns all of `[1/2, 1]`.
//!
//! `T` maps both pieces onto `W_{n-1}`, so the induced branch on either piece
//! is `T1^{n-1} ∘ T_i`. Cylinders deeper than the resolved count accumulate at
//! `3/8`; the neighbourhood `(a_N, a'_N)` is reported as the residual.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::map::{BranchId, MapModel, A0, B};
use crate::math::{abs, exp, ln, powf};
use crate::transfer::{BranchPreimages, PiecewiseMonotone};

/// Backward orbit of `1/4` under `T1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOrbit {
    /// `b[0] = 1/4`, strictly decreasing.
    pub b: Vec<f64>,
}

impl BoundaryOrbit {
    /// `b_0..b_n`.
    pub fn new(map: &MapModel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("boundary orbit needs N >= 1"));
        }
        let mut b = Vec::with_capacity(n + 1);
        b.push(A0);
        for k in 0..n {
            let next = map.t1_inverse_unchecked(b[k]);
            if !(next > 0.0 && next < b[k]) {
                return Err(Error::Convergence { what: "boundary orbit", residual: next });
            }
            b.push(next);
        }
        Ok(Self { b })
    }

    /// Orbit extended until `b_n < target` (at most `cap` steps).
    pub fn until_below(map: &MapModel, target: f64, cap: usize) -> Result<Self> {
        let mut b = alloc::vec![A0];
        while *b.last().unwrap() >= target && b.len() <= cap {
            let last = *b.last().unwrap();
            let next = map.t1_inverse_unchecked(last);
            if !(next > 0.0 && next < last) {
                return Err(Error::Convergence { what: "boundary orbit", residual: next });
            }
            b.push(next);
        }
        Ok(Self { b })
    }

    pub fn depth(&self) -> usize {
        self.b.len() - 1
    }

    /// `W_k = (b_k, b_{k-1})` for `k ≥ 1`.
    pub fn gap(&self, k: usize) -> (f64, f64) {
        (self.b[k], self.b[k - 1])
    }

    /// `Σ_{j ≥ m} b_j`: explicit up to the stored depth, then a power-law tail
    /// `b(t) ≈ (A (t - t0))^{-1/α}` matched at the last stored point. Returns
    /// `(sum, uncertainty)` where the uncertainty compares tails matched at two
    /// different depths.
    pub fn tail_sum(&self, map: &MapModel, m: usize) -> (f64, f64) {
        let n = self.depth();
        let from = m.max(n + 1);
        let explicit: f64 = if m <= n { self.b[m..=n].iter().sum() } else { 0.0 };
        let tail = self.power_tail(map, n, from);
        let alt = self.power_tail(map, (n / 2).max(1), from);
        (explicit + tail, abs(tail - alt))
    }

    /// `Σ_{j ≥ from} b_j` from the asymptotic form matched at `b_at`.
    fn power_tail(&self, map: &MapModel, at: usize, from: usize) -> f64 {
        let a = map.alpha();
        let coeff = a * map.params.t1_coeff();
        // b_at = (coeff (at - t0))^{-1/α}
        let t0 = at as f64 - powf(self.b[at], -a) / coeff;
        let s = from as f64 - 0.5 - t0;
        let p = 1.0 / a - 1.0;
        powf(coeff, -1.0 / a) * powf(s, -p) / p
    }
}

/// Sublemma lower bound `b_k ≥ c k^{-1/α}` and the associated `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublemmaReport {
    /// `c = 1 / (4 (1+α)^{1/α})`.
    pub c: f64,
    pub violations: usize,
    pub checked: usize,
    /// `min_k b_k k^{1/α}`: the largest constant that works on the checked range.
    pub c_empirical: f64,
    /// `c^α 4^α (1+α)` with the nominal `c`; equals one exactly.
    pub d_nominal: f64,
    /// Same with `c_empirical`; strictly above one.
    pub d_empirical: f64,
}

pub fn sublemma_constant(alpha: f64) -> f64 {
    1.0 / (4.0 * powf(1.0 + alpha, 1.0 / alpha))
}

pub fn sublemma_check(orbit: &BoundaryOrbit, alpha: f64) -> SublemmaReport {
    let c = sublemma_constant(alpha);
    let mut violations = 0;
    let mut c_emp = f64::INFINITY;
    for k in 1..orbit.b.len() {
        let scale = powf(k as f64, 1.0 / alpha);
        if orbit.b[k] < c / scale {
            violations += 1;
        }
        c_emp = c_emp.min(orbit.b[k] * scale);
    }
    let d = |c: f64| powf(c, alpha) * powf(4.0, alpha) * (1.0 + alpha);
    SublemmaReport {
        c,
        violations,
        checked: orbit.depth(),
        c_empirical: c_emp,
        d_nominal: d(c),
        d_empirical: d(c_emp),
    }
}

/// Piece of a cylinder: `Left` lies in the domain of `T2`, `Right` in that of `T3`
/// (for `n = 1` the right piece also covers `[1/2, 1]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PieceSide {
    Left,
    Right,
}

impl PieceSide {
    pub fn label(self) -> &'static str {
        match self {
            PieceSide::Left => "left",
            PieceSide::Right => "right",
        }
    }
}

/// Cylinder endpoints for `n = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderSet {
    /// `a[0] = 1/4`, `a[n] = T2^{-1}(b_{n-1})`; increasing towards `3/8`.
    pub a: Vec<f64>,
    /// `a'[0] = 1`, `a'[n] = T3^{-1}(b_{n-1})`; decreasing towards `3/8`.
    pub a_prime: Vec<f64>,
}

impl CylinderSet {
    pub fn new(map: &MapModel, orbit: &BoundaryOrbit, n: usize) -> Result<Self> {
        if n == 0 || n > orbit.depth() + 1 {
            return Err(Error::Invalid("cylinder count exceeds boundary orbit depth"));
        }
        let mut a = Vec::with_capacity(n + 1);
        let mut a_prime = Vec::with_capacity(n + 1);
        a.push(A0);
        a_prime.push(1.0);
        for k in 1..=n {
            a.push(map.inverse_unchecked(BranchId::T2, orbit.b[k - 1]));
            a_prime.push(map.inverse_unchecked(BranchId::T3, orbit.b[k - 1]));
        }
        Ok(Self { a, a_prime })
    }

    pub fn count(&self) -> usize {
        self.a.len() - 1
    }

    pub fn piece(&self, n: usize, side: PieceSide) -> (f64, f64) {
        match side {
            PieceSide::Left => (self.a[n - 1], self.a[n]),
            PieceSide::Right => (self.a_prime[n], self.a_prime[n - 1]),
        }
    }

    /// Unresolved neighbourhood `(a_N, a'_N)` of `3/8`.
    pub fn residual(&self) -> (f64, f64) {
        let n = self.count();
        (self.a[n], self.a_prime[n])
    }

    /// Return time of `x ∈ Δ` read from the cylinder endpoints; `None` in the residual.
    pub fn index(&self, x: f64) -> Option<usize> {
        if !(A0..=1.0).contains(&x) {
            return None;
        }
        if x >= B {
            return Some(1);
        }
        let n = self.count();
        if x < 0.375 {
            let p = self.a.partition_point(|&a| a < x);
            let k = p.max(1);
            (k <= n).then_some(k)
        } else {
            let k = self.a_prime[1..].partition_point(|&a| a > x) + 1;
            (k <= n && x > 0.375).then_some(k)
        }
    }

    /// `Σ_{n ≤ N} n |Z_n|` (Lebesgue).
    pub fn weighted_length(&self) -> f64 {
        (1..=self.count())
            .map(|n| {
                let (l0, l1) = self.piece(n, PieceSide::Left);
                let (r0, r1) = self.piece(n, PieceSide::Right);
                n as f64 * ((l1 - l0) + (r1 - r0))
            })
            .sum()
    }
}

/// Smallest `n ≥ 1` with `T^n(x) ∈ Δ`, or `None` beyond `cap`.
pub fn return_time_oracle(map: &MapModel, x: f64, cap: usize) -> Option<usize> {
    let mut y = x;
    for n in 1..=cap {
        y = map.eval(y).ok()?;
        if y >= A0 {
            return Some(n);
        }
    }
    None
}

/// One row of the cylinder table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderPiece {
    pub n: usize,
    pub side: PieceSide,
    pub lo: f64,
    pub hi: f64,
    pub image_lo: f64,
    pub image_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Le3Report {
    pub k: usize,
    pub d: f64,
    pub eta: f64,
    pub checked: usize,
    pub violations: usize,
    /// `min actual / bound` over all checked `(x, n, i)`.
    pub min_slack: f64,
    /// `max_x Σ_n 1/|DT^{(n-k)}|` over the checked range of `n`.
    pub reciprocal_sum: f64,
}

/// Induced map `T̂_ε` on `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedModel {
    pub map: MapModel,
    /// Boundary orbit, possibly deeper than the resolved cylinders.
    pub orbit: BoundaryOrbit,
    pub cylinders: CylinderSet,
}

impl InducedModel {
    /// Resolve `n_cylinders` cylinders on an orbit of depth at least `n_deep`.
    pub fn new(map: MapModel, n_cylinders: usize, n_deep: usize) -> Result<Self> {
        let orbit = BoundaryOrbit::new(&map, n_deep.max(n_cylinders))?;
        let cylinders = CylinderSet::new(&map, &orbit, n_cylinders)?;
        Ok(Self { map, orbit, cylinders })
    }

    /// Smallest `N` with `b_N < target` for this map.
    pub fn depth_for(map: &MapModel, target: f64, cap: usize) -> Result<usize> {
        Ok(BoundaryOrbit::until_below(map, target, cap)?.depth())
    }

    pub fn n_cylinders(&self) -> usize {
        self.cylinders.count()
    }

    pub fn epsilon(&self) -> f64 {
        self.map.epsilon()
    }

    /// `T̂_ε(x)` and the return time.
    pub fn induced_eval(&self, x: f64) -> Result<(f64, usize)> {
        if !(A0..=1.0).contains(&x) {
            return Err(Error::Domain { x });
        }
        let n = self.cylinders.index(x).ok_or(Error::Unresolved { x })?;
        if x >= B {
            return Ok((self.map.eval(x)?, 1));
        }
        let id = if x < 0.375 { BranchId::T2 } else { BranchId::T3 };
        let mut y = self.map.eval_branch(id, x);
        for _ in 1..n {
            y = self.map.t1(y);
        }
        Ok((y, n))
    }

    /// `ln |DT̂_ε(x)|`, accumulated along the orbit.
    pub fn induced_log_deriv(&self, x: f64) -> Result<f64> {
        if !(A0..=1.0).contains(&x) {
            return Err(Error::Domain { x });
        }
        let n = self.cylinders.index(x).ok_or(Error::Unresolved { x })?;
        if x >= B {
            return Ok(ln(abs(self.map.deriv(x, Some(crate::map::Side::Right))?)));
        }
        let id = if x < 0.375 { BranchId::T2 } else { BranchId::T3 };
        let mut acc = ln(abs(self.map.deriv_branch(id, x)));
        let mut y = self.map.eval_branch(id, x);
        for _ in 1..n {
            acc += ln(self.map.dt1(y));
            y = self.map.t1(y);
        }
        Ok(acc)
    }

    /// Every resolved monotone branch of `T̂_ε` with its domain and image.
    pub fn pieces(&self) -> Vec<CylinderPiece> {
        let e = self.epsilon();
        let mut out = Vec::new();
        for n in 1..=self.n_cylinders() {
            let (lo, hi) = self.cylinders.piece(n, PieceSide::Left);
            out.push(CylinderPiece { n, side: PieceSide::Left, lo, hi, image_lo: A0, image_hi: 0.5 + e });
            if n == 1 {
                out.push(CylinderPiece {
                    n,
                    side: PieceSide::Right,
                    lo: self.cylinders.a_prime[1],
                    hi: 1.0,
                    image_lo: A0,
                    image_hi: 1.0,
                });
            } else {
                let (lo, hi) = self.cylinders.piece(n, PieceSide::Right);
                out.push(CylinderPiece { n, side: PieceSide::Right, lo, hi, image_lo: A0, image_hi: 0.5 + e });
            }
        }
        out
    }

    /// Sampled Adler constant `sup |D²T̂| / (DT̂)²` over cylinders `n ≤ n_max`.
    pub fn adler_constant(&self, n_max: usize, samples: usize) -> f64 {
        let mut sup = 0.0_f64;
        let n_max = n_max.min(self.n_cylinders());
        for n in 1..=n_max {
            for side in [PieceSide::Left, PieceSide::Right] {
                let (lo, hi) = if n == 1 && side == PieceSide::Right {
                    (self.cylinders.a_prime[1], B)
                } else {
                    self.cylinders.piece(n, side)
                };
                let id = if side == PieceSide::Left { BranchId::T2 } else { BranchId::T3 };
                for s in 0..samples {
                    let x = lo + (hi - lo) * (s as f64 + 0.5) / samples as f64;
                    let mut z = self.map.eval_branch(id, x);
                    let mut ratio = 0.0;
                    for _ in 1..n {
                        let d = self.map.dt1(z);
                        ratio = self.map.d2t1(z) / (d * d) + ratio / d;
                        z = self.map.t1(z);
                    }
                    sup = sup.max(ratio);
                }
            }
        }
        sup
    }

    /// Chain-rule check of `|DT^{(n-k)}(T_i^{-1} T1^{-(n-k-1)} x)| ≥ (n/(k+2))^{η_k}`
    /// for `samples` points of `W_k`, `n = k+1..=n_max`, `i ∈ {2, 3}`.
    pub fn le3_derivative_check(&self, k: usize, n_max: usize, samples: usize, d: f64) -> Le3Report {
        let eta = d * (k as f64 + 2.0) / (k as f64 + 2.0 + d);
        let (lo, hi) = self.orbit.gap(k);
        let slopes = [self.map.params.t2_slope(), 4.0];
        let mut violations = 0;
        let mut checked = 0;
        let mut min_slack = f64::INFINITY;
        let mut reciprocal_sum = 0.0_f64;
        for s in 0..samples {
            let x = lo + (hi - lo) * (s as f64 + 0.5) / samples as f64;
            let mut y = x;
            let mut log_prod = 0.0;
            let mut sums = [0.0; 2];
            for n in (k + 1)..=n_max {
                if n > k + 1 {
                    y = self.map.t1_inverse_unchecked(y);
                    log_prod += ln(self.map.dt1(y));
                }
                let log_bound = eta * ln(n as f64 / (k as f64 + 2.0));
                for (slot, slope) in slopes.iter().enumerate() {
                    let log_actual = log_prod + ln(*slope);
                    checked += 1;
                    if log_actual < log_bound {
                        violations += 1;
                    }
                    min_slack = min_slack.min(exp(log_actual - log_bound));
                    sums[slot] += exp(-log_actual);
                }
            }
            reciprocal_sum = reciprocal_sum.max(sums[0]).max(sums[1]);
        }
        Le3Report { k, d, eta, checked, violations, min_slack, reciprocal_sum }
    }
}

impl PiecewiseMonotone for InducedModel {
    fn support(&self) -> (f64, f64) {
        (A0, 1.0)
    }

    fn visit_branches(
        &self,
        targets: &[f64],
        visit: &mut dyn FnMut(BranchPreimages<'_>),
    ) -> Result<()> {
        let map = &self.map;
        let e = map.epsilon();
        let inside = |lo: f64, hi: f64| -> Vec<f64> {
            let mut ys = alloc::vec![lo];
            ys.extend(targets.iter().copied().filter(|&y| y > lo && y < hi));
            ys.push(hi);
            ys
        };
        // Right half first so that the deepest left branch is visited last.
        let right = [
            (BranchId::T4, (0.5, 0.625), (0.5, 1.0)),
            (BranchId::T5, (0.625, crate::map::S_R), (0.5 - e, 1.0)),
            (BranchId::T6, (crate::map::S_R, 1.0), (0.5 - e, 1.0)),
        ];
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (id, domain, (lo, hi)) in right {
            pts.clear();
            pts.extend(inside(lo, hi).into_iter().map(|y| (y, map.inverse_unchecked(id, y))));
            visit(BranchPreimages { domain, points: &pts });
        }
        let ys = inside(A0, 0.5 + e);
        let mut z = ys.clone();
        for n in 1..=self.n_cylinders() {
            pts.clear();
            pts.extend(ys.iter().zip(&z).map(|(&y, &zz)| (y, map.inverse_unchecked(BranchId::T2, zz))));
            visit(BranchPreimages { domain: self.cylinders.piece(n, PieceSide::Left), points: &pts });
            pts.clear();
            if n == 1 {
                pts.extend(inside(A0, 0.5).into_iter().map(|y| (y, map.inverse_unchecked(BranchId::T3, y))));
                visit(BranchPreimages { domain: (self.cylinders.a_prime[1], B), points: &pts });
            } else {
                pts.extend(ys.iter().zip(&z).map(|(&y, &zz)| (y, map.inverse_unchecked(BranchId::T3, zz))));
                visit(BranchPreimages { domain: self.cylinders.piece(n, PieceSide::Right), points: &pts });
            }
            if n < self.n_cylinders() {
                for zz in z.iter_mut() {
                    *zz = map.t1_inverse_unchecked(*zz);
                }
            }
        }
        Ok(())
    }

    fn uncovered_in(&self, lo: f64, hi: f64) -> f64 {
        let (r0, r1) = self.cylinders.residual();
        (hi.min(r1) - lo.max(r0)).max(0.0)
    }
}

/// The full map as a piecewise monotone system on `[0, 1]`.
impl PiecewiseMonotone for MapModel {
    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn visit_branches(
        &self,
        targets: &[f64],
        visit: &mut dyn FnMut(BranchPreimages<'_>),
    ) -> Result<()> {
        let mut pts = Vec::new();
        for br in &self.branches {
            let (lo, hi) = br.image;
            pts.clear();
            pts.push((lo, self.inverse_unchecked(br.id, lo)));
            for &y in targets.iter().filter(|&&y| y > lo && y < hi) {
                pts.push((y, self.inverse_unchecked(br.id, y)));
            }
            pts.push((hi, self.inverse_unchecked(br.id, hi)));
            visit(BranchPreimages { domain: br.domain, points: &pts });
        }
        Ok(())
    }

    fn uncovered_in(&self, _lo: f64, _hi: f64) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(a: f64, e: f64, n: usize) -> InducedModel {
        InducedModel::new(MapModel::build(a, e).unwrap(), n, n).unwrap()
    }

    #[test]
    fn orbit_start_and_first_step() {
        let im = model(0.5, 0.0, 50);
        assert_eq!(im.orbit.b[0], 0.25);
        assert!((im.orbit.b[1] - 0.1424600727495).abs() < 1e-12);
        for k in 0..50 {
            assert!(im.orbit.b[k + 1] < im.orbit.b[k]);
            assert!((im.map.t1(im.orbit.b[k + 1]) - im.orbit.b[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_endpoints() {
        let im = model(0.5, 0.0, 40);
        assert_eq!(im.cylinders.a_prime[1], 7.0 / 16.0);
        let c = &im.cylinders;
        for n in 1..40 {
            assert!(c.a[n] > c.a[n - 1] && c.a[n] < 0.375);
            assert!(c.a_prime[n + 1] < c.a_prime[n] && c.a_prime[n] > 0.375);
        }
    }

    #[test]
    fn induced_eval_examples() {
        let im = model(0.5, 0.0, 100);
        let (y, n) = im.induced_eval(0.55).unwrap();
        assert!((y - 0.7).abs() < 1e-15 && n == 1);
        assert_eq!(im.induced_eval(0.5).unwrap(), (0.5, 1));
        let (y, n) = im.induced_eval(0.46).unwrap();
        assert!((y - 0.34).abs() < 1e-14 && n == 1);
        assert!(im.induced_eval(0.375).is_err());
    }

    #[test]
    fn oracle_examples() {
        let m = MapModel::build(0.5, 0.0).unwrap();
        assert_eq!(return_time_oracle(&m, 0.9, 10), Some(1));
        assert_eq!(return_time_oracle(&m, 0.3, 10), Some(1));
        let im = model(0.5, 0.05, 100);
        let (lo, hi) = im.cylinders.piece(7, PieceSide::Left);
        assert_eq!(return_time_oracle(&im.map, 0.5 * (lo + hi), 100), Some(7));
        // T(x) ∈ W_3 ⇒ return time 4.
        let (w0, w1) = im.orbit.gap(3);
        let x = im.map.inverse_unchecked(BranchId::T3, 0.5 * (w0 + w1));
        assert_eq!(return_time_oracle(&im.map, x, 100), Some(4));
        assert_eq!(im.cylinders.index(x), Some(4));
    }

    #[test]
    fn image_property() {
        for e in [0.0, 0.05] {
            let im = model(0.5, e, 60);
            for n in 1..=50 {
                for side in [PieceSide::Left, PieceSide::Right] {
                    let (lo, hi) = if n == 1 && side == PieceSide::Right {
                        (im.cylinders.a_prime[1], 0.5)
                    } else {
                        im.cylinders.piece(n, side)
                    };
                    let d = (hi - lo) * 1e-9;
                    let y0 = im.induced_eval(lo + d).unwrap().0;
                    let y1 = im.induced_eval(hi - d).unwrap().0;
                    let (ilo, ihi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
                    let top = if n == 1 && side == PieceSide::Right { 0.5 } else { 0.5 + e };
                    assert!((ilo - 0.25).abs() < 1e-6, "n={n} {side:?} lo {ilo}");
                    assert!((ihi - top).abs() < 1e-6, "n={n} {side:?} hi {ihi}");
                }
            }
        }
    }

    #[test]
    fn sublemma_alpha_half() {
        let im = model(0.5, 0.0, 2000);
        let r = sublemma_check(&im.orbit, 0.5);
        assert!((r.c - 1.0 / 9.0).abs() < 1e-15);
        assert!((r.d_nominal - 1.0).abs() < 1e-12);
        assert_eq!(r.violations, 0);
        assert!(r.d_empirical > 1.0);
        // b_k k^2 tends to 1 from above at this alpha.
        for k in [1000usize, 2000] {
            let v = im.orbit.b[k] * (k * k) as f64;
            assert!(v > 1.0 / 81.0 && v < 1.05);
        }
    }

    #[test]
    fn le3_trivial_first_term() {
        let im = model(0.5, 0.0, 200);
        let r = im.le3_derivative_check(5, 6, 4, 1.0);
        assert_eq!(r.violations, 0);
        assert!(r.min_slack > 4.0);
    }
}
