//! The perturbed intermittent map `T_ε` on `[0, 1]`.
//!
//! Six monotone branches on the partition
//! `0 < 1/4 < 3/8 < 1/2 < 5/8 < 13/16 < 1`:
//!
//! | branch | domain        | formula                                   |
//! |--------|---------------|-------------------------------------------|
//! | `T1`   | `[0, 1/4]`    | `x + 4^α (1+4ε) x^(1+α)`                  |
//! | `T2`   | `[1/4, 3/8]`  | `-4(1+2ε) x + 3/2 + 3ε`                   |
//! | `T3`   | `[3/8, 1/2]`  | `4x - 3/2`                                |
//! | `T4`   | `[1/2, 5/8]`  | `4x - 3/2`                                |
//! | `T5`   | `[5/8, 13/16]`| `1 - (8/3)(1+2ε)(x - 5/8)`                |
//! | `T6`   | `[13/16, 1]`  | `(1/2 - ε) + (8/3)(1+2ε)(x - 13/16)`      |
//!
//! `T4..T6` form the right half: one spike of depth exactly `ε` at
//! `s_r = 13/16`. At `ε = 0` each right branch maps onto `[1/2, 1]` and the
//! slopes satisfy `1/4 + 3/8 + 3/8 = 1`, so Lebesgue measure on `[1/2, 1]`
//! is invariant.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, exp, ln, pow1p, powf};

/// Partition points of the monotonicity partition `I_1..I_6`.
pub const PARTITION: [f64; 7] = [0.0, 0.25, 0.375, 0.5, 0.625, 0.8125, 1.0];
/// Boundary between the two halves.
pub const B: f64 = 0.5;
/// Location of the right spike.
pub const S_R: f64 = 0.8125;
/// Left end of the inducing domain `Δ = [1/4, 1]`.
pub const A0: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    pub alpha: f64,
    pub epsilon: f64,
}

impl MapParams {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        let ok = alpha > 0.0 && alpha < 1.0 && (0.0..=0.125).contains(&epsilon);
        if !ok {
            return Err(Error::Parameter { alpha, epsilon });
        }
        Ok(Self { alpha, epsilon })
    }

    /// `4^α (1+4ε)`, the coefficient of `x^(1+α)` in `T1`.
    pub fn t1_coeff(&self) -> f64 {
        powf(4.0, self.alpha) * (1.0 + 4.0 * self.epsilon)
    }

    /// `|DT2| = 4(1+2ε)`.
    pub fn t2_slope(&self) -> f64 {
        4.0 * (1.0 + 2.0 * self.epsilon)
    }

    /// `|DT5| = |DT6| = (8/3)(1+2ε)`.
    pub fn spike_slope(&self) -> f64 {
        8.0 / 3.0 * (1.0 + 2.0 * self.epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BranchId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

impl BranchId {
    pub const ALL: [BranchId; 6] = [
        BranchId::T1,
        BranchId::T2,
        BranchId::T3,
        BranchId::T4,
        BranchId::T5,
        BranchId::T6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            BranchId::T1 => "T1",
            BranchId::T2 => "T2",
            BranchId::T3 => "T3",
            BranchId::T4 => "T4",
            BranchId::T5 => "T5",
            BranchId::T6 => "T6",
        }
    }
}

/// Which one-sided limit to use at a partition point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub id: BranchId,
    pub domain: (f64, f64),
    pub orientation: Orientation,
    /// Image `(lo, hi)` with `lo < hi`.
    pub image: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapModel {
    pub params: MapParams,
    pub branches: [Branch; 6],
}

impl MapModel {
    pub fn new(params: MapParams) -> Self {
        let e = params.epsilon;
        let dom = |i: usize| (PARTITION[i], PARTITION[i + 1]);
        use Orientation::*;
        let branches = [
            Branch { id: BranchId::T1, domain: dom(0), orientation: Increasing, image: (0.0, 0.5 + e) },
            Branch { id: BranchId::T2, domain: dom(1), orientation: Decreasing, image: (0.0, 0.5 + e) },
            Branch { id: BranchId::T3, domain: dom(2), orientation: Increasing, image: (0.0, 0.5) },
            Branch { id: BranchId::T4, domain: dom(3), orientation: Increasing, image: (0.5, 1.0) },
            Branch { id: BranchId::T5, domain: dom(4), orientation: Decreasing, image: (0.5 - e, 1.0) },
            Branch { id: BranchId::T6, domain: dom(5), orientation: Increasing, image: (0.5 - e, 1.0) },
        ];
        Self { params, branches }
    }

    /// Convenience constructor validating `(α, ε)`.
    pub fn build(alpha: f64, epsilon: f64) -> Result<Self> {
        Ok(Self::new(MapParams::new(alpha, epsilon)?))
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn branch(&self, id: BranchId) -> &Branch {
        &self.branches[id.index()]
    }

    /// Branch active at `x`. Partition points go to the right branch, except `x = 1`.
    pub fn branch_at(&self, x: f64) -> Result<BranchId> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { x });
        }
        let i = PARTITION[1..6].iter().take_while(|&&q| q <= x).count();
        Ok(BranchId::ALL[i])
    }

    /// Branch whose closed domain contains `x` from the given side.
    pub fn branch_at_side(&self, x: f64, side: Side) -> Result<BranchId> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { x });
        }
        let i = match side {
            Side::Right => PARTITION[1..6].iter().take_while(|&&q| q <= x).count(),
            Side::Left => PARTITION[1..6].iter().take_while(|&&q| q < x).count(),
        };
        Ok(BranchId::ALL[i])
    }

    /// Evaluate branch `id` by its formula (no domain check).
    #[inline]
    pub fn eval_branch(&self, id: BranchId, x: f64) -> f64 {
        let p = &self.params;
        let e = p.epsilon;
        match id {
            BranchId::T1 => x + p.t1_coeff() * pow1p(x, p.alpha),
            BranchId::T2 => -p.t2_slope() * x + 1.5 + 3.0 * e,
            BranchId::T3 | BranchId::T4 => 4.0 * x - 1.5,
            BranchId::T5 => 1.0 - p.spike_slope() * (x - 0.625),
            BranchId::T6 => (0.5 - e) + p.spike_slope() * (x - S_R),
        }
    }

    /// Signed derivative of branch `id` at `x` (no domain check).
    #[inline]
    pub fn deriv_branch(&self, id: BranchId, x: f64) -> f64 {
        let p = &self.params;
        match id {
            BranchId::T1 => self.dt1(x),
            BranchId::T2 => -p.t2_slope(),
            BranchId::T3 | BranchId::T4 => 4.0,
            BranchId::T5 => -p.spike_slope(),
            BranchId::T6 => p.spike_slope(),
        }
    }

    /// `T1,ε(x)`.
    #[inline]
    pub fn t1(&self, x: f64) -> f64 {
        self.eval_branch(BranchId::T1, x)
    }

    /// `DT1,ε(x) = 1 + (1+α) 4^α (1+4ε) x^α`.
    #[inline]
    pub fn dt1(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let p = &self.params;
        1.0 + (1.0 + p.alpha) * p.t1_coeff() * exp(p.alpha * ln(x))
    }

    /// `D²T1,ε(x) = α(1+α) 4^α (1+4ε) x^(α-1)`.
    #[inline]
    pub fn d2t1(&self, x: f64) -> f64 {
        let p = &self.params;
        p.alpha * (1.0 + p.alpha) * p.t1_coeff() * exp((p.alpha - 1.0) * ln(x))
    }

    /// `T_ε(x)` for `x ∈ [0, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let id = self.branch_at(x)?;
        Ok(self.eval_branch(id, x).clamp(0.0, 1.0))
    }

    /// Signed derivative at `x`. Interior partition points need a side.
    pub fn deriv(&self, x: f64, side: Option<Side>) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { x });
        }
        let on_partition = PARTITION[1..6].contains(&x);
        let id = match (on_partition, side) {
            (true, None) => return Err(Error::Ambiguous { x }),
            (true, Some(s)) => self.branch_at_side(x, s)?,
            (false, Some(s)) => self.branch_at_side(x, s)?,
            (false, None) => self.branch_at(x)?,
        };
        Ok(self.deriv_branch(id, x))
    }

    /// The unique `x` in the domain of `id` with `T(x) = y`.
    pub fn branch_inverse(&self, id: BranchId, y: f64) -> Result<f64> {
        let (lo, hi) = self.branch(id).image;
        let tol = 1e-14;
        if !(y >= lo - tol && y <= hi + tol) {
            return Err(Error::Range { y, lo, hi });
        }
        let y = y.clamp(lo, hi);
        Ok(self.inverse_unchecked(id, y))
    }

    /// Branch inverse without the range check; `y` must lie in the image.
    #[inline]
    pub fn inverse_unchecked(&self, id: BranchId, y: f64) -> f64 {
        let p = &self.params;
        let e = p.epsilon;
        match id {
            BranchId::T1 => self.t1_inverse_unchecked(y),
            BranchId::T2 => (1.5 + 3.0 * e - y) / p.t2_slope(),
            BranchId::T3 | BranchId::T4 => (y + 1.5) / 4.0,
            BranchId::T5 => 0.625 + (1.0 - y) / p.spike_slope(),
            BranchId::T6 => S_R + (y - (0.5 - e)) / p.spike_slope(),
        }
    }

    /// `T1,ε^{-1}(y)` for `0 ≤ y ≤ 1/2 + ε`.
    pub fn t1_inverse(&self, y: f64) -> Result<f64> {
        self.branch_inverse(BranchId::T1, y)
    }

    /// Safeguarded Newton on `x + k x^(1+α) = y`, bracket `[0, min(y, 1/4)]`.
    ///
    /// `T1` is increasing and convex, so Newton iterates stay inside the
    /// bracket except near round-off; bisection takes over when they leave it.
    pub fn t1_inverse_unchecked(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let a = self.params.alpha;
        let k = self.params.t1_coeff();
        let mut lo = 0.0_f64;
        let mut hi = y.min(A0);
        if y >= self.t1(A0) * (1.0 - 4.0 * f64::EPSILON) {
            return A0;
        }
        // x ≈ y / (1 + k y^α) is within a few percent for small y.
        let mut x = (y / (1.0 + k * exp(a * ln(y)))).clamp(lo, hi);
        for _ in 0..100 {
            let f = self.t1(x) - y;
            if f == 0.0 {
                return x;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - f / self.dt1(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if abs(next - x) <= 4.0 * f64::EPSILON * next {
                return next;
            }
            if hi - lo <= 2.0 * f64::EPSILON * hi {
                return next;
            }
            x = next;
        }
        x
    }

    /// Orbit `[x, T(x), …, T^n(x)]`.
    pub fn iterate(&self, x: f64, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n + 1);
        let mut cur = x;
        self.branch_at(cur)?;
        out.push(cur);
        for _ in 0..n {
            cur = self.eval(cur)?;
            out.push(cur);
        }
        Ok(out)
    }

    /// `|D²T| / (DT)²` at `x`; zero on the linear branches, unbounded as `x → 0` on `T1`.
    pub fn adler_ratio(&self, x: f64) -> Result<f64> {
        match self.branch_at(x)? {
            BranchId::T1 => {
                if x <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                let d = self.dt1(x);
                Ok(self.d2t1(x) / (d * d))
            }
            _ => Ok(0.0),
        }
    }

    /// Sampled supremum of the Adler ratio of `T1` over `[lower, 1/4]`.
    ///
    /// The ratio behaves like `x^(α-1)` near the neutral point, so the
    /// supremum over the whole branch is infinite; the induced map is where
    /// the bound holds (see `InducedModel::adler_constant`).
    pub fn adler_t1_from(&self, lower: f64, samples: usize) -> f64 {
        let (l0, l1) = (ln(lower), ln(A0));
        (0..=samples)
            .map(|i| {
                let x = exp(l0 + (l1 - l0) * i as f64 / samples as f64);
                let d = self.dt1(x);
                self.d2t1(x) / (d * d)
            })
            .fold(0.0, f64::max)
    }

    /// Value of the map at `x` approached from `side` (for continuity checks).
    pub fn eval_side(&self, x: f64, side: Side) -> Result<f64> {
        let id = self.branch_at_side(x, side)?;
        Ok(self.eval_branch(id, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(a: f64, e: f64) -> MapModel {
        MapModel::build(a, e).unwrap()
    }

    #[test]
    fn params_are_validated() {
        assert!(MapParams::new(0.0, 0.0).is_err());
        assert!(MapParams::new(1.0, 0.0).is_err());
        assert!(MapParams::new(0.5, -0.01).is_err());
        assert!(MapParams::new(0.5, 0.2).is_err());
        assert!(MapParams::new(0.5, 0.125).is_ok());
    }

    #[test]
    fn branch_values_at_partition_points() {
        let m = map(0.5, 0.0);
        assert!((m.eval_branch(BranchId::T1, 0.25) - 0.5).abs() < 1e-15);
        let m = map(0.5, 0.1);
        assert!((m.eval_branch(BranchId::T2, 0.25) - 0.6).abs() < 1e-15);
        for e in [0.0, 0.05, 0.125] {
            let m = map(0.3, e);
            assert!(m.eval_branch(BranchId::T2, 0.375).abs() < 1e-15);
            assert!(m.eval_branch(BranchId::T3, 0.375).abs() < 1e-15);
            assert!((m.eval(S_R).unwrap() - (0.5 - e)).abs() < 1e-15);
        }
    }

    #[test]
    fn eval_examples() {
        let m = map(0.5, 0.0);
        assert_eq!(m.eval(0.0).unwrap(), 0.0);
        assert_eq!(m.eval(0.5).unwrap(), 0.5);
        assert_eq!(m.eval(1.0).unwrap(), 1.0);
        let expect = 0.1 + 2.0 * libm::pow(0.1, 1.5);
        assert!((m.eval(0.1).unwrap() - expect).abs() < 1e-15);
        assert!((m.eval(0.1).unwrap() - 0.16325).abs() < 1e-5);
        assert!(m.eval(1.5).is_err());
        assert!(m.eval(-0.1).is_err());
    }

    #[test]
    fn derivative_examples() {
        let m = map(0.5, 0.0);
        assert_eq!(m.deriv(0.0, None).unwrap(), 1.0);
        assert_eq!(m.deriv(0.45, None).unwrap(), 4.0);
        assert!((m.deriv(0.7, None).unwrap() + 8.0 / 3.0).abs() < 1e-15);
        assert!(matches!(m.deriv(0.375, None), Err(Error::Ambiguous { .. })));
        assert_eq!(m.deriv(0.375, Some(Side::Right)).unwrap(), 4.0);
        assert_eq!(m.deriv(0.375, Some(Side::Left)).unwrap(), -4.0);
    }

    #[test]
    fn inverse_examples() {
        let m = map(0.5, 0.0);
        assert_eq!(m.branch_inverse(BranchId::T3, 0.25).unwrap(), 7.0 / 16.0);
        assert_eq!(m.branch_inverse(BranchId::T2, 0.25).unwrap(), 5.0 / 16.0);
        assert!(m.branch_inverse(BranchId::T3, 0.75).is_err());
        assert_eq!(m.t1_inverse(0.0).unwrap(), 0.0);
        let m = map(0.5, 0.07);
        assert_eq!(m.t1_inverse(0.57).unwrap(), 0.25);
    }

    #[test]
    fn t1_inverse_matches_bisection_oracle() {
        // Plain bisection, independent of the Newton path.
        let m = map(0.5, 0.0);
        let f = |x: f64| x + 2.0 * x * libm::sqrt(x) - 0.25;
        let (mut lo, mut hi) = (0.0_f64, 0.25_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        let x = m.t1_inverse(0.25).unwrap();
        assert!((x - lo).abs() < 1e-13);
        assert!((x - 0.14246).abs() < 1e-5);
        assert!(m.t1(x) - 0.25 < 1e-14);
    }

    #[test]
    fn iterate_examples() {
        let m = map(0.5, 0.0);
        assert!(m.iterate(0.5, 5).unwrap().iter().all(|&v| v == 0.5));
        assert!(m.iterate(0.0, 3).unwrap().iter().all(|&v| v == 0.0));
        let o = m.iterate(0.3, 1).unwrap();
        assert!((o[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn adler_on_linear_branches_is_zero() {
        let m = map(0.5, 0.0);
        for x in [0.3, 0.4, 0.55, 0.7, 0.9] {
            assert_eq!(m.adler_ratio(x).unwrap(), 0.0);
        }
        // x^(α-1) blow-up near the neutral point.
        assert!(m.adler_ratio(1e-8).unwrap() > m.adler_ratio(1e-4).unwrap());
    }
}
