//! Holes between the two halves, the limiting hole ratio and mixture weights.
//!
//! `H_l = {x ∈ [0,1/2] : T(x) > 1/2}` is the single interval
//! `(T1^{-1}(1/2), T2^{-1}(1/2))` and `H_r = (s_r - ε/s, s_r + ε/s)` with
//! `s = (8/3)(1+2ε)`. For the induced map, with `q_j = T1^{-j}(1/2) ∈ W_j`,
//! the left hole has one piece in `Z_1` and two pieces in every `Z_n`, `n ≥ 2`:
//! `(a_{n-1}, T2^{-1}(q_{n-1}))` and `(T3^{-1}(q_{n-1}), a'_{n-1})`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::inducing::{InducedModel, PieceSide};
use crate::map::{BranchId, MapModel, Side, A0, B, S_R};
use crate::math::{abs, linear_fit};
use crate::pullback::{PullbackDensity, PullbackOptions, Pulled};
use crate::transfer::StepDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoleSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoleSystem {
    Full,
    Induced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolePiece {
    pub lo: f64,
    pub hi: f64,
    /// Cylinder and side for induced left holes.
    pub cylinder: Option<(usize, PieceSide)>,
}

impl HolePiece {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoleSet {
    pub side: HoleSide,
    pub system: HoleSystem,
    pub epsilon: f64,
    pub pieces: Vec<HolePiece>,
    /// `Σ_{n>N} (b_{n-2} - q_{n-1})`: gap length feeding unlisted pieces near `3/8`.
    pub tail_gap: f64,
    /// Lebesgue measure of the unlisted pieces is at most this.
    pub tail_bound: f64,
}

impl HoleSet {
    fn empty(side: HoleSide, system: HoleSystem, epsilon: f64) -> Self {
        Self { side, system, epsilon, pieces: Vec::new(), tail_gap: 0.0, tail_bound: 0.0 }
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Lebesgue measure of the listed pieces.
    pub fn length(&self) -> f64 {
        self.pieces.iter().map(HolePiece::len).sum()
    }
}

/// Right hole half-width `ε / ((8/3)(1+2ε))`.
fn right_half_width(map: &MapModel) -> f64 {
    map.epsilon() / map.params.spike_slope()
}

fn right_pieces(map: &MapModel) -> Vec<HolePiece> {
    let w = right_half_width(map);
    alloc::vec![
        HolePiece { lo: S_R - w, hi: S_R, cylinder: None },
        HolePiece { lo: S_R, hi: S_R + w, cylinder: None },
    ]
}

/// `H_l, H_r` of the full map.
pub fn full_holes(map: &MapModel) -> (HoleSet, HoleSet) {
    let e = map.epsilon();
    if e == 0.0 {
        return (
            HoleSet::empty(HoleSide::Left, HoleSystem::Full, e),
            HoleSet::empty(HoleSide::Right, HoleSystem::Full, e),
        );
    }
    let left = HolePiece {
        lo: map.t1_inverse_unchecked(B),
        hi: map.inverse_unchecked(BranchId::T2, B),
        cylinder: None,
    };
    let w = right_half_width(map);
    let right = HolePiece { lo: S_R - w, hi: S_R + w, cylinder: None };
    (
        HoleSet { pieces: alloc::vec![left], ..HoleSet::empty(HoleSide::Left, HoleSystem::Full, e) },
        HoleSet { pieces: alloc::vec![right], ..HoleSet::empty(HoleSide::Right, HoleSystem::Full, e) },
    )
}

/// `Ĥ_l, Ĥ_r` of the induced map over the resolved cylinders.
pub fn induced_holes(im: &InducedModel) -> (HoleSet, HoleSet) {
    let map = &im.map;
    let e = map.epsilon();
    let mut left = HoleSet::empty(HoleSide::Left, HoleSystem::Induced, e);
    let mut right = HoleSet::empty(HoleSide::Right, HoleSystem::Induced, e);
    if e == 0.0 {
        return (left, right);
    }
    right.pieces = right_pieces(map);
    let cyl = &im.cylinders;
    let n_max = cyl.count();
    left.pieces.push(HolePiece {
        lo: A0,
        hi: map.inverse_unchecked(BranchId::T2, B),
        cylinder: Some((1, PieceSide::Left)),
    });
    let mut q = B;
    for n in 2..=n_max {
        q = map.t1_inverse_unchecked(q);
        left.pieces.push(HolePiece {
            lo: cyl.a[n - 1],
            hi: map.inverse_unchecked(BranchId::T2, q),
            cylinder: Some((n, PieceSide::Left)),
        });
        left.pieces.push(HolePiece {
            lo: map.inverse_unchecked(BranchId::T3, q),
            hi: cyl.a_prime[n - 1],
            cylinder: Some((n, PieceSide::Right)),
        });
    }
    // Unlisted cylinders n > N: the hole fraction of W_{n-1} settles, so
    // Σ_{n>N} (b_{n-2} - q_{n-1}) ≈ φ b_{N-1} with φ read at n = N.
    let b = &im.orbit.b;
    let q_next = map.t1_inverse_unchecked(q);
    let (w_lo, w_hi) = (b[n_max], b[n_max - 1]);
    let phi = ((w_hi - q_next) / (w_hi - w_lo)).clamp(0.0, 1.0);
    left.tail_gap = phi * b[n_max - 1];
    let (r0, r1) = cyl.residual();
    left.tail_bound = r1 - r0;
    left.pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    (left, right)
}

/// `μ(H)` for a step density on `Δ`, including the estimated unlisted tail.
pub fn hole_measure(holes: &HoleSet, density: &StepDensity) -> f64 {
    let listed: f64 = holes.pieces.iter().map(|p| density.integrate(p.lo, p.hi)).sum();
    if holes.tail_gap == 0.0 {
        return listed;
    }
    let s2 = 4.0 * (1.0 + 2.0 * holes.epsilon);
    let rate = density.value_at_side(0.375, Side::Left) / s2
        + density.value_at_side(0.375, Side::Right) / 4.0;
    listed + rate * holes.tail_gap
}

/// `μ(H)` for a pull-back density on `[0, 1]`.
pub fn hole_measure_full(holes: &HoleSet, density: &PullbackDensity) -> f64 {
    holes.pieces.iter().map(|p| density.integrate(p.lo, p.hi)).sum()
}

/// Closed-form limiting hole ratio from `ε = 0` induced densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhrClosedForm {
    pub lhr: f64,
    /// `ĥ_r(s_r-)/|DT5| + ĥ_r(s_r+)/|DT6|`.
    pub numerator: f64,
    /// Sum over all left hole pieces, both sides of `3/8`.
    pub denominator: f64,
    /// The `T2`-side pieces alone.
    pub left_side_only: f64,
    /// Estimated contribution of cylinders beyond `N` to the denominator.
    pub tail: f64,
}

/// Largest relative denominator tail accepted by [`lhr_closed_form`].
pub const LHR_TAIL_LIMIT: f64 = 5e-3;

pub fn lhr_closed_form(
    hat_l: &StepDensity,
    hat_r: &StepDensity,
    im: &InducedModel,
) -> Result<LhrClosedForm> {
    let map = &im.map;
    if map.epsilon() != 0.0 {
        return Err(Error::Invalid("closed-form ratio uses the unperturbed system"));
    }
    let slope = map.params.spike_slope();
    let numerator = (hat_r.value_at_side(S_R, Side::Left) + hat_r.value_at_side(S_R, Side::Right)) / slope;
    let s2 = map.params.t2_slope();
    let b = &im.orbit.b;
    let cyl = &im.cylinders;
    let n_max = cyl.count();
    // Π_n = Π_{j=0}^{n-2} DT1(b_j), the T1-part of |DT̂| at the left ends.
    let mut pi = 1.0;
    let mut left = hat_l.value_at_side(A0, Side::Right) / s2;
    let mut right = 0.0;
    for n in 2..=n_max {
        pi *= map.dt1(b[n - 2]);
        left += hat_l.value_at_side(cyl.a[n - 1], Side::Right) / (s2 * pi);
        right += hat_l.value_at_side(cyl.a_prime[n - 1], Side::Left) / (4.0 * pi);
    }
    // Π_n |W_{n-1}| settles, so Σ_{n>N} 1/Π_n ≈ b_{N-1} / (Π_N |W_{N-1}|).
    let rate = hat_l.value_at_side(0.375, Side::Left) / s2 + hat_l.value_at_side(0.375, Side::Right) / 4.0;
    let tail = rate * b[n_max - 1] / (pi * (b[n_max - 2] - b[n_max - 1]));
    let denominator = left + right + tail;
    if !(denominator > 0.0) {
        return Err(Error::Invalid("left density vanishes on the hole endpoints"));
    }
    if tail > LHR_TAIL_LIMIT * denominator {
        return Err(Error::Truncation { what: "lhr denominator tail", bound: tail / denominator, limit: LHR_TAIL_LIMIT });
    }
    Ok(LhrClosedForm { lhr: numerator / denominator, numerator, denominator, left_side_only: left, tail })
}

/// One entry of the hole-ratio sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint {
    pub epsilon: f64,
    pub mu_l: f64,
    pub mu_r: f64,
    pub ratio: f64,
}

/// `μ̂_r(Ĥ_{r,ε}) / μ̂_l(Ĥ_{l,ε})` with the unperturbed induced densities.
pub fn induced_ratio(im: &InducedModel, hat_l: &StepDensity, hat_r: &StepDensity) -> RatioPoint {
    let (hl, hr) = induced_holes(im);
    let mu_l = hole_measure(&hl, hat_l);
    let mu_r = hole_measure(&hr, hat_r);
    RatioPoint { epsilon: im.epsilon(), mu_l, mu_r, ratio: mu_r / mu_l }
}

/// Intercept of a straight line through the last three points.
pub fn extrapolate(points: &[RatioPoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Invalid("extrapolation needs at least two points"));
    }
    let mut pts: Vec<RatioPoint> = points.to_vec();
    pts.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let tail = &pts[pts.len().saturating_sub(3)..];
    let xs: Vec<f64> = tail.iter().map(|p| p.epsilon).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.ratio).collect();
    Ok(linear_fit(&xs, &ys).1)
}

/// Weights of the limit density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureWeights {
    pub lhr: f64,
    pub lambda_hat: f64,
    pub lambda_p: f64,
    /// `c_{τ,p}` from `c_{τ,p}^{-1} = λ̂ c_{τ,l}^{-1} + (1-λ̂) c_{τ,r}^{-1}`.
    pub c_tau_p: f64,
}

pub fn mixture(lhr: f64, c_tau_l: f64, c_tau_r: f64) -> Result<MixtureWeights> {
    if !(lhr > 0.0 && lhr.is_finite()) {
        return Err(Error::Invalid("hole ratio must be positive and finite"));
    }
    let ok = |c: f64| c > 0.0 && c <= 1.0;
    if !ok(c_tau_l) || !ok(c_tau_r) {
        return Err(Error::Invalid("Kac constants must lie in (0, 1]"));
    }
    let lambda_hat = lhr / (1.0 + lhr);
    let lambda_p = lambda_hat * c_tau_r / (lambda_hat * c_tau_r + (1.0 - lambda_hat) * c_tau_l);
    let c_tau_p = 1.0 / (lambda_hat / c_tau_l + (1.0 - lambda_hat) / c_tau_r);
    Ok(MixtureWeights { lhr, lambda_hat, lambda_p, c_tau_p })
}

/// Largest relative disagreement between the two ratio estimators.
pub const LHR_AGREEMENT: f64 = 0.25;

/// Weights from the closed-form ratio, refused when the sweep estimate disagrees.
pub fn checked_mixture(
    closed: f64,
    extrapolated: f64,
    c_tau_l: f64,
    c_tau_r: f64,
) -> Result<MixtureWeights> {
    let rel = abs(closed - extrapolated) / closed;
    if !(rel <= LHR_AGREEMENT) {
        return Err(Error::Convergence { what: "hole ratio estimators disagree", residual: rel });
    }
    mixture(closed, c_tau_l, c_tau_r)
}

/// `λ_p h_l + (1-λ_p) h_r`.
pub fn h_p_mixture(w: &MixtureWeights, h_l: &PullbackDensity, h_r: &PullbackDensity) -> Result<PullbackDensity> {
    h_l.combine(w.lambda_p, h_r, 1.0 - w.lambda_p)
}

/// Pull-back of `ĥ_p = λ̂ ĥ_l + (1-λ̂) ĥ_r`.
pub fn h_p_pullback(
    w: &MixtureWeights,
    im: &InducedModel,
    hat_l: &StepDensity,
    hat_r: &StepDensity,
    opts: &PullbackOptions,
) -> Result<Pulled> {
    let hat = hat_l.combine(w.lambda_hat, hat_r, 1.0 - w.lambda_hat)?;
    Pulled::new(im, hat, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_holes_examples() {
        let m = MapModel::build(0.5, 0.0).unwrap();
        let (l, r) = full_holes(&m);
        assert!(l.is_empty() && r.is_empty());
        let e = 0.05;
        let m = MapModel::build(0.5, e).unwrap();
        let (l, r) = full_holes(&m);
        let p = l.pieces[0];
        assert!(p.lo < A0 && p.hi > A0);
        assert!((m.eval(p.lo).unwrap() - 0.5).abs() < 1e-14);
        assert!((m.eval(p.hi).unwrap() - 0.5).abs() < 1e-14);
        let w = r.length();
        assert!((w - 2.0 * e / ((8.0 / 3.0) * (1.0 + 2.0 * e))).abs() < 1e-15);
    }

    #[test]
    fn mixture_examples() {
        let w = mixture(1.0, 0.4, 0.4).unwrap();
        assert!((w.lambda_p - 0.5).abs() < 1e-15);
        let w = mixture(1e-12, 0.4, 1.0).unwrap();
        assert!(w.lambda_p < 1e-11);
        let (lhr, cl) = (1.7, 0.6);
        let w = mixture(lhr, cl, 1.0).unwrap();
        assert!((w.lambda_p / (1.0 - w.lambda_p) - lhr / cl).abs() < 1e-12);
        assert!((w.lambda_hat / (1.0 - w.lambda_hat) - lhr).abs() < 1e-12);
        assert!(mixture(0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn induced_hole_images_cross_half() {
        let im = InducedModel::new(MapModel::build(0.5, 0.05).unwrap(), 80, 80).unwrap();
        let (l, r) = induced_holes(&im);
        assert_eq!(r.pieces.len(), 2);
        for p in &l.pieces {
            let inner = 0.5 * (p.lo + p.hi);
            assert!(im.induced_eval(inner).unwrap().0 > 0.5);
        }
        for p in &r.pieces {
            let inner = 0.5 * (p.lo + p.hi);
            assert!(im.induced_eval(inner).unwrap().0 < 0.5);
        }
    }
}
