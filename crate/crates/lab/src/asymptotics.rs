//! Behaviour of the `ε = 0` densities near the neutral fixed point, and the
//! distortion bounds behind it.

use metastab_core::inducing::{sublemma_check, BoundaryOrbit, Le3Report, SublemmaReport};
use metastab_core::math::linear_fit;
use metastab_core::pullback::PullbackDensity;
use metastab_core::MapModel;

use crate::error::LabResult;
use crate::experiments::{Baseline, EpsilonOutcome};

pub const SLOPE_WINDOW: (f64, f64) = (1e-4, 1e-2);
/// Deeper window, closer to the asymptotic regime.
pub const DEEP_WINDOW: (f64, f64) = (1e-6, 1e-5);
pub const GROWTH_RANGE: (usize, usize) = (10, 500);
pub const SUBLEMMA_ALPHAS: [f64; 3] = [0.3, 0.5, 0.8];
pub const SUBLEMMA_DEPTH: usize = 10_000;
pub const LE3_GAPS: [usize; 3] = [5, 20, 100];
pub const LE3_SPAN: usize = 500;

#[derive(Debug, Clone)]
pub struct AsymptoticsReport {
    pub alpha: f64,
    /// Least-squares slope of `log h_l` against `log x` over [`SLOPE_WINDOW`].
    pub slope: f64,
    pub slope_deep: f64,
    /// `(min, max)` of `sup_{W_k} h_p / k` over [`GROWTH_RANGE`].
    pub growth: (f64, f64),
    pub sublemma: Vec<(f64, SublemmaReport)>,
    pub le3: Vec<Le3Report>,
    /// `max_k Σ_n 1/|DT^{(n-k)}| / k` over [`LE3_GAPS`].
    pub le3_constant: f64,
    /// `(ε, Σ_k k μ̂_ε(Z_k))` for every successful row.
    pub expected_return: Vec<(f64, f64)>,
    /// `(max - min) / min` of the above.
    pub expected_return_spread: f64,
    /// Sampled `sup |D²T̂| / (DT̂)²` at `ε = 0`.
    pub adler: f64,
}

/// Log-log slope of `h` over `n + 1` log-spaced points of `[lo, hi]`.
pub fn log_slope(h: &PullbackDensity, window: (f64, f64), n: usize) -> LabResult<f64> {
    let (l0, l1) = (window.0.ln(), window.1.ln());
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let lx = l0 + (l1 - l0) * i as f64 / n as f64;
        let v = h.eval_series(lx.exp(), 1e-5, 1_000_000)?.value;
        xs.push(lx);
        ys.push(v.ln());
    }
    Ok(linear_fit(&xs, &ys).0)
}

pub fn run_asymptotics(base: &Baseline, rows: &[EpsilonOutcome]) -> LabResult<AsymptoticsReport> {
    let h_l = &base.refs.left.h;
    let slope = log_slope(h_l, SLOPE_WINDOW, 40)?;
    let slope_deep = log_slope(h_l, DEEP_WINDOW, 20)?;
    let growth = base.h_p.growth_ratio(GROWTH_RANGE.0, GROWTH_RANGE.1);
    let mut sublemma = Vec::new();
    for a in SUBLEMMA_ALPHAS {
        let orbit = BoundaryOrbit::new(&MapModel::build(a, 0.0)?, SUBLEMMA_DEPTH)?;
        sublemma.push((a, sublemma_check(&orbit, a)));
    }
    let im = &base.refs.system.im;
    let d = sublemma_check(&im.orbit, base.alpha).d_empirical;
    let le3: Vec<Le3Report> = LE3_GAPS
        .iter()
        .filter(|&&k| k < im.orbit.depth())
        .map(|&k| im.le3_derivative_check(k, k + LE3_SPAN, 32, d))
        .collect();
    let le3_constant = le3.iter().map(|r| r.reciprocal_sum / r.k as f64).fold(0.0, f64::max);
    let expected_return: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|o| o.result.as_ref().ok().map(|r| (o.epsilon, r.kac.expected_return())))
        .collect();
    let (lo, hi) = expected_return
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    let expected_return_spread = if expected_return.is_empty() { f64::NAN } else { (hi - lo) / lo };
    let adler = im.adler_constant(im.n_cylinders(), 8);
    Ok(AsymptoticsReport {
        alpha: base.alpha,
        slope,
        slope_deep,
        growth,
        sublemma,
        le3,
        le3_constant,
        expected_return,
        expected_return_spread,
        adler,
    })
}

impl AsymptoticsReport {
    /// `key = value` text block.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "slope_window = [{:e}, {:e}]", SLOPE_WINDOW.0, SLOPE_WINDOW.1);
        let _ = writeln!(s, "slope = {}", self.slope);
        let _ = writeln!(s, "slope_deep_window = [{:e}, {:e}]", DEEP_WINDOW.0, DEEP_WINDOW.1);
        let _ = writeln!(s, "slope_deep = {}", self.slope_deep);
        let _ = writeln!(s, "growth_k_range = [{}, {}]", GROWTH_RANGE.0, GROWTH_RANGE.1);
        let _ = writeln!(s, "growth_min = {}", self.growth.0);
        let _ = writeln!(s, "growth_max = {}", self.growth.1);
        for (a, r) in &self.sublemma {
            let _ = writeln!(
                s,
                "sublemma alpha={a} checked={} violations={} c={} c_empirical={} d_empirical={}",
                r.checked, r.violations, r.c, r.c_empirical, r.d_empirical
            );
        }
        for r in &self.le3 {
            let _ = writeln!(
                s,
                "le3 k={} eta={} checked={} violations={} min_slack={} reciprocal_sum={}",
                r.k, r.eta, r.checked, r.violations, r.min_slack, r.reciprocal_sum
            );
        }
        let _ = writeln!(s, "le3_constant = {}", self.le3_constant);
        for (e, v) in &self.expected_return {
            let _ = writeln!(s, "expected_return eps={e} value={v}");
        }
        let _ = writeln!(s, "expected_return_spread = {}", self.expected_return_spread);
        let _ = writeln!(s, "adler = {}", self.adler);
        s
    }
}
