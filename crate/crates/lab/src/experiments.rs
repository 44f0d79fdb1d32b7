//! The ε-sweep and the tables built from it.

use std::time::Instant;

use metastab_core::holes::{
    checked_mixture, extrapolate, full_holes, h_p_mixture, h_p_pullback, hole_measure,
    hole_measure_full, induced_holes, induced_ratio, lhr_closed_form, LhrClosedForm,
    MixtureWeights, RatioPoint,
};
use metastab_core::inducing::InducedModel;
use metastab_core::pullback::{
    perturbed_density, reference_densities, KacConstants, L1Split, PullbackDensity, Pulled,
    References, SolveOptions,
};
use metastab_core::transfer::{lasota_yorke_fit, test_family, LasotaYorkeFit};
use metastab_core::MapModel;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::LabResult;

/// `T1^{-1}(1/2)` for every ε of the schedule: the left hole endpoints in `W_1`.
pub fn hole_marks(alpha: f64, schedule: &[f64]) -> LabResult<Vec<f64>> {
    let mut out = Vec::with_capacity(schedule.len());
    for &e in schedule {
        out.push(MapModel::build(alpha, e)?.t1_inverse(0.5)?);
    }
    Ok(out)
}

/// Everything computed once at `ε = 0`.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub alpha: f64,
    pub opts: SolveOptions,
    pub refs: References,
    pub closed: LhrClosedForm,
    /// `μ̂_r(Ĥ_r) / μ̂_l(Ĥ_l)` with the unperturbed induced densities.
    pub sweep: Vec<RatioPoint>,
    pub extrapolated: f64,
    pub weights: MixtureWeights,
    /// `λ_p h_l + (1-λ_p) h_r`.
    pub h_p: PullbackDensity,
    /// Pull-back of `ĥ_p = λ̂ ĥ_l + (1-λ̂) ĥ_r`.
    pub h_p_pulled: Pulled,
}

impl Baseline {
    pub fn compute(cfg: &ExperimentConfig) -> LabResult<Self> {
        let alpha = cfg.alpha;
        let opts = cfg.solve_options(hole_marks(alpha, &cfg.eps_schedule)?);
        let t = Instant::now();
        let refs = reference_densities(alpha, &opts)?;
        log::info!(
            "references alpha={alpha} cylinders={} leak={:e} c_tau_l={:.6} c_tau_r={:.6} ({:.1?})",
            refs.system.im.n_cylinders(),
            refs.system.leak_total,
            refs.left.kac.c_tau,
            refs.right.kac.c_tau,
            t.elapsed()
        );
        let closed = lhr_closed_form(&refs.left.hat, &refs.right.hat, &refs.system.im)?;
        let sweep = cfg
            .eps_schedule
            .par_iter()
            .map(|&e| -> LabResult<RatioPoint> {
                let map = MapModel::build(alpha, e)?;
                let n = opts.cylinders_for(&map)?;
                let im = InducedModel::new(map, n, n)?;
                Ok(induced_ratio(&im, &refs.left.hat, &refs.right.hat))
            })
            .collect::<LabResult<Vec<_>>>()?;
        let extrapolated = extrapolate(&sweep)?;
        let weights =
            checked_mixture(closed.lhr, extrapolated, refs.left.kac.c_tau, refs.right.kac.c_tau)?;
        let h_p = h_p_mixture(&weights, &refs.left.h, &refs.right.h)?;
        let h_p_pulled =
            h_p_pullback(&weights, &refs.system.im, &refs.left.hat, &refs.right.hat, &opts.pullback)?;
        log::info!(
            "lhr closed={:.6} extrapolated={:.6} lambda_p={:.6} c_tau_p={:.6}",
            closed.lhr,
            extrapolated,
            weights.lambda_p,
            weights.c_tau_p
        );
        Ok(Self { alpha, opts, refs, closed, sweep, extrapolated, weights, h_p, h_p_pulled })
    }

    /// `λ_p / (1 - λ_p)`.
    pub fn ratio_target(&self) -> f64 {
        self.weights.lambda_p / (1.0 - self.weights.lambda_p)
    }

    /// `L¹` distance between `h_p` here and `h_p` rebuilt on a `Δ` grid half as
    /// fine, with the same weights: the discretization error scale.
    pub fn grid_tolerance(&self) -> LabResult<f64> {
        let mut opts = self.opts.clone();
        opts.grid_m /= 2;
        let refs = reference_densities(self.alpha, &opts)?;
        let coarse = h_p_mixture(&self.weights, &refs.left.h, &refs.right.h)?;
        Ok(coarse.l1_split(&self.h_p)?.total())
    }

    /// Induced start vector for the perturbed solves.
    fn start(&self) -> LabResult<metastab_core::transfer::StepDensity> {
        let w = self.weights.lambda_hat;
        Ok(self.refs.left.hat.combine(w, &self.refs.right.hat, 1.0 - w)?)
    }
}

/// Hole measures for one ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleRecord {
    /// `μ_l(H_l)`, `μ_r(H_r)` with the `ε = 0` densities.
    pub mu_l_ref: f64,
    pub mu_r_ref: f64,
    /// Same on the induced side with `ĥ_l`, `ĥ_r`.
    pub mu_hat_l_ref: f64,
    pub mu_hat_r_ref: f64,
    /// `μ_ε(H_l)`, `μ_ε(H_r)`.
    pub mu_eps_l: f64,
    pub mu_eps_r: f64,
    /// `μ̂_ε(Ĥ_l)`, `μ̂_ε(Ĥ_r)`.
    pub mu_hat_eps_l: f64,
    pub mu_hat_eps_r: f64,
    /// Lebesgue bound on the unlisted left hole pieces near `3/8`.
    pub tail_bound: f64,
}

/// Everything measured at one ε.
#[derive(Debug, Clone)]
pub struct EpsilonRecord {
    pub epsilon: f64,
    pub n_cylinders: usize,
    pub leak_total: f64,
    pub kac: KacConstants,
    pub raw_integral: f64,
    pub split: L1Split,
    pub holes: HoleRecord,
    pub ly: LasotaYorkeFit,
    /// `∫_0^{1/2} h_ε`.
    pub left_mass: f64,
    pub runtime_ms: u64,
}

impl EpsilonRecord {
    /// `μ_ε(H_l) / (c_{τ,ε} μ̂_ε(Ĥ_l))` before renormalization; one in theory.
    pub fn identity_l(&self) -> f64 {
        self.holes.mu_eps_l * self.raw_integral / (self.kac.c_tau * self.holes.mu_hat_eps_l)
    }

    pub fn identity_r(&self) -> f64 {
        self.holes.mu_eps_r * self.raw_integral / (self.kac.c_tau * self.holes.mu_hat_eps_r)
    }

    pub fn ratio_full(&self) -> f64 {
        self.holes.mu_eps_r / self.holes.mu_eps_l
    }

    pub fn ratio_induced(&self) -> f64 {
        self.holes.mu_hat_eps_r / self.holes.mu_hat_eps_l
    }

    /// Target ratio `μ_r(H_{r,ε}) / μ_l(H_{l,ε})`.
    pub fn ratio_ref(&self) -> f64 {
        self.holes.mu_r_ref / self.holes.mu_l_ref
    }
}

/// One sweep row; a failure keeps its ε and the reason.
#[derive(Debug, Clone)]
pub struct EpsilonOutcome {
    pub epsilon: f64,
    pub result: Result<EpsilonRecord, String>,
}

impl EpsilonOutcome {
    pub fn status(&self) -> String {
        match &self.result {
            Ok(_) => "ok".into(),
            Err(e) => e.clone(),
        }
    }
}

fn measure_epsilon(cfg: &ExperimentConfig, base: &Baseline, epsilon: f64) -> LabResult<EpsilonRecord> {
    let t = Instant::now();
    let (sys, p) = perturbed_density(base.alpha, epsilon, &base.opts, Some(&base.start()?))?;
    let split = p.h.l1_split(&base.h_p)?;
    let (hl, hr) = full_holes(&sys.im.map);
    let (il, ir) = induced_holes(&sys.im);
    let refs = &base.refs;
    let holes = HoleRecord {
        mu_l_ref: hole_measure_full(&hl, &refs.left.h),
        mu_r_ref: hole_measure_full(&hr, &refs.right.h),
        mu_hat_l_ref: hole_measure(&il, &refs.left.hat),
        mu_hat_r_ref: hole_measure(&ir, &refs.right.hat),
        mu_eps_l: hole_measure_full(&hl, &p.h),
        mu_eps_r: hole_measure_full(&hr, &p.h),
        mu_hat_eps_l: hole_measure(&il, &p.hat),
        mu_hat_eps_r: hole_measure(&ir, &p.hat),
        tail_bound: il.tail_bound,
    };
    let family = test_family(sys.grid(), cfg.ly_family, cfg.seed);
    let ly = lasota_yorke_fit(&sys.op, &family)?;
    Ok(EpsilonRecord {
        epsilon,
        n_cylinders: sys.im.n_cylinders(),
        leak_total: sys.leak_total,
        kac: p.kac,
        raw_integral: p.raw_integral,
        split,
        holes,
        ly,
        left_mass: p.h.integrate(0.0, 0.5),
        runtime_ms: t.elapsed().as_millis() as u64,
    })
}

/// All rows of the schedule, in schedule order; rows fail independently.
pub fn run_sweep(cfg: &ExperimentConfig, base: &Baseline) -> Vec<EpsilonOutcome> {
    cfg.eps_schedule
        .par_iter()
        .map(|&epsilon| {
            let result = measure_epsilon(cfg, base, epsilon).map_err(|e| e.to_string());
            match &result {
                Ok(r) => log::info!(
                    "eps={epsilon} status=ok l1={:.6} c_tau={:.6} ({} ms)",
                    r.split.total(),
                    r.kac.c_tau,
                    r.runtime_ms
                ),
                Err(e) => log::warn!("eps={epsilon} status=failed reason={e}"),
            }
            EpsilonOutcome { epsilon, result }
        })
        .collect()
}

/// Row of `converge.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub status: String,
    pub l1_distance_h_eps_h_p: Option<f64>,
    /// Region (I): on `Δ`.
    pub l1_delta: Option<f64>,
    /// Region (II): where the two densities sit in different gaps.
    pub l1_cross_level: Option<f64>,
    /// Region (III): where both sit in the same gap.
    pub l1_same_level: Option<f64>,
    pub l1_unresolved: Option<f64>,
    pub ratio_full: Option<f64>,
    pub ratio_induced: Option<f64>,
    pub c_tau_eps: Option<f64>,
    pub c_tau_p: f64,
    pub c_tau_gap: Option<f64>,
    pub expected_return: Option<f64>,
    pub lambda_p: f64,
    /// `λ_p / (1 - λ_p)`.
    pub lambda_p_target: f64,
    pub left_mass: Option<f64>,
    pub ly_beta: Option<f64>,
    pub ly_b: Option<f64>,
    pub n_cylinders: Option<usize>,
    pub tail_bound: Option<f64>,
    pub leak_total: Option<f64>,
    pub renorm_magnitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

pub fn run_convergence(cfg: &ExperimentConfig, base: &Baseline, rows: &[EpsilonOutcome]) -> Vec<SweepRow> {
    let w = &base.weights;
    rows.iter()
        .map(|o| {
            let r = o.result.as_ref().ok();
            let f = |g: &dyn Fn(&EpsilonRecord) -> f64| r.map(g);
            SweepRow {
                epsilon: o.epsilon,
                status: o.status(),
                l1_distance_h_eps_h_p: f(&|r| r.split.total()),
                l1_delta: f(&|r| r.split.delta),
                l1_cross_level: f(&|r| r.split.cross_level),
                l1_same_level: f(&|r| r.split.same_level),
                l1_unresolved: f(&|r| r.split.unresolved),
                ratio_full: f(&|r| r.ratio_full()),
                ratio_induced: f(&|r| r.ratio_induced()),
                c_tau_eps: f(&|r| r.kac.c_tau),
                c_tau_p: w.c_tau_p,
                c_tau_gap: f(&|r| (r.kac.c_tau - w.c_tau_p).abs()),
                expected_return: f(&|r| r.kac.expected_return()),
                lambda_p: w.lambda_p,
                lambda_p_target: base.ratio_target(),
                left_mass: f(&|r| r.left_mass),
                ly_beta: f(&|r| r.ly.beta),
                ly_b: f(&|r| r.ly.b),
                n_cylinders: r.map(|r| r.n_cylinders),
                tail_bound: f(&|r| r.kac.tail_bound),
                leak_total: f(&|r| r.leak_total),
                renorm_magnitude: f(&|r| (r.raw_integral - 1.0).abs()),
                runtime_ms: if cfg.timings { r.map(|r| r.runtime_ms) } else { None },
            }
        })
        .collect()
}

/// Row of `ratio.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub epsilon: f64,
    pub status: String,
    /// With the `ε = 0` densities `h_l`, `h_r`.
    pub mu_l_hole: f64,
    pub mu_r_hole: f64,
    pub ratio: f64,
    pub ratio_target: f64,
    pub rel_error: f64,
    /// Induced holes with `ĥ_l`, `ĥ_r`; tends to the limiting hole ratio.
    pub mu_hat_l_hole: f64,
    pub mu_hat_r_hole: f64,
    pub ratio_lhr: f64,
    /// With `h_ε` and `ĥ_ε`.
    pub mu_eps_l_hole: Option<f64>,
    pub mu_eps_r_hole: Option<f64>,
    pub ratio_full: Option<f64>,
    pub mu_hat_eps_l_hole: Option<f64>,
    pub mu_hat_eps_r_hole: Option<f64>,
    pub ratio_induced: Option<f64>,
    pub identity_l: Option<f64>,
    pub identity_r: Option<f64>,
    pub c_tau_eps: Option<f64>,
    pub hole_tail_bound: Option<f64>,
}

pub fn run_ratio(base: &Baseline, rows: &[EpsilonOutcome]) -> LabResult<Vec<RatioRow>> {
    let target = base.ratio_target();
    let refs = &base.refs;
    let mut out = Vec::with_capacity(rows.len());
    for o in rows {
        // The reference columns need no perturbed solve, so they survive a failed row.
        let map = MapModel::build(base.alpha, o.epsilon)?;
        let (hl, hr) = full_holes(&map);
        let mu_l = hole_measure_full(&hl, &refs.left.h);
        let mu_r = hole_measure_full(&hr, &refs.right.h);
        let p = base.sweep.iter().find(|p| p.epsilon == o.epsilon);
        let (mhl, mhr, lhr) = p.map_or((f64::NAN, f64::NAN, f64::NAN), |p| (p.mu_l, p.mu_r, p.ratio));
        let r = o.result.as_ref().ok();
        let f = |g: &dyn Fn(&EpsilonRecord) -> f64| r.map(g);
        out.push(RatioRow {
            epsilon: o.epsilon,
            status: o.status(),
            mu_l_hole: mu_l,
            mu_r_hole: mu_r,
            ratio: mu_r / mu_l,
            ratio_target: target,
            rel_error: (mu_r / mu_l - target).abs() / target,
            mu_hat_l_hole: mhl,
            mu_hat_r_hole: mhr,
            ratio_lhr: lhr,
            mu_eps_l_hole: f(&|r| r.holes.mu_eps_l),
            mu_eps_r_hole: f(&|r| r.holes.mu_eps_r),
            ratio_full: f(&|r| r.ratio_full()),
            mu_hat_eps_l_hole: f(&|r| r.holes.mu_hat_eps_l),
            mu_hat_eps_r_hole: f(&|r| r.holes.mu_hat_eps_r),
            ratio_induced: f(&|r| r.ratio_induced()),
            identity_l: f(&|r| r.identity_l()),
            identity_r: f(&|r| r.identity_r()),
            c_tau_eps: f(&|r| r.kac.c_tau),
            hole_tail_bound: f(&|r| r.holes.tail_bound),
        });
    }
    Ok(out)
}
