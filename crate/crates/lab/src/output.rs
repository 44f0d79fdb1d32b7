//! CSV tables and text summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use metastab_core::inducing::InducedModel;
use metastab_core::pullback::PullbackDensity;
use metastab_core::MapModel;
use serde::Serialize;

use crate::error::{LabError, LabResult};
use crate::experiments::{Baseline, SweepRow};

pub fn ensure_dir(dir: &Path) -> LabResult<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> LabResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> LabResult<()> {
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub x_lo: f64,
    pub x_hi: f64,
    pub value: f64,
    pub region_tag: String,
}

pub fn density_rows(h: &PullbackDensity) -> Vec<DensityRow> {
    h.cells()
        .into_iter()
        .map(|(x_lo, x_hi, value, r)| DensityRow { x_lo, x_hi, value, region_tag: r.tag() })
        .collect()
}

/// Long-format plot data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

pub fn sweep_plot_rows(rows: &[SweepRow]) -> Vec<PlotRow> {
    let mut out = Vec::new();
    for r in rows {
        let cols: [(&str, Option<f64>); 6] = [
            ("l1_total", r.l1_distance_h_eps_h_p),
            ("l1_delta", r.l1_delta),
            ("l1_cross_level", r.l1_cross_level),
            ("l1_same_level", r.l1_same_level),
            ("c_tau_gap", r.c_tau_gap),
            ("left_mass", r.left_mass),
        ];
        for (name, v) in cols {
            if let Some(y) = v {
                out.push(PlotRow { series: name.into(), x: r.epsilon, y });
            }
        }
    }
    out
}

/// `h` sampled at log-spaced points of `(0, 1/4)` and uniformly on `Δ`.
pub fn density_plot_rows(series: &str, h: &PullbackDensity, n: usize) -> Vec<PlotRow> {
    let floor = h.floor().max(1e-12);
    let (l0, l1) = (floor.ln(), 0.25_f64.ln());
    let mut out = Vec::with_capacity(2 * n);
    for i in 1..n {
        let x = (l0 + (l1 - l0) * i as f64 / n as f64).exp();
        out.push(PlotRow { series: series.into(), x, y: h.eval(x) });
    }
    for i in 0..n {
        let x = 0.25 + 0.75 * (i as f64 + 0.5) / n as f64;
        out.push(PlotRow { series: series.into(), x, y: h.eval(x) });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRow {
    pub branch_id: &'static str,
    pub domain_lo: f64,
    pub domain_hi: f64,
    pub image_lo: f64,
    pub image_hi: f64,
    pub slope_min: f64,
    pub slope_max: f64,
}

pub fn branch_rows(map: &MapModel) -> Vec<BranchRow> {
    map.branches
        .iter()
        .map(|b| {
            let (lo, hi) = b.domain;
            let d = |x: f64| map.deriv_branch(b.id, x).abs();
            let (d0, d1) = (d(lo), d(hi));
            BranchRow {
                branch_id: b.id.label(),
                domain_lo: lo,
                domain_hi: hi,
                image_lo: b.image.0,
                image_hi: b.image.1,
                slope_min: d0.min(d1),
                slope_max: d0.max(d1),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderRow {
    pub n: usize,
    pub piece_side: &'static str,
    pub lo: f64,
    pub hi: f64,
    pub image_lo: f64,
    pub image_hi: f64,
    pub length: f64,
}

pub fn cylinder_rows(im: &InducedModel) -> Vec<CylinderRow> {
    im.pieces()
        .into_iter()
        .map(|p| CylinderRow {
            n: p.n,
            piece_side: p.side.label(),
            lo: p.lo,
            hi: p.hi,
            image_lo: p.image_lo,
            image_hi: p.image_hi,
            length: p.hi - p.lo,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitRow {
    pub n: usize,
    pub b_n: f64,
    pub b_n_scaled: f64,
}

pub fn orbit_rows(im: &InducedModel) -> Vec<OrbitRow> {
    let inv = 1.0 / im.map.alpha();
    im.orbit
        .b
        .iter()
        .enumerate()
        .map(|(n, &b)| OrbitRow { n, b_n: b, b_n_scaled: b * (n as f64).powf(inv) })
        .collect()
}

/// `key = value` block describing the `ε = 0` side of a run.
pub fn baseline_summary(base: &Baseline) -> LabResult<String> {
    let r = &base.refs;
    let mut s = String::new();
    let _ = writeln!(s, "# tolerances in acceptance checks are engineering choices");
    let _ = writeln!(s, "alpha = {}", base.alpha);
    let _ = writeln!(s, "grid_m = {}", base.opts.grid_m);
    let _ = writeln!(s, "n_cylinders = {}", r.system.im.n_cylinders());
    let _ = writeln!(s, "leak_total = {:e}", r.system.leak_total);
    for (name, p) in [("l", &r.left), ("r", &r.right), ("p_pullback", &base.h_p_pulled)] {
        let _ = writeln!(s, "c_tau_{name} = {}", p.kac.c_tau);
        let _ = writeln!(s, "tail_bound_{name} = {:e}", p.kac.tail_bound);
        let _ = writeln!(s, "renorm_magnitude_{name} = {:e}", (p.raw_integral - 1.0).abs());
    }
    let _ = writeln!(s, "lhr_closed = {}", base.closed.lhr);
    let _ = writeln!(s, "lhr_left_side_only = {}", base.closed.numerator / base.closed.left_side_only);
    let _ = writeln!(s, "lhr_denominator_tail = {:e}", base.closed.tail);
    let _ = writeln!(s, "lhr_extrapolated = {}", base.extrapolated);
    let _ = writeln!(s, "lambda_hat = {}", base.weights.lambda_hat);
    let _ = writeln!(s, "lambda_p = {}", base.weights.lambda_p);
    let _ = writeln!(s, "c_tau_p_mixture = {}", base.weights.c_tau_p);
    let eq = base.h_p.l1_split(&base.h_p_pulled.h)?;
    let _ = writeln!(s, "h_p_equivalence_l1 = {:e}", eq.total());
    let _ = writeln!(s, "h_p_equivalence_unresolved = {:e}", eq.unresolved);
    Ok(s)
}
