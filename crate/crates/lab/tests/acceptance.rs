//! End-to-end acceptance run at the desk-scale defaults (α = 0.5, grid 2^14,
//! N from b_N < 1e-6, ε = 0.1·2^-j for j = 0..4). Prints one PASS/FAIL line
//! per criterion, then fails if any line failed.
//!
//! Run with `cargo test -p metastab-lab --test acceptance -- --nocapture`.

use std::fs;

use metastab_core::graph::{build_access_graph, ergodic_component_bound};
use metastab_core::inducing::{return_time_oracle, InducedModel};
use metastab_core::map::{A0, B};
use metastab_core::pullback::{InducedSystem, SolveOptions};
use metastab_core::transfer::StepDensity;
use metastab_core::MapModel;
use metastab_lab::asymptotics::{run_asymptotics, AsymptoticsReport};
use metastab_lab::commands;
use metastab_lab::experiments::{run_sweep, Baseline, EpsilonRecord};
use metastab_lab::montecarlo::run_montecarlo;
use metastab_lab::ExperimentConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RIGHT_DENSITY_LINF: f64 = 1e-8;
const RETURN_TIME_POINTS: usize = 100_000;
const SLOPE_BAND: f64 = 0.05;
const GROWTH_FACTOR: f64 = 4.0;
const KAC_INTEGRAL: f64 = 0.005;
const GRID_TOL_FACTOR: f64 = 2.0;
const L1_AT_SMALLEST: f64 = 0.05;
const RATIO_REL: f64 = 0.10;
const HF2_REL: f64 = 0.01;
const IDENTITY_REL: f64 = 0.01;
const LHR_AGREE: f64 = 0.10;
const EXPECTED_RETURN_SPREAD: f64 = 0.10;
const GRAPH_EPS: [f64; 8] = [1e-4, 1e-3, 0.00625, 0.0125, 0.025, 0.05, 0.1, 0.125];
const MC_L1: f64 = 0.05;
const MC_SEEDS_L1: f64 = 0.02;
const MC_LEFT: f64 = 0.05;
const LY_SPREAD: f64 = 0.20;

struct Line {
    id: usize,
    pass: bool,
    detail: String,
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / lo
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn right_density_error(base: &Baseline) -> f64 {
    let err = |d: &StepDensity| {
        (0..d.grid.len())
            .filter(|&i| d.grid.cell(i).0 >= B)
            .map(|i| (d.values[i] - 2.0).abs())
            .fold(0.0, f64::max)
    };
    let mut worst = err(&base.refs.right.hat);
    for m in [1 << 8, 1 << 11] {
        let opts = SolveOptions { grid_m: m, cylinders: Some(200), ..Default::default() };
        let sys = InducedSystem::build(base.alpha, 0.0, &opts).unwrap();
        let start = StepDensity::indicator(sys.grid().clone(), B, 1.0);
        worst = worst.max(err(&sys.stationary(&start, &opts).unwrap()));
    }
    worst
}

/// `(mismatches, compared, skipped in the residual)` over both ε.
fn return_time_check(alpha: f64, seed: u64) -> (usize, usize, usize) {
    let (mut bad, mut seen, mut skipped) = (0, 0, 0);
    for (tag, eps) in [0.0, 0.05].into_iter().enumerate() {
        let map = MapModel::build(alpha, eps).unwrap();
        let n = InducedModel::depth_for(&map, 1e-6, 1_000_000).unwrap();
        let im = InducedModel::new(map.clone(), n, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(tag as u64 + 1);
        for _ in 0..RETURN_TIME_POINTS {
            let x = A0 + (1.0 - A0) * rng.random::<f64>();
            match im.cylinders.index(x) {
                None => skipped += 1,
                Some(k) => {
                    seen += 1;
                    if return_time_oracle(&map, x, n + 2) != Some(k) {
                        bad += 1;
                    }
                }
            }
        }
    }
    (bad, seen, skipped)
}

fn graph_check(alpha: f64) -> (bool, String) {
    let g0 = build_access_graph(&MapModel::build(alpha, 0.0).unwrap(), 64);
    let c0 = ergodic_component_bound(&g0).classes;
    let mut ok = c0 == vec![vec![0, 1, 2], vec![3, 4, 5]];
    let mut worst = 0;
    for e in GRAPH_EPS {
        let map = MapModel::build(alpha, e).unwrap();
        for k in [32, 64] {
            let n = ergodic_component_bound(&build_access_graph(&map, k)).count();
            ok &= n == 1;
            worst = worst.max(n);
        }
    }
    (ok, format!("eps=0 classes={c0:?}; max classes over {} eps at k_max 32/64 = {worst}", GRAPH_EPS.len()))
}

fn determinism_check() -> (bool, String) {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let cfg = ExperimentConfig {
            grid_m: 1 << 11,
            eps_schedule: vec![0.1, 0.05, 0.025],
            mc_steps: 200_000,
            output_dir: d.path().to_path_buf(),
            ..Default::default()
        };
        commands::converge(&cfg).unwrap();
        commands::ratio(&cfg).unwrap();
        commands::montecarlo(&cfg).unwrap();
    }
    let names = ["converge.csv", "converge_plot.csv", "density_h_p.csv", "ratio.csv", "mc.csv"];
    let same: Vec<bool> = names
        .iter()
        .map(|n| fs::read(dirs[0].path().join(n)).unwrap() == fs::read(dirs[1].path().join(n)).unwrap())
        .collect();
    (same.iter().all(|&s| s), format!("{} CSVs compared across two runs, identical: {same:?}", names.len()))
}

fn main() {
    let cfg = ExperimentConfig::default();
    let base = Baseline::compute(&cfg).expect("baseline");
    let outcomes = run_sweep(&cfg, &base);
    let rows: Vec<&EpsilonRecord> = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
    let all_rows = rows.len() == cfg.eps_schedule.len();
    let report: AsymptoticsReport = run_asymptotics(&base, &outcomes).expect("asymptotics");
    let col = |f: &dyn Fn(&EpsilonRecord) -> f64| -> Vec<f64> { rows.iter().map(|r| f(r)).collect() };
    let mut lines = Vec::new();

    let e = right_density_error(&base);
    lines.push(Line {
        id: 1,
        pass: e <= RIGHT_DENSITY_LINF,
        detail: format!("max |h_r - 2| on [1/2,1] over grids 2^8, 2^11, 2^14 = {e:.2e}"),
    });

    let (bad, seen, skipped) = return_time_check(cfg.alpha, cfg.seed);
    lines.push(Line {
        id: 2,
        pass: bad == 0 && seen > 0,
        detail: format!("{bad} mismatches in {seen} points, {skipped} in the residual skipped"),
    });

    let viol: usize = report.sublemma.iter().map(|(_, r)| r.violations).sum();
    let checked: usize = report.sublemma.iter().map(|(_, r)| r.checked).sum();
    lines.push(Line {
        id: 3,
        pass: viol == 0 && checked == 30_000,
        detail: format!("{viol} violations in {checked} checks at alpha 0.3/0.5/0.8"),
    });

    let le3_viol: usize = report.le3.iter().map(|r| r.violations).sum();
    let per_k: Vec<f64> = report.le3.iter().map(|r| r.reciprocal_sum / r.k as f64).collect();
    let no_growth = per_k.last() <= per_k.first();
    lines.push(Line {
        id: 4,
        pass: le3_viol == 0 && report.le3.len() == 3 && no_growth,
        detail: format!("{le3_viol} violations; sum/k at k=5,20,100 = {per_k:.3?}; C = {:.3}", report.le3_constant),
    });

    let slope_ok = (report.slope + cfg.alpha).abs() <= SLOPE_BAND;
    let (g_lo, g_hi) = report.growth;
    lines.push(Line {
        id: 5,
        pass: slope_ok && g_hi / g_lo <= GROWTH_FACTOR,
        detail: format!(
            "slope {:.4} (target -{}); sup_W_k h_p / k in [{g_lo:.3}, {g_hi:.3}] for k in [10, 500]",
            report.slope, cfg.alpha
        ),
    });

    let mut raws = vec![base.refs.left.raw_integral, base.refs.right.raw_integral, base.h_p_pulled.raw_integral];
    raws.extend(col(&|r| r.raw_integral));
    let worst = raws.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    lines.push(Line {
        id: 6,
        pass: worst <= KAC_INTEGRAL && all_rows,
        detail: format!("max |integral - 1| over {} pull-backs = {worst:.2e}", raws.len()),
    });

    let tol = base.grid_tolerance().expect("grid refinement");
    let split = base.h_p.l1_split(&base.h_p_pulled.h).unwrap();
    let eq = split.total();
    lines.push(Line {
        id: 7,
        pass: eq <= GRID_TOL_FACTOR * tol,
        detail: format!(
            "L1(mixture, pull-back) = {eq:.2e} ({:.1e} resolved + {:.1e} mass below the floor); grid tolerance (2^13 vs 2^14) = {tol:.2e}",
            eq - split.unresolved,
            split.unresolved
        ),
    });

    let l1 = col(&|r| r.split.total());
    let regions = [col(&|r| r.split.delta), col(&|r| r.split.cross_level), col(&|r| r.split.same_level)];
    let regions_ok = regions.iter().all(|v| strictly_decreasing(v));
    lines.push(Line {
        id: 8,
        pass: all_rows && strictly_decreasing(&l1) && l1.last().is_some_and(|&v| v < L1_AT_SMALLEST) && regions_ok,
        detail: format!("L1 = {l1:.4?}; regions I/II/III decreasing: {regions_ok}"),
    });

    let target = base.ratio_target();
    let last = rows.last().expect("rows");
    let rel = (last.ratio_ref() - target).abs() / target;
    let hf2 = col(&|r| (r.ratio_full() / r.ratio_induced() - 1.0).abs()).into_iter().fold(0.0, f64::max);
    let ident = col(&|r| (r.identity_l() - 1.0).abs().max((r.identity_r() - 1.0).abs()))
        .into_iter()
        .fold(0.0, f64::max);
    lines.push(Line {
        id: 9,
        pass: rel <= RATIO_REL && hf2 <= HF2_REL && ident <= IDENTITY_REL,
        detail: format!(
            "ratio {:.5} vs target {target:.5} (rel {rel:.1e}); HF2 gap {hf2:.1e}; identity gap {ident:.1e}",
            last.ratio_ref()
        ),
    });

    let (closed, ext) = (base.closed.lhr, base.extrapolated);
    let agree = (closed - ext).abs() / closed;
    let finite = |v: f64| v > 0.0 && v.is_finite();
    lines.push(Line {
        id: 10,
        pass: finite(closed) && finite(ext) && agree <= LHR_AGREE,
        detail: format!("closed {closed:.5}, extrapolated {ext:.5}, rel diff {agree:.1e}"),
    });

    let gap = col(&|r| (r.kac.c_tau - base.weights.c_tau_p).abs());
    let er = col(&|r| r.kac.expected_return());
    lines.push(Line {
        id: 11,
        pass: all_rows && strictly_decreasing(&gap) && spread(&er) < EXPECTED_RETURN_SPREAD,
        detail: format!("|c_eps - c_p| = {gap:.4?}; sum k mu(Z_k) spread {:.3}", spread(&er)),
    });

    let (ok, detail) = graph_check(cfg.alpha);
    lines.push(Line { id: 12, pass: ok, detail });

    let mc = run_montecarlo(&cfg, &base, 0.05).expect("monte carlo");
    let left_gap = (mc.left_fraction - base.weights.lambda_p).abs();
    lines.push(Line {
        id: 13,
        pass: mc.l1_to_density <= MC_L1 && mc.l1_between_seeds <= MC_SEEDS_L1 && left_gap <= MC_LEFT,
        detail: format!(
            "L1 to h_eps {:.4}, between seeds {:.4}, left fraction {:.4} vs lambda_p {:.4}",
            mc.l1_to_density, mc.l1_between_seeds, mc.left_fraction, base.weights.lambda_p
        ),
    });

    let beta = col(&|r| r.ly.beta);
    let bb = col(&|r| r.ly.b);
    let beta_max = beta.iter().copied().fold(0.0, f64::max);
    lines.push(Line {
        id: 14,
        pass: all_rows && beta_max < 1.0 && spread(&beta) < LY_SPREAD && spread(&bb) < LY_SPREAD,
        detail: format!(
            "beta in [{:.3}, {beta_max:.3}] spread {:.3}; B spread {:.3}",
            beta.iter().copied().fold(f64::INFINITY, f64::min),
            spread(&beta),
            spread(&bb)
        ),
    });

    let (ok, detail) = determinism_check();
    lines.push(Line { id: 15, pass: ok, detail });

    println!();
    for l in &lines {
        println!("criterion {:>2} {}  {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
