//! One function per subcommand: compute, then write into `output_dir`.

use std::path::PathBuf;

use metastab_core::inducing::InducedModel;
use metastab_core::MapModel;

use crate::asymptotics::run_asymptotics;
use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::experiments::{run_convergence, run_ratio, run_sweep, Baseline};
use crate::graph::{run_graph, GraphReport};
use crate::montecarlo::{check_epsilon, run_montecarlo};
use crate::output::*;

pub fn converge(cfg: &ExperimentConfig) -> LabResult<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let base = Baseline::compute(cfg)?;
    let rows = run_convergence(cfg, &base, &run_sweep(cfg, &base));
    let files = [
        dir.join("converge.csv"),
        dir.join("converge_plot.csv"),
        dir.join("density_h_p.csv"),
        dir.join("summary.txt"),
    ];
    write_csv(&files[0], &rows)?;
    let mut plot = sweep_plot_rows(&rows);
    for (name, h) in [("h_l", &base.refs.left.h), ("h_r", &base.refs.right.h), ("h_p", &base.h_p)] {
        plot.extend(density_plot_rows(name, h, 200));
    }
    write_csv(&files[1], &plot)?;
    write_csv(&files[2], &density_rows(&base.h_p))?;
    write_text(&files[3], &baseline_summary(&base)?)?;
    Ok(files.to_vec())
}

pub fn ratio(cfg: &ExperimentConfig) -> LabResult<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let base = Baseline::compute(cfg)?;
    let rows = run_ratio(&base, &run_sweep(cfg, &base))?;
    let files = [dir.join("ratio.csv"), dir.join("summary.txt")];
    write_csv(&files[0], &rows)?;
    write_text(&files[1], &baseline_summary(&base)?)?;
    Ok(files.to_vec())
}

pub fn asymptotics(cfg: &ExperimentConfig) -> LabResult<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let base = Baseline::compute(cfg)?;
    let report = run_asymptotics(&base, &run_sweep(cfg, &base))?;
    let files = [dir.join("asymptotics.txt"), dir.join("asymptotics_plot.csv")];
    write_text(&files[0], &report.to_text())?;
    let mut plot = density_plot_rows("h_l", &base.refs.left.h, 200);
    for (k, l) in base.h_p.levels.iter().enumerate().take(500) {
        plot.push(PlotRow { series: "sup_h_p_over_k".into(), x: (k + 1) as f64, y: l.sup() / (k + 1) as f64 });
    }
    write_csv(&files[1], &plot)?;
    Ok(files.to_vec())
}

pub fn montecarlo(cfg: &ExperimentConfig) -> LabResult<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    check_epsilon(cfg.eps)?;
    ensure_dir(dir)?;
    let base = Baseline::compute(cfg)?;
    let report = run_montecarlo(cfg, &base, cfg.eps)?;
    let files = [dir.join("mc.csv"), dir.join("mc_summary.txt")];
    write_csv(&files[0], &report.rows())?;
    let text = format!(
        "epsilon = {}\nseeds = {}, {}\nsteps = {}\nl1_to_density = {}\nl1_between_seeds = {}\nleft_fraction = {}\nleft_mass_eps = {}\nlambda_p = {}\n",
        report.epsilon,
        report.seeds.0,
        report.seeds.1,
        report.histogram.total(),
        report.l1_to_density,
        report.l1_between_seeds,
        report.left_fraction,
        report.left_mass_eps,
        report.lambda_p
    );
    write_text(&files[1], &text)?;
    Ok(files.to_vec())
}

pub fn graph(cfg: &ExperimentConfig) -> LabResult<(GraphReport, Vec<PathBuf>)> {
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let report = run_graph(cfg.alpha, cfg.eps, cfg.k_max)?;
    let files = [dir.join("graph.dot"), dir.join("graph.txt")];
    write_text(&files[0], &report.graph.to_dot())?;
    write_text(&files[1], &report.to_text())?;
    Ok((report, files.to_vec()))
}

pub fn dump_map(cfg: &ExperimentConfig) -> LabResult<Vec<PathBuf>> {
    ensure_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("map.csv");
    write_csv(&path, &branch_rows(&MapModel::build(cfg.alpha, cfg.eps)?))?;
    Ok(vec![path])
}

pub fn dump_cylinders(cfg: &ExperimentConfig) -> LabResult<Vec<PathBuf>> {
    ensure_dir(&cfg.output_dir)?;
    let map = MapModel::build(cfg.alpha, cfg.eps)?;
    let n = cfg.solve_options(Vec::new()).cylinders_for(&map)?;
    let im = InducedModel::new(map, n, n)?;
    let files = [cfg.output_dir.join("cylinders.csv"), cfg.output_dir.join("orbit.csv")];
    write_csv(&files[0], &cylinder_rows(&im))?;
    write_csv(&files[1], &orbit_rows(&im))?;
    Ok(files.to_vec())
}
