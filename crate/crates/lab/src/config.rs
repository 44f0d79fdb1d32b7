//! Experiment configuration: defaults, a flat TOML file, then CLI overrides.

use std::path::{Path, PathBuf};

use metastab_core::pullback::{PullbackOptions, SolveOptions};
use serde::Deserialize;

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    /// Strictly decreasing, all in `(0, 1/8]`.
    pub eps_schedule: Vec<f64>,
    /// Single ε for `mc` and `graph`.
    pub eps: f64,
    /// Cells on `Δ = [1/4, 1]`.
    pub grid_m: usize,
    /// Cylinder count; `None` picks the smallest `N` with `b_N < cylinder_target`.
    pub cylinders: Option<usize>,
    pub cylinder_target: f64,
    /// Sub-cells per gap in the pull-back.
    pub sub_cells: usize,
    pub mc_steps: u64,
    pub mc_burn_in: u64,
    pub mc_bins: usize,
    /// Independent orbits sharing `mc_steps`.
    pub mc_chains: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Longest image iteration in the accessibility graph.
    pub k_max: usize,
    /// Members of the Lasota–Yorke test family.
    pub ly_family: usize,
    /// Adds a wall-clock column; off by default so CSVs stay byte-identical.
    pub timings: bool,
}

pub fn default_schedule() -> Vec<f64> {
    (0..5).map(|j| 0.1 * 0.5_f64.powi(j)).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            eps_schedule: default_schedule(),
            eps: 0.05,
            grid_m: 1 << 14,
            cylinders: None,
            cylinder_target: 1e-6,
            sub_cells: 64,
            mc_steps: 10_000_000,
            mc_burn_in: 100_000,
            mc_bins: 128,
            mc_chains: 8,
            seed: 20240917,
            output_dir: PathBuf::from("out"),
            k_max: 64,
            ly_family: 96,
            timings: false,
        }
    }
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    pub eps_schedule: Option<Vec<f64>>,
    pub grid_m: Option<usize>,
    pub cylinders: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub mc_steps: Option<u64>,
    pub k_max: Option<usize>,
    pub timings: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> LabResult<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.message().to_string()))
    }

    pub fn from_file(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Defaults, then `path` if given, then `ov`; validated.
    pub fn resolve(path: Option<&Path>, ov: &Overrides) -> LabResult<Self> {
        let mut cfg = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply(ov);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(v) = ov.alpha {
            self.alpha = v;
        }
        if let Some(v) = ov.eps {
            self.eps = v;
        }
        if let Some(v) = &ov.eps_schedule {
            self.eps_schedule = v.clone();
        }
        if let Some(v) = ov.grid_m {
            self.grid_m = v;
        }
        if let Some(v) = ov.cylinders {
            self.cylinders = Some(v);
        }
        if let Some(v) = ov.seed {
            self.seed = v;
        }
        if let Some(v) = &ov.output_dir {
            self.output_dir = v.clone();
        }
        if let Some(v) = ov.mc_steps {
            self.mc_steps = v;
        }
        if let Some(v) = ov.k_max {
            self.k_max = v;
        }
        self.timings |= ov.timings;
    }

    pub fn validate(&self) -> LabResult<()> {
        let bad = |m: String| Err(LabError::Config(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(0.0..=0.125).contains(&self.eps) {
            return bad(format!("eps must lie in [0, 1/8], got {}", self.eps));
        }
        if self.eps_schedule.is_empty() {
            return bad("eps_schedule is empty".into());
        }
        if let Some(e) = self.eps_schedule.iter().find(|&&e| !(e > 0.0 && e <= 0.125)) {
            return bad(format!("eps_schedule entries must lie in (0, 1/8], got {e}"));
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps_schedule must be strictly decreasing".into());
        }
        if self.grid_m < 16 {
            return bad(format!("grid_m must be at least 16, got {}", self.grid_m));
        }
        if self.cylinders.is_some_and(|n| n < 2) {
            return bad("cylinders must be at least 2".into());
        }
        if !(self.cylinder_target > 0.0 && self.cylinder_target < 0.25) {
            return bad(format!("cylinder_target must lie in (0, 1/4), got {}", self.cylinder_target));
        }
        if self.sub_cells == 0 || self.mc_bins == 0 || self.mc_chains == 0 || self.ly_family < 4 {
            return bad("sub_cells, mc_bins and mc_chains must be positive, ly_family at least 4".into());
        }
        if self.mc_steps < self.mc_chains as u64 {
            return bad("mc_steps must be at least mc_chains".into());
        }
        if self.k_max == 0 {
            return bad("k_max must be positive".into());
        }
        Ok(())
    }

    /// Solver options; `marks` are kept as exact cell edges of the pull-back.
    pub fn solve_options(&self, marks: Vec<f64>) -> SolveOptions {
        SolveOptions {
            grid_m: self.grid_m,
            cylinders: self.cylinders,
            cylinder_target: self.cylinder_target,
            pullback: PullbackOptions { sub_cells: self.sub_cells, marks, ..Default::default() },
            ..Default::default()
        }
    }
}

/// Comma-separated list of reals, as taken by `--eps-schedule`.
pub fn parse_schedule(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad schedule entry {t:?}: {e}")))
        .collect()
}
