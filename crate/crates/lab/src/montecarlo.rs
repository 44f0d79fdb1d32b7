//! Birkhoff histograms of `T_ε` as an independent check on `h_ε`.

use metastab_core::pullback::{perturbed_density, PullbackDensity};
use metastab_core::MapModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::experiments::Baseline;

/// Below this ε the halves mix too slowly for a run of `mc_steps`.
pub const MIN_EPSILON: f64 = 0.02;

/// Stream tag for the orbit start points; chain `i` uses `ORBIT_TAG + i`.
const ORBIT_TAG: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Visits to `[0, 1/2)`.
    pub left: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn masses(&self) -> Vec<f64> {
        let t = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    pub fn left_fraction(&self) -> f64 {
        self.left as f64 / self.total() as f64
    }

    /// `Σ |mass_i - other_i|` over the bins.
    pub fn l1_to_masses(&self, other: &[f64]) -> f64 {
        self.masses().iter().zip(other).map(|(a, b)| (a - b).abs()).sum()
    }
}

fn merge(a: Histogram, b: Histogram) -> Histogram {
    let counts = a.counts.iter().zip(&b.counts).map(|(x, y)| x + y).collect();
    Histogram { edges: a.edges, counts, left: a.left + b.left }
}

/// Orbit histogram of `mc_steps` points split over `mc_chains` orbits, each
/// started at a uniform point and run `mc_burn_in` steps before counting.
pub fn birkhoff_histogram(map: &MapModel, cfg: &ExperimentConfig, seed: u64) -> LabResult<Histogram> {
    let bins = cfg.mc_bins;
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let chains = cfg.mc_chains as u64;
    let per = cfg.mc_steps / chains;
    let extra = cfg.mc_steps % chains;
    let parts = (0..chains)
        .into_par_iter()
        .map(|c| -> LabResult<Histogram> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ORBIT_TAG + c);
            let mut x: f64 = rng.random();
            for _ in 0..cfg.mc_burn_in {
                x = map.eval(x)?;
            }
            let steps = per + u64::from(c < extra);
            let mut counts = vec![0u64; bins];
            let mut left = 0;
            for _ in 0..steps {
                x = map.eval(x)?;
                counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
                left += u64::from(x < 0.5);
            }
            Ok(Histogram { edges: edges.clone(), counts, left })
        })
        .collect::<LabResult<Vec<_>>>()?;
    Ok(parts.into_iter().reduce(merge).expect("at least one chain"))
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub epsilon: f64,
    pub seeds: (u64, u64),
    pub histogram: Histogram,
    /// Bin masses of the pulled-back `h_ε`.
    pub density_masses: Vec<f64>,
    pub l1_to_density: f64,
    /// Between the histograms of the two seeds.
    pub l1_between_seeds: f64,
    pub left_fraction: f64,
    /// `∫_0^{1/2} h_ε`.
    pub left_mass_eps: f64,
    /// `∫_0^{1/2} h_p`.
    pub lambda_p: f64,
}

pub fn check_epsilon(epsilon: f64) -> LabResult<()> {
    if epsilon < MIN_EPSILON {
        return Err(LabError::Config(format!(
            "Monte Carlo needs eps >= {MIN_EPSILON}; mixing between the halves is too slow below that"
        )));
    }
    Ok(())
}

pub fn run_montecarlo(cfg: &ExperimentConfig, base: &Baseline, epsilon: f64) -> LabResult<McReport> {
    check_epsilon(epsilon)?;
    let (sys, pulled) = perturbed_density(base.alpha, epsilon, &base.opts, None)?;
    let h: &PullbackDensity = &pulled.h;
    let seeds = (cfg.seed, cfg.seed.wrapping_add(1));
    let histogram = birkhoff_histogram(&sys.im.map, cfg, seeds.0)?;
    let second = birkhoff_histogram(&sys.im.map, cfg, seeds.1)?;
    let density_masses = h.bin_masses(&histogram.edges);
    let l1_to_density = histogram.l1_to_masses(&density_masses);
    let l1_between_seeds = histogram.l1_to_masses(&second.masses());
    let left_fraction = histogram.left_fraction();
    log::info!(
        "mc eps={epsilon} steps={} l1={l1_to_density:.4} seeds_l1={l1_between_seeds:.4} left={left_fraction:.4}",
        histogram.total()
    );
    Ok(McReport {
        epsilon,
        seeds,
        density_masses,
        l1_to_density,
        l1_between_seeds,
        left_fraction,
        left_mass_eps: h.integrate(0.0, 0.5),
        lambda_p: base.weights.lambda_p,
        histogram,
    })
}

/// Row of `mc.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
    pub empirical_density: f64,
    pub pullback_density: f64,
}

impl McReport {
    pub fn rows(&self) -> Vec<McRow> {
        let t = self.histogram.total() as f64;
        self.histogram
            .edges
            .windows(2)
            .zip(&self.histogram.counts)
            .zip(&self.density_masses)
            .map(|((w, &c), &m)| {
                let width = w[1] - w[0];
                McRow {
                    bin_lo: w[0],
                    bin_hi: w[1],
                    count: c,
                    empirical_density: c as f64 / t / width,
                    pullback_density: m / width,
                }
            })
            .collect()
    }
}
