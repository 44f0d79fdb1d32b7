use alloc::vec::Vec;

use super::{Grid, StepDensity, UlamOperator};
use crate::error::Result;
use crate::math::linear_fit;

/// Fitted `‖Pf‖_BV ≤ β ‖f‖_BV + B ‖f‖₁` over a test family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LasotaYorkeFit {
    pub beta: f64,
    pub b: f64,
    /// Largest amount by which a family member exceeds the fitted bound.
    pub max_violation: f64,
    pub family_size: usize,
}

struct SplitMix(u64);

impl SplitMix {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Deterministic family of `L¹`-normalized step densities on `grid`, cycling
/// through interval indicators at several scales, random staircases and
/// smooth low-variation profiles (cosines and ramps).
pub fn test_family(grid: &Grid, size: usize, seed: u64) -> Vec<StepDensity> {
    let mut rng = SplitMix(seed);
    let (u, v) = grid.support();
    let len = v - u;
    let mut out = Vec::with_capacity(size);
    for k in 0..size {
        let mut f = match k % 3 {
            0 => {
                let width = len * libm::pow(2.0, -(1.0 + 5.0 * rng.unit()));
                let lo = u + (len - width) * rng.unit();
                StepDensity::indicator(grid.clone(), lo, lo + width)
            }
            1 => {
                let pieces = 1 + (rng.next_u64() % 8) as usize;
                let mut f = StepDensity::zeros(grid.clone());
                for _ in 0..pieces {
                    let width = len * 0.25 * rng.unit();
                    let lo = u + (len - width) * rng.unit();
                    let h = rng.unit();
                    let g = StepDensity::indicator(grid.clone(), lo, lo + width);
                    f = f.combine(1.0, &g, h).expect("same grid");
                }
                f
            }
            _ => {
                let amp = rng.unit();
                let freq = 1.0 + (rng.next_u64() % 4) as f64;
                let ramp = rng.unit() < 0.5;
                let values = (0..grid.len())
                    .map(|i| {
                        let (a, b) = grid.cell(i);
                        let t = (0.5 * (a + b) - u) / len;
                        if ramp {
                            1.0 + amp * (2.0 * t - 1.0)
                        } else {
                            1.0 + amp * libm::cos(2.0 * core::f64::consts::PI * freq * t)
                        }
                    })
                    .collect();
                StepDensity::new(grid.clone(), values).expect("nonnegative profile")
            }
        };
        if f.normalize() > 0.0 {
            out.push(f);
        }
    }
    out
}

/// Fit of `‖Pf‖_BV ≤ β ‖f‖_BV + B ‖f‖₁` over a family.
///
/// Norms across the family span several orders of magnitude, so the fit is
/// least squares in relative form: `‖Pf‖_BV / ‖f‖_BV = β + B ‖f‖₁ / ‖f‖_BV`.
pub fn lasota_yorke_fit(op: &UlamOperator, family: &[StepDensity]) -> Result<LasotaYorkeFit> {
    let mut xs = Vec::with_capacity(family.len());
    let mut ys = Vec::with_capacity(family.len());
    for f in family {
        let pf = op.apply_pf(f)?;
        let l1 = f.l1_norm();
        xs.push(f.bv_norm() / l1);
        ys.push(pf.bv_norm() / l1);
    }
    let inv: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
    let rel: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y / x).collect();
    let (b, beta) = linear_fit(&inv, &rel);
    let max_violation = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - beta * x - b)
        .fold(0.0, f64::max);
    Ok(LasotaYorkeFit { beta, b, max_violation, family_size: family.len() })
}
