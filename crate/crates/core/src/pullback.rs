//! Full-interval densities from induced ones.
//!
//! On `Δ` the pull-back is `c_τ ĥ`. Below `1/4` it satisfies
//! `h(x) = c_τ [ĥ(T2^{-1}x) / |DT2| + ĥ(T3^{-1}x) / |DT3|] + h(T1^{-1}x) / DT1(T1^{-1}x)`,
//! which is the printed series summed one level at a time. In mass form, for
//! `A ⊂ W_k`,
//! `∫_A h = c_τ [μ̂(T2^{-1}A) + μ̂(T3^{-1}A)] + ∫_{T1^{-1}A} h`,
//! and `μ̂` of an interval is exact for a step density. Cells are therefore
//! built as a backward orbit family: `P` sub-cells of a deep gap `W_K` are
//! pushed forward by `T1`, and masses accumulate level by level. At the deep
//! level the remaining series is replaced by its asymptotic value, where
//! `ĥ` is constant on the cells touching `3/8`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::inducing::{BoundaryOrbit, InducedModel, PieceSide};
use crate::map::{BranchId, MapModel, Side, A0, B};
use crate::math::{abs, exp, ln, powf};
use crate::transfer::{Grid, StepDensity, UlamOperator};

const MID: f64 = 0.375;

/// Normalization constant `c_τ` from `c_τ^{-1} = Σ_k k μ̂(Z_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KacConstants {
    pub c_tau: f64,
    /// `Σ_{k ≤ N} k μ̂(Z_k)`.
    pub resolved: f64,
    /// Estimated `Σ_{k > N} k μ̂(Z_k)`.
    pub tail: f64,
    /// Uncertainty of `tail`.
    pub tail_bound: f64,
}

impl KacConstants {
    /// `Σ_k k μ̂(Z_k)`.
    pub fn expected_return(&self) -> f64 {
        self.resolved + self.tail
    }
}

/// `ĥ(3/8-)/|DT2| + ĥ(3/8+)/|DT3|`: the rate at which `Δ` feeds deep gaps.
fn edge_rate(map: &MapModel, hat: &StepDensity) -> f64 {
    hat.value_at_side(MID, Side::Left) / map.params.t2_slope()
        + hat.value_at_side(MID, Side::Right) / 4.0
}

/// Largest tail uncertainty accepted by [`kac_constant`].
pub const KAC_TAIL_LIMIT: f64 = 1e-3;

pub fn kac_constant(im: &InducedModel, hat: &StepDensity) -> Result<KacConstants> {
    if hat.grid.support() != (A0, 1.0) {
        return Err(Error::Grid);
    }
    let total = hat.integral();
    if abs(total - 1.0) > 1e-9 {
        return Err(Error::Invalid("induced density must integrate to one"));
    }
    let cyl = &im.cylinders;
    let n = cyl.count();
    let mut resolved = 0.0;
    for k in 1..=n {
        let (l0, l1) = cyl.piece(k, PieceSide::Left);
        let (r0, r1) = cyl.piece(k, PieceSide::Right);
        resolved += k as f64 * (hat.integrate(l0, l1) + hat.integrate(r0, r1));
    }
    // Cylinders beyond N: |Z_n| = |W_{n-1}| (1/|DT2| + 1/|DT3|) and
    // Σ_{n>N} n (b_{n-2} - b_{n-1}) = (N+1) b_{N-1} + Σ_{j≥N} b_j.
    let rate = edge_rate(&im.map, hat);
    let (s, unc) = im.orbit.tail_sum(&im.map, n);
    let tail = rate * ((n + 1) as f64 * im.orbit.b[n - 1] + s);
    let (r0, r1) = cyl.residual();
    let osc = residual_oscillation(hat, r0, r1);
    let tail_bound = rate * unc + tail * osc;
    if tail_bound > KAC_TAIL_LIMIT {
        return Err(Error::Truncation { what: "kac tail", bound: tail_bound, limit: KAC_TAIL_LIMIT });
    }
    Ok(KacConstants { c_tau: 1.0 / (resolved + tail), resolved, tail, tail_bound })
}

/// Relative oscillation of `ĥ` on each side of `3/8` over `(lo, hi)`.
fn residual_oscillation(hat: &StepDensity, lo: f64, hi: f64) -> f64 {
    let mut worst = 0.0_f64;
    for (a, b, side) in [(lo, MID, Side::Left), (MID, hi, Side::Right)] {
        let edge = hat.value_at_side(MID, side);
        if edge <= 0.0 {
            continue;
        }
        for i in hat.grid.cells_overlapping(a, b) {
            worst = worst.max(abs(hat.values[i] - edge) / edge);
        }
    }
    worst
}

/// Where a point of `[0, 1]` sits in the pull-back representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Delta,
    Level(usize),
    Unresolved,
}

impl Region {
    pub fn tag(self) -> alloc::string::String {
        use alloc::string::ToString;
        match self {
            Region::Delta => "delta".to_string(),
            Region::Level(k) => alloc::format!("W_{k}"),
            Region::Unresolved => "unresolved".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackOptions {
    /// Sub-cells per gap `W_k`.
    pub sub_cells: usize,
    /// Stored gaps `W_1..W_K`; defaults to the cylinder count.
    pub levels: Option<usize>,
    /// The deep seed level is `deep_factor · K`.
    pub deep_factor: usize,
    /// Points of `W_1` to be kept as cell edges on every level (with their backward orbits).
    pub marks: Vec<f64>,
}

impl Default for PullbackOptions {
    fn default() -> Self {
        Self { sub_cells: 64, levels: None, deep_factor: 4, marks: Vec::new() }
    }
}

/// Cells of one gap `W_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
}

impl Level {
    fn mass_below(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for (i, w) in self.edges.windows(2).enumerate() {
            if x <= w[0] {
                break;
            }
            s += self.values[i] * (x.min(w[1]) - w[0]);
        }
        s
    }

    fn value_at(&self, x: f64) -> f64 {
        let i = self.edges.partition_point(|&e| e <= x).clamp(1, self.values.len());
        self.values[i - 1]
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Point value from the printed series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub partial: f64,
    pub remainder: f64,
    pub terms: usize,
}

/// `L¹` distance split by region.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct L1Split {
    /// On `Δ`.
    pub delta: f64,
    /// Where both densities sit in the same gap `W_k`.
    pub same_level: f64,
    /// Where the gap indices differ.
    pub cross_level: f64,
    /// Mass of both densities below the common resolved floor.
    pub unresolved: f64,
}

impl L1Split {
    pub fn total(&self) -> f64 {
        self.delta + self.same_level + self.cross_level + self.unresolved
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackDensity {
    pub map: MapModel,
    /// The `c_τ` used in the build.
    pub c_tau: f64,
    /// `c_τ ĥ` on `Δ` (after any renormalization).
    pub on_delta: StepDensity,
    pub orbit: BoundaryOrbit,
    /// `levels[k-1]` holds `W_k`.
    pub levels: Vec<Level>,
    /// `∫_{W_k} h` for `k = 1..=K_deep`, index `k-1`.
    pub level_mass: Vec<f64>,
    /// `∫_{W_k} h ≈ seed_rate · b_{k-1}` for deep `k`.
    pub seed_rate: f64,
    /// Mass carried by the deep seed.
    pub seed_mass: f64,
    /// `∫_0^{b_{K_deep}} h` and its uncertainty.
    pub below_deep: f64,
    pub below_deep_bound: f64,
    /// Factor applied by [`PullbackDensity::normalize`] (one until then).
    pub renormalization: f64,
    /// Suffix sums of `level_mass`.
    suffix: Vec<f64>,
}

impl PullbackDensity {
    pub fn build(
        im: &InducedModel,
        hat: &StepDensity,
        kac: &KacConstants,
        opts: &PullbackOptions,
    ) -> Result<Self> {
        if hat.grid.support() != (A0, 1.0) {
            return Err(Error::Grid);
        }
        let p = opts.sub_cells.max(1);
        let map = im.map.clone();
        let k_out = opts.levels.unwrap_or(im.n_cylinders()).max(1);
        let k_deep = (k_out * opts.deep_factor.max(1)).max(k_out + 1);
        let orbit = if im.orbit.depth() >= k_deep {
            BoundaryOrbit { b: im.orbit.b[..=k_deep].to_vec() }
        } else {
            BoundaryOrbit::new(&map, k_deep)?
        };
        let b = &orbit.b;
        let coef = kac.c_tau;
        let on_delta = hat.scaled(coef);
        let feed = |lo: f64, hi: f64| {
            let l = on_delta.integrate(
                map.inverse_unchecked(BranchId::T2, hi),
                map.inverse_unchecked(BranchId::T2, lo),
            );
            let r = on_delta.integrate(
                map.inverse_unchecked(BranchId::T3, lo),
                map.inverse_unchecked(BranchId::T3, hi),
            );
            l + r
        };
        let rate = coef * edge_rate(&map, hat);

        let (lo, hi) = (b[k_deep], b[k_deep - 1]);
        let mut edges: Vec<f64> = (0..=p).map(|i| lo + (hi - lo) * i as f64 / p as f64).collect();
        for &m in &opts.marks {
            if !(m > b[1] && m < b[0]) {
                return Err(Error::Invalid("marks must lie in W_1"));
            }
            let mut y = m;
            for _ in 1..k_deep {
                y = map.t1_inverse_unchecked(y);
            }
            if y > lo && y < hi {
                edges.push(y);
            }
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup();

        let seed_mass = rate * b[k_deep - 1];
        let mut masses: Vec<f64> =
            edges.windows(2).map(|w| seed_mass * (w[1] - w[0]) / (hi - lo)).collect();
        let mut level_mass = alloc::vec![0.0; k_deep];
        level_mass[k_deep - 1] = seed_mass;
        let mut levels: Vec<Level> = Vec::with_capacity(k_out);
        for k in (1..k_deep).rev() {
            let (lo, hi) = (b[k], b[k - 1]);
            let last = edges.len() - 1;
            let mut prev = lo;
            for (i, e) in edges.iter_mut().enumerate() {
                *e = if i == 0 {
                    lo
                } else if i == last {
                    hi
                } else {
                    map.t1(*e).clamp(prev, hi)
                };
                prev = *e;
            }
            let mut total = 0.0;
            for (i, w) in edges.windows(2).enumerate() {
                masses[i] += feed(w[0], w[1]);
                total += masses[i];
            }
            level_mass[k - 1] = total;
            if k <= k_out {
                let values = edges
                    .windows(2)
                    .zip(&masses)
                    .map(|(w, m)| if w[1] > w[0] { m / (w[1] - w[0]) } else { 0.0 })
                    .collect();
                levels.push(Level { edges: edges.clone(), values });
            }
        }
        levels.reverse();
        let (s, unc) = orbit.tail_sum(&map, k_deep);
        let mut out = Self {
            map,
            c_tau: kac.c_tau,
            on_delta,
            orbit,
            levels,
            level_mass,
            seed_rate: rate,
            seed_mass,
            below_deep: rate * s,
            below_deep_bound: rate * unc,
            renormalization: 1.0,
            suffix: Vec::new(),
        };
        out.refresh_suffix();
        Ok(out)
    }

    fn refresh_suffix(&mut self) {
        let n = self.level_mass.len();
        let mut suffix = alloc::vec![0.0; n + 1];
        for k in (0..n).rev() {
            suffix[k] = suffix[k + 1] + self.level_mass[k];
        }
        self.suffix = suffix;
    }

    /// Number of stored gaps.
    pub fn resolved_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn deep_level(&self) -> usize {
        self.level_mass.len()
    }

    /// Lower end `b_K` of the stored cells.
    pub fn floor(&self) -> f64 {
        self.orbit.b[self.resolved_levels()]
    }

    pub fn region(&self, x: f64) -> Region {
        if x >= A0 {
            return Region::Delta;
        }
        let k = self.orbit.b.partition_point(|&b| b > x);
        if k == 0 || k > self.resolved_levels() {
            Region::Unresolved
        } else {
            Region::Level(k)
        }
    }

    /// Gap index of `x < 1/4` on the deep orbit.
    fn deep_index(&self, x: f64) -> Option<usize> {
        let k = self.orbit.b.partition_point(|&b| b > x);
        (k >= 1 && k <= self.deep_level()).then_some(k)
    }

    /// Cell value at `x` (cell averages below `1/4`).
    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        if x >= A0 {
            return self.on_delta.value_at(x);
        }
        match self.deep_index(x) {
            Some(k) if k <= self.resolved_levels() => self.levels[k - 1].value_at(x),
            Some(k) => {
                let (lo, hi) = self.orbit.gap(k);
                self.level_mass[k - 1] / (hi - lo)
            }
            None => {
                let kd = self.deep_level();
                let (lo, hi) = self.orbit.gap(kd);
                let v = self.level_mass[kd - 1] / (hi - lo);
                v * powf(x / lo, -self.map.alpha())
            }
        }
    }

    /// `∫_0^x h`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        if x >= A0 {
            return self.mass_below_delta() + self.on_delta.integrate(A0, x);
        }
        let a = self.map.alpha();
        match self.deep_index(x) {
            None => {
                let floor = self.orbit.b[self.deep_level()];
                self.below_deep * powf(x / floor, 1.0 - a)
            }
            Some(k) => {
                let below = self.below_deep + self.suffix[k];
                let (lo, hi) = self.orbit.gap(k);
                let inside = if k <= self.resolved_levels() {
                    self.levels[k - 1].mass_below(x)
                } else {
                    self.level_mass[k - 1] * (x - lo) / (hi - lo)
                };
                below + inside
            }
        }
    }

    /// `∫_0^{1/4} h`.
    pub fn mass_below_delta(&self) -> f64 {
        self.below_deep + self.suffix[0]
    }

    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        self.cumulative(hi) - self.cumulative(lo)
    }

    pub fn total(&self) -> f64 {
        self.cumulative(1.0)
    }

    /// Mass below the stored cells, with the deep-tail uncertainty.
    pub fn unresolved_mass(&self) -> (f64, f64) {
        (self.cumulative(self.floor()), self.below_deep_bound)
    }

    /// Rescale to total integral one; returns the integral before scaling.
    pub fn normalize(&mut self) -> f64 {
        let t = self.total();
        if t > 0.0 {
            self.scale(1.0 / t);
        }
        t
    }

    fn scale(&mut self, f: f64) {
        self.on_delta = self.on_delta.scaled(f);
        for l in &mut self.levels {
            l.values.iter_mut().for_each(|v| *v *= f);
        }
        self.level_mass.iter_mut().for_each(|v| *v *= f);
        self.seed_rate *= f;
        self.seed_mass *= f;
        self.below_deep *= f;
        self.below_deep_bound *= f;
        self.renormalization *= f;
        self.refresh_suffix();
    }

    /// `a·self + b·other`; both must come from the same map and cell layout.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.orbit != other.orbit
            || self.levels.len() != other.levels.len()
            || self.levels.iter().zip(&other.levels).any(|(x, y)| x.edges != y.edges)
        {
            return Err(Error::Grid);
        }
        let mut out = self.clone();
        out.on_delta = self.on_delta.combine(a, &other.on_delta, b)?;
        for (l, m) in out.levels.iter_mut().zip(&other.levels) {
            for (v, w) in l.values.iter_mut().zip(&m.values) {
                *v = a * *v + b * w;
            }
        }
        for (v, w) in out.level_mass.iter_mut().zip(&other.level_mass) {
            *v = a * *v + b * w;
        }
        out.seed_rate = a * self.seed_rate + b * other.seed_rate;
        out.seed_mass = a * self.seed_mass + b * other.seed_mass;
        out.below_deep = a * self.below_deep + b * other.below_deep;
        out.below_deep_bound = abs(a) * self.below_deep_bound + abs(b) * other.below_deep_bound;
        out.c_tau = out.on_delta.integral();
        out.renormalization = 1.0;
        out.refresh_suffix();
        Ok(out)
    }

    /// Cell list `(lo, hi, value, region)` from `0` to `1`.
    pub fn cells(&self) -> Vec<(f64, f64, f64, Region)> {
        let mut out = Vec::new();
        let floor = self.floor();
        if floor > 0.0 {
            out.push((0.0, floor, self.cumulative(floor) / floor, Region::Unresolved));
        }
        for k in (1..=self.resolved_levels()).rev() {
            let l = &self.levels[k - 1];
            for (w, v) in l.edges.windows(2).zip(&l.values) {
                if w[1] > w[0] {
                    out.push((w[0], w[1], *v, Region::Level(k)));
                }
            }
        }
        for i in 0..self.on_delta.grid.len() {
            let (a, b) = self.on_delta.grid.cell(i);
            out.push((a, b, self.on_delta.values[i], Region::Delta));
        }
        out
    }

    /// `max_{k ∈ [k_lo, k_hi]} sup_{W_k} h / k` and the matching minimum.
    pub fn growth_ratio(&self, k_lo: usize, k_hi: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for k in k_lo.max(1)..=k_hi.min(self.resolved_levels()) {
            let r = self.levels[k - 1].sup() / k as f64;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }

    /// Point value at `x ∈ (0, 1/4)` from the series, stopped once the
    /// remainder (read from the cells) falls below `tol` of the partial sum.
    pub fn eval_series(&self, x: f64, tol: f64, cap: usize) -> Result<SeriesValue> {
        if !(x > 0.0 && x < A0) {
            return Err(Error::Domain { x });
        }
        let map = &self.map;
        let s2 = map.params.t2_slope();
        let mut y = x;
        let mut log_pi = 0.0;
        let mut partial = 0.0;
        let mut remainder = f64::INFINITY;
        for j in 0..cap {
            let feed = self.on_delta.value_at(map.inverse_unchecked(BranchId::T2, y)) / s2
                + self.on_delta.value_at(map.inverse_unchecked(BranchId::T3, y)) / 4.0;
            partial += feed * exp(-log_pi);
            let next = map.t1_inverse_unchecked(y);
            log_pi += ln(map.dt1(next));
            y = next;
            remainder = self.eval(y) * exp(-log_pi);
            if remainder <= tol * partial {
                return Ok(SeriesValue { value: partial + remainder, partial, remainder, terms: j + 1 });
            }
        }
        Err(Error::Truncation { what: "pullback series", bound: remainder / partial, limit: tol })
    }

    /// `L¹` distance split into `Δ`, matching-gap and crossing-gap parts.
    pub fn l1_split(&self, other: &Self) -> Result<L1Split> {
        let delta = self.on_delta.l1_distance(&other.on_delta)?;
        let floor = self.floor().max(other.floor());
        let mut edges: Vec<f64> = Vec::new();
        for d in [self, other] {
            for l in &d.levels {
                edges.extend(l.edges.iter().copied().filter(|&e| e > floor && e < A0));
            }
        }
        edges.push(floor);
        edges.push(A0);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let mut same = 0.0;
        let mut cross = 0.0;
        for w in edges.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let d = abs(self.eval(mid) - other.eval(mid)) * (w[1] - w[0]);
            if self.region(mid) == other.region(mid) {
                same += d;
            } else {
                cross += d;
            }
        }
        let unresolved = self.cumulative(floor) + other.cumulative(floor);
        Ok(L1Split { delta, same_level: same, cross_level: cross, unresolved })
    }

    /// `L¹` distance to a step density on `[0, 1]`, on the merged partition.
    pub fn l1_to_step(&self, f: &StepDensity) -> Result<f64> {
        if f.grid.support() != (0.0, 1.0) {
            return Err(Error::Grid);
        }
        let mut s = 0.0;
        for e in f.grid.edges().windows(2) {
            s += self.l1_on_cell(e[0], e[1], f.value_at(0.5 * (e[0] + e[1])));
        }
        Ok(s)
    }

    /// `∫_lo^hi |h - v|` for a constant `v`.
    fn l1_on_cell(&self, lo: f64, hi: f64, v: f64) -> f64 {
        let floor = self.floor();
        let mut cuts: Vec<f64> = alloc::vec![lo, hi];
        if lo < floor {
            // Below the stored cells only the masses are known.
            let m = self.integrate(lo, hi.min(floor));
            let rest = if hi > floor { self.l1_on_cell(floor, hi, v) } else { 0.0 };
            return abs(m - v * (hi.min(floor) - lo)) + rest;
        }
        for l in &self.levels {
            cuts.extend(l.edges.iter().copied().filter(|&e| e > lo && e < hi));
        }
        cuts.extend(
            self.on_delta.grid.edges().iter().copied().filter(|&e| e > lo && e < hi),
        );
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2)
            .map(|w| abs(self.eval(0.5 * (w[0] + w[1])) - v) * (w[1] - w[0]))
            .sum()
    }

    /// Masses on the bins of `edges` (covering `[0, 1]`).
    pub fn bin_masses(&self, edges: &[f64]) -> Vec<f64> {
        edges.windows(2).map(|w| self.integrate(w[0], w[1])).collect()
    }
}

/// Numerical options shared by the solver entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Cells on `Δ`.
    pub grid_m: usize,
    /// Cylinder count; chosen from `cylinder_target` when `None`.
    pub cylinders: Option<usize>,
    /// Smallest `N` with `b_N` below this value.
    pub cylinder_target: f64,
    pub pullback: PullbackOptions,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grid_m: 1 << 14,
            cylinders: None,
            cylinder_target: 1e-6,
            pullback: PullbackOptions::default(),
            tol: 1e-12,
            max_iter: 200_000,
        }
    }
}

impl SolveOptions {
    pub fn cylinders_for(&self, map: &MapModel) -> Result<usize> {
        match self.cylinders {
            Some(n) => Ok(n),
            None => InducedModel::depth_for(map, self.cylinder_target, 10_000_000),
        }
    }

    /// Two-block grid on `Δ` with `1/2` as an edge.
    pub fn grid(&self) -> Result<Grid> {
        Grid::two_block(A0, B, 1.0, self.grid_m)
    }
}

/// Induced system with its discretized operator.
#[derive(Debug, Clone)]
pub struct InducedSystem {
    pub im: InducedModel,
    pub op: UlamOperator,
    /// Lebesgue mass of leak before redistribution.
    pub leak_total: f64,
}

impl InducedSystem {
    pub fn build(alpha: f64, epsilon: f64, opts: &SolveOptions) -> Result<Self> {
        let map = MapModel::build(alpha, epsilon)?;
        let n = opts.cylinders_for(&map)?;
        let im = InducedModel::new(map, n, n)?;
        let grid = opts.grid()?;
        let mut op = UlamOperator::build(&im, &grid)?;
        let leak_total = op.leak_total();
        op.redistribute_leak();
        Ok(Self { im, op, leak_total })
    }

    /// Stationary density from `start`, normalized on `Δ`.
    pub fn stationary(&self, start: &StepDensity, opts: &SolveOptions) -> Result<StepDensity> {
        let mut d = self.op.stationary_from(start, opts.tol, opts.max_iter)?;
        d.normalize();
        Ok(d)
    }

    pub fn grid(&self) -> &Grid {
        &self.op.grid
    }
}

/// An induced density together with its pull-back.
#[derive(Debug, Clone)]
pub struct Pulled {
    pub hat: StepDensity,
    pub kac: KacConstants,
    pub h: PullbackDensity,
    /// Integral of the pull-back before renormalization.
    pub raw_integral: f64,
}

impl Pulled {
    pub fn new(im: &InducedModel, hat: StepDensity, opts: &PullbackOptions) -> Result<Self> {
        let kac = kac_constant(im, &hat)?;
        let mut h = PullbackDensity::build(im, &hat, &kac, opts)?;
        let raw_integral = h.normalize();
        Ok(Self { hat, kac, h, raw_integral })
    }
}

/// The two ergodic densities at `ε = 0`.
#[derive(Debug, Clone)]
pub struct References {
    pub system: InducedSystem,
    pub left: Pulled,
    pub right: Pulled,
}

pub fn reference_densities(alpha: f64, opts: &SolveOptions) -> Result<References> {
    let system = InducedSystem::build(alpha, 0.0, opts)?;
    let grid = system.grid().clone();
    let hat_l = system.stationary(&StepDensity::indicator(grid.clone(), A0, B), opts)?;
    let hat_r = system.stationary(&StepDensity::indicator(grid, B, 1.0), opts)?;
    let left = Pulled::new(&system.im, hat_l, &opts.pullback)?;
    let right = Pulled::new(&system.im, hat_r, &opts.pullback)?;
    Ok(References { system, left, right })
}

/// Density of `T_ε`, started from `start` on `Δ` (uniform when `None`).
pub fn perturbed_density(
    alpha: f64,
    epsilon: f64,
    opts: &SolveOptions,
    start: Option<&StepDensity>,
) -> Result<(InducedSystem, Pulled)> {
    if !(epsilon > 0.0) {
        return Err(Error::Invalid("perturbed density needs epsilon > 0"));
    }
    let system = InducedSystem::build(alpha, epsilon, opts)?;
    let grid = system.grid().clone();
    let hat = match start {
        Some(s) if s.grid == grid => system.stationary(s, opts)?,
        _ => system.stationary(&StepDensity::uniform(grid), opts)?,
    };
    let pulled = Pulled::new(&system.im, hat, &opts.pullback)?;
    Ok((system, pulled))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SolveOptions {
        SolveOptions {
            grid_m: 1 << 10,
            cylinders: Some(200),
            pullback: PullbackOptions { sub_cells: 16, ..Default::default() },
            tol: 1e-13,
            ..Default::default()
        }
    }

    #[test]
    fn right_reference_is_two_with_unit_kac() {
        let r = reference_densities(0.5, &small()).unwrap();
        for &v in &r.right.hat.values[r.right.hat.grid.len() / 3 + 1..] {
            assert!((v - 2.0).abs() < 1e-10);
        }
        assert_eq!(r.right.kac.c_tau, 1.0);
        assert_eq!(r.right.h.mass_below_delta(), 0.0);
        assert!((r.right.raw_integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn left_reference_kac_consistent() {
        let r = reference_densities(0.5, &small()).unwrap();
        assert!(r.left.kac.c_tau < 1.0);
        assert!((r.left.raw_integral - 1.0).abs() < 5e-3, "{}", r.left.raw_integral);
        // Mass on [1/4, 1/2] is c_τ,l.
        let m = r.left.h.integrate(A0, B);
        assert!((m - r.left.kac.c_tau / r.left.raw_integral).abs() < 1e-9);
        assert_eq!(r.left.h.integrate(B, 1.0), 0.0);
    }

    #[test]
    fn series_matches_cells() {
        let r = reference_densities(0.5, &small()).unwrap();
        let h = &r.left.h;
        for x in [0.2, 0.05, 0.01, 0.002] {
            let s = h.eval_series(x, 1e-3, 100_000).unwrap();
            let c = h.eval(x);
            assert!((s.value - c).abs() < 0.05 * c, "x={x} series {} cell {c}", s.value);
        }
    }
}
