//! Accessibility digraph over the monotonicity partition.
//!
//! There is an arrow `I_i → I_j` when `T^k(I_i) ⊇ I_j` for some `k ≥ 1`.
//! The support of an ergodic a.c.i.m. that charges `I_i` contains every
//! interval reachable from `I_i`, so closed classes of the digraph bound the
//! number of ergodic components.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::map::MapModel;

/// Endpoint tolerance for containment and merging.
pub const TOL: f64 = 1e-10;

/// Sorted, pairwise disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalUnion {
    parts: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn new(mut parts: Vec<(f64, f64)>) -> Self {
        parts.retain(|p| p.1 >= p.0);
        parts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(parts.len());
        for (lo, hi) in parts {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + TOL => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Self { parts: merged }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(alloc::vec![(lo, hi)])
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn measure(&self) -> f64 {
        self.parts.iter().map(|p| p.1 - p.0).sum()
    }

    /// `[lo, hi]` lies inside one part, up to [`TOL`].
    pub fn contains_interval(&self, lo: f64, hi: f64) -> bool {
        self.parts.iter().any(|p| p.0 <= lo + TOL && p.1 >= hi - TOL)
    }

    pub fn contains_union(&self, other: &Self) -> bool {
        other.parts.iter().all(|p| self.contains_interval(p.0, p.1))
    }
}

/// A map that is monotone and continuous on each cell of a finite partition.
pub trait IntervalSystem {
    /// Partition cells `I_1, …, I_n`.
    fn partition(&self) -> Vec<(f64, f64)>;
    /// Image of `[lo, hi] ⊆ I_i` under the branch on `I_i`.
    fn branch_image(&self, i: usize, lo: f64, hi: f64) -> (f64, f64);
}

impl IntervalSystem for MapModel {
    fn partition(&self) -> Vec<(f64, f64)> {
        self.branches.iter().map(|b| b.domain).collect()
    }

    fn branch_image(&self, i: usize, lo: f64, hi: f64) -> (f64, f64) {
        let id = self.branches[i].id;
        let (a, b) = (self.eval_branch(id, lo), self.eval_branch(id, hi));
        if a <= b { (a, b) } else { (b, a) }
    }
}

/// Forward image of `u` after `steps` iterations, branch by branch.
pub fn image_union(sys: &dyn IntervalSystem, u: &IntervalUnion, steps: usize) -> IntervalUnion {
    let cells = sys.partition();
    let mut cur = u.clone();
    for _ in 0..steps {
        let mut out = Vec::new();
        for &(lo, hi) in cur.parts() {
            for (i, &(a, b)) in cells.iter().enumerate() {
                let (l, h) = (lo.max(a), hi.min(b));
                if l <= h {
                    out.push(sys.branch_image(i, l, h));
                }
            }
        }
        cur = IntervalUnion::new(out);
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessGraph {
    pub cells: Vec<(f64, f64)>,
    /// `witness[i][j]`: smallest `k ≤ k_max` with `T^k(I_i) ⊇ I_j`.
    pub witness: Vec<Vec<Option<usize>>>,
    pub k_max: usize,
}

pub fn build_access_graph(sys: &dyn IntervalSystem, k_max: usize) -> AccessGraph {
    let cells = sys.partition();
    let n = cells.len();
    let mut witness = alloc::vec![alloc::vec![None; n]; n];
    for i in 0..n {
        let mut u = IntervalUnion::interval(cells[i].0, cells[i].1);
        for k in 1..=k_max {
            let next = image_union(sys, &u, 1);
            for (j, &(a, b)) in cells.iter().enumerate() {
                if witness[i][j].is_none() && next.contains_interval(a, b) {
                    witness[i][j] = Some(k);
                }
            }
            if next == u {
                break;
            }
            u = next;
        }
    }
    AccessGraph { cells, witness, k_max }
}

/// Closed classes of the digraph.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    /// Each class as sorted zero-based node indices.
    pub classes: Vec<Vec<usize>>,
}

impl ComponentReport {
    pub fn count(&self) -> usize {
        self.classes.len()
    }
}

impl AccessGraph {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.witness[i][j].is_some()
    }

    /// Transitive closure `reach[i][j]`.
    pub fn reach(&self) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut r: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| self.has_edge(i, j)).collect()).collect();
        for k in 0..n {
            for i in 0..n {
                if r[i][k] {
                    for j in 0..n {
                        if r[k][j] {
                            r[i][j] = true;
                        }
                    }
                }
            }
        }
        r
    }

    /// Graphviz text.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph access {\n");
        for i in 0..self.len() {
            let (a, b) = self.cells[i];
            let _ = writeln!(s, "  I{} [label=\"I{} [{a}, {b}]\"];", i + 1, i + 1);
        }
        for i in 0..self.len() {
            for j in 0..self.len() {
                if let Some(k) = self.witness[i][j] {
                    let _ = writeln!(s, "  I{} -> I{} [label=\"{k}\"];", i + 1, j + 1);
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Distinct minimal closed classes `[I_i]`.
pub fn ergodic_component_bound(g: &AccessGraph) -> ComponentReport {
    let r = g.reach();
    let n = g.len();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let set: Vec<usize> = (0..n).filter(|&j| r[i][j]).collect();
        // [I_i] is a minimal closed class when every member reaches back to i.
        if !set.contains(&i) || !set.iter().all(|&j| r[j][i]) {
            continue;
        }
        if !classes.contains(&set) {
            classes.push(set);
        }
    }
    ComponentReport { classes }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Doubling;

    impl IntervalSystem for Doubling {
        fn partition(&self) -> Vec<(f64, f64)> {
            alloc::vec![(0.0, 1.0)]
        }
        fn branch_image(&self, _i: usize, lo: f64, hi: f64) -> (f64, f64) {
            (lo.min(1.0), hi.min(1.0))
        }
    }

    #[test]
    fn toy_single_branch() {
        let g = build_access_graph(&Doubling, 4);
        assert_eq!(ergodic_component_bound(&g).count(), 1);
    }

    #[test]
    fn image_examples() {
        let m = MapModel::build(0.5, 0.0).unwrap();
        let i = image_union(&m, &IntervalUnion::interval(0.375, 0.5), 1);
        assert_eq!(i.parts(), &[(0.0, 0.5)]);
        let i = image_union(&m, &IntervalUnion::interval(0.5, 0.625), 1);
        assert_eq!(i.parts(), &[(0.5, 1.0)]);
        let m = MapModel::build(0.5, 0.05).unwrap();
        let i = image_union(&m, &IntervalUnion::interval(0.625, 0.8125), 1);
        assert!((i.parts()[0].0 - 0.45).abs() < 1e-15 && i.parts()[0].1 == 1.0);
    }

    #[test]
    fn classes_at_zero_and_positive_epsilon() {
        let g = build_access_graph(&MapModel::build(0.5, 0.0).unwrap(), 64);
        let c = ergodic_component_bound(&g);
        assert_eq!(c.classes, alloc::vec![alloc::vec![0, 1, 2], alloc::vec![3, 4, 5]]);
        assert!(g.witness[2][2].unwrap() <= 2);
        let g = build_access_graph(&MapModel::build(0.5, 0.05).unwrap(), 64);
        assert_eq!(ergodic_component_bound(&g).count(), 1);
        assert!(g.to_dot().contains("I5 -> I1"));
    }
}
