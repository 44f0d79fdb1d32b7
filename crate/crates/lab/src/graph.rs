use metastab_core::graph::{build_access_graph, ergodic_component_bound, AccessGraph};
use metastab_core::MapModel;

use crate::error::LabResult;

#[derive(Debug, Clone)]
pub struct GraphReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub k_max: usize,
    pub graph: AccessGraph,
    /// Closed classes, zero-based.
    pub classes: Vec<Vec<usize>>,
    /// Same classes with half the iteration budget.
    pub stable: bool,
}

pub fn run_graph(alpha: f64, epsilon: f64, k_max: usize) -> LabResult<GraphReport> {
    let map = MapModel::build(alpha, epsilon)?;
    let graph = build_access_graph(&map, k_max);
    let classes = ergodic_component_bound(&graph).classes;
    let half = build_access_graph(&map, (k_max / 2).max(1));
    let stable = ergodic_component_bound(&half).classes == classes;
    Ok(GraphReport { alpha, epsilon, k_max, graph, classes, stable })
}

impl GraphReport {
    /// Classes with the witnessing iterate counts.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "k_max = {}", self.k_max);
        let _ = writeln!(s, "classes = {}", self.classes.len());
        let _ = writeln!(s, "stable_at_half_k_max = {}", self.stable);
        for (c, class) in self.classes.iter().enumerate() {
            let names: Vec<String> = class.iter().map(|i| format!("I{}", i + 1)).collect();
            let _ = writeln!(s, "class {} = {{{}}}", c + 1, names.join(", "));
            for &i in class {
                for &j in class {
                    if let Some(k) = self.graph.witness[i][j] {
                        let _ = writeln!(s, "  I{} -> I{} at k={k}", i + 1, j + 1);
                    }
                }
            }
        }
        s
    }
}
