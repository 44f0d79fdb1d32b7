use metastab_core::graph::{build_access_graph, ergodic_component_bound};
use metastab_core::holes::{full_holes, induced_holes};
use metastab_core::inducing::InducedModel;
use metastab_core::MapModel;

#[test]
fn any_hole_merges_the_halves() {
    for k_max in [32, 64] {
        let g = build_access_graph(&MapModel::build(0.5, 1e-4).unwrap(), k_max);
        assert_eq!(ergodic_component_bound(&g).count(), 1, "k_max {k_max}");
        let g = build_access_graph(&MapModel::build(0.5, 0.0).unwrap(), k_max);
        assert_eq!(ergodic_component_bound(&g).classes, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }
}

fn samples(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (1..16).map(move |k| lo + (hi - lo) * k as f64 / 16.0)
}

#[test]
fn full_holes_cross_the_middle() {
    for e in [0.1, 0.01] {
        let map = MapModel::build(0.5, e).unwrap();
        let (hl, hr) = full_holes(&map);
        for x in hl.pieces.iter().flat_map(|p| samples(p.lo, p.hi)) {
            assert!(x < 0.5 && map.eval(x).unwrap() > 0.5);
        }
        for x in hr.pieces.iter().flat_map(|p| samples(p.lo, p.hi)) {
            assert!(x > 0.5 && map.eval(x).unwrap() < 0.5);
        }
    }
    let (hl, hr) = full_holes(&MapModel::build(0.5, 0.0).unwrap());
    assert!(hl.is_empty() && hr.is_empty());
}

#[test]
fn induced_left_holes_land_in_the_right_half() {
    let im = InducedModel::new(MapModel::build(0.5, 0.05).unwrap(), 200, 200).unwrap();
    let (hl, hr) = induced_holes(&im);
    assert!(hl.tail_bound > 0.0 && hl.tail_gap >= 0.0);
    for p in &hl.pieces {
        for x in samples(p.lo, p.hi) {
            let (y, _) = im.induced_eval(x).unwrap();
            assert!(y > 0.5, "{p:?}: {x} -> {y}");
        }
    }
    for x in hr.pieces.iter().flat_map(|p| samples(p.lo, p.hi)) {
        assert!(im.induced_eval(x).unwrap().0 < 0.5);
    }
}
