use metastab_core::inducing::{return_time_oracle, InducedModel, PieceSide};
use metastab_core::MapModel;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cylinder_index_matches_orbit(alpha in 0.2f64..0.9, e in 0.0f64..0.1, t in 0.0f64..1.0) {
        let im = InducedModel::new(MapModel::build(alpha, e).unwrap(), 300, 300).unwrap();
        let x = 0.25 + 0.75 * t;
        if let Some(n) = im.cylinders.index(x) {
            prop_assert_eq!(return_time_oracle(&im.map, x, 1000), Some(n), "x = {}", x);
            let (y, m) = im.induced_eval(x).unwrap();
            prop_assert_eq!(m, n);
            prop_assert!((0.25..=1.0).contains(&y));
        } else {
            let (lo, hi) = im.cylinders.residual();
            prop_assert!(x >= lo && x <= hi);
        }
    }
}

#[test]
fn cylinder_lengths_decay_like_a_power() {
    for alpha in [0.3, 0.5, 0.8] {
        let im = InducedModel::new(MapModel::build(alpha, 0.0).unwrap(), 2000, 2000).unwrap();
        let scaled: Vec<f64> = (20..=2000)
            .map(|n| {
                let (l0, l1) = im.cylinders.piece(n, PieceSide::Left);
                let (r0, r1) = im.cylinders.piece(n, PieceSide::Right);
                ((l1 - l0) + (r1 - r0)) * (n as f64).powf(1.0 + 1.0 / alpha)
            })
            .collect();
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi / lo < 2.0, "alpha {alpha}: [{lo}, {hi}]");
    }
}

#[test]
fn pieces_tile_delta_and_map_onto_their_images() {
    for e in [0.0, 0.05] {
        let im = InducedModel::new(MapModel::build(0.5, e).unwrap(), 100, 100).unwrap();
        let pieces = im.pieces();
        let (r0, r1) = im.cylinders.residual();
        let covered: f64 = pieces.iter().map(|p| p.hi - p.lo).sum();
        assert!((covered + (r1 - r0) - 0.75).abs() < 1e-12);
        for p in &pieces {
            for k in 1..8 {
                let x = p.lo + (p.hi - p.lo) * k as f64 / 8.0;
                let (y, n) = im.induced_eval(x).unwrap();
                assert_eq!(n, p.n);
                assert!(y >= p.image_lo - 1e-12 && y <= p.image_hi + 1e-12, "{p:?}: {y}");
            }
        }
    }
}

#[test]
fn deep_orbit_is_strictly_decreasing() {
    let im = InducedModel::new(MapModel::build(0.5, 0.02).unwrap(), 10, 5000).unwrap();
    assert_eq!(im.orbit.depth(), 5000);
    assert!(im.orbit.b.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    assert_eq!(im.n_cylinders(), 10);
}
