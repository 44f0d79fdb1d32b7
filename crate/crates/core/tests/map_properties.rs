use metastab_core::map::PARTITION;
use metastab_core::{BranchId, MapModel, Side};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..0.95, 0.0f64..=0.125)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn continuous_at_partition_points((a, e) in params()) {
        let m = MapModel::build(a, e).unwrap();
        for &q in &PARTITION[1..6] {
            let l = m.eval_side(q, Side::Left).unwrap();
            let r = m.eval_side(q, Side::Right).unwrap();
            prop_assert!((l - r).abs() <= 1e-12, "q={q}: {l} vs {r}");
        }
        prop_assert_eq!(m.eval(0.0).unwrap(), 0.0);
        prop_assert_eq!(m.eval(0.5).unwrap(), 0.5);
        prop_assert!((m.eval(1.0).unwrap() - 1.0).abs() <= 1e-15);
        prop_assert!((m.eval(0.8125).unwrap() - (0.5 - e)).abs() < 1e-15);
    }

    #[test]
    fn branch_inverse_round_trips((a, e) in params(), t in 0.0f64..=1.0) {
        let m = MapModel::build(a, e).unwrap();
        for id in BranchId::ALL {
            let (lo, hi) = m.branch(id).image;
            let y = lo + (hi - lo) * t;
            let x = m.branch_inverse(id, y).unwrap();
            let (d0, d1) = m.branch(id).domain;
            prop_assert!(x >= d0 && x <= d1);
            prop_assert!((m.eval_branch(id, x) - y).abs() <= 1e-12, "{id:?} y={y}");
        }
    }

    #[test]
    fn expanding_off_the_neutral_point((a, e) in params(), x in 0.25f64..1.0) {
        let m = MapModel::build(a, e).unwrap();
        prop_assume!(!PARTITION.contains(&x));
        prop_assert!(m.deriv(x, None).unwrap().abs() > 2.0);
    }

    #[test]
    fn t1_weakly_expanding((a, e) in params(), x in 0.0f64..0.25) {
        let m = MapModel::build(a, e).unwrap();
        prop_assume!(x > 0.0);
        prop_assert!(m.dt1(x) > 1.0);
    }

    #[test]
    fn t1_increasing_in_epsilon(a in 0.05f64..0.95, x in 1e-6f64..0.25, e in 0.0f64..0.12) {
        let lo = MapModel::build(a, e).unwrap();
        let hi = MapModel::build(a, e + 0.005).unwrap();
        prop_assert!(hi.t1(x) > lo.t1(x));
    }

    #[test]
    fn t1_inverse_residual((a, e) in params(), t in 0.0f64..=1.0) {
        let m = MapModel::build(a, e).unwrap();
        let y = (0.5 + e) * t;
        let x = m.t1_inverse(y).unwrap();
        prop_assert!((m.t1(x) - y).abs() <= 1e-14);
    }
}

#[test]
fn c0_close_to_unperturbed() {
    for a in [0.3, 0.5, 0.8] {
        let m0 = MapModel::build(a, 0.0).unwrap();
        for e in [0.1, 0.01, 0.001] {
            let m = MapModel::build(a, e).unwrap();
            let sup = (0..=10_000)
                .map(|i| i as f64 / 10_000.0)
                .map(|x| (m.eval(x).unwrap() - m0.eval(x).unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(sup <= 4.0 * e && sup > 0.0, "alpha {a} eps {e}: {sup}");
        }
    }
}

#[test]
fn out_of_range_inputs_are_errors() {
    let m = MapModel::build(0.5, 0.05).unwrap();
    assert!(m.eval(-0.1).is_err());
    assert!(m.eval(1.5).is_err());
    assert!(m.deriv(0.375, None).is_err());
    assert!(m.deriv(0.375, Some(Side::Left)).is_ok());
    assert!(m.branch_inverse(BranchId::T3, 0.6).is_err());
    assert!(m.t1_inverse(0.56).is_err());
    assert!(MapModel::build(0.5, 0.2).is_err());
}
