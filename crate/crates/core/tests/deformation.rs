use std::f64::consts::PI;

use borel_core::deformation::{eta, validate, FlowField};
use borel_core::{cx, deform, Cx, DeformConfig, DeformError, FilteredSet, FilteredSet64, Path64};
use proptest::prelude::*;

type C = Cx<f64>;

fn o() -> C {
    cx(0.0, 0.0)
}

fn unit_set() -> FilteredSet64 {
    FilteredSet::new(o(), [(cx(1.0, 0.0), 1.0)], 10.0).unwrap()
}

fn small() -> DeformConfig<f64> {
    DeformConfig { n_s: 16, n_t: 64, ..DeformConfig::default() }
}

#[test]
fn eta_examples() {
    assert_eq!(eta(&[o(), cx(1.0, 0.0)], cx(0.5, 0.0)), 0.5);
    assert_eq!(eta::<f64>(&[], cx(0.3, 0.0)), f64::INFINITY);
    assert_eq!(eta(&[cx(0.0, 1.0)], o()), 1.0);
}

#[test]
fn grid_structure() {
    let a = unit_set();
    let gamma = Path64::new(vec![cx(0.1, 0.1), cx(0.6, 0.2), cx(0.4, 0.7)]).unwrap();
    let g = deform(&gamma, &a, &a, 3.0, &small()).unwrap();
    for j in 0..=g.n_t() {
        assert_eq!(g.h(0, j), o());
        assert_eq!(g.h_star(0, j), o());
        assert!((g.h(g.n_s(), j) - gamma.at(g.t(j))).norm() < 1e-12);
        assert!((g.h_star(g.n_s(), j) - g.h(g.n_s(), j)).norm() < 1e-12);
    }
    for i in 0..=g.n_s() {
        assert!((g.h(i, 0) - gamma.start() * g.s(i)).norm() < 1e-15);
        for j in 0..=g.n_t() {
            let mirror = g.h(g.n_s(), j) + g.centre() - g.h(g.n_s() - i, j);
            if i > 0 {
                assert_eq!(g.h_star(i, j), mirror);
            }
        }
    }
    assert_eq!(g.trajectory(0), vec![o(); g.n_t() + 1]);
}

#[test]
fn centre_only_flow_is_radial_scaling() {
    // Away from other points the contour stays the segment [0, γ(t)].
    let triv = FilteredSet::trivial(o(), 10.0).unwrap();
    let gamma = Path64::new(vec![cx(0.2, 0.0), cx(0.8, 0.4), cx(0.1, 1.0)]).unwrap();
    let g = deform(&gamma, &triv, &triv, 5.0, &small()).unwrap();
    for i in 0..=g.n_s() {
        for j in 0..=g.n_t() {
            assert!((g.h(i, j) - gamma.at(g.t(j)) * g.s(i)).norm() < 1e-13);
        }
    }
}

#[test]
fn straight_segment_matches_refined_reference() {
    let a = FilteredSet::new(o(), [(cx(1.0, 0.0), 1.0)], 10.0).unwrap();
    let b = FilteredSet::new(o(), [(cx(0.0, 2.0), 2.0)], 10.0).unwrap();
    let gamma = Path64::segment(cx(0.1, 0.1), cx(0.9, 0.9)).unwrap();
    let coarse = deform(&gamma, &a, &b, 4.0, &DeformConfig { n_s: 16, n_t: 64, ..DeformConfig::default() }).unwrap();
    let fine = deform(&gamma, &a, &b, 4.0, &DeformConfig { n_s: 16, n_t: 1024, ..DeformConfig::default() }).unwrap();
    let mut err: f64 = 0.0;
    for i in 0..=16 {
        for j in 0..=64 {
            err = err.max((coarse.h(i, j) - fine.h(i, 16 * j)).norm());
        }
    }
    assert!(err < 1e-8, "{err}");
    assert!(coarse.richardson_error() < 1e-8);
    assert!(validate(&coarse).passed);
}

#[test]
fn validation_flags_entry_on_a_trajectory() {
    let a = unit_set();
    let gamma = Path64::segment(cx(0.2, 0.0), cx(0.6, 0.0)).unwrap();
    let g = deform(&gamma, &a, &a, 2.0, &small()).unwrap();
    let report = validate(&g);
    assert!(report.passed, "{:?}", report.failures);
    // an extra point of A placed on the contours makes the factor paths inadmissible
    let blocked = FilteredSet::new(o(), [(cx(1.0, 0.0), 1.0), (cx(0.3, 0.0), 0.3)], 10.0).unwrap();
    let report = validate(&g.with_sets(blocked, a));
    assert!(!report.admissible && !report.passed);
}

#[test]
fn constant_endpoint_path_is_trivial() {
    let a = unit_set();
    let g = deform(&Path64::point(cx(0.3, 0.2)), &a, &a, 1.0, &small()).unwrap();
    let report = validate(&g);
    assert!(report.passed);
    assert_eq!(report.speed_residual, 0.0);
    assert_eq!(g.h(g.n_s(), g.n_t()), cx(0.3, 0.2));
}

#[test]
fn preconditions() {
    let a = unit_set();
    let far = Path64::segment(cx(1.5, 0.0), cx(1.6, 0.0)).unwrap();
    assert!(matches!(deform(&far, &a, &a, 5.0, &small()), Err(DeformError::Precondition(_))));
    let from_centre = Path64::segment(o(), cx(0.5, 0.0)).unwrap();
    assert!(matches!(deform(&from_centre, &a, &a, 2.0, &small()), Err(DeformError::Precondition(_))));
    let short = Path64::segment(cx(0.1, 0.0), cx(0.5, 0.0)).unwrap();
    assert!(matches!(deform(&short, &a, &a, 0.4, &small()), Err(DeformError::Precondition(_))));
}

#[test]
fn guard_trips_near_a_sum_point() {
    // γ passes within 1e-12 of 1 ∈ A_L + B_L, where χ vanishes; the fine-sum
    // check does not see it because the point is reached before its level.
    let a = FilteredSet::new(o(), [(cx(1.0, 0.0), 1.0)], 10.0).unwrap();
    let gamma = Path64::new(vec![cx(0.1, 0.0), cx(1.0, 1e-12), cx(1.0, 0.5)]).unwrap();
    let b = FilteredSet::trivial(o(), 10.0).unwrap();
    let level = 0.9 + 1.0 + 0.5;
    let field = FlowField::new(&gamma, &a, &b, level + 0.1, 1e-8).unwrap();
    let t_hit = 0.9 / (0.9 + 0.5);
    assert!(field.chi(cx(1.0, 0.0), t_hit) < 1e-10);
    assert!(matches!(field.value(cx(1.0, 0.0), t_hit), Err(DeformError::Guard { .. })));
}

fn arb_point(r: f64) -> impl Strategy<Value = C> {
    (0.0..r, -PI..PI).prop_map(|(m, a)| C::from_polar(m, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn speed_is_bounded_by_gamma(z in arb_point(3.0), t in 0.0..1.0f64, end in arb_point(0.8)) {
        let a = unit_set();
        let b = FilteredSet::new(o(), [(cx(0.0, 1.5), 1.5)], 10.0).unwrap();
        let gamma = Path64::new(vec![cx(0.1, 0.05), cx(0.3, 0.6), end + cx(0.05, 0.0)]).unwrap();
        let field = FlowField::new(&gamma, &a, &b, 5.0, 1e-8).unwrap();
        if let Ok(x) = field.value(z, t) {
            let k = gamma.locate(t).0;
            prop_assert!(x.norm() <= gamma.length() * (1.0 + 1e-12), "{} vs {}", x.norm(), gamma.length());
            prop_assert!(k < gamma.segment_count());
        }
    }

    #[test]
    fn trajectories_are_not_longer_than_gamma(end in arb_point(0.7)) {
        let a = unit_set();
        let gamma = Path64::new(vec![cx(0.1, 0.0), end + cx(0.15, 0.1)]).unwrap();
        let g = deform(&gamma, &a, &a, 3.0, &small()).unwrap();
        for i in 0..=g.n_s() {
            let traj = g.trajectory(i);
            let len: f64 = traj.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
            prop_assert!(len <= gamma.length() * (1.0 + 1e-6));
        }
    }
}
