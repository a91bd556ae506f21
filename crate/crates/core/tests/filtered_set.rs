use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use borel_core::{cx, glimpsed_inductive, Cx, FilteredSet, FilteredSet64, SetError};
use proptest::prelude::*;

type C = Cx<f64>;

fn o() -> C {
    cx(0.0, 0.0)
}

fn set(entries: &[(C, f64)], horizon: f64) -> FilteredSet64 {
    FilteredSet::new(o(), entries.iter().copied(), horizon).unwrap()
}

/// `Ω_L = {0, ±ω₁, …, ±nω₁}` for `L ∈ ]n|ω₁|, (n+1)|ω₁|]`.
fn lattice(w: C, horizon: f64) -> FilteredSet64 {
    let n = (horizon / w.norm()).ceil() as i32;
    let entries = (1..=n).flat_map(|k| {
        let l = k as f64 * w.norm();
        [(w * k as f64, l), (-w * k as f64, l)]
    });
    FilteredSet::new(o(), entries, horizon).unwrap()
}

fn sorted(mut v: Vec<C>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = v.drain(..).map(|z| (z.re, z.im)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    out
}

fn entries_of(s: &FilteredSet64) -> Vec<(f64, f64, f64)> {
    let mut v: Vec<_> = s.entries().iter().map(|e| (e.z.re, e.z.im, e.level)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

#[test]
fn level_of_examples() {
    let ex = lattice(cx(1.0, 0.0), 5.0);
    assert_eq!(ex.level_of(cx(2.0, 0.0)), Some(2.0));
    assert_eq!(ex.level_of(o()), Some(0.0));
    let s = set(&[(cx(1.0, 1.0), 2.5)], 5.0);
    assert_eq!(s.level_of(cx(1.0, -1.0)), None);
}

#[test]
fn at_level_examples() {
    let ex = lattice(cx(1.0, 0.0), 5.0);
    assert_eq!(sorted(ex.at_level(2.5).unwrap()), sorted(vec![o(), cx(1.0, 0.0), cx(-1.0, 0.0), cx(2.0, 0.0), cx(-2.0, 0.0)]));
    // the block ]n, n+1] is closed on the right
    assert_eq!(ex.at_level(3.0).unwrap().len(), 5);
    assert_eq!(ex.at_level(1.0).unwrap(), vec![o()]);
    let s = set(&[(cx(1.0, 0.0), 1.0), (cx(0.0, 1.0), 1.2)], 5.0);
    assert_eq!(s.at_level(1.1).unwrap(), vec![o(), cx(1.0, 0.0)]);
    assert_eq!(s.at_level(s.rho()).unwrap(), vec![o()]);
    assert!(matches!(s.at_level(5.5), Err(SetError::BeyondHorizon { .. })));
}

#[test]
fn rho_examples() {
    assert_eq!(set(&[(cx(1.0, 0.0), 1.0), (cx(-1.0, 0.0), 1.0)], 5.0).rho(), 1.0);
    assert_eq!(FilteredSet::<f64>::trivial(o(), 5.0).unwrap().rho(), 5.0);
    assert_eq!(lattice(cx(0.0, 2.0), 9.0).rho(), 2.0);
}

#[test]
fn union_examples() {
    let a = set(&[(cx(1.0, 0.0), 1.0)], 10.0);
    let b = set(&[(cx(1.0, 0.0), 2.0)], 10.0);
    assert_eq!(a.union(&b).unwrap(), a);
    let triv = FilteredSet::trivial(o(), 4.0).unwrap();
    let wide = set(&[(cx(1.0, 0.0), 1.0), (cx(3.0, 0.0), 5.0)], 10.0);
    assert_eq!(wide.union(&triv).unwrap(), set(&[(cx(1.0, 0.0), 1.0)], 4.0));
    let i = set(&[(cx(0.0, 1.0), 1.0)], 10.0);
    assert_eq!(entries_of(&a.union(&i).unwrap()), vec![(0.0, 1.0, 1.0), (1.0, 0.0, 1.0)]);
}

#[test]
fn sum_examples() {
    let a = set(&[(cx(1.0, 0.0), 1.0)], 10.0);
    let i = set(&[(cx(0.0, 1.0), 1.0)], 10.0);
    assert_eq!(
        entries_of(&a.sum(&i).unwrap()),
        vec![(0.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, 2f64.sqrt())]
    );
    let triv = FilteredSet::trivial(o(), 10.0).unwrap();
    assert_eq!(a.sum(&triv).unwrap(), a);
    assert_eq!(entries_of(&a.sum(&a).unwrap()), vec![(1.0, 0.0, 1.0), (2.0, 0.0, 2.0)]);
}

#[test]
fn fine_sum_examples() {
    let a = set(&[(cx(1.0, 0.0), 1.0)], 10.0);
    let i = set(&[(cx(0.0, 1.0), 1.0)], 10.0);
    assert_eq!(entries_of(&a.fine_sum(&i).unwrap()), vec![(0.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, 2.0)]);
    let triv = FilteredSet::trivial(o(), 10.0).unwrap();
    assert_eq!(a.fine_sum(&triv).unwrap(), a);
    assert_eq!(entries_of(&a.fine_sum(&a).unwrap()), vec![(1.0, 0.0, 1.0), (2.0, 0.0, 2.0)]);
}

#[test]
fn fine_sum_of_lattices_recovers_their_sum_points() {
    let (w1, w2) = (cx(1.0, 0.0), cx(0.3, 1.1));
    let s = lattice(w1, 6.0).fine_sum(&lattice(w2, 6.0)).unwrap();
    for (k, m) in [(1i32, 1i32), (2, -1), (-3, 2), (1, -4)] {
        let p = w1 * k as f64 + w2 * m as f64;
        let expected = k.abs() as f64 * w1.norm() + m.abs() as f64 * w2.norm();
        if expected < 6.0 {
            assert!((s.level_of(p).unwrap() - expected).abs() < 1e-12, "{k}, {m}");
        }
    }
}

#[test]
fn saturate_examples() {
    let s = set(&[(cx(1.0, 0.0), 1.0)], 3.5);
    assert_eq!(entries_of(&s.saturate()), vec![(1.0, 0.0, 1.0), (2.0, 0.0, 2.0), (3.0, 0.0, 3.0)]);
    let triv = FilteredSet::<f64>::trivial(o(), 3.0).unwrap();
    assert_eq!(triv.saturate(), triv);
    let pm = set(&[(cx(1.0, 0.0), 1.0), (cx(-1.0, 0.0), 1.0)], 2.5);
    assert_eq!(
        entries_of(&pm.saturate()),
        vec![(-2.0, 0.0, 2.0), (-1.0, 0.0, 1.0), (1.0, 0.0, 1.0), (2.0, 0.0, 2.0)]
    );
}

#[test]
fn glimpse_examples() {
    let s = set(&[(cx(1.0, 0.0), 1.0), (cx(2.0, 0.0), 3.0)], 5.0);
    let g = s.glimpsed(0.0);
    assert_eq!(g.points.iter().map(|e| e.z).collect::<Vec<_>>(), vec![cx(1.0, 0.0)]);
    assert_eq!(glimpsed_inductive(&s, 0.0), vec![cx(1.0, 0.0)]);
    assert!(set(&[(cx(0.0, 1.0), 1.0)], 5.0).glimpsed(0.0).points.is_empty());
    assert_eq!(set(&[(cx(0.0, 1.0), 1.0)], 5.0).seen(0.0), None);
    let two = set(&[(cx(1.0, 0.0), 1.0), (cx(2.0, 0.0), 2.0)], 5.0);
    assert_eq!(two.glimpsed(0.0).completed(), vec![o(), cx(1.0, 0.0), cx(2.0, 0.0)]);
    assert_eq!(two.seen(0.0), Some(cx(1.0, 0.0)));
    let ex = lattice(cx(1.0, 0.0), 4.5);
    assert_eq!(glimpsed_inductive(&ex, 0.0), vec![cx(1.0, 0.0), cx(2.0, 0.0), cx(3.0, 0.0), cx(4.0, 0.0)]);
    assert_eq!(ex.seen(PI), Some(cx(-1.0, 0.0)));
}

#[test]
fn glimpse_angle_examples() {
    let res = 1e-9;
    let diag = set(&[(C::from_polar(1.0, FRAC_PI_4), 1.0)], 5.0);
    let a = diag.glimpse_angle(0.0, 2.0, res).unwrap();
    assert!(a < FRAC_PI_4 && a > FRAC_PI_4 - 1e-8);
    let ray = set(&[(cx(1.0, 0.0), 1.0)], 5.0);
    assert_eq!(ray.glimpse_angle(0.0, 2.0, res).unwrap(), FRAC_PI_2 - res);
    let vert = set(&[(cx(0.0, 1.0), 1.0), (cx(0.0, -1.0), 1.0)], 5.0);
    let a = vert.glimpse_angle(0.0, 2.0, res).unwrap();
    assert!(a < FRAC_PI_2 && a > FRAC_PI_2 - 1e-8);
}

#[test]
fn json_round_trip_and_validation() {
    let s = set(&[(cx(1.0, 0.0), 1.0), (cx(0.0, 2.0), 2.5)], 7.0);
    let text = serde_json::to_string(&s).unwrap();
    assert_eq!(serde_json::from_str::<FilteredSet64>(&text).unwrap(), s);
    let bad = r#"{"centre":[0,0],"entries":[{"z":[2,0],"level":1}],"horizon":5}"#;
    assert!(serde_json::from_str::<FilteredSet64>(bad).is_err());
}

#[test]
fn single_precision_alias_agrees() {
    let a = FilteredSet::<f32>::new(cx(0.0, 0.0), [(cx(1.0f32, 0.0), 1.0f32)], 4.5).unwrap();
    let levels: Vec<f32> = a.saturate().entries().iter().map(|e| e.level).collect();
    assert_eq!(levels, vec![1.0, 2.0, 3.0, 4.0]);
}

fn arb_set() -> impl Strategy<Value = FilteredSet64> {
    (5.0..10.0f64, prop::collection::vec((0.1..6.0f64, -PI..PI, 0.0..3.0f64), 0..=6)).prop_map(|(h, es)| {
        let entries: Vec<(C, f64)> = es.into_iter().map(|(r, a, extra)| (C::from_polar(r, a), r.max(0.8) + extra)).collect();
        FilteredSet::new(o(), entries, h).unwrap()
    })
}

fn subset(a: &[C], b: &[C]) -> bool {
    a.iter().all(|p| b.iter().any(|q| (p - q).norm() <= 1e-9))
}

fn same_entries(a: &FilteredSet64, b: &FilteredSet64) -> bool {
    a.horizon() == b.horizon()
        && a.entries().len() == b.entries().len()
        && a.entries().iter().all(|e| {
            b.entries().iter().any(|f| (e.z - f.z).norm() <= 1e-9 && (e.level - f.level).abs() <= 1e-12)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn at_level_is_monotone_and_in_disc(s in arb_set(), u in 0.01..1.0f64, v in 0.01..1.0f64) {
        let (l1, l2) = (s.horizon() * u.min(v), s.horizon() * u.max(v));
        let (p1, p2) = (s.at_level(l1).unwrap(), s.at_level(l2).unwrap());
        prop_assert!(subset(&p1, &p2));
        prop_assert!(p2.iter().all(|p| p.norm() < l2));
    }

    #[test]
    fn fine_sum_within_sum(a in arb_set(), b in arb_set(), u in 0.01..1.0f64) {
        let (f, s) = (a.fine_sum(&b).unwrap(), a.sum(&b).unwrap());
        let l = f.horizon() * u;
        prop_assert!(subset(&f.at_level(l).unwrap(), &s.at_level(l).unwrap()));
        prop_assert!(f.entries().iter().all(|e| e.z.norm() <= e.level));
    }

    #[test]
    fn operations_commute(a in arb_set(), b in arb_set()) {
        prop_assert!(same_entries(&a.union(&b).unwrap(), &b.union(&a).unwrap()));
        prop_assert!(same_entries(&a.sum(&b).unwrap(), &b.sum(&a).unwrap()));
        prop_assert!(same_entries(&a.fine_sum(&b).unwrap(), &b.fine_sum(&a).unwrap()));
    }

    #[test]
    fn union_and_fine_sum_associate(a in arb_set(), b in arb_set(), c in arb_set()) {
        let left = a.union(&b).unwrap().union(&c).unwrap();
        let right = a.union(&b.union(&c).unwrap()).unwrap();
        prop_assert!(same_entries(&left, &right));
        let left = a.fine_sum(&b).unwrap().fine_sum(&c).unwrap();
        let right = a.fine_sum(&b.fine_sum(&c).unwrap()).unwrap();
        prop_assert!(same_entries(&left, &right));
    }

    #[test]
    fn saturation_is_idempotent(s in arb_set()) {
        let once = s.saturate();
        prop_assert!(once.saturate().approx_eq(&once));
        prop_assert!(subset(&s.at_level(s.horizon()).unwrap(), &once.at_level(s.horizon()).unwrap()));
    }

    #[test]
    fn glimpse_matches_inductive_construction(
        theta in -PI..PI,
        ray in prop::collection::vec((1..16u32, 0..3u32), 1..6),
        off in prop::collection::vec((1..16u32, 0.1..1.5f64), 0..3),
    ) {
        let e = C::from_polar(1.0, theta);
        let mut entries: Vec<(C, f64)> = ray.iter().map(|&(d, x)| {
            let d = d as f64 / 4.0;
            (e * d, d + x as f64 / 4.0)
        }).collect();
        entries.extend(off.iter().map(|&(d, a)| (C::from_polar(d as f64 / 4.0, theta + a), d as f64 / 4.0 + 0.5)));
        let s = FilteredSet::new(o(), entries, 4.5).unwrap();
        let closed: Vec<C> = s.glimpsed(theta).points.iter().map(|e| e.z).collect();
        prop_assert_eq!(closed, glimpsed_inductive(&s, theta));
    }

    #[test]
    fn json_round_trips(s in arb_set()) {
        let back: FilteredSet64 = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }
}
