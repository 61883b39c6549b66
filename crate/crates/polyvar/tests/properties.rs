use polyvar::calculus::{image_rule, sum_rule, Relation};
use polyvar::cones::{cone_of, directional_normal_set, limiting_normal_set, regular_normal_set, tangent_directions, tangent_set, ConeKind};
use polyvar::generate::{GenConfig, Generator};
use polyvar::{ConvexPolyhedron, PolyhedralSet, RVector, Rational};
use proptest::prelude::*;

fn small() -> GenConfig {
    GenConfig {
        max_dim: 3,
        max_pieces: 3,
        max_constraints: 3,
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn rational_text_round_trip(p in -1000i64..1000, q in 1i64..1000) {
        let r = Rational::from_int(p) / Rational::from_int(q);
        let back: Rational = r.to_string().parse().unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn generator_is_deterministic(seed in any::<u64>()) {
        let mut a = Generator::new(seed, small());
        let mut b = Generator::new(seed, small());
        let (s, t) = (a.set(), b.set());
        prop_assert_eq!(&s.set, &t.set);
        prop_assert_eq!(&s.point, &t.point);
        prop_assert!(s.set.contains(&s.point));
    }

    #[test]
    fn double_description_round_trip(seed in any::<u64>()) {
        let s = Generator::new(seed, small()).set();
        for piece in s.set.pieces() {
            let v = piece.vrep();
            let back = ConvexPolyhedron::from_generators(piece.dim(), &v.points, &v.rays, &v.lines);
            prop_assert_eq!(&back, piece);
        }
    }

    #[test]
    fn distance_vanishes_exactly_on_the_set(seed in any::<u64>(), shift in prop::collection::vec(-3i64..=3, 3)) {
        let s = Generator::new(seed, small()).set();
        let d = s.set.dim();
        prop_assert!(s.set.distance_inf(&s.point).unwrap().is_zero());
        let moved = s.point.add(&RVector::from_ints(&shift[..d]));
        let dist = s.set.distance_inf(&moved).unwrap();
        prop_assert_eq!(dist.is_zero(), s.set.contains(&moved));
        prop_assert!(dist <= moved.sub(&s.point).norm_inf());
    }

    #[test]
    fn polarity_and_sandwich(seed in any::<u64>()) {
        let s = Generator::new(seed, small()).set();
        let t = tangent_set(&s.set, &s.point);
        prop_assert!(t.is_cone() && t.contains(&RVector::zeros(t.dim())));
        let reg = regular_normal_set(&s.set, &s.point);
        prop_assert!(reg.is_convex_piece());
        prop_assert!(reg.set_equal(&t.polar_cone().unwrap()));
        let lim = limiting_normal_set(&s.set, &s.point);
        prop_assert!(reg.is_subset(&lim));
        let zero = RVector::zeros(s.set.dim());
        prop_assert!(directional_normal_set(&s.set, &s.point, &zero).set_equal(&lim));
        for w in tangent_directions(&s.set, &s.point) {
            prop_assert!(directional_normal_set(&s.set, &s.point, &w).is_subset(&lim));
        }
    }

    #[test]
    fn bipolar_and_polar_of_union(seed in any::<u64>()) {
        let s = Generator::new(seed, small()).set();
        let t = tangent_set(&s.set, &s.point);
        let tpp = t.polar_cone().unwrap().polar_cone().unwrap();
        prop_assert!(t.is_subset(&tpp));
        if t.is_convex_piece() {
            prop_assert!(tpp.set_equal(&t));
        }
        let parts: Vec<PolyhedralSet> = t.pieces().iter().cloned().map(PolyhedralSet::from_convex).collect();
        let meet = parts
            .iter()
            .map(|p| p.polar_cone().unwrap())
            .fold(PolyhedralSet::universe(t.dim()), |acc, p| acc.intersect(&p));
        prop_assert!(meet.set_equal(&t.polar_cone().unwrap()));
    }

    #[test]
    fn direction_outside_tangent_cone_has_no_directional_normals(seed in any::<u64>(), w in prop::collection::vec(-2i64..=2, 3)) {
        let s = Generator::new(seed, small()).set();
        let w = RVector::from_ints(&w[..s.set.dim()]);
        let t = tangent_set(&s.set, &s.point);
        let dn = directional_normal_set(&s.set, &s.point, &w);
        prop_assert_eq!(dn.is_empty(), !t.contains(&w));
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn coderivatives_are_nested(seed in any::<u64>()) {
        let mi = Generator::new(seed, small()).map();
        let (m, y, x) = (&mi.map, &mi.y, &mi.x);
        let reg = m.regular_coderivative(y, x).unwrap();
        let lim = m.limiting_coderivative(y, x).unwrap();
        prop_assert!(reg.graph().is_subset(lim.graph()));
        let point = polyvar::maps::join(y, x);
        let from_normals = m.coderivative_from_normals(&regular_normal_set(m.graph(), &point));
        prop_assert!(from_normals.graph().set_equal(reg.graph()));
        prop_assert!(lim.image_at(&RVector::zeros(m.n())).contains(&RVector::zeros(m.m())));
        let d = m.graphical_derivative(y, x).unwrap();
        prop_assert!(d.graph().set_equal(&tangent_set(m.graph(), &point)));
    }

    #[test]
    fn cone_kinds_agree_with_set_functions(seed in any::<u64>()) {
        let s = Generator::new(seed, small()).set();
        let p = &s.point;
        prop_assert_eq!(&cone_of(&s.set, p, ConeKind::Tangent, None).cone, &tangent_set(&s.set, p));
        prop_assert_eq!(&cone_of(&s.set, p, ConeKind::RegularNormal, None).cone, &regular_normal_set(&s.set, p));
        prop_assert_eq!(&cone_of(&s.set, p, ConeKind::LimitingNormal, None).cone, &limiting_normal_set(&s.set, p));
    }

    #[test]
    fn rule_reports_never_contradict_their_claims(seed in any::<u64>()) {
        let mut g = Generator::new(seed, small());
        let a = g.set_in(2);
        let b = g.set_in(2);
        let y = a.point.add(&b.point);
        for kind in ConeKind::ALL {
            let dir = (kind == ConeKind::DirectionalLimitingNormal).then(|| RVector::zeros(2));
            let rep = sum_rule(
                &[a.set.clone(), b.set.clone()],
                &y,
                &[a.point.clone(), b.point.clone()],
                kind,
                dir.as_ref().map(|d| &d.0[..]),
            )
            .unwrap();
            prop_assert!(rep.consistent(), "sum {:?}", kind);
            if rep.hypotheses_hold() {
                let rel = rep.relation().unwrap();
                prop_assert!(rel != Relation::Incomparable);
            }
        }
        let c = g.set_in(2);
        let mat = g.matrix(1, 2);
        let shift = RVector::zeros(1);
        let img = mat.mul_vec(&c.point);
        for kind in [ConeKind::Tangent, ConeKind::RegularNormal, ConeKind::LimitingNormal] {
            let rep = image_rule(&mat, &shift, &c.set, &img, kind, None).unwrap();
            prop_assert!(rep.consistent(), "image {:?}", kind);
        }
    }
}
