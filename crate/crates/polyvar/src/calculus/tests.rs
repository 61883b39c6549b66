use super::*;
use crate::polyhedron::ConvexPolyhedron;
use crate::maps::PLFunction;

fn v(xs: &[i64]) -> RVector {
    RVector::from_ints(xs)
}

fn r(n: i64) -> Rational {
    Rational::from_int(n)
}

fn cone(d: usize, ineqs: &[&[i64]], eqs: &[&[i64]]) -> ConvexPolyhedron {
    ConvexPolyhedron::cone(d, ineqs.iter().map(|x| v(x)).collect(), eqs.iter().map(|x| v(x)).collect())
}

fn set(d: usize, pieces: Vec<ConvexPolyhedron>) -> PolyhedralSet {
    PolyhedralSet::from_pieces(d, pieces)
}

/// M₁(y) = [−|y|, |y|].
fn m1() -> PolyMap {
    PolyMap::from_graph(
        set(2, vec![cone(2, &[&[-1, 1], &[-1, -1]], &[]), cone(2, &[&[1, 1], &[1, -1]], &[])]),
        1,
    )
}

fn linear(rows: &[&[i64]]) -> PolyMap {
    PolyMap::affine(&Matrix::from_ints(rows), &RVector::zeros(rows.len()))
}

fn nonneg() -> PolyhedralSet {
    set(1, vec![cone(1, &[&[-1]], &[])])
}

fn nonpos() -> PolyhedralSet {
    set(1, vec![cone(1, &[&[1]], &[])])
}

const Z1: [Rational; 1] = [Rational::ZERO];
const Z2: [Rational; 2] = [Rational::ZERO, Rational::ZERO];

fn all_consistent(rep: &RuleReport) {
    assert!(rep.consistent(), "{rep:#?}");
}

#[test]
fn domain_cones_of_the_bowtie() {
    let m = m1();
    let t = domain_cones(&m, &Z1, ConeKind::Tangent, None).unwrap();
    assert_eq!(t.relation(), Some(Relation::Equal));
    assert!(t.estimates[0].lhs.set_equal(&PolyhedralSet::universe(1)));
    assert!(t.hypotheses_hold());
    for kind in ConeKind::ALL {
        all_consistent(&domain_cones(&m, &Z1, kind, None).unwrap());
    }
    let dir = domain_cones(&m, &Z1, ConeKind::DirectionalLimitingNormal, Some(&[r(1)])).unwrap();
    all_consistent(&dir);
    assert!(matches!(domain_cones(&m.restrict(&nonneg()), &[r(-1)], ConeKind::Tangent, None), Err(PolyError::NotInDomain)));
}

#[test]
fn domain_normals_collect_every_representative() {
    let low = ConvexPolyhedron::new(2, vec![(v(&[-1, 0]), r(0))], vec![(v(&[0, 1]), r(0))]).unwrap();
    let high = ConvexPolyhedron::new(2, vec![(v(&[1, 0]), r(0))], vec![(v(&[0, 1]), r(1))]).unwrap();
    let m = PolyMap::from_graph(set(2, vec![low, high]), 1);
    assert_eq!(m.image_representatives(&Z1).len(), 2);
    let rep = domain_cones(&m, &Z1, ConeKind::LimitingNormal, None).unwrap();
    let e = &rep.estimates[0];
    assert!(e.lhs.is_origin());
    assert!(e.rhs.set_equal(&PolyhedralSet::universe(1)));
    assert_eq!(e.relation, Relation::LhsSubsetRhs);
    all_consistent(&rep);
}

#[test]
fn image_cones_examples() {
    let m = m1();
    let t = image_cones(&m, &Z1, &Z1, ConeKind::Tangent, None).unwrap();
    assert!(t.estimates[0].lhs.is_origin() && t.estimates[0].rhs.is_origin());
    let reg = image_cones(&m, &Z1, &Z1, ConeKind::RegularNormal, None).unwrap();
    let e = &reg.estimates[0];
    assert!(e.lhs.set_equal(&PolyhedralSet::universe(1)));
    assert!(e.rhs.is_origin());
    assert_eq!(e.relation, Relation::RhsSubsetLhs);
    assert!(e.lhs_witness.as_ref().is_some_and(|w| !w.is_zero()));
    for kind in ConeKind::ALL {
        all_consistent(&image_cones(&m, &Z1, &Z1, kind, None).unwrap());
    }

    let c = PolyMap::constant(1, &nonneg());
    let t = image_cones(&c, &Z1, &Z1, ConeKind::Tangent, None).unwrap();
    assert!(t.estimates[0].lhs.set_equal(&nonneg()));
    assert_eq!(t.relation(), Some(Relation::Equal));
    assert!(matches!(image_cones(&m, &Z1, &[r(1)], ConeKind::Tangent, None), Err(PolyError::OffGraph { .. })));
}

#[test]
fn sum_rule_examples() {
    let d1 = set(2, vec![cone(2, &[&[-1, 0]], &[&[0, 1]])]);
    let d2 = set(2, vec![cone(2, &[&[0, -1]], &[&[1, 0]])]);
    let parts = [RVector::zeros(2), RVector::zeros(2)];
    let rep = sum_rule(&[d1.clone(), d2.clone()], &Z2, &parts, ConeKind::Tangent, None).unwrap();
    let quadrant = set(2, vec![cone(2, &[&[-1, 0], &[0, -1]], &[])]);
    assert!(rep.estimates[0].lhs.set_equal(&quadrant));
    all_consistent(&rep);

    let xaxis = set(2, vec![cone(2, &[], &[&[0, 1]])]);
    let yaxis = set(2, vec![cone(2, &[], &[&[1, 0]])]);
    for kind in ConeKind::ALL {
        let rep = sum_rule(&[xaxis.clone(), yaxis.clone()], &Z2, &parts, kind, None).unwrap();
        assert!(rep.hypothesis(Criterion::SumRuleIsolatedCalm).unwrap().verdict);
        assert_eq!(rep.relation(), Some(Relation::Equal));
        all_consistent(&rep);
    }

    let rep = sum_rule(&[xaxis.clone(), xaxis.clone()], &Z2, &parts, ConeKind::LimitingNormal, None).unwrap();
    let ic = rep.hypothesis(Criterion::SumRuleIsolatedCalm).unwrap();
    assert!(!ic.verdict);
    let w = &ic.witness.as_ref().unwrap()[0];
    assert!(!w.is_zero());
    assert_eq!(w.slice(0, 2), w.slice(2, 4).neg());
    all_consistent(&rep);

    let bad = [v(&[1, 0]), v(&[0, 0])];
    assert!(matches!(
        sum_rule(&[d1.clone(), d2.clone()], &Z2, &bad, ConeKind::Tangent, None),
        Err(PolyError::InvalidDecomposition(_))
    ));
}

#[test]
fn intersection_rule_examples() {
    let c1 = set(2, vec![cone(2, &[&[-1, 1]], &[])]);
    let c2 = set(2, vec![cone(2, &[&[1, 1]], &[])]);
    let rep = intersection_rule(&[c1.clone(), c2.clone()], &Z2, ConeKind::LimitingNormal, None).unwrap();
    assert!(rep.hypothesis(Criterion::IntersectionAubin).unwrap().verdict);
    let sum = rep.estimate("normal sum").unwrap();
    assert_eq!(sum.relation, Relation::Equal);
    let expected = set(2, vec![ConvexPolyhedron::cone_from_generators(2, &[v(&[-1, 1]), v(&[1, 1])], &[])]);
    assert!(sum.lhs.set_equal(&expected));
    all_consistent(&rep);

    let line = set(2, vec![cone(2, &[], &[&[-1, 1]])]);
    let rep = intersection_rule(&[line.clone(), line], &Z2, ConeKind::LimitingNormal, None).unwrap();
    assert!(!rep.hypothesis(Criterion::IntersectionAubin).unwrap().verdict);
    all_consistent(&rep);
    for kind in ConeKind::ALL {
        all_consistent(&intersection_rule(&[c1.clone(), c2.clone()], &Z2, kind, None).unwrap());
    }
    assert!(matches!(
        intersection_rule(&[c1, c2], &[r(0), r(1)], ConeKind::Tangent, None),
        Err(PolyError::NotInSet { .. })
    ));
}

#[test]
fn image_and_preimage_rules() {
    let a = Matrix::from_ints(&[&[1, 1]]);
    let rep = preimage_rule(&a, &Z1, &nonneg(), &Z2, ConeKind::LimitingNormal, None).unwrap();
    let expected = set(2, vec![ConvexPolyhedron::cone_from_generators(2, &[v(&[-1, -1])], &[])]);
    assert!(rep.estimates[0].lhs.set_equal(&expected));
    assert!(rep.hypothesis(Criterion::PreimageRuleCq).unwrap().verdict);
    all_consistent(&rep);

    let bowtie = m1().graph().clone();
    let proj = Matrix::from_ints(&[&[1, 0]]);
    let rep = image_rule(&proj, &Z1, &bowtie, &Z1, ConeKind::Tangent, None).unwrap();
    assert!(rep.estimates[0].lhs.set_equal(&PolyhedralSet::universe(1)));
    all_consistent(&rep);

    let inv = Matrix::from_ints(&[&[1, 1], &[0, 1]]);
    let shift = [r(1), r(-1)];
    for kind in ConeKind::ALL {
        let y = inv.mul_vec(&Z2).add(&RVector(shift.to_vec()));
        let rep = image_rule(&inv, &shift, &bowtie, &y, kind, None).unwrap();
        assert!(rep.checks.iter().any(|c| c.name.contains("change of coordinates")));
        all_consistent(&rep);
        let rep = preimage_rule(&inv, &shift, &bowtie.translate(&shift), &Z2, kind, None).unwrap();
        all_consistent(&rep);
    }
}

/// `|x − y|` on ℝ × ℝ.
fn abs_difference() -> PLFunction {
    PLFunction::max_affine(2, &[(v(&[1, -1]), r(0)), (v(&[-1, 1]), r(0))], None)
}

#[test]
fn marginal_of_abs_difference() {
    let f = abs_difference();
    let rep = marginal_function(&f, &Z1, ConeKind::Tangent, Some((&[r(1)], &r(0)))).unwrap();
    assert_eq!(rep.relation(), Some(Relation::Equal));
    all_consistent(&rep);
    let data = MarginalData::new(&f, &Z1).unwrap();
    assert_eq!(data.value, r(0));
    let dv = PLFunction::new(rep.estimates[0].lhs.clone(), 1).unwrap();
    assert_eq!(dv.value(&[r(1)]), ExtReal::Finite(r(0)));
    for kind in ConeKind::ALL {
        all_consistent(&marginal_function(&f, &Z1, kind, None).unwrap());
    }
}

#[test]
fn marginal_of_constrained_linear() {
    let dom = ConvexPolyhedron::new(2, vec![(v(&[-1, 1]), r(0))], vec![]).unwrap();
    let f = PLFunction::max_affine(2, &[(v(&[1, 0]), r(0))], Some(&dom));
    let rep = marginal_function(&f, &Z1, ConeKind::RegularNormal, None).unwrap();
    let e = &rep.estimates[0];
    assert!(e.lhs.set_equal(&PolyhedralSet::singleton(&v(&[1]))));
    assert_eq!(e.relation, Relation::Equal);
    all_consistent(&rep);
    for kind in ConeKind::ALL {
        all_consistent(&marginal_function(&f, &Z1, kind, None).unwrap());
    }
    let unbounded = PLFunction::max_affine(2, &[(v(&[1, 0]), r(0))], None);
    assert!(matches!(
        marginal_function(&unbounded, &Z1, ConeKind::Tangent, None),
        Err(PolyError::InfiniteValue("-inf"))
    ));
}

#[test]
fn chain_rule_with_identity_reproduces_the_factor() {
    let s1 = m1();
    let id = PolyMap::identity(1);
    for kind in ConeKind::ALL {
        let rep = chain_rule(&s1, &id, &Z1, &Z1, kind, None).unwrap();
        all_consistent(&rep);
        let own = match kind {
            ConeKind::Tangent => s1.graphical_derivative(&Z1, &Z1).unwrap(),
            _ => s1.coderivative(&Z1, &Z1, kind, None).unwrap(),
        };
        assert_eq!(&rep.estimates[0].lhs, own.graph());
        assert_eq!(rep.estimates[0].relation, Relation::Equal);
    }
}

#[test]
fn chain_rule_of_linear_maps() {
    let s1 = linear(&[&[2]]);
    let s2 = linear(&[&[3]]);
    let rep = chain_rule(&s1, &s2, &Z1, &Z1, ConeKind::Tangent, None).unwrap();
    assert_eq!(rep.relation(), Some(Relation::Equal));
    assert!(rep.estimates[0].lhs.contains(&[r(1), r(6)]));
    for kind in ConeKind::ALL {
        let rep = chain_rule(&s1, &s2, &Z1, &Z1, kind, None).unwrap();
        all_consistent(&rep);
        assert!(rep.hypotheses_hold());
    }
}

#[test]
fn chain_rule_through_a_kink() {
    let s1 = PolyMap::from_graph(set(2, vec![cone(2, &[&[1, -1]], &[])]), 1);
    let s2 = PolyMap::from_graph(
        set(2, vec![cone(2, &[&[-1, 0]], &[&[1, -1]]), cone(2, &[&[1, 0]], &[&[1, 1]])]),
        1,
    );
    for kind in ConeKind::ALL {
        let rep = chain_rule(&s1, &s2, &Z1, &Z1, kind, None).unwrap();
        all_consistent(&rep);
    }
    let rep = chain_rule(&s1, &s2, &Z1, &Z1, ConeKind::LimitingNormal, None).unwrap();
    assert!(rep.hypothesis(Criterion::ChainDualCq).unwrap().verdict);
    let e = &rep.estimates[0];
    assert_eq!(e.relation, Relation::LhsSubsetRhs);
    assert!(e.rhs_witness.is_some());
}

#[test]
fn product_rule_examples() {
    let g1 = m1();
    let g2 = linear(&[&[2]]);
    for kind in ConeKind::ALL {
        let rep = product_rule(&g1, &g2, &Z1, &Z1, &Z1, kind, None).unwrap();
        assert!(rep.hypothesis(Criterion::ProductCq).unwrap().verdict);
        if kind != ConeKind::DirectionalLimitingNormal {
            assert_eq!(rep.relation(), Some(Relation::Equal), "{kind}");
        }
        all_consistent(&rep);
    }

    let pinned = PolyMap::from_graph(set(2, vec![cone(2, &[], &[&[1, 0]])]), 1);
    let rep = product_rule(&pinned, &pinned, &Z1, &Z1, &Z1, ConeKind::LimitingNormal, None).unwrap();
    let cq = rep.hypothesis(Criterion::ProductCq).unwrap();
    assert!(!cq.verdict && cq.witness.is_some());
    all_consistent(&rep);

    let sep1 = PolyMap::from_graph(embed(m1().graph(), 3, &[0, 2]), 2);
    let sep2 = PolyMap::from_graph(embed(m1().graph(), 3, &[1, 2]), 2);
    for kind in [ConeKind::RegularNormal, ConeKind::LimitingNormal] {
        let rep = product_rule(&sep1, &sep2, &Z2, &Z1, &Z1, kind, None).unwrap();
        assert_eq!(rep.relation(), Some(Relation::Equal));
        all_consistent(&rep);
    }
}

#[test]
fn decoupled_sum_and_intersection_form() {
    let g1 = m1();
    let g2 = linear(&[&[1]]);
    for kind in ConeKind::ALL {
        let rep = decoupled_sum(&g1, &g2, &Z1, &Z1, &Z1, kind, None).unwrap();
        all_consistent(&rep);
        if kind != ConeKind::DirectionalLimitingNormal {
            assert_eq!(rep.relation(), Some(Relation::Equal), "{kind}");
        }
        all_consistent(&intersection_form(&g1, &linear(&[&[2]]), &Z1, &Z1, &Z1, kind, None).unwrap());
    }
    let multi = PolyMap::constant(1, &nonneg());
    assert!(matches!(
        decoupled_sum(&g1, &multi, &Z1, &Z1, &Z1, ConeKind::Tangent, None),
        Err(PolyError::Invalid(_))
    ));
}

#[test]
fn semismooth_examples() {
    let rep = semismooth_star_check(SemismoothTarget::Set(&nonneg()), &Z1, None).unwrap();
    assert!(rep.hypotheses[0].verdict);
    let axes = set(2, vec![cone(2, &[], &[&[0, 1]]), cone(2, &[], &[&[1, 0]])]);
    let rep = semismooth_star_check(SemismoothTarget::Set(&axes), &Z2, Some(&[r(1), r(0)])).unwrap();
    assert!(rep.hypotheses[0].verdict);
    let m = m1();
    let rep = semismooth_star_check(SemismoothTarget::Map(&m), &Z2, None).unwrap();
    assert!(rep.hypotheses[0].verdict);
    assert_eq!(rep.checks.len(), 2);
    all_consistent(&rep);
}

/// `φ(x, y) = x + y` with `G(y) = [y, ∞)`.
fn minimax_instance() -> (PLFunction, PolyMap) {
    let phi = PLFunction::max_affine(2, &[(v(&[1, 1]), r(0))], None);
    let g = PolyMap::from_graph(set(2, vec![cone(2, &[&[1, -1]], &[])]), 1);
    (phi, g)
}

#[test]
fn minimax_examples() {
    let (phi, g) = minimax_instance();
    let rep = minimax_certificate(&phi, &g, &nonpos(), &Z1, &Z1).unwrap();
    assert!(rep.hypotheses[0].verdict);
    assert!(rep.estimates[0].lhs.set_equal(&PolyhedralSet::singleton(&v(&[2]))));
    all_consistent(&rep);

    let rep = minimax_certificate(&phi, &g, &nonneg(), &Z1, &Z1).unwrap();
    let verdict = &rep.hypotheses[0];
    assert!(!verdict.verdict);
    assert_eq!(verdict.witness.as_ref().unwrap()[0], v(&[2]));
    all_consistent(&rep);

    let rep = minimax_certificate(&phi, &g, &PolyhedralSet::universe(1), &Z1, &Z1).unwrap();
    assert!(!rep.hypotheses[0].verdict);

    let kink = PLFunction::max_affine(2, &[(v(&[1, 1]), r(0)), (v(&[-1, 1]), r(0))], None);
    let free = PolyMap::from_graph(PolyhedralSet::universe(2), 1);
    assert!(matches!(
        minimax_certificate(&kink, &free, &nonpos(), &Z1, &Z1),
        Err(PolyError::StratumBoundary)
    ));
    assert!(matches!(
        minimax_certificate(&phi, &g, &nonpos(), &[r(1)], &Z1),
        Err(PolyError::Invalid(_))
    ));
}

