//! Chain and product rules for set-valued maps, with the decoupled sum
//! and the intersection form of the product rule.

use super::{
    compose_graphs, dim_check, embed, intersection_of, span, union_of, vec_of, zero_condition, Check, Estimate,
    Relation, RuleReport,
};
use crate::cones::{product_cones, tangent_set, ConeKind, ProductPart};
use crate::criteria::{check_fuzzy_inner_calmness_star, Criterion, CriterionReport};
use crate::error::{PolyError, Result};
use crate::linalg::{nullspace, Matrix, RVector};
use crate::maps::{join, PolyMap};
use crate::rational::Rational;
use crate::set::PolyhedralSet;

/// Graph of the tangent derivative or of the coderivative of the given kind.
fn derivative_graph(
    map: &PolyMap,
    y: &[Rational],
    x: &[Rational],
    kind: ConeKind,
    dir: Option<(&[Rational], &[Rational])>,
) -> Result<PolyhedralSet> {
    match kind {
        ConeKind::Tangent => Ok(map.graphical_derivative(y, x)?.graph().clone()),
        _ => Ok(map.coderivative(y, x, kind, dir)?.graph().clone()),
    }
}

/// `{(a, b, s₁ + s₂) : (a, s₁) ∈ g₁, (b, s₂) ∈ g₂}` with `a ∈ ℝᵖ`, `b ∈ ℝ^q`, `sᵢ ∈ ℝˢ`.
fn sum_image(g1: &PolyhedralSet, g2: &PolyhedralSet, p: usize, q: usize, s: usize) -> PolyhedralSet {
    let prod = g1.cartesian_product(g2);
    let mut a = Matrix::zeros(p + q + s, p + s + q + s);
    for i in 0..p {
        a[(i, i)] = Rational::one();
    }
    for i in 0..q {
        a[(p + i, p + s + i)] = Rational::one();
    }
    for i in 0..s {
        a[(p + q + i, p + i)] = Rational::one();
        a[(p + q + i, p + s + q + i)] = Rational::one();
    }
    prod.linear_image(&a)
}

/// `{(u, w₁, w₂) : (u, w₁) ∈ g₁, (u, w₂) ∈ g₂}`.
fn shared_product(g1: &PolyhedralSet, g2: &PolyhedralSet, a: usize, c1: usize, c2: usize) -> PolyhedralSet {
    let total = a + c1 + c2;
    let mut second = span(0, a);
    second.extend(a + c1..total);
    embed(g1, total, &span(0, a + c1)).intersect(&embed(g2, total, &second))
}

/// Whether the graph is invariant under shifts `(d, F d)` for some linear
/// `F` and all `d` supported on `coords` of the argument space.
fn invariant_along(graph: &PolyhedralSet, xdim: usize, coords: &[usize]) -> bool {
    let dim = graph.dim();
    let mut rows: Vec<Vec<Rational>> = graph
        .pieces()
        .iter()
        .flat_map(|p| p.normals().map(|a| a.0.clone()))
        .collect();
    for i in (0..xdim).filter(|i| !coords.contains(i)) {
        rows.push(RVector::unit(dim, i).0);
    }
    let lineality = nullspace(&rows, dim);
    let restricted: Vec<Vec<Rational>> = lineality
        .iter()
        .map(|w| coords.iter().map(|&i| w[i].clone()).collect())
        .collect();
    !coords.is_empty() && Matrix::from_rows(restricted, coords.len()).rank() == coords.len()
}

/// Which change-of-coordinates pattern, if any, the factors of `Γ = Γ₁ × Γ₂` match.
fn lemma_pattern(g1: &PolyMap, g2: &PolyMap) -> Option<&'static str> {
    let a = g1.m();
    let all = span(0, a);
    if invariant_along(g2.graph(), a, &all) || invariant_along(g1.graph(), a, &all) {
        return Some("affine plus fixed set");
    }
    if a <= 12 {
        for mask in 1..(1u32 << a) - 1 {
            let j: Vec<usize> = (0..a).filter(|i| mask & (1 << i) != 0).collect();
            let k: Vec<usize> = (0..a).filter(|i| mask & (1 << i) == 0).collect();
            if invariant_along(g1.graph(), a, &k) && invariant_along(g2.graph(), a, &j) {
                return Some("separated variables");
            }
        }
    }
    None
}

fn first_failure(reports: Vec<CriterionReport>, c: Criterion) -> CriterionReport {
    reports
        .into_iter()
        .find(|r| !r.verdict)
        .unwrap_or_else(|| CriterionReport::pass(c))
}

/// `S = S₂ ∘ S₁` at `(x̄, z̄)` through the intermediate map
/// `Ξ(x, z) = S₁(x) ∩ S₂⁻¹(z)`.
pub fn chain_rule(
    s1: &PolyMap,
    s2: &PolyMap,
    x: &[Rational],
    z: &[Rational],
    kind: ConeKind,
    dir: Option<(&[Rational], &[Rational])>,
) -> Result<RuleReport> {
    let (a, b, c) = (s1.m(), s1.n(), s2.n());
    dim_check(b, s2.m())?;
    dim_check(a, x.len())?;
    dim_check(c, z.len())?;
    let total = a + b + c;
    let triple = embed(s1.graph(), total, &span(0, a + b)).intersect(&embed(s2.graph(), total, &span(a, total)));
    let mut keep = span(0, a);
    keep.extend(a + b..total);
    let gph_s = triple.project(&keep);
    let s = PolyMap::lifted(gph_s, a, c)?;
    let xz = s.check_on_graph(x, z)?;
    let mut perm = keep.clone();
    perm.extend(a..a + b);
    let xi = PolyMap::lifted(triple.permute(&perm), a + c, b)?;

    let mut rep = RuleReport::new("chain_rule", kind);
    rep.checks.push(Check::new("gph S = dom Xi", xi.domain().set_equal(s.graph()), None));
    let pert = perturbation_map(s1, s2)?;
    let at_zero = pert.image_at(&RVector::zeros(b + c));
    rep.checks.push(Check::new("gph Xi = M(0,0)", at_zero.set_equal(xi.graph()), None));

    let ys = xi.image_representatives(&xz);
    let (zu, zw) = (RVector::zeros(a), RVector::zeros(c));
    let (u, w) = dir.unwrap_or((&zu, &zw));
    dim_check(a, u.len())?;
    dim_check(c, w.len())?;
    let uw = join(u, w);
    let fuzzy = check_fuzzy_inner_calmness_star(
        &xi,
        &xz,
        (kind == ConeKind::DirectionalLimitingNormal).then_some(&uw[..]),
    )?;
    let ic = fuzzy.verdict;

    let mut dual = Vec::new();
    let mut primal = Vec::new();
    let mut tprod = Vec::new();
    for y in &ys {
        let t1 = tangent_set(s1.graph(), &join(x, y));
        let t2 = tangent_set(s2.graph(), &join(y, z));
        let c1 = s1.limiting_coderivative(x, y)?;
        let c2 = s2.limiting_coderivative(y, z)?;
        let kernel1 = c1.graph().slice_back(&RVector::zeros(a));
        let at_zero2 = c2.graph().slice_front(&RVector::zeros(c));
        let mut d = zero_condition(Criterion::ChainDualCq, &kernel1.intersect(&at_zero2));
        let mut p = zero_condition(
            Criterion::ChainPrimalCq,
            &t1.slice_front(&RVector::zeros(a)).intersect(&t2.slice_back(&RVector::zeros(c))),
        );
        for r in [&mut d, &mut p] {
            if let Some(wit) = r.witness.as_mut() {
                wit.insert(0, y.clone());
            }
        }
        dual.push(d);
        primal.push(p);
        let parts = [
            ProductPart {
                set: s1.graph().clone(),
                point: join(x, y),
                dir: None,
            },
            ProductPart {
                set: s2.graph().clone(),
                point: join(y, z),
                dir: None,
            },
        ];
        let eq = product_cones(&parts, ConeKind::Tangent)?.equal;
        tprod.push(if eq {
            CriterionReport::pass(Criterion::TangentProduct)
        } else {
            CriterionReport::fail(Criterion::TangentProduct, vec![y.clone()])
        });
    }
    let tp = tprod.iter().all(|r| r.verdict);

    match kind {
        ConeKind::Tangent => {
            let lhs = tangent_set(s.graph(), &xz);
            let parts: Vec<PolyhedralSet> = ys
                .iter()
                .map(|y| {
                    compose_graphs(
                        &tangent_set(s1.graph(), &join(x, y)),
                        &tangent_set(s2.graph(), &join(y, z)),
                        a,
                        b,
                        c,
                    )
                })
                .collect();
            let claim = match (ic, tp) {
                (true, true) => Some(Relation::Equal),
                (true, false) => Some(Relation::LhsSubsetRhs),
                (false, true) => Some(Relation::RhsSubsetLhs),
                (false, false) => None,
            };
            rep.push(Estimate::certify("D", lhs, union_of(a + c, &parts), claim));
        }
        ConeKind::RegularNormal => {
            let lhs = s.regular_coderivative(x, z)?.graph().clone();
            let mut lower = Vec::new();
            let mut upper = Vec::new();
            for y in &ys {
                let r1 = s1.regular_coderivative(x, y)?;
                let r2 = s2.regular_coderivative(y, z)?;
                lower.push(compose_graphs(r2.graph(), r1.graph(), c, b, a));
                let l1 = s1.limiting_coderivative(x, y)?;
                let l2 = s2.limiting_coderivative(y, z)?;
                upper.push(compose_graphs(l2.graph(), l1.graph(), c, b, a));
            }
            rep.push(Estimate::certify(
                "regular coderivative lower",
                lhs.clone(),
                intersection_of(a + c, &lower),
                ic.then_some(Relation::RhsSubsetLhs),
            ));
            rep.push(Estimate::certify(
                "regular coderivative upper",
                lhs,
                intersection_of(a + c, &upper),
                Some(Relation::LhsSubsetRhs),
            ));
        }
        ConeKind::LimitingNormal => {
            let lhs = s.limiting_coderivative(x, z)?.graph().clone();
            let parts = ys
                .iter()
                .map(|y| {
                    let l1 = s1.limiting_coderivative(x, y)?;
                    let l2 = s2.limiting_coderivative(y, z)?;
                    Ok(compose_graphs(l2.graph(), l1.graph(), c, b, a))
                })
                .collect::<Result<Vec<_>>>()?;
            rep.push(Estimate::certify(
                "limiting coderivative",
                lhs,
                union_of(a + c, &parts),
                ic.then_some(Relation::LhsSubsetRhs),
            ));
        }
        ConeKind::DirectionalLimitingNormal => {
            let lhs = s.directional_limiting_coderivative(x, z, u, w)?.graph().clone();
            let mut parts = Vec::new();
            for y in &ys {
                let t = tangent_set(xi.graph(), &join(&xz, y));
                for v in t.fiber_representatives(&uw) {
                    let l1 = s1.directional_limiting_coderivative(x, y, u, &v)?;
                    let l2 = s2.directional_limiting_coderivative(y, z, &v, w)?;
                    parts.push(compose_graphs(l2.graph(), l1.graph(), c, b, a));
                }
            }
            rep.push(Estimate::certify(
                "directional limiting coderivative",
                lhs,
                union_of(a + c, &parts),
                ic.then_some(Relation::LhsSubsetRhs),
            ));
        }
    }
    rep.modulus_bound = fuzzy.modulus_bound.clone();
    rep.hypotheses.push(fuzzy);
    rep.hypotheses.push(first_failure(dual, Criterion::ChainDualCq));
    rep.hypotheses.push(first_failure(primal, Criterion::ChainPrimalCq));
    rep.hypotheses.push(first_failure(tprod, Criterion::TangentProduct));
    Ok(rep)
}

/// `M(p, q) = {(x, z, y) : y + p ∈ S₁(x), z + q ∈ S₂(y)}`.
pub fn perturbation_map(s1: &PolyMap, s2: &PolyMap) -> Result<PolyMap> {
    let (a, b, c) = (s1.m(), s1.n(), s2.n());
    let total = b + c + a + c + b;
    let (p0, q0, x0, z0, y0) = (0, b, b + c, b + c + a, b + c + a + c);
    let mut g1 = Matrix::zeros(a + b, total);
    for i in 0..a {
        g1[(i, x0 + i)] = Rational::one();
    }
    for i in 0..b {
        g1[(a + i, y0 + i)] = Rational::one();
        g1[(a + i, p0 + i)] = Rational::one();
    }
    let mut g2 = Matrix::zeros(b + c, total);
    for i in 0..b {
        g2[(i, y0 + i)] = Rational::one();
    }
    for i in 0..c {
        g2[(b + i, z0 + i)] = Rational::one();
        g2[(b + i, q0 + i)] = Rational::one();
    }
    let graph = s1.graph().linear_preimage(&g1).intersect(&s2.graph().linear_preimage(&g2));
    PolyMap::lifted(graph, b + c, a + c + b)
}

fn gamma_graph(g1: &PolyMap, g2: &PolyMap) -> Result<PolyMap> {
    let (a, c1, c2) = (g1.m(), g1.n(), g2.n());
    dim_check(a, g2.m())?;
    PolyMap::lifted(shared_product(g1.graph(), g2.graph(), a, c1, c2), a, c1 + c2)
}

fn product_hypotheses(
    g1: &PolyMap,
    g2: &PolyMap,
    x: &[Rational],
    z1: &[Rational],
    z2: &[Rational],
) -> Result<(CriterionReport, CriterionReport, Option<&'static str>)> {
    let d1 = g1.limiting_coderivative(x, z1)?.image_at(&RVector::zeros(g1.n()));
    let d2 = g2.limiting_coderivative(x, z2)?.image_at(&RVector::zeros(g2.n()));
    let cq = zero_condition(Criterion::ProductCq, &d1.intersect(&d2.negate()));
    let parts = [
        ProductPart {
            set: g1.graph().clone(),
            point: join(x, z1),
            dir: None,
        },
        ProductPart {
            set: g2.graph().clone(),
            point: join(x, z2),
            dir: None,
        },
    ];
    let tp = if product_cones(&parts, ConeKind::Tangent)?.equal {
        CriterionReport::pass(Criterion::TangentProduct)
    } else {
        CriterionReport::fail(Criterion::TangentProduct, vec![vec_of(x)])
    };
    Ok((cq, tp, lemma_pattern(g1, g2)))
}

/// `Γ(x) = Γ₁(x) × Γ₂(x)` at `(x̄, (z̄₁, z̄₂))`. The direction is `(u, w₁, w₂)`.
pub fn product_rule(
    g1: &PolyMap,
    g2: &PolyMap,
    x: &[Rational],
    z1: &[Rational],
    z2: &[Rational],
    kind: ConeKind,
    dir: Option<&[Rational]>,
) -> Result<RuleReport> {
    let gamma = gamma_graph(g1, g2)?;
    let (a, c1, c2) = (g1.m(), g1.n(), g2.n());
    g1.check_on_graph(x, z1)?;
    g2.check_on_graph(x, z2)?;
    let zz = join(z1, z2);
    let d = dir.map_or_else(|| RVector::zeros(a + c1 + c2), vec_of);
    dim_check(a + c1 + c2, d.dim())?;
    let (u, w1, w2) = (d.slice(0, a), d.slice(a, a + c1), d.slice(a + c1, a + c1 + c2));
    let (cq, tp, lemma) = product_hypotheses(g1, g2, x, z1, z2)?;
    let mut rep = RuleReport::new("product_rule", kind);
    let lemma_eq = lemma.map(|_| Relation::Equal);
    match kind {
        ConeKind::Tangent => {
            let lhs = derivative_graph(&gamma, x, &zz, kind, None)?;
            let rhs = shared_product(
                &derivative_graph(g1, x, z1, kind, None)?,
                &derivative_graph(g2, x, z2, kind, None)?,
                a,
                c1,
                c2,
            );
            let claim = if tp.verdict { Relation::Equal } else { Relation::LhsSubsetRhs };
            rep.push(Estimate::certify("D", lhs, rhs, Some(claim)));
        }
        _ => {
            let dirs = |wi: &RVector| (kind == ConeKind::DirectionalLimitingNormal).then(|| (u.clone(), wi.clone()));
            let d1 = dirs(&w1);
            let d2 = dirs(&w2);
            let dg = (kind == ConeKind::DirectionalLimitingNormal).then(|| (u.clone(), join(&w1, &w2)));
            let lhs = derivative_graph(&gamma, x, &zz, kind, dg.as_ref().map(|(p, q)| (&p[..], &q[..])))?;
            let r1 = derivative_graph(g1, x, z1, kind, d1.as_ref().map(|(p, q)| (&p[..], &q[..])))?;
            let r2 = derivative_graph(g2, x, z2, kind, d2.as_ref().map(|(p, q)| (&p[..], &q[..])))?;
            let rhs = sum_image(&r1, &r2, c1, c2, a);
            let (name, claim) = match kind {
                ConeKind::RegularNormal => ("regular coderivative", Relation::RhsSubsetLhs),
                ConeKind::LimitingNormal => ("limiting coderivative", Relation::LhsSubsetRhs),
                _ => ("directional limiting coderivative", Relation::LhsSubsetRhs),
            };
            let claim = if kind == ConeKind::DirectionalLimitingNormal { claim } else { lemma_eq.unwrap_or(claim) };
            rep.push(Estimate::certify(name, lhs, rhs, Some(claim)));
        }
    }
    if let Some(pattern) = lemma {
        rep.checks.push(Check::new(
            format!("change of coordinates ({pattern}) gives the qualification condition"),
            cq.verdict,
            cq.witness.clone(),
        ));
    }
    rep.hypotheses.push(cq);
    rep.hypotheses.push(tp);
    Ok(rep)
}

/// `Σ(y₁, y₂) = Γ₁(y₁) + γ₂(y₂)` with `γ₂` single-valued, at
/// `((ȳ₁, ȳ₂), z̄)`. The direction is `(v₁, v₂, w)`.
pub fn decoupled_sum(
    g1: &PolyMap,
    g2: &PolyMap,
    y1: &[Rational],
    y2: &[Rational],
    z: &[Rational],
    kind: ConeKind,
    dir: Option<&[Rational]>,
) -> Result<RuleReport> {
    let (p, q, c) = (g1.m(), g2.m(), g1.n());
    dim_check(c, g2.n())?;
    dim_check(p, y1.len())?;
    dim_check(q, y2.len())?;
    dim_check(c, z.len())?;
    let img2 = g2.image_at(y2);
    let gz = match img2.pieces() {
        [piece] if piece.is_point() => piece.relative_interior_point(),
        _ => {
            return Err(PolyError::Invalid(
                "second term is not single-valued at the point".into(),
            ))
        }
    };
    let x1 = vec_of(z).sub(&gz);
    g1.check_on_graph(y1, &x1)?;

    let total = p + q + 2 * c;
    let mut a1 = Matrix::zeros(p + c, total);
    for i in 0..p {
        a1[(i, i)] = Rational::one();
    }
    for i in 0..c {
        a1[(p + i, p + q + i)] = Rational::one();
        a1[(p + i, p + q + c + i)] = -Rational::one();
    }
    let mut a2 = Matrix::zeros(q + c, total);
    for i in 0..q {
        a2[(i, p + i)] = Rational::one();
    }
    for i in 0..c {
        a2[(q + i, p + q + c + i)] = Rational::one();
    }
    let lifted = g1.graph().linear_preimage(&a1).intersect(&g2.graph().linear_preimage(&a2));
    let sigma = PolyMap::lifted(lifted.project(&span(0, p + q + c)), p + q, c)?;
    let yy = join(y1, y2);
    let pt = sigma.check_on_graph(&yy, z)?;
    let affine = matches!(g2.graph().pieces(), [piece] if piece.ineqs().is_empty());

    let d = dir.map_or_else(|| RVector::zeros(p + q + c), vec_of);
    dim_check(p + q + c, d.dim())?;
    let (v1, v2, w) = (d.slice(0, p), d.slice(p, p + q), d.slice(p + q, p + q + c));
    let mut rep = RuleReport::new("decoupled_sum", kind);
    rep.checks.push(Check::new("point on the graph of the sum", sigma.graph().contains(&pt), None));
    match kind {
        ConeKind::Tangent => {
            let lhs = sigma.graphical_derivative(&yy, z)?.graph().clone();
            let t1 = g1.graphical_derivative(y1, &x1)?.graph().clone();
            let t2 = g2.graphical_derivative(y2, &gz)?.graph().clone();
            let rhs = sum_image(&t1, &t2, p, q, c);
            let claim = if affine { Relation::Equal } else { Relation::LhsSubsetRhs };
            rep.push(Estimate::certify("D", lhs, rhs, Some(claim)));
        }
        ConeKind::RegularNormal | ConeKind::LimitingNormal => {
            let lhs = sigma.coderivative(&yy, z, kind, None)?.graph().clone();
            let c1 = g1.coderivative(y1, &x1, kind, None)?.graph().clone();
            let c2 = g2.coderivative(y2, &gz, kind, None)?.graph().clone();
            let rhs = shared_product(&c1, &c2, c, p, q);
            let claim = match (affine, kind) {
                (true, _) => Some(Relation::Equal),
                (false, ConeKind::LimitingNormal) => Some(Relation::LhsSubsetRhs),
                _ => None,
            };
            let name = if kind == ConeKind::RegularNormal { "regular coderivative" } else { "limiting coderivative" };
            rep.push(Estimate::certify(name, lhs, rhs, claim));
        }
        ConeKind::DirectionalLimitingNormal => {
            let lhs = sigma
                .directional_limiting_coderivative(&yy, z, &join(&v1, &v2), &w)?
                .graph()
                .clone();
            let t2 = tangent_set(g2.graph(), &join(y2, &gz));
            let mut parts = Vec::new();
            for w2 in t2.fiber_representatives(&v2) {
                let c1 = g1.directional_limiting_coderivative(y1, &x1, &v1, &w.sub(&w2))?;
                let c2 = g2.directional_limiting_coderivative(y2, &gz, &v2, &w2)?;
                parts.push(shared_product(c1.graph(), c2.graph(), c, p, q));
            }
            rep.push(Estimate::certify(
                "directional limiting coderivative",
                lhs,
                union_of(c + p + q, &parts),
                Some(Relation::LhsSubsetRhs),
            ));
        }
    }
    Ok(rep)
}

/// `Γ⁻¹(z₁, z₂) = Γ₁⁻¹(z₁) ∩ Γ₂⁻¹(z₂)` at `((z̄₁, z̄₂), x̄)`. The direction is `(v₁, v₂, u)`.
pub fn intersection_form(
    g1: &PolyMap,
    g2: &PolyMap,
    z1: &[Rational],
    z2: &[Rational],
    x: &[Rational],
    kind: ConeKind,
    dir: Option<&[Rational]>,
) -> Result<RuleReport> {
    let gamma = gamma_graph(g1, g2)?;
    let (a, c1, c2) = (g1.m(), g1.n(), g2.n());
    g1.check_on_graph(x, z1)?;
    g2.check_on_graph(x, z2)?;
    let h = gamma.inverse();
    let h1 = g1.inverse();
    let h2 = g2.inverse();
    let zz = join(z1, z2);
    let d = dir.map_or_else(|| RVector::zeros(c1 + c2 + a), vec_of);
    dim_check(c1 + c2 + a, d.dim())?;
    let (v1, v2, u) = (d.slice(0, c1), d.slice(c1, c1 + c2), d.slice(c1 + c2, c1 + c2 + a));
    let (cq, tp, lemma) = product_hypotheses(g1, g2, x, z1, z2)?;
    let mut rep = RuleReport::new("intersection_form", kind);
    let directional = kind == ConeKind::DirectionalLimitingNormal;
    match kind {
        ConeKind::Tangent => {
            let lhs = h.graphical_derivative(&zz, x)?.graph().clone();
            let t1 = h1.graphical_derivative(z1, x)?.graph().clone();
            let t2 = h2.graphical_derivative(z2, x)?.graph().clone();
            let total = c1 + c2 + a;
            let second = span(c1, total);
            let rhs = embed(&t1, total, &{
                let mut v = span(0, c1);
                v.extend(c1 + c2..total);
                v
            })
            .intersect(&embed(&t2, total, &second));
            let claim = if tp.verdict { Relation::Equal } else { Relation::LhsSubsetRhs };
            rep.push(Estimate::certify("D", lhs, rhs, Some(claim)));
        }
        _ => {
            let dh = directional.then(|| (join(&v1, &v2), u.clone()));
            let lhs = derivative_graph(&h, &zz, x, kind, dh.as_ref().map(|(p, q)| (&p[..], &q[..])))?;
            let d1 = directional.then(|| (v1.clone(), u.clone()));
            let d2 = directional.then(|| (v2.clone(), u.clone()));
            let r1 = derivative_graph(&h1, z1, x, kind, d1.as_ref().map(|(p, q)| (&p[..], &q[..])))?;
            let r2 = derivative_graph(&h2, z2, x, kind, d2.as_ref().map(|(p, q)| (&p[..], &q[..])))?;
            let swap = |g: &PolyhedralSet, ci: usize| {
                let mut perm = span(a, a + ci);
                perm.extend(0..a);
                g.permute(&perm)
            };
            let summed = sum_image(&swap(&r1, c1), &swap(&r2, c2), c1, c2, a);
            let mut back = span(c1 + c2, c1 + c2 + a);
            back.extend(0..c1 + c2);
            let rhs = summed.permute(&back);
            let (name, claim) = match kind {
                ConeKind::RegularNormal => ("regular coderivative", Relation::RhsSubsetLhs),
                ConeKind::LimitingNormal => ("limiting coderivative", Relation::LhsSubsetRhs),
                _ => ("directional limiting coderivative", Relation::LhsSubsetRhs),
            };
            let claim = if directional { claim } else { lemma.map_or(claim, |_| Relation::Equal) };
            rep.push(Estimate::certify(name, lhs, rhs, Some(claim)));
        }
    }
    rep.hypotheses.push(cq);
    rep.hypotheses.push(tp);
    Ok(rep)
}
