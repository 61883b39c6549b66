//! Sum, intersection, image and pre-image rules for sets.

use super::{
    dim_check, domain_cones, embed, image_cones, span, vec_of, zero_condition, Check, Estimate, Relation,
    RuleReport,
};
use crate::cones::{cone_of, directional_normal_set, limiting_normal_set, preimage_cones, tangent_set, ConeKind};
use crate::criteria::{check_lrc, nonzero_element, Criterion, CriterionReport};
use crate::error::{PolyError, Result};
use crate::limits::Limits;
use crate::linalg::{Matrix, RVector};
use crate::maps::{join, PolyMap};
use crate::polyhedron::ConvexPolyhedron;
use crate::rational::Rational;
use crate::set::PolyhedralSet;

fn product_of(sets: &[PolyhedralSet]) -> PolyhedralSet {
    sets.iter()
        .fold(PolyhedralSet::universe(0), |acc, s| acc.cartesian_product(s))
}

/// `{(w_1, …, w_ℓ) : w_1 + … + w_ℓ = 0}` in `ℝ^{ℓd}`.
fn zero_sum_subspace(l: usize, d: usize) -> PolyhedralSet {
    let eqs = (0..d)
        .map(|k| {
            let mut a = RVector::zeros(l * d);
            for i in 0..l {
                a[i * d + k] = Rational::one();
            }
            (a, Rational::zero())
        })
        .collect();
    PolyhedralSet::from_convex(ConvexPolyhedron::new(l * d, Vec::new(), eqs).expect("subspace is nonempty"))
}

fn check_terms(l: usize) -> Result<()> {
    if l == 0 {
        return Err(PolyError::Invalid("at least one term is required".into()));
    }
    Limits::from_env().check_terms(l)
}

fn ensure_member(set: &PolyhedralSet, p: &[Rational]) -> Result<()> {
    dim_check(set.dim(), p.len())?;
    if set.contains(p) {
        Ok(())
    } else {
        Err(PolyError::NotInSet {
            distance: set.distance_inf(p)?,
        })
    }
}

/// `D = D_1 + … + D_ℓ` at `ȳ = ȳ_1 + … + ȳ_ℓ` through the map
/// `M₁(y) = {(y_1, …, y_ℓ) ∈ D_1 × … × D_ℓ : y_1 + … + y_ℓ = y}`.
pub fn sum_rule(
    d_list: &[PolyhedralSet],
    y: &[Rational],
    decomposition: &[RVector],
    kind: ConeKind,
    dir: Option<&[Rational]>,
) -> Result<RuleReport> {
    let l = d_list.len();
    check_terms(l)?;
    let d = y.len();
    if decomposition.len() != l {
        return Err(PolyError::InvalidDecomposition(format!(
            "expected {l} parts, found {}",
            decomposition.len()
        )));
    }
    for (i, (set, part)) in d_list.iter().zip(decomposition).enumerate() {
        dim_check(d, set.dim())?;
        dim_check(d, part.dim())?;
        if !set.contains(part) {
            return Err(PolyError::InvalidDecomposition(format!("part {} is not in its set", i + 1)));
        }
    }
    let sum = decomposition.iter().fold(RVector::zeros(d), |acc, p| acc.add(p));
    if sum.0 != y {
        return Err(PolyError::InvalidDecomposition("parts do not sum to the point".into()));
    }
    let total = (l + 1) * d;
    let eqs = (0..d)
        .map(|k| {
            let mut a = RVector::zeros(total);
            a[k] = Rational::one();
            for i in 0..l {
                a[(i + 1) * d + k] = -Rational::one();
            }
            (a, Rational::zero())
        })
        .collect();
    let link = PolyhedralSet::from_convex(ConvexPolyhedron::new(total, Vec::new(), eqs)?);
    let graph = embed(&product_of(d_list), total, &span(d, total)).intersect(&link);
    let m1 = PolyMap::lifted(graph, d, l * d)?;
    let mut rep = domain_cones(&m1, y, kind, dir)?;
    rep.rule = "sum_rule";

    let tangents: Vec<PolyhedralSet> = d_list.iter().zip(decomposition).map(|(s, p)| tangent_set(s, p)).collect();
    let k = product_of(&tangents).intersect(&zero_sum_subspace(l, d));
    let ic = zero_condition(Criterion::SumRuleIsolatedCalm, &k);
    let parts = join(y, &decomposition.iter().flat_map(|p| p.iter().cloned()).collect::<Vec<_>>());
    let lrc = check_lrc(&m1, y, &parts[d..])?;
    rep.checks.push(Check::new(
        "SumRuleIC matches LRC of M1",
        lrc.verdict == ic.verdict,
        None,
    ));
    rep.hypotheses.push(ic);

    let mut fosc = CriterionReport::pass(Criterion::FoscClm);
    for w in k.direction_representatives(&[]) {
        let normals = (0..l).fold(PolyhedralSet::universe(d), |acc, i| {
            let wi = w.slice(i * d, (i + 1) * d);
            acc.intersect(&directional_normal_set(&d_list[i], &decomposition[i], &wi))
        });
        if let Some(ystar) = nonzero_element(&normals) {
            fosc = CriterionReport::fail(Criterion::FoscClm, vec![w, ystar]);
            break;
        }
    }
    rep.hypotheses.push(fosc);
    Ok(rep)
}

/// `C = C_1 ∩ … ∩ C_ℓ` at `x̄` through the map
/// `M₂(x_1, …, x_ℓ) = {x : (x + x_1, …, x + x_ℓ) ∈ C_1 × … × C_ℓ}`.
pub fn intersection_rule(
    c_list: &[PolyhedralSet],
    x: &[Rational],
    kind: ConeKind,
    dir: Option<&[Rational]>,
) -> Result<RuleReport> {
    let l = c_list.len();
    check_terms(l)?;
    let n = x.len();
    if let Some(u) = dir {
        dim_check(n, u.len())?;
    }
    for c in c_list {
        ensure_member(c, x)?;
    }
    let total = (l + 1) * n;
    let mut a = Matrix::zeros(l * n, total);
    for i in 0..l {
        for k in 0..n {
            a[(i * n + k, i * n + k)] = Rational::one();
            a[(i * n + k, l * n + k)] = Rational::one();
        }
    }
    let graph = product_of(c_list).linear_preimage(&a);
    let m2 = PolyMap::lifted(graph, l * n, n)?;
    let mut rep = image_cones(&m2, &RVector::zeros(l * n), x, kind, dir)?;
    rep.rule = "intersection_rule";

    let normals: Vec<PolyhedralSet> = c_list.iter().map(|c| limiting_normal_set(c, x)).collect();
    let k = product_of(&normals).intersect(&zero_sum_subspace(l, n));
    let aubin = zero_condition(Criterion::IntersectionAubin, &k);
    let holds = aubin.verdict;
    rep.hypotheses.push(aubin);

    let inter = c_list
        .iter()
        .skip(1)
        .fold(c_list[0].clone(), |acc, c| acc.intersect(c));
    let cone = |s: &PolyhedralSet| cone_of(s, x, kind, dir).cone;
    let lhs = cone(&inter);
    let (name, rhs, claim) = match kind {
        ConeKind::Tangent => {
            let rhs = c_list.iter().fold(PolyhedralSet::universe(n), |acc, c| acc.intersect(&cone(c)));
            ("T intersection", rhs, Some(Relation::Equal))
        }
        _ => {
            let rhs = c_list
                .iter()
                .fold(PolyhedralSet::origin(n), |acc, c| acc.minkowski_sum(&cone(c)));
            let claim = match kind {
                ConeKind::RegularNormal => Some(Relation::RhsSubsetLhs),
                _ => holds.then_some(Relation::LhsSubsetRhs),
            };
            ("normal sum", rhs, claim)
        }
    };
    rep.push(Estimate::certify(name, lhs, rhs, claim));
    Ok(rep)
}

/// `D = g(C)` for affine `g(x) = A x + shift` through
/// `M₃(y) = g⁻¹(y) ∩ C`.
pub fn image_rule(
    a: &Matrix,
    shift: &[Rational],
    c: &PolyhedralSet,
    y: &[Rational],
    kind: ConeKind,
    dir: Option<&[Rational]>,
) -> Result<RuleReport> {
    let (m, n) = (a.rows, a.cols);
    dim_check(n, c.dim())?;
    dim_check(m, shift.len())?;
    dim_check(m, y.len())?;
    let image = c.affine_image(a, shift);
    ensure_member(&image, y)?;
    let eqs = (0..m)
        .map(|i| {
            let mut row = RVector::zeros(m + n);
            row[i] = -Rational::one();
            for j in 0..n {
                row[m + j] = a[(i, j)].clone();
            }
            (row, -shift[i].clone())
        })
        .collect();
    let link = PolyhedralSet::from_convex(ConvexPolyhedron::new(m + n, Vec::new(), eqs)?);
    let graph = embed(c, m + n, &span(m, m + n)).intersect(&link);
    let m3 = PolyMap::lifted(graph, m, n)?;
    let mut rep = domain_cones(&m3, y, kind, dir)?;
    rep.rule = "image_rule";

    let kernel = PolyhedralSet::origin(m).linear_preimage(a);
    let mut cq = CriterionReport::pass(Criterion::ImageRuleCq);
    for xbar in m3.image_representatives(y) {
        let k = tangent_set(c, &xbar).intersect(&kernel);
        if let Some(u) = nonzero_element(&k) {
            cq = CriterionReport::fail(Criterion::ImageRuleCq, vec![xbar, u]);
            break;
        }
    }
    rep.hypotheses.push(cq);

    if let Some(inv) = a.inverse() {
        let s = inv.mul_vec(shift).neg();
        let direct = preimage_cones(&inv, &s, c, y, kind, dir)?.cone;
        let same = rep.estimates.first().is_some_and(|e| e.lhs == direct);
        rep.checks.push(Check::new("image agrees with change of coordinates", same, None));
    }
    Ok(rep)
}

/// `C = g⁻¹(D)` for affine `g(x) = A x + shift` through
/// `M₄(y) = {x : g(x) + y ∈ D}`.
pub fn preimage_rule(
    a: &Matrix,
    shift: &[Rational],
    d: &PolyhedralSet,
    x: &[Rational],
    kind: ConeKind,
    dir: Option<&[Rational]>,
) -> Result<RuleReport> {
    let (m, n) = (a.rows, a.cols);
    dim_check(m, d.dim())?;
    dim_check(m, shift.len())?;
    dim_check(n, x.len())?;
    let gx = a.mul_vec(x).add(&vec_of(shift));
    ensure_member(d, &gx)?;
    let mut b = Matrix::zeros(m, m + n);
    for i in 0..m {
        b[(i, i)] = Rational::one();
        for j in 0..n {
            b[(i, m + j)] = a[(i, j)].clone();
        }
    }
    let graph = d.affine_preimage(&b, shift);
    let m4 = PolyMap::lifted(graph, m, n)?;
    let mut rep = image_cones(&m4, &RVector::zeros(m), x, kind, dir)?;
    rep.rule = "preimage_rule";

    let at = a.transpose();
    let k = limiting_normal_set(d, &gx).intersect(&PolyhedralSet::origin(n).linear_preimage(&at));
    let cq = zero_condition(Criterion::PreimageRuleCq, &k);
    let holds = cq.verdict;
    rep.hypotheses.push(cq);

    let c = d.affine_preimage(a, shift);
    let lhs = cone_of(&c, x, kind, dir).cone;
    let (rhs, claim) = match kind {
        ConeKind::Tangent => (tangent_set(d, &gx).linear_preimage(a), Some(Relation::Equal)),
        ConeKind::RegularNormal => (
            cone_of(d, &gx, kind, None).cone.linear_image(&at),
            Some(Relation::RhsSubsetLhs),
        ),
        ConeKind::LimitingNormal => (
            limiting_normal_set(d, &gx).linear_image(&at),
            holds.then_some(Relation::LhsSubsetRhs),
        ),
        ConeKind::DirectionalLimitingNormal => {
            let u = dir.map_or_else(|| RVector::zeros(n), vec_of);
            (
                directional_normal_set(d, &gx, &a.mul_vec(&u)).linear_image(&at),
                holds.then_some(Relation::LhsSubsetRhs),
            )
        }
    };
    rep.push(Estimate::certify("transpose formula", lhs.clone(), rhs, claim));
    if a.rank() == m {
        let direct = preimage_cones(a, shift, d, x, kind, dir)?.cone;
        rep.checks.push(Check::new("pre-image agrees with change of coordinates", lhs == direct, None));
    }
    Ok(rep)
}
