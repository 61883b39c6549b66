//! Semismoothness* checks and the minimax optimality certificate.

use super::{dim_check, intersection_of, span, Check, Estimate, Relation, RuleReport};
use crate::cones::{directional_normal_set, regular_normal_set, tangent_directions, tangent_set, ConeKind};
use crate::criteria::{check_fuzzy_inner_calmness_star, Criterion, CriterionReport};
use crate::error::{PolyError, Result};
use crate::linalg::RVector;
use crate::maps::{join, PLFunction, PolyMap};
use crate::rational::Rational;
use crate::set::PolyhedralSet;

use super::marginal::MarginalData;

#[derive(Clone, Copy, Debug)]
pub enum SemismoothTarget<'a> {
    Set(&'a PolyhedralSet),
    /// A map, checked through its graph at the point `(y, x)`.
    Map(&'a PolyMap),
}

/// `⟨z*, w⟩ = 0` for every generator `z*` of `N(z̄; w)` and every examined `w`.
fn set_condition(set: &PolyhedralSet, z: &[Rational], dir: Option<&[Rational]>) -> CriterionReport {
    let ws: Vec<RVector> = match dir {
        Some(w) => vec![RVector(w.to_vec())],
        None => {
            let mut ws = tangent_directions(set, z);
            ws.push(RVector::zeros(set.dim()));
            ws
        }
    };
    for w in ws {
        let normals = directional_normal_set(set, z, &w);
        for piece in normals.pieces() {
            let v = piece.vrep();
            let bad = v
                .points
                .iter()
                .chain(&v.rays)
                .chain(&v.lines)
                .find(|g| !g.dot(&w).is_zero());
            if let Some(g) = bad {
                return CriterionReport::fail(Criterion::SemismoothStar, vec![w, g.clone()]);
            }
        }
    }
    CriterionReport::pass(Criterion::SemismoothStar)
}

/// Semismoothness* of a set at a point, or of a map at a graph point
/// `(y, x)`. Without a direction every tangent-cell direction is examined
/// and, for maps, the transfer to `dom M` and to `M(ȳ)` is checked.
pub fn semismooth_star_check(
    target: SemismoothTarget<'_>,
    point: &[Rational],
    dir: Option<&[Rational]>,
) -> Result<RuleReport> {
    let mut rep = RuleReport::new("semismooth_star", ConeKind::DirectionalLimitingNormal);
    let set = match target {
        SemismoothTarget::Set(s) => s,
        SemismoothTarget::Map(m) => m.graph(),
    };
    dim_check(set.dim(), point.len())?;
    if let Some(w) = dir {
        dim_check(set.dim(), w.len())?;
    }
    if !set.contains(point) {
        return Err(match target {
            SemismoothTarget::Set(_) => PolyError::NotInSet {
                distance: set.distance_inf(point)?,
            },
            SemismoothTarget::Map(_) => PolyError::OffGraph {
                distance: set.distance_inf(point)?,
            },
        });
    }
    let main = set_condition(set, point, dir);
    let passes = main.verdict;
    rep.hypotheses.push(main);
    if let (SemismoothTarget::Map(m), None) = (target, dir) {
        let (y, x) = (&point[..m.m()], &point[m.m()..]);
        let all = m
            .image_representatives(y)
            .iter()
            .all(|xr| set_condition(m.graph(), &join(y, xr), None).verdict);
        let dom = set_condition(&m.domain(), y, None);
        rep.checks.push(Check::new(
            "map passes at all representatives implies domain passes",
            !(all && passes) || dom.verdict,
            dom.witness.clone(),
        ));
        let img = set_condition(&m.image_at(y), x, None);
        rep.checks.push(Check::new(
            "map passes implies image set passes",
            !passes || img.verdict,
            img.witness.clone(),
        ));
    }
    Ok(rep)
}

/// Gradient of `φ` at a point interior to one affine stratum.
fn stratum_gradient(phi: &PLFunction, p: &[Rational]) -> Result<RVector> {
    let z = phi.epi_point(p)?;
    let t = tangent_set(phi.epigraph(), &z);
    match t.pieces() {
        [piece] if piece.eqs().is_empty() && piece.ineqs().len() == 1 => {
            let (a, _) = &piece.ineqs()[0];
            let last = a[a.dim() - 1].clone();
            if !last.is_positive() && !last.is_zero() {
                Ok(a.slice(0, a.dim() - 1).scale(&(-Rational::one() / last)))
            } else {
                Err(PolyError::StratumBoundary)
            }
        }
        _ => Err(PolyError::StratumBoundary),
    }
}

/// Necessary optimality condition for `max_{y ∈ Ω} min_{x ∈ G(y)} φ(x, y)`
/// at `(x̄, ȳ)`: every `y*` in the intersection over `x ∈ S(ȳ)` of
/// `∇_yφ + D̂*G(ȳ, x)(∇_xφ)` must be a regular normal to `Ω` at `ȳ`.
pub fn minimax_certificate(
    phi: &PLFunction,
    g: &PolyMap,
    omega: &PolyhedralSet,
    x: &[Rational],
    y: &[Rational],
) -> Result<RuleReport> {
    let (m, n) = (g.m(), g.n());
    dim_check(m, y.len())?;
    dim_check(n, x.len())?;
    dim_check(n + m, phi.n())?;
    dim_check(m, omega.dim())?;
    if !omega.contains(y) {
        return Err(PolyError::NotInSet {
            distance: omega.distance_inf(y)?,
        });
    }
    let mut perm = span(m, m + n);
    perm.extend(0..m);
    let feasible = g.graph().permute(&perm).cartesian_product(&PolyhedralSet::universe(1));
    let f = PLFunction::new(phi.epigraph().intersect(&feasible), n + m)?;
    let data = MarginalData::new(&f, y)?;
    if !data.solutions.contains(x) {
        return Err(PolyError::Invalid("x is not a minimizer of the inner problem".into()));
    }
    let yv = join(y, std::slice::from_ref(&data.value));
    let extra: Vec<(RVector, Rational)> = f
        .epigraph()
        .affine_hyperplanes()
        .into_iter()
        .filter_map(|(a, b)| {
            let head = a.slice(0, n);
            (!head.is_zero()).then(|| (head, b - a.slice(n, n + m + 1).dot(&yv)))
        })
        .collect();
    let mut reps = data.solutions.cell_representatives_with(&extra);
    reps.push(RVector(x.to_vec()));
    reps.sort();
    reps.dedup();

    let mut sets = Vec::new();
    for xr in &reps {
        let grad = stratum_gradient(phi, &join(xr, y))?;
        let (gx, gy) = (grad.slice(0, n), grad.slice(n, n + m));
        sets.push(g.regular_coderivative(y, xr)?.image_at(&gx).translate(&gy));
    }
    let lhs = intersection_of(m, &sets);
    let rhs = regular_normal_set(omega, y);

    let mut rep = RuleReport::new("minimax", ConeKind::RegularNormal);
    let fuzzy = check_fuzzy_inner_calmness_star(&data.level_map, &yv, None)?;
    let value_sub = data.value_function.regular_subdifferential(y)?;
    rep.push(Estimate::certify(
        "optimality condition",
        lhs.clone(),
        rhs.clone(),
        None,
    ));
    rep.push(Estimate::certify(
        "regular subdifferential of the value",
        value_sub,
        lhs,
        Some(if fuzzy.verdict { Relation::Equal } else { Relation::LhsSubsetRhs }),
    ));
    let cond = &rep.estimates[0];
    let verdict = if cond.relation.implies(Relation::LhsSubsetRhs) {
        CriterionReport::pass(Criterion::MinimaxCondition)
    } else {
        CriterionReport::fail(Criterion::MinimaxCondition, cond.lhs_witness.clone().into_iter().collect())
    };
    rep.modulus_bound = fuzzy.modulus_bound.clone();
    rep.hypotheses.push(verdict);
    rep.hypotheses.push(fuzzy);
    Ok(rep)
}
