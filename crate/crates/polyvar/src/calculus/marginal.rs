//! Marginal functions `ϑ(y) = inf_x f(x, y)` with solution map `S`.

use super::{intersection_of, span, union_of, Check, Estimate, Relation, RuleReport};
use crate::cones::{directional_normal_set, tangent_set, ConeKind};
use crate::criteria::{check_fosc_clm, check_fuzzy_inner_calmness_star, nonzero_element, Criterion, CriterionReport};
use crate::error::{PolyError, Result};
use crate::linalg::RVector;
use crate::lp::{minimize, LpStatus};
use crate::maps::{join, ExtReal, PLFunction, PolyMap};
use crate::rational::Rational;
use crate::set::PolyhedralSet;

/// Value function, optimal value, solution set and level-set map at `ȳ`.
#[derive(Clone, Debug)]
pub struct MarginalData {
    pub value_function: PLFunction,
    pub value: Rational,
    pub solutions: PolyhedralSet,
    /// `M(y, α) = {x : (x, y, α) ∈ epi f}`.
    pub level_map: PolyMap,
}

impl MarginalData {
    pub fn new(f: &PLFunction, y: &[Rational]) -> Result<Self> {
        let m = y.len();
        if m > f.n() {
            return Err(PolyError::DimensionMismatch {
                expected: f.n(),
                found: m,
            });
        }
        let n = f.n() - m;
        let value_function = PLFunction::new(f.epigraph().project(&span(n, n + m + 1)), m)?;
        let value = match value_function.value(y) {
            ExtReal::Finite(v) => v,
            ExtReal::NegInf => return Err(PolyError::InfiniteValue("-inf")),
            ExtReal::PosInf => return Err(PolyError::NotInDomain),
        };
        let solutions = f.epigraph().slice_back(&join(y, std::slice::from_ref(&value)));
        if solutions.is_empty() {
            return Err(PolyError::NotInDomain);
        }
        let mut perm = span(n, n + m + 1);
        perm.extend(0..n);
        let level_map = PolyMap::lifted(f.epigraph().permute(&perm), m + 1, n)?;
        Ok(MarginalData {
            value_function,
            value,
            solutions,
            level_map,
        })
    }
}

/// `min μ` over `(u, v, μ) ∈ T` with `v` fixed and `‖u‖∞ ≤ bound`.
fn bounded_min(t: &PolyhedralSet, n: usize, v: &[Rational], bound: &Rational) -> ExtReal {
    let dim = t.dim();
    let mut obj = vec![Rational::zero(); dim];
    obj[dim - 1] = Rational::one();
    let mut best = ExtReal::PosInf;
    for p in t.pieces() {
        let mut c = p.constraints();
        for (i, vi) in v.iter().enumerate() {
            let mut row = vec![Rational::zero(); dim];
            row[n + i] = Rational::one();
            c.eq(row, vi.clone());
        }
        for i in 0..n {
            let mut row = vec![Rational::zero(); dim];
            row[i] = Rational::one();
            c.le(row.clone(), bound.clone());
            row[i] = -Rational::one();
            c.le(row, bound.clone());
        }
        match minimize(&obj, &c) {
            LpStatus::Optimal { value, .. } => {
                let v = ExtReal::Finite(value);
                if v < best {
                    best = v;
                }
            }
            LpStatus::Unbounded { .. } => return ExtReal::NegInf,
            LpStatus::Infeasible => {}
        }
    }
    best
}

/// Representatives `u` with `(u, w) ∈ T`, where `w` fixes the trailing coordinates.
fn leading_fiber(t: &PolyhedralSet, n: usize, w: &[Rational]) -> Vec<RVector> {
    let dim = t.dim();
    let mut perm = span(n, dim);
    perm.extend(0..n);
    t.permute(&perm).fiber_representatives(w)
}

/// Estimates for the subderivative and subdifferentials of the marginal
/// function of `f : ℝⁿ × ℝᵐ → ℝ̄` at `ȳ`, with `m = y.len()`. The direction
/// `(v, μ)` is used by the tangent kind (`v` only) and the directional kind.
pub fn marginal_function(
    f: &PLFunction,
    y: &[Rational],
    kind: ConeKind,
    dir: Option<(&[Rational], &Rational)>,
) -> Result<RuleReport> {
    let data = MarginalData::new(f, y)?;
    let m = y.len();
    let n = f.n() - m;
    if let Some((v, _)) = dir {
        if v.len() != m {
            return Err(PolyError::DimensionMismatch {
                expected: m,
                found: v.len(),
            });
        }
    }
    let vth = &data.value_function;
    let yv = join(y, std::slice::from_ref(&data.value));
    let xs = data.solutions.cell_representatives();
    let points: Vec<RVector> = xs.iter().map(|x| join(x, &yv)).collect();
    let zero_x = RVector::zeros(n);
    let mut rep = RuleReport::new("marginal_function", kind);

    match kind {
        ConeKind::Tangent => {
            let fuzzy = check_fuzzy_inner_calmness_star(&data.level_map, &yv, None)?;
            let ic = fuzzy.verdict;
            let lhs = tangent_set(vth.epigraph(), &yv);
            let parts: Vec<PolyhedralSet> = points
                .iter()
                .map(|p| tangent_set(f.epigraph(), p).project(&span(n, n + m + 1)))
                .collect();
            let claim = if ic { Relation::Equal } else { Relation::RhsSubsetLhs };
            rep.push(Estimate::certify("d", lhs.clone(), union_of(m + 1, &parts), Some(claim)));

            let dvth = PLFunction::new(lhs.clone(), m)?;
            let mut vs: Vec<RVector> = match dir {
                Some((v, _)) => vec![RVector(v.to_vec())],
                None => lhs.project(&span(0, m)).direction_representatives(&[]),
            };
            vs.sort();
            vs.dedup();
            let tangents: Vec<PolyhedralSet> = points.iter().map(|p| tangent_set(f.epigraph(), p)).collect();
            let mut upper = true;
            let mut equal = true;
            let mut bad = None;
            for v in vs {
                let lhs_val = dvth.value(&v);
                let kappa = match &lhs_val {
                    ExtReal::Finite(mu) => {
                        let d = join(&v, std::slice::from_ref(mu));
                        let r = check_fuzzy_inner_calmness_star(&data.level_map, &yv, Some(&d))?;
                        let kbar = r.modulus_bound.unwrap_or_else(Rational::zero);
                        Some((kbar + Rational::one(), d.norm_inf()))
                    }
                    _ => None,
                };
                let rhs_val = match &kappa {
                    Some((k, nd)) => {
                        let bound = k * nd;
                        tangents
                            .iter()
                            .map(|t| bounded_min(t, n, &v, &bound))
                            .min()
                            .unwrap_or(ExtReal::PosInf)
                    }
                    None => ExtReal::PosInf,
                };
                if lhs_val > rhs_val {
                    upper = false;
                    bad.get_or_insert(v.clone());
                }
                if lhs_val != rhs_val {
                    equal = false;
                    bad.get_or_insert(v.clone());
                }
            }
            rep.checks.push(Check::new("d upper estimate", upper, bad.clone().map(|v| vec![v])));
            if ic {
                rep.checks.push(Check::new("d equality with kappa above modulus", equal, bad.map(|v| vec![v])));
            }
            rep.modulus_bound = fuzzy.modulus_bound.clone();
            rep.hypotheses.push(fuzzy);
        }
        ConeKind::RegularNormal => {
            let fuzzy = check_fuzzy_inner_calmness_star(&data.level_map, &yv, None)?;
            let claim = if fuzzy.verdict { Relation::Equal } else { Relation::LhsSubsetRhs };
            let lhs = vth.regular_subdifferential(y)?;
            let parts = points
                .iter()
                .map(|p| Ok(f.regular_subdifferential(&p[..n + m])?.slice_front(&zero_x)))
                .collect::<Result<Vec<_>>>()?;
            rep.push(Estimate::certify("regular subdifferential", lhs, intersection_of(m, &parts), Some(claim)));
            rep.modulus_bound = fuzzy.modulus_bound.clone();
            rep.hypotheses.push(fuzzy);
        }
        ConeKind::LimitingNormal => {
            let fuzzy = check_fuzzy_inner_calmness_star(&data.level_map, &yv, None)?;
            let claim = fuzzy.verdict.then_some(Relation::LhsSubsetRhs);
            let lhs = vth.limiting_subdifferential(y)?;
            let parts = points
                .iter()
                .map(|p| Ok(f.limiting_subdifferential(&p[..n + m])?.slice_front(&zero_x)))
                .collect::<Result<Vec<_>>>()?;
            rep.push(Estimate::certify("limiting subdifferential", lhs, union_of(m, &parts), claim));
            rep.modulus_bound = fuzzy.modulus_bound.clone();
            rep.hypotheses.push(fuzzy);
        }
        ConeKind::DirectionalLimitingNormal => {
            let zero = Rational::zero();
            let zv = RVector::zeros(m);
            let (v, mu) = dir.unwrap_or((&zv, &zero));
            let vmu = join(v, std::slice::from_ref(mu));
            let fuzzy = check_fuzzy_inner_calmness_star(&data.level_map, &yv, Some(&vmu))?;
            let claim = fuzzy.verdict.then_some(Relation::LhsSubsetRhs);
            let lhs = vth.directional_subdifferential(y, v, mu)?;
            let mut parts = Vec::new();
            for p in &points {
                let t = tangent_set(f.epigraph(), p);
                for u in leading_fiber(&t, n, &vmu) {
                    let d = join(&u, v);
                    parts.push(f.directional_subdifferential(&p[..n + m], &d, mu)?.slice_front(&zero_x));
                }
            }
            rep.push(Estimate::certify("directional subdifferential", lhs, union_of(m, &parts), claim));
            rep.modulus_bound = fuzzy.modulus_bound.clone();
            rep.hypotheses.push(fuzzy);
        }
    }

    let (fosc, weak, agree) = marginal_conditions(f, &data, &points, n, m)?;
    rep.checks.push(Check::new("FOSCclm_MF matches FOSCclm of M", agree, None));
    rep.hypotheses.push(fosc);
    rep.hypotheses.push(weak);
    Ok(rep)
}

fn marginal_conditions(
    f: &PLFunction,
    data: &MarginalData,
    points: &[RVector],
    n: usize,
    m: usize,
) -> Result<(CriterionReport, CriterionReport, bool)> {
    let zero_x = RVector::zeros(n);
    let tail = RVector::zeros(m + 1);
    let mut fosc = CriterionReport::pass(Criterion::MarginalFoscClm);
    let mut weak = CriterionReport::pass(Criterion::MarginalWeakCq);
    let mut agree = true;
    for p in points {
        let mut local = true;
        let t = tangent_set(f.epigraph(), p);
        for u in leading_fiber(&t, n, &tail).into_iter().filter(|u| !u.is_zero()) {
            let d = directional_normal_set(f.epigraph(), p, &join(&u, &tail)).slice_front(&zero_x);
            let steep = d.slice_back(&[-Rational::one()]);
            let flat = d.slice_back(&[Rational::zero()]);
            if local {
                if let Some(ys) = steep.pieces().first().map(|q| q.relative_interior_point()) {
                    local = false;
                    if fosc.verdict {
                        fosc = CriterionReport::fail(Criterion::MarginalFoscClm, vec![u.clone(), ys]);
                    }
                } else if let Some(ys) = nonzero_element(&flat) {
                    local = false;
                    if fosc.verdict {
                        fosc = CriterionReport::fail(Criterion::MarginalFoscClm, vec![u.clone(), ys]);
                    }
                }
            }
            if weak.verdict {
                if let Some(ys) = nonzero_element(&steep) {
                    weak = CriterionReport::fail(Criterion::MarginalWeakCq, vec![u.clone(), ys]);
                }
            }
        }
        let direct = check_fosc_clm(&data.level_map, &p[n..], &p[..n], None)?;
        agree &= direct.verdict == local;
    }
    Ok((fosc, weak, agree))
}
