//! Calculus rules certified exactly: both sides of every estimate are
//! computed as polyhedral sets and compared by containment in both
//! directions. Theoretical relations are recorded as claims and checked
//! against the computed relation, never substituted for it.

mod applications;
mod chain;
mod marginal;
mod sets;

use std::fmt;

pub use applications::{minimax_certificate, semismooth_star_check, SemismoothTarget};
pub use chain::{chain_rule, decoupled_sum, intersection_form, product_rule};
pub use marginal::{marginal_function, MarginalData};
pub use sets::{image_rule, intersection_rule, preimage_rule, sum_rule};

use crate::cones::{
    directional_normal_set, limiting_normal_set, regular_normal_set, tangent_set, ConeKind,
};
use crate::criteria::{
    check_fosc_clm, check_fuzzy_inner_calmness_star, coderivative_min_norm, min_derivative_norm, nonzero_element,
    zero_slice_directions, Criterion, CriterionReport,
};
use crate::error::{PolyError, Result};
use crate::linalg::{Matrix, RVector};
use crate::maps::{join, ExtReal, PolyMap};
use crate::rational::Rational;
use crate::set::PolyhedralSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Equal,
    LhsSubsetRhs,
    RhsSubsetLhs,
    Incomparable,
}

impl Relation {
    pub fn name(self) -> &'static str {
        match self {
            Relation::Equal => "equal",
            Relation::LhsSubsetRhs => "lhs_subset_rhs",
            Relation::RhsSubsetLhs => "rhs_subset_lhs",
            Relation::Incomparable => "incomparable",
        }
    }

    /// Whether `self` is at least as strong as `claim`.
    pub fn implies(self, claim: Relation) -> bool {
        match claim {
            Relation::Equal => self == Relation::Equal,
            Relation::LhsSubsetRhs => matches!(self, Relation::Equal | Relation::LhsSubsetRhs),
            Relation::RhsSubsetLhs => matches!(self, Relation::Equal | Relation::RhsSubsetLhs),
            Relation::Incomparable => true,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One displayed estimate: both sides, the computed relation, and the
/// relation the theory guarantees given the certified hypotheses
/// (`None` when the estimate is only observed).
#[derive(Clone, Debug)]
pub struct Estimate {
    pub name: String,
    pub lhs: PolyhedralSet,
    pub rhs: PolyhedralSet,
    pub relation: Relation,
    pub claimed: Option<Relation>,
    /// A point of `lhs \ rhs`.
    pub lhs_witness: Option<RVector>,
    /// A point of `rhs \ lhs`.
    pub rhs_witness: Option<RVector>,
}

impl Estimate {
    pub fn certify(name: impl Into<String>, lhs: PolyhedralSet, rhs: PolyhedralSet, claimed: Option<Relation>) -> Self {
        let a = lhs.subset(&rhs);
        let b = rhs.subset(&lhs);
        let relation = match (a.holds, b.holds) {
            (true, true) => Relation::Equal,
            (true, false) => Relation::LhsSubsetRhs,
            (false, true) => Relation::RhsSubsetLhs,
            (false, false) => Relation::Incomparable,
        };
        Estimate {
            name: name.into(),
            lhs,
            rhs,
            relation,
            claimed,
            lhs_witness: a.witness,
            rhs_witness: b.witness,
        }
    }

    pub fn consistent(&self) -> bool {
        self.claimed.map_or(true, |c| self.relation.implies(c))
    }

    pub fn observed(&self) -> bool {
        self.claimed.is_none()
    }
}

/// A named yes/no side condition evaluated alongside the estimates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub witness: Option<Vec<RVector>>,
}

impl Check {
    pub fn new(name: impl Into<String>, holds: bool, witness: Option<Vec<RVector>>) -> Self {
        Check {
            name: name.into(),
            holds,
            witness,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RuleReport {
    pub rule: &'static str,
    pub kind: ConeKind,
    pub hypotheses: Vec<CriterionReport>,
    pub estimates: Vec<Estimate>,
    /// Conditions the theory guarantees; any failure is an engine fault.
    pub checks: Vec<Check>,
    pub modulus_bound: Option<Rational>,
}

impl RuleReport {
    pub fn new(rule: &'static str, kind: ConeKind) -> Self {
        RuleReport {
            rule,
            kind,
            hypotheses: Vec::new(),
            estimates: Vec::new(),
            checks: Vec::new(),
            modulus_bound: None,
        }
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.verdict)
    }

    pub fn hypothesis(&self, c: Criterion) -> Option<&CriterionReport> {
        self.hypotheses.iter().find(|h| h.criterion == c)
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    /// Relation of the first estimate.
    pub fn relation(&self) -> Option<Relation> {
        self.estimates.first().map(|e| e.relation)
    }

    /// Every claimed relation is met and every check holds.
    pub fn consistent(&self) -> bool {
        self.estimates.iter().all(Estimate::consistent) && self.checks.iter().all(|c| c.holds)
    }

    pub(crate) fn push(&mut self, e: Estimate) {
        self.estimates.push(e);
    }
}

pub(crate) fn span(a: usize, b: usize) -> Vec<usize> {
    (a..b).collect()
}

/// `{z ∈ ℝ^total : z[coords] ∈ set}`.
pub(crate) fn embed(set: &PolyhedralSet, total: usize, coords: &[usize]) -> PolyhedralSet {
    set.linear_preimage(&Matrix::selection(total, coords))
}

/// Graph of `B ∘ A` from `gph A ⊂ ℝ^{da+db}` and `gph B ⊂ ℝ^{db+dc}`.
pub(crate) fn compose_graphs(a: &PolyhedralSet, b: &PolyhedralSet, da: usize, db: usize, dc: usize) -> PolyhedralSet {
    let total = da + db + dc;
    let triple = embed(a, total, &span(0, da + db)).intersect(&embed(b, total, &span(da, total)));
    let mut keep = span(0, da);
    keep.extend(da + db..total);
    triple.project(&keep)
}

pub(crate) fn union_of(dim: usize, sets: &[PolyhedralSet]) -> PolyhedralSet {
    PolyhedralSet::union_all(dim, sets)
}

pub(crate) fn intersection_of(dim: usize, sets: &[PolyhedralSet]) -> PolyhedralSet {
    sets.iter()
        .fold(PolyhedralSet::universe(dim), |acc, s| acc.intersect(s))
}

/// Report for a condition of the form `K = {0}`.
pub(crate) fn zero_condition(c: Criterion, k: &PolyhedralSet) -> CriterionReport {
    match nonzero_element(k) {
        None => CriterionReport::pass(c),
        Some(w) => CriterionReport::fail(c, vec![w]),
    }
}

pub(crate) fn dim_check(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(PolyError::DimensionMismatch { expected, found })
    }
}

pub(crate) fn vec_of(v: &[Rational]) -> RVector {
    RVector(v.to_vec())
}

/// Estimates for the domain of `M` at `ȳ` from derivatives of `M` at the
/// representatives of `M(ȳ)`.
pub fn domain_cones(m: &PolyMap, y: &[Rational], kind: ConeKind, dir: Option<&[Rational]>) -> Result<RuleReport> {
    dim_check(m.m(), y.len())?;
    if let Some(v) = dir {
        dim_check(m.m(), v.len())?;
    }
    let dom = m.domain();
    if !dom.contains(y) {
        return Err(PolyError::NotInDomain);
    }
    let (mm, n) = (m.m(), m.n());
    let xs = m.image_representatives(y);
    let zs: Vec<RVector> = xs.iter().map(|x| join(y, x)).collect();
    let zero_x = RVector::zeros(n);
    let mut rep = RuleReport::new("domain_cones", kind);
    match kind {
        ConeKind::Tangent => {
            let fuzzy = check_fuzzy_inner_calmness_star(m, y, None)?;
            let ic = fuzzy.verdict;
            let lhs = tangent_set(&dom, y);
            let parts: Vec<PolyhedralSet> = zs
                .iter()
                .map(|z| tangent_set(m.graph(), z).project(&span(0, mm)))
                .collect();
            let claim = if ic { Relation::Equal } else { Relation::RhsSubsetLhs };
            let vs = lhs.direction_representatives(&[]);
            rep.push(Estimate::certify("T", lhs, union_of(mm, &parts), Some(claim)));
            if let Some(kappa) = fuzzy.modulus_bound.clone() {
                let bad = vs.into_iter().find(|v| match min_derivative_norm(m, y, v) {
                    ExtReal::Finite(r) => r > &kappa * &v.norm_inf(),
                    _ => true,
                });
                rep.checks.push(Check::new("T modulus-bounded", bad.is_none(), bad.map(|v| vec![v])));
                rep.modulus_bound = Some(kappa);
            }
            rep.hypotheses.push(fuzzy);
        }
        ConeKind::RegularNormal => {
            let fuzzy = check_fuzzy_inner_calmness_star(m, y, None)?;
            let claim = if fuzzy.verdict { Relation::Equal } else { Relation::LhsSubsetRhs };
            let lhs = regular_normal_set(&dom, y);
            let parts: Vec<PolyhedralSet> = zs
                .iter()
                .map(|z| regular_normal_set(m.graph(), z).slice_back(&zero_x))
                .collect();
            rep.push(Estimate::certify("N^", lhs, intersection_of(mm, &parts), Some(claim)));
            rep.modulus_bound = fuzzy.modulus_bound.clone();
            rep.hypotheses.push(fuzzy);
        }
        ConeKind::LimitingNormal => {
            let fuzzy = check_fuzzy_inner_calmness_star(m, y, None)?;
            let claim = fuzzy.verdict.then_some(Relation::LhsSubsetRhs);
            let lhs = limiting_normal_set(&dom, y);
            let parts: Vec<PolyhedralSet> = zs
                .iter()
                .map(|z| limiting_normal_set(m.graph(), z).slice_back(&zero_x))
                .collect();
            rep.push(Estimate::certify("N", lhs, union_of(mm, &parts), claim));
            rep.modulus_bound = fuzzy.modulus_bound.clone();
            rep.hypotheses.push(fuzzy);
        }
        ConeKind::DirectionalLimitingNormal => {
            let v = dir.map_or_else(|| RVector::zeros(mm), vec_of);
            let fuzzy = check_fuzzy_inner_calmness_star(m, y, Some(&v))?;
            let lhs = directional_normal_set(&dom, y, &v);
            let mut first = Vec::new();
            let mut second = Vec::new();
            for z in &zs {
                let t = tangent_set(m.graph(), z);
                for u in t.fiber_representatives(&v) {
                    first.push(directional_normal_set(m.graph(), z, &join(&v, &u)).slice_back(&zero_x));
                }
                for u in zero_slice_directions(m, z) {
                    let d = join(&RVector::zeros(mm), &u);
                    second.push(directional_normal_set(m.graph(), z, &d).slice_back(&zero_x));
                }
            }
            let first = union_of(mm, &first);
            let full = first.union(&union_of(mm, &second));
            let claim = fuzzy.verdict.then_some(Relation::LhsSubsetRhs);
            rep.push(Estimate::certify("dN", lhs.clone(), full, Some(Relation::LhsSubsetRhs)));
            rep.push(Estimate::certify("dN first union", lhs, first, claim));
            rep.modulus_bound = fuzzy.modulus_bound.clone();
            rep.hypotheses.push(fuzzy);
        }
    }
    Ok(rep)
}

/// Estimates for the image set `M(ȳ)` at `x̄` from derivatives of `M` at `(ȳ, x̄)`.
pub fn image_cones(
    m: &PolyMap,
    y: &[Rational],
    x: &[Rational],
    kind: ConeKind,
    dir: Option<&[Rational]>,
) -> Result<RuleReport> {
    let z = m.check_on_graph(y, x)?;
    if let Some(u) = dir {
        dim_check(m.n(), u.len())?;
    }
    let (mm, n) = (m.m(), m.n());
    let img = m.image_at(y);
    let xcoords = span(mm, mm + n);
    let mut rep = RuleReport::new("image_cones", kind);
    rep.hypotheses.push(check_fosc_clm(m, y, x, None)?);
    let modulus = |rep: &mut RuleReport, lhs: &PolyhedralSet, d: Option<(&[Rational], &[Rational])>| -> Result<()> {
        let mut worst = Rational::zero();
        let mut bad = None;
        for w in lhs.direction_representatives(&[]) {
            let xstar = w.neg();
            match coderivative_min_norm(m, y, x, &xstar, d)? {
                ExtReal::Finite(r) => worst = worst.max(r / w.norm_inf()),
                _ => {
                    bad = Some(w);
                    break;
                }
            }
        }
        rep.checks.push(Check::new("N modulus-bounded", bad.is_none(), bad.map(|w| vec![w])));
        rep.modulus_bound = Some(worst);
        Ok(())
    };
    match kind {
        ConeKind::Tangent => {
            let lhs = tangent_set(&img, x);
            let rhs = tangent_set(m.graph(), &z).slice_front(&RVector::zeros(mm));
            rep.push(Estimate::certify("T", lhs, rhs, Some(Relation::Equal)));
        }
        ConeKind::RegularNormal => {
            let lhs = regular_normal_set(&img, x);
            let rhs = regular_normal_set(m.graph(), &z).project(&xcoords);
            rep.push(Estimate::certify("N^", lhs, rhs, Some(Relation::RhsSubsetLhs)));
        }
        ConeKind::LimitingNormal => {
            let lhs = limiting_normal_set(&img, x);
            let rhs = limiting_normal_set(m.graph(), &z).project(&xcoords);
            modulus(&mut rep, &lhs, None)?;
            rep.push(Estimate::certify("N", lhs, rhs, Some(Relation::LhsSubsetRhs)));
        }
        ConeKind::DirectionalLimitingNormal => {
            let u = dir.map_or_else(|| RVector::zeros(n), vec_of);
            let v0 = RVector::zeros(mm);
            let lhs = directional_normal_set(&img, x, &u);
            let rhs = directional_normal_set(m.graph(), &z, &join(&v0, &u)).project(&xcoords);
            modulus(&mut rep, &lhs, Some((&v0, &u)))?;
            rep.push(Estimate::certify("dN", lhs, rhs, Some(Relation::LhsSubsetRhs)));
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests;
