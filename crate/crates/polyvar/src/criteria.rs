//! Calmness-type criteria: Levy–Rockafellar, Mordukhovich, FOSCclm and
//! fuzzy inner calmness*, with ∞-norm moduli.

use std::fmt;

use crate::cones::{directional_normal_set, limiting_normal_set, tangent_set};
use crate::error::{PolyError, Result};
use crate::linalg::RVector;
use crate::maps::{join, ExtReal, PolyMap};
use crate::rational::Rational;
use crate::set::PolyhedralSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Lrc,
    Mc,
    FoscClm,
    FuzzyInnerCalmStar,
    InnerCalmStar,
    SumRuleIsolatedCalm,
    IntersectionAubin,
    ChainDualCq,
    ChainPrimalCq,
    TangentProduct,
    ProductCq,
    ImageRuleCq,
    PreimageRuleCq,
    MarginalFoscClm,
    MarginalWeakCq,
    SemismoothStar,
    MinimaxCondition,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Lrc => "LRC",
            Criterion::Mc => "MC",
            Criterion::FoscClm => "FOSCclm",
            Criterion::FuzzyInnerCalmStar => "FuzzyIC*",
            Criterion::InnerCalmStar => "InnerCalm*",
            Criterion::SumRuleIsolatedCalm => "SumRuleIC",
            Criterion::IntersectionAubin => "IntersectionAubin",
            Criterion::ChainDualCq => "ChainDualCQ",
            Criterion::ChainPrimalCq => "ChainPrimalCQ",
            Criterion::TangentProduct => "TangentProduct",
            Criterion::ProductCq => "ProductCQ",
            Criterion::ImageRuleCq => "ImageRuleCQ",
            Criterion::PreimageRuleCq => "PreimageRuleCQ",
            Criterion::MarginalFoscClm => "FOSCclm_MF",
            Criterion::MarginalWeakCq => "MarginalWeakCQ",
            Criterion::SemismoothStar => "Semismooth*",
            Criterion::MinimaxCondition => "MinimaxCondition",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Verdict of a criterion check. A false verdict always carries a witness;
/// moduli are measured in the ∞-norm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub verdict: bool,
    pub witness: Option<Vec<RVector>>,
    pub modulus_bound: Option<Rational>,
}

/// Norm in which every reported modulus is measured.
pub const MODULUS_NORM: &str = "inf";

impl CriterionReport {
    pub fn pass(criterion: Criterion) -> Self {
        CriterionReport {
            criterion,
            verdict: true,
            witness: None,
            modulus_bound: None,
        }
    }

    pub fn fail(criterion: Criterion, witness: Vec<RVector>) -> Self {
        CriterionReport {
            criterion,
            verdict: false,
            witness: Some(witness),
            modulus_bound: None,
        }
    }

    pub fn with_modulus(mut self, m: Rational) -> Self {
        self.modulus_bound = Some(m);
        self
    }
}

/// A nonzero element of the set, if any.
pub fn nonzero_element(set: &PolyhedralSet) -> Option<RVector> {
    set.pieces().iter().find_map(|p| {
        let v = p.vrep();
        v.points
            .iter()
            .chain(&v.rays)
            .chain(&v.lines)
            .find(|x| !x.is_zero())
            .cloned()
    })
}

/// `DM(ȳ, x̄)(0) = {0}`.
pub fn check_lrc(m: &PolyMap, y: &[Rational], x: &[Rational]) -> Result<CriterionReport> {
    let d = m.graphical_derivative(y, x)?;
    let slice = d.image_at(&RVector::zeros(m.m()));
    Ok(match nonzero_element(&slice) {
        None => CriterionReport::pass(Criterion::Lrc),
        Some(u) => CriterionReport::fail(Criterion::Lrc, vec![u]),
    })
}

/// `D*M(ȳ, x̄)(0) = {0}`.
pub fn check_mc(m: &PolyMap, y: &[Rational], x: &[Rational]) -> Result<CriterionReport> {
    let d = m.limiting_coderivative(y, x)?;
    let slice = d.image_at(&RVector::zeros(m.n()));
    Ok(match nonzero_element(&slice) {
        None => CriterionReport::pass(Criterion::Mc),
        Some(ystar) => CriterionReport::fail(Criterion::Mc, vec![ystar]),
    })
}

/// Nonzero representatives `u` of `DM(ȳ, x̄)(0)`, one per cell of the
/// graph-tangent arrangement restricted to `v = 0`.
pub fn zero_slice_directions(m: &PolyMap, z: &[Rational]) -> Vec<RVector> {
    tangent_set(m.graph(), z)
        .fiber_representatives(&RVector::zeros(m.m()))
        .into_iter()
        .filter(|u| !u.is_zero())
        .collect()
}

/// `D*M((ȳ, x̄); (0, u))(0) = {0}` for every `u ∈ DM(ȳ, x̄)(0) \ {0}`, or
/// for the single direction `dir` when given.
pub fn check_fosc_clm(m: &PolyMap, y: &[Rational], x: &[Rational], dir: Option<&[Rational]>) -> Result<CriterionReport> {
    let z = m.check_on_graph(y, x)?;
    let us = match dir {
        Some(u) => {
            let k = tangent_set(m.graph(), &z).slice_front(&RVector::zeros(m.m()));
            if k.contains(u) && u.iter().any(|c| !c.is_zero()) {
                vec![RVector(u.to_vec())]
            } else {
                Vec::new()
            }
        }
        None => zero_slice_directions(m, &z),
    };
    for u in us {
        let n = directional_normal_set(m.graph(), &z, &join(&RVector::zeros(m.m()), &u));
        let slice = n.slice_back(&RVector::zeros(m.n()));
        if let Some(ystar) = nonzero_element(&slice) {
            return Ok(CriterionReport::fail(Criterion::FoscClm, vec![u, ystar]));
        }
    }
    Ok(CriterionReport::pass(Criterion::FoscClm))
}

/// `inf { ‖u‖ : u ∈ DM(ȳ, x̄)(v), x̄ ∈ M(ȳ) }`, evaluated on cell representatives of `M(ȳ)`.
pub fn min_derivative_norm(m: &PolyMap, y: &[Rational], v: &[Rational]) -> ExtReal {
    let mut best = ExtReal::PosInf;
    for xbar in m.image_representatives(y) {
        let z = join(y, &xbar);
        let slice = tangent_set(m.graph(), &z).slice_front(v);
        if let Some(r) = slice.min_norm_inf() {
            let r = ExtReal::Finite(r);
            if r < best {
                best = r;
            }
        }
    }
    best
}

/// Fuzzy inner calmness* at `ȳ` through its graphical-derivative
/// characterization; the modulus is the largest ratio `inf ‖u‖ / ‖v‖` over
/// the tangent directions of the domain examined.
pub fn check_fuzzy_inner_calmness_star(m: &PolyMap, y: &[Rational], dir: Option<&[Rational]>) -> Result<CriterionReport> {
    if y.len() != m.m() {
        return Err(PolyError::DimensionMismatch {
            expected: m.m(),
            found: y.len(),
        });
    }
    let dom = m.domain();
    if !dom.contains(y) {
        return Err(PolyError::NotInDomain);
    }
    let tdom = tangent_set(&dom, y);
    let vs: Vec<RVector> = match dir {
        Some(v) if tdom.contains(v) && v.iter().any(|c| !c.is_zero()) => vec![RVector(v.to_vec())],
        Some(_) => Vec::new(),
        None => tdom.direction_representatives(&[]),
    };
    let mut modulus = Rational::zero();
    for v in vs {
        match min_derivative_norm(m, y, &v) {
            ExtReal::Finite(r) => modulus = modulus.max(r / v.norm_inf()),
            _ => return Ok(CriterionReport::fail(Criterion::FuzzyInnerCalmStar, vec![v])),
        }
    }
    Ok(CriterionReport::pass(Criterion::FuzzyInnerCalmStar).with_modulus(modulus))
}

/// `min ‖y*‖` over `D*M(ȳ, x̄)(x*)`, or over the directional coderivative
/// in direction `(v, u)` when given; `+∞` when that image is empty.
pub fn coderivative_min_norm(
    m: &PolyMap,
    y: &[Rational],
    x: &[Rational],
    xstar: &[Rational],
    dir: Option<(&[Rational], &[Rational])>,
) -> Result<ExtReal> {
    let z = m.check_on_graph(y, x)?;
    let normals = match dir {
        Some((v, u)) => directional_normal_set(m.graph(), &z, &join(v, u)),
        None => limiting_normal_set(m.graph(), &z),
    };
    let image = m.coderivative_from_normals(&normals).image_at(xstar);
    Ok(image.min_norm_inf().map_or(ExtReal::PosInf, ExtReal::Finite))
}

/// Status of every node of the implication diagram between calmness-type
/// properties for a map with closed graph, at one graph point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Figure1Report {
    pub lrc: CriterionReport,
    pub mc: CriterionReport,
    pub fosc_clm: CriterionReport,
    pub isolated_calm: bool,
    pub aubin: bool,
    /// Polyhedral maps are calm everywhere.
    pub calm: bool,
    /// Polyhedral maps are inner calm* everywhere.
    pub inner_calm_star: bool,
    pub consistent: bool,
}

impl Figure1Report {
    pub fn lines(&self) -> Vec<String> {
        let yn = |b: bool| if b { "holds" } else { "fails" };
        let mut out = vec![
            format!("LRC: {}", yn(self.lrc.verdict)),
            format!("MC: {}", yn(self.mc.verdict)),
            format!("FOSCclm: {}", yn(self.fosc_clm.verdict)),
            format!("isolated calmness: {}", if self.isolated_calm { "certified by LRC" } else { "not certified" }),
            format!("Aubin property: {}", if self.aubin { "certified by MC" } else { "not certified" }),
            format!("calmness: {}", if self.calm { "holds (polyhedral)" } else { "unknown" }),
            format!(
                "inner calmness*: {}",
                if self.inner_calm_star { "holds (polyhedral)" } else { "unknown" }
            ),
        ];
        out.push(format!("LRC => FOSCclm: {}", arrow(self.lrc.verdict, self.fosc_clm.verdict)));
        out.push(format!("MC => FOSCclm: {}", arrow(self.mc.verdict, self.fosc_clm.verdict)));
        out.push(format!("FOSCclm => calmness: {}", arrow(self.fosc_clm.verdict, self.calm)));
        out.push(format!("consistent: {}", self.consistent));
        out
    }
}

fn arrow(a: bool, b: bool) -> &'static str {
    match (a, b) {
        (true, true) => "active",
        (true, false) => "VIOLATED",
        (false, _) => "vacuous",
    }
}

pub fn figure1_report(m: &PolyMap, y: &[Rational], x: &[Rational]) -> Result<Figure1Report> {
    let lrc = check_lrc(m, y, x)?;
    let mc = check_mc(m, y, x)?;
    let fosc_clm = check_fosc_clm(m, y, x, None)?;
    let consistent =
        (!lrc.verdict || fosc_clm.verdict) && (!mc.verdict || fosc_clm.verdict);
    Ok(Figure1Report {
        isolated_calm: lrc.verdict,
        aubin: mc.verdict,
        calm: true,
        inner_calm_star: true,
        consistent,
        lrc,
        mc,
        fosc_clm,
    })
}
