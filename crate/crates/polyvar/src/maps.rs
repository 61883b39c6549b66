//! Set-valued maps with polyhedral graphs and piecewise-linear functions.

use std::fmt;

use crate::cones::{directional_normal_set, limiting_normal_set, regular_normal_set, tangent_set, ConeKind};
use crate::error::{PolyError, Result};
use crate::limits::Limits;
use crate::linalg::{Matrix, RVector};
use crate::lp::{minimize, LpStatus};
use crate::polyhedron::ConvexPolyhedron;
use crate::rational::Rational;
use crate::set::PolyhedralSet;

/// An extended real value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtReal {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl ExtReal {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtReal::Finite(r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Finite(r) => write!(f, "{r}"),
            ExtReal::PosInf => f.write_str("inf"),
        }
    }
}

/// A set-valued map `ℝᵐ ⇉ ℝⁿ` given by its graph in `ℝᵐ⁺ⁿ`, argument first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyMap {
    graph: PolyhedralSet,
    m: usize,
    n: usize,
}

impl PolyMap {
    /// Validated constructor for user input.
    pub fn new(graph: PolyhedralSet, m: usize, n: usize) -> Result<Self> {
        if graph.dim() != m + n {
            return Err(PolyError::DimensionMismatch {
                expected: m + n,
                found: graph.dim(),
            });
        }
        Limits::from_env().check_dim(m + n)?;
        Ok(PolyMap { graph, m, n })
    }

    /// Internal lifted constructions: the split is checked, the input caps are not.
    pub(crate) fn lifted(graph: PolyhedralSet, m: usize, n: usize) -> Result<Self> {
        if graph.dim() != m + n {
            return Err(PolyError::DimensionMismatch {
                expected: m + n,
                found: graph.dim(),
            });
        }
        Ok(PolyMap { graph, m, n })
    }

    pub fn from_graph(graph: PolyhedralSet, m: usize) -> Self {
        let n = graph.dim() - m;
        PolyMap { graph, m, n }
    }

    /// The single-valued affine map `y ↦ F y + c`.
    pub fn affine(f: &Matrix, c: &[Rational]) -> Self {
        let (n, m) = (f.rows, f.cols);
        let eqs = (0..n)
            .map(|i| {
                let mut row: Vec<Rational> = f.row(i).iter().map(|x| -x).collect();
                let mut e = vec![Rational::zero(); n];
                e[i] = Rational::one();
                row.extend(e);
                (RVector(row), c[i].clone())
            })
            .collect();
        let graph = ConvexPolyhedron::new(m + n, vec![], eqs).expect("graphs of affine maps are nonempty");
        PolyMap::from_graph(PolyhedralSet::from_convex(graph), m)
    }

    pub fn identity(m: usize) -> Self {
        Self::affine(&Matrix::identity(m), &RVector::zeros(m))
    }

    /// The constant map `y ↦ set`.
    pub fn constant(m: usize, set: &PolyhedralSet) -> Self {
        Self::from_graph(PolyhedralSet::universe(m).cartesian_product(set), m)
    }

    pub fn graph(&self) -> &PolyhedralSet {
        &self.graph
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> PolyhedralSet {
        self.graph.project(&(0..self.m).collect::<Vec<_>>())
    }

    pub fn range(&self) -> PolyhedralSet {
        self.graph.project(&(self.m..self.m + self.n).collect::<Vec<_>>())
    }

    pub fn image_at(&self, y: &[Rational]) -> PolyhedralSet {
        self.graph.slice_front(y)
    }

    pub fn inverse_image_at(&self, x: &[Rational]) -> PolyhedralSet {
        self.graph.slice_back(x)
    }

    pub fn inverse(&self) -> PolyMap {
        let perm: Vec<usize> = (self.m..self.m + self.n).chain(0..self.m).collect();
        PolyMap {
            graph: self.graph.permute(&perm),
            m: self.n,
            n: self.m,
        }
    }

    /// Restriction of the graph to `dom × set`.
    pub fn restrict(&self, dom: &PolyhedralSet) -> PolyMap {
        let g = self.graph.intersect(&dom.cartesian_product(&PolyhedralSet::universe(self.n)));
        PolyMap::from_graph(g, self.m)
    }

    /// `y ↦ M(y) + c`.
    pub fn translate(&self, c: &[Rational]) -> PolyMap {
        let mut shift = vec![Rational::zero(); self.m];
        shift.extend(c.iter().cloned());
        PolyMap::from_graph(self.graph.translate(&shift), self.m)
    }

    /// `y ↦ λ M(y)` for `λ ≠ 0`.
    pub fn scale(&self, lambda: &Rational) -> PolyMap {
        assert!(!lambda.is_zero(), "scale factor must be nonzero");
        let mut a = Matrix::identity(self.m + self.n);
        for i in self.m..self.m + self.n {
            a[(i, i)] = lambda.clone();
        }
        PolyMap::from_graph(self.graph.linear_image(&a), self.m)
    }

    pub fn contains(&self, y: &[Rational], x: &[Rational]) -> bool {
        self.graph.contains(&join(y, x))
    }

    /// Errors with a distance certificate when `(y, x)` is off the graph.
    pub fn check_on_graph(&self, y: &[Rational], x: &[Rational]) -> Result<RVector> {
        if y.len() != self.m || x.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.m + self.n,
                found: y.len() + x.len(),
            });
        }
        let z = join(y, x);
        if self.graph.contains(&z) {
            Ok(z)
        } else if self.graph.is_empty() {
            Err(PolyError::Invalid("graph is empty".into()))
        } else {
            Err(PolyError::OffGraph {
                distance: self.graph.distance_inf(&z)?,
            })
        }
    }

    pub fn graphical_derivative(&self, y: &[Rational], x: &[Rational]) -> Result<PolyMap> {
        let z = self.check_on_graph(y, x)?;
        Ok(PolyMap::from_graph(tangent_set(&self.graph, &z), self.m))
    }

    /// Turns a normal cone `N ⊂ ℝᵐ⁺ⁿ` of the graph into the coderivative map
    /// `x* ↦ {y* : (y*, −x*) ∈ N}`.
    pub fn coderivative_from_normals(&self, normals: &PolyhedralSet) -> PolyMap {
        let (m, n) = (self.m, self.n);
        let mut a = Matrix::zeros(m + n, m + n);
        for i in 0..n {
            a[(i, m + i)] = -Rational::one();
        }
        for j in 0..m {
            a[(n + j, j)] = Rational::one();
        }
        PolyMap::from_graph(normals.linear_image(&a), n)
    }

    pub fn regular_coderivative(&self, y: &[Rational], x: &[Rational]) -> Result<PolyMap> {
        let z = self.check_on_graph(y, x)?;
        Ok(self.coderivative_from_normals(&regular_normal_set(&self.graph, &z)))
    }

    pub fn limiting_coderivative(&self, y: &[Rational], x: &[Rational]) -> Result<PolyMap> {
        let z = self.check_on_graph(y, x)?;
        Ok(self.coderivative_from_normals(&limiting_normal_set(&self.graph, &z)))
    }

    pub fn directional_limiting_coderivative(
        &self,
        y: &[Rational],
        x: &[Rational],
        v: &[Rational],
        u: &[Rational],
    ) -> Result<PolyMap> {
        let z = self.check_on_graph(y, x)?;
        Ok(self.coderivative_from_normals(&directional_normal_set(&self.graph, &z, &join(v, u))))
    }

    /// Coderivative of the requested kind; `dir = (v, u)` is used by the directional kind only.
    pub fn coderivative(
        &self,
        y: &[Rational],
        x: &[Rational],
        kind: ConeKind,
        dir: Option<(&[Rational], &[Rational])>,
    ) -> Result<PolyMap> {
        match kind {
            ConeKind::Tangent => Err(PolyError::Invalid("tangent kind has no coderivative".into())),
            ConeKind::RegularNormal => self.regular_coderivative(y, x),
            ConeKind::LimitingNormal => self.limiting_coderivative(y, x),
            ConeKind::DirectionalLimitingNormal => {
                let (zv, zu) = (RVector::zeros(self.m), RVector::zeros(self.n));
                let (v, u) = dir.unwrap_or((&zv, &zu));
                self.directional_limiting_coderivative(y, x, v, u)
            }
        }
    }

    /// One representative per cell of `M(y)`; derivative objects are constant on cells.
    pub fn image_representatives(&self, y: &[Rational]) -> Vec<RVector> {
        self.image_at(y).cell_representatives()
    }
}

impl fmt::Debug for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyMap[{}→{}]({:?})", self.m, self.n, self.graph)
    }
}

pub fn join(a: &[Rational], b: &[Rational]) -> RVector {
    let mut v = a.to_vec();
    v.extend(b.iter().cloned());
    RVector(v)
}

/// An extended-real piecewise-linear function given by its epigraph in `ℝⁿ⁺¹`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PLFunction {
    epi: PolyhedralSet,
    n: usize,
}

fn is_epigraph_piece(p: &ConvexPolyhedron) -> bool {
    let last = p.dim() - 1;
    p.ineqs().iter().all(|(a, _)| !a[last].is_positive()) && p.eqs().iter().all(|(a, _)| a[last].is_zero())
}

impl PLFunction {
    pub fn new(epi: PolyhedralSet, n: usize) -> Result<Self> {
        if epi.dim() != n + 1 {
            return Err(PolyError::DimensionMismatch {
                expected: n + 1,
                found: epi.dim(),
            });
        }
        if !epi.pieces().iter().all(is_epigraph_piece) {
            return Err(PolyError::NotAnEpigraph);
        }
        Ok(PLFunction { epi, n })
    }

    /// `x ↦ max_i (⟨aᵢ, x⟩ + bᵢ)` restricted to `dom`, `+∞` elsewhere.
    pub fn max_affine(n: usize, pieces: &[(RVector, Rational)], dom: Option<&ConvexPolyhedron>) -> Self {
        let mut ineqs: Vec<(RVector, Rational)> = pieces
            .iter()
            .map(|(a, b)| {
                let mut row = a.0.clone();
                row.push(-Rational::one());
                (RVector(row), -b)
            })
            .collect();
        let mut eqs = Vec::new();
        if let Some(d) = dom {
            let lift = |(a, b): &(RVector, Rational)| {
                let mut row = a.0.clone();
                row.push(Rational::zero());
                (RVector(row), b.clone())
            };
            ineqs.extend(d.ineqs().iter().map(lift));
            eqs.extend(d.eqs().iter().map(lift));
        }
        let epi = ConvexPolyhedron::new(n + 1, ineqs, eqs).expect("epigraph of a finite max is nonempty");
        PLFunction {
            epi: PolyhedralSet::from_convex(epi),
            n,
        }
    }

    /// Pointwise minimum: the union of epigraphs.
    pub fn min_of(fs: &[PLFunction]) -> Self {
        let n = fs[0].n;
        PLFunction {
            epi: PolyhedralSet::union_all(n + 1, fs.iter().map(|f| &f.epi)),
            n,
        }
    }

    /// Indicator function of a set.
    pub fn indicator(set: &PolyhedralSet) -> Self {
        let nonneg = PolyhedralSet::from_convex(ConvexPolyhedron::cone(1, vec![RVector::from_ints(&[-1])], vec![]));
        PLFunction {
            epi: set.cartesian_product(&nonneg),
            n: set.dim(),
        }
    }

    pub fn epigraph(&self) -> &PolyhedralSet {
        &self.epi
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `min α` over the epigraph slice at `x`.
    pub fn value(&self, x: &[Rational]) -> ExtReal {
        let mut best = ExtReal::PosInf;
        for p in self.epi.pieces() {
            let mut c = p.constraints();
            for (i, xi) in x.iter().enumerate() {
                let mut row = vec![Rational::zero(); self.n + 1];
                row[i] = Rational::one();
                c.eq(row, xi.clone());
            }
            let mut obj = vec![Rational::zero(); self.n + 1];
            obj[self.n] = Rational::one();
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

    /// The epigraph point `(x, f(x))`, erroring when `f(x)` is infinite.
    pub fn epi_point(&self, x: &[Rational]) -> Result<RVector> {
        if x.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        match self.value(x) {
            ExtReal::Finite(v) => Ok(join(x, &[v])),
            ExtReal::PosInf => Err(PolyError::InfiniteValue("+inf")),
            ExtReal::NegInf => Err(PolyError::InfiniteValue("-inf")),
        }
    }

    pub fn subderivative(&self, x: &[Rational]) -> Result<PLFunction> {
        let z = self.epi_point(x)?;
        Ok(PLFunction {
            epi: tangent_set(&self.epi, &z),
            n: self.n,
        })
    }

    pub fn regular_subdifferential(&self, x: &[Rational]) -> Result<PolyhedralSet> {
        let z = self.epi_point(x)?;
        Ok(regular_normal_set(&self.epi, &z).slice_back(&[-Rational::one()]))
    }

    pub fn limiting_subdifferential(&self, x: &[Rational]) -> Result<PolyhedralSet> {
        let z = self.epi_point(x)?;
        Ok(limiting_normal_set(&self.epi, &z).slice_back(&[-Rational::one()]))
    }

    pub fn singular_subdifferential(&self, x: &[Rational]) -> Result<PolyhedralSet> {
        let z = self.epi_point(x)?;
        Ok(limiting_normal_set(&self.epi, &z).slice_back(&[Rational::zero()]))
    }

    pub fn directional_subdifferential(&self, x: &[Rational], u: &[Rational], mu: &Rational) -> Result<PolyhedralSet> {
        let z = self.epi_point(x)?;
        let dir = join(u, std::slice::from_ref(mu));
        Ok(directional_normal_set(&self.epi, &z, &dir).slice_back(&[-Rational::one()]))
    }

    pub fn singular_directional_subdifferential(
        &self,
        x: &[Rational],
        u: &[Rational],
        mu: &Rational,
    ) -> Result<PolyhedralSet> {
        let z = self.epi_point(x)?;
        let dir = join(u, std::slice::from_ref(mu));
        Ok(directional_normal_set(&self.epi, &z, &dir).slice_back(&[Rational::zero()]))
    }

    /// Subdifferential of the requested kind; the direction `(u, μ)` feeds the directional kind.
    pub fn subdifferential(
        &self,
        x: &[Rational],
        kind: ConeKind,
        dir: Option<(&[Rational], &Rational)>,
    ) -> Result<PolyhedralSet> {
        match kind {
            ConeKind::Tangent => Err(PolyError::Invalid("tangent kind has no subdifferential".into())),
            ConeKind::RegularNormal => self.regular_subdifferential(x),
            ConeKind::LimitingNormal => self.limiting_subdifferential(x),
            ConeKind::DirectionalLimitingNormal => {
                let zu = RVector::zeros(self.n);
                let zero = Rational::zero();
                let (u, mu) = dir.unwrap_or((&zu, &zero));
                self.directional_subdifferential(x, u, mu)
            }
        }
    }
}

impl fmt::Debug for PLFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PLFunction[{}](epi {:?})", self.n, self.epi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[i64]) -> RVector {
        RVector::from_ints(xs)
    }

    fn r(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn cone(d: usize, ineqs: &[&[i64]], eqs: &[&[i64]]) -> ConvexPolyhedron {
        ConvexPolyhedron::cone(d, ineqs.iter().map(|x| v(x)).collect(), eqs.iter().map(|x| v(x)).collect())
    }

    /// M₁(y) = [−|y|, |y|].
    fn m1() -> PolyMap {
        PolyMap::from_graph(
            PolyhedralSet::from_pieces(2, vec![cone(2, &[&[-1, 1], &[-1, -1]], &[]), cone(2, &[&[1, 1], &[1, -1]], &[])]),
            1,
        )
    }

    fn interval(lo: i64, hi: i64) -> PolyhedralSet {
        PolyhedralSet::from_convex(ConvexPolyhedron::new(1, vec![(v(&[1]), r(hi)), (v(&[-1]), r(-lo))], vec![]).unwrap())
    }

    #[test]
    fn basic_plumbing() {
        let m = m1();
        assert!(m.domain().set_equal(&PolyhedralSet::universe(1)));
        assert_eq!(m.image_at(&[r(1)]), interval(-1, 1));
        assert_eq!(m.inverse().inverse(), m);
        assert!(matches!(
            m.check_on_graph(&[r(0)], &[r(2)]),
            Err(PolyError::OffGraph { distance }) if distance == r(1)
        ));
    }

    #[test]
    fn derivatives_of_m1() {
        let m = m1();
        let d = m.graphical_derivative(&[r(0)], &[r(0)]).unwrap();
        assert_eq!(d.image_at(&[r(0)]), PolyhedralSet::origin(1));
        let d = m.graphical_derivative(&[r(1)], &[r(1)]).unwrap();
        let below = PolyhedralSet::from_convex(cone(2, &[&[-1, 1]], &[]));
        assert_eq!(d.graph(), &below);
        let reg = m.regular_coderivative(&[r(0)], &[r(0)]).unwrap();
        assert_eq!(reg.domain(), PolyhedralSet::origin(1));
        let lim = m.limiting_coderivative(&[r(0)], &[r(0)]).unwrap();
        assert_eq!(lim.image_at(&[r(0)]), PolyhedralSet::origin(1));
    }

    #[test]
    fn affine_coderivative_is_transpose() {
        let f = Matrix::from_ints(&[&[1, 2], &[0, 3], &[-1, 1]]);
        let m = PolyMap::affine(&f, &[r(1), r(0), r(2)]);
        let y = v(&[1, 1]);
        let x = f.mul_vec(&y).add(&v(&[1, 0, 2]));
        let d = m.graphical_derivative(&y, &x).unwrap();
        assert_eq!(d.graph(), PolyMap::affine(&f, &RVector::zeros(3)).graph());
        let ft = PolyMap::affine(&f.transpose(), &RVector::zeros(2));
        assert_eq!(m.regular_coderivative(&y, &x).unwrap(), ft);
        assert_eq!(m.limiting_coderivative(&y, &x).unwrap(), ft);
    }

    #[test]
    fn subdifferentials() {
        let abs = PLFunction::max_affine(1, &[(v(&[1]), r(0)), (v(&[-1]), r(0))], None);
        assert_eq!(abs.value(&[r(-3)]), ExtReal::Finite(r(3)));
        assert_eq!(abs.regular_subdifferential(&[r(0)]).unwrap(), interval(-1, 1));
        assert_eq!(abs.limiting_subdifferential(&[r(0)]).unwrap(), interval(-1, 1));
        let d = abs.subderivative(&[r(0)]).unwrap();
        assert_eq!(d.value(&[r(-2)]), ExtReal::Finite(r(2)));

        let nonneg = PolyhedralSet::from_convex(cone(1, &[&[-1]], &[]));
        let ind = PLFunction::indicator(&nonneg);
        assert_eq!(ind.regular_subdifferential(&[r(0)]).unwrap(), nonneg.negate());
        assert_eq!(ind.value(&[r(-1)]), ExtReal::PosInf);
        assert_eq!(ind.epi_point(&[r(-1)]), Err(PolyError::InfiniteValue("+inf")));

        let neg_abs = PLFunction::min_of(&[
            PLFunction::max_affine(1, &[(v(&[1]), r(0))], None),
            PLFunction::max_affine(1, &[(v(&[-1]), r(0))], None),
        ]);
        assert!(neg_abs.regular_subdifferential(&[r(0)]).unwrap().is_empty());
        let two = PolyhedralSet::from_pieces(
            1,
            vec![ConvexPolyhedron::singleton(&v(&[-1])), ConvexPolyhedron::singleton(&v(&[1]))],
        );
        assert_eq!(neg_abs.limiting_subdifferential(&[r(0)]).unwrap(), two);
    }

    #[test]
    fn epigraph_validation() {
        let hypo = PolyhedralSet::from_convex(cone(2, &[&[0, 1]], &[]));
        assert_eq!(PLFunction::new(hypo, 1), Err(PolyError::NotAnEpigraph));
    }
}
