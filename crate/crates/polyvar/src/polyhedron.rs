//! Convex polyhedra in canonical halfspace form.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use crate::dd::{canonical_cone, generators, halfspaces, ConeGenerators, ConeHalfspaces};
use crate::error::{PolyError, Result};
use crate::linalg::{Matrix, RVector};
use crate::lp::Constraints;
use crate::rational::Rational;

/// Generator form `conv(points) + cone(rays) + span(lines)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VRep {
    pub points: Vec<RVector>,
    pub rays: Vec<RVector>,
    pub lines: Vec<RVector>,
}

/// A nonempty convex polyhedron `{z : ⟨a, z⟩ ≤ b (ineqs), ⟨e, z⟩ = d (eqs)}`.
///
/// The representation is canonical: equalities are in reduced row echelon form,
/// inequalities are facet-defining, reduced modulo the equalities, scaled so the
/// first nonzero entry is ±1 and sorted. Two polyhedra are equal iff their
/// representations agree.
#[derive(Clone)]
pub struct ConvexPolyhedron {
    dim: usize,
    ineqs: Vec<(RVector, Rational)>,
    eqs: Vec<(RVector, Rational)>,
    vrep: OnceLock<Arc<VRep>>,
}

fn homogenize(
    dim: usize,
    ineqs: &[(RVector, Rational)],
    eqs: &[(RVector, Rational)],
) -> ConeHalfspaces {
    let lift = |(a, b): &(RVector, Rational)| {
        let mut v = a.0.clone();
        v.push(-b);
        RVector(v)
    };
    let mut hi: Vec<RVector> = ineqs.iter().map(lift).collect();
    let mut t = RVector::zeros(dim + 1);
    t[dim] = -Rational::one();
    hi.push(t);
    ConeHalfspaces {
        dim: dim + 1,
        ineqs: hi,
        eqs: eqs.iter().map(lift).collect(),
    }
}

fn vrep_from_homogeneous(dim: usize, g: &ConeGenerators) -> VRep {
    let mut points = Vec::new();
    let mut rays = Vec::new();
    for r in &g.rays {
        let t = &r[dim];
        if t.is_zero() {
            rays.push(r.slice(0, dim));
        } else {
            let inv = t.recip();
            points.push(RVector(r[..dim].iter().map(|x| x * &inv).collect()));
        }
    }
    points.sort();
    VRep {
        points,
        rays,
        lines: g.lines.iter().map(|l| l.slice(0, dim)).collect(),
    }
}

impl ConvexPolyhedron {
    /// Canonicalizes the system; fails if it is empty.
    pub fn new(
        dim: usize,
        ineqs: Vec<(RVector, Rational)>,
        eqs: Vec<(RVector, Rational)>,
    ) -> Result<Self> {
        for (a, _) in ineqs.iter().chain(&eqs) {
            if a.dim() != dim {
                return Err(PolyError::DimensionMismatch {
                    expected: dim,
                    found: a.dim(),
                });
            }
        }
        Self::build(dim, &ineqs, &eqs).ok_or(PolyError::EmptyPolyhedron)
    }

    pub fn try_new(
        dim: usize,
        ineqs: Vec<(RVector, Rational)>,
        eqs: Vec<(RVector, Rational)>,
    ) -> Option<Self> {
        Self::build(dim, &ineqs, &eqs)
    }

    fn build(dim: usize, ineqs: &[(RVector, Rational)], eqs: &[(RVector, Rational)]) -> Option<Self> {
        let (hs, g) = canonical_cone(&homogenize(dim, ineqs, eqs));
        if g.rays.iter().all(|r| r[dim].is_zero()) {
            return None;
        }
        let p = Self::from_homogeneous(dim, &hs);
        let _ = p.vrep.set(Arc::new(vrep_from_homogeneous(dim, &g)));
        Some(p)
    }

    fn from_homogeneous(dim: usize, hs: &ConeHalfspaces) -> Self {
        let split = |v: &RVector| (v.slice(0, dim), -&v[dim]);
        let eqs = hs.eqs.iter().map(split).collect();
        let ineqs = hs
            .ineqs
            .iter()
            .map(split)
            .filter(|(a, _)| !a.is_zero())
            .collect();
        ConvexPolyhedron {
            dim,
            ineqs,
            eqs,
            vrep: OnceLock::new(),
        }
    }

    /// `conv(points) + cone(rays) + span(lines)`; `points` must be nonempty.
    pub fn from_generators(
        dim: usize,
        points: &[RVector],
        rays: &[RVector],
        lines: &[RVector],
    ) -> Self {
        assert!(!points.is_empty(), "a polyhedron needs at least one point");
        let lift = |v: &RVector, t: Rational| {
            let mut w = v.0.clone();
            w.push(t);
            RVector(w)
        };
        let mut hrays: Vec<RVector> = points.iter().map(|p| lift(p, Rational::one())).collect();
        hrays.extend(rays.iter().map(|r| lift(r, Rational::zero())));
        let g = ConeGenerators {
            dim: dim + 1,
            rays: hrays,
            lines: lines.iter().map(|l| lift(l, Rational::zero())).collect(),
        };
        Self::from_homogeneous(dim, &halfspaces(&g))
    }

    pub fn universe(dim: usize) -> Self {
        Self::new(dim, vec![], vec![]).expect("universe is nonempty")
    }

    pub fn singleton(p: &RVector) -> Self {
        let d = p.dim();
        Self::new(
            d,
            vec![],
            (0..d).map(|i| (RVector::unit(d, i), p[i].clone())).collect(),
        )
        .expect("singleton is nonempty")
    }

    /// The cone `{w : a·w ≤ 0 (ineq normals), e·w = 0 (eq normals)}`.
    pub fn cone(dim: usize, ineq_normals: Vec<RVector>, eq_normals: Vec<RVector>) -> Self {
        let z = Rational::zero;
        Self::new(
            dim,
            ineq_normals.into_iter().map(|a| (a, z())).collect(),
            eq_normals.into_iter().map(|a| (a, z())).collect(),
        )
        .expect("cones contain the origin")
    }

    /// The cone `cone(rays) + span(lines)`.
    pub fn cone_from_generators(dim: usize, rays: &[RVector], lines: &[RVector]) -> Self {
        Self::from_generators(dim, &[RVector::zeros(dim)], rays, lines)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ineqs(&self) -> &[(RVector, Rational)] {
        &self.ineqs
    }

    pub fn eqs(&self) -> &[(RVector, Rational)] {
        &self.eqs
    }

    pub fn num_constraints(&self) -> usize {
        self.ineqs.len() + self.eqs.len()
    }

    /// Dimension of the affine hull.
    pub fn affine_dim(&self) -> usize {
        self.dim - self.eqs.len()
    }

    pub fn vrep(&self) -> &VRep {
        self.vrep.get_or_init(|| {
            let g = generators(&homogenize(self.dim, &self.ineqs, &self.eqs));
            Arc::new(vrep_from_homogeneous(self.dim, &g))
        })
    }

    pub fn contains(&self, p: &[Rational]) -> bool {
        self.ineqs.iter().all(|(a, b)| a.dot(p) <= *b) && self.eqs.iter().all(|(a, b)| a.dot(p) == *b)
    }

    pub fn is_cone(&self) -> bool {
        self.ineqs.iter().chain(&self.eqs).all(|(_, b)| b.is_zero())
    }

    pub fn is_bounded(&self) -> bool {
        let v = self.vrep();
        v.rays.is_empty() && v.lines.is_empty()
    }

    pub fn is_point(&self) -> bool {
        self.eqs.len() == self.dim
    }

    /// Normals of all constraint hyperplanes (inequalities first).
    pub fn normals(&self) -> impl Iterator<Item = &RVector> {
        self.ineqs.iter().chain(&self.eqs).map(|(a, _)| a)
    }

    pub fn constraints(&self) -> Constraints {
        let mut c = Constraints::new(self.dim);
        for (a, b) in &self.ineqs {
            c.le(a.0.clone(), b.clone());
        }
        for (a, b) in &self.eqs {
            c.eq(a.0.clone(), b.clone());
        }
        c
    }

    /// Constraints active at `p` (assumed in the polyhedron) as a cone.
    pub fn tangent_cone_at(&self, p: &[Rational]) -> ConvexPolyhedron {
        let active: Vec<RVector> = self
            .ineqs
            .iter()
            .filter(|(a, b)| a.dot(p) == *b)
            .map(|(a, _)| a.clone())
            .collect();
        Self::cone(
            self.dim,
            active,
            self.eqs.iter().map(|(a, _)| a.clone()).collect(),
        )
    }

    /// Regular normal cone at `p`: generated by active normals and equality normals.
    pub fn normal_cone_at(&self, p: &[Rational]) -> ConvexPolyhedron {
        let active: Vec<RVector> = self
            .ineqs
            .iter()
            .filter(|(a, b)| a.dot(p) == *b)
            .map(|(a, _)| a.clone())
            .collect();
        let lines: Vec<RVector> = self.eqs.iter().map(|(a, _)| a.clone()).collect();
        Self::cone_from_generators(self.dim, &active, &lines)
    }

    /// Polar of a cone.
    pub fn polar(&self) -> Result<ConvexPolyhedron> {
        if !self.is_cone() {
            return Err(PolyError::NotACone);
        }
        let rays: Vec<RVector> = self.ineqs.iter().map(|(a, _)| a.clone()).collect();
        let lines: Vec<RVector> = self.eqs.iter().map(|(a, _)| a.clone()).collect();
        Ok(Self::cone_from_generators(self.dim, &rays, &lines))
    }

    pub fn intersect(&self, o: &ConvexPolyhedron) -> Option<ConvexPolyhedron> {
        assert_eq!(self.dim, o.dim, "dimension mismatch");
        let mut ineqs = self.ineqs.clone();
        ineqs.extend(o.ineqs.iter().cloned());
        let mut eqs = self.eqs.clone();
        eqs.extend(o.eqs.iter().cloned());
        Self::build(self.dim, &ineqs, &eqs)
    }

    /// `{z : A z + s ∈ self}`.
    pub fn preimage(&self, a: &Matrix, s: &[Rational]) -> Option<ConvexPolyhedron> {
        assert_eq!(a.rows, self.dim, "shape mismatch");
        let at = a.transpose();
        let sub = |(n, b): &(RVector, Rational)| (at.mul_vec(n), b - &n.dot(s));
        let ineqs: Vec<_> = self.ineqs.iter().map(sub).collect();
        let eqs: Vec<_> = self.eqs.iter().map(sub).collect();
        Self::build(a.cols, &ineqs, &eqs)
    }

    /// `{A z + s : z ∈ self}`.
    pub fn image(&self, a: &Matrix, s: &[Rational]) -> ConvexPolyhedron {
        assert_eq!(a.cols, self.dim, "shape mismatch");
        let v = self.vrep();
        let shift = RVector(s.to_vec());
        let points: Vec<RVector> = v.points.iter().map(|p| a.mul_vec(p).add(&shift)).collect();
        let rays: Vec<RVector> = v.rays.iter().map(|r| a.mul_vec(r)).collect();
        let lines: Vec<RVector> = v.lines.iter().map(|l| a.mul_vec(l)).collect();
        Self::from_generators(a.rows, &points, &rays, &lines)
    }

    pub fn translate(&self, v: &[Rational]) -> ConvexPolyhedron {
        let shift = |(a, b): &(RVector, Rational)| (a.clone(), b + &a.dot(v));
        ConvexPolyhedron {
            dim: self.dim,
            ineqs: self.ineqs.iter().map(shift).collect(),
            eqs: {
                // Offsets of the RREF equalities move with the translation, the
                // normals (and hence canonical form) do not.
                self.eqs.iter().map(shift).collect()
            },
            vrep: OnceLock::new(),
        }
        .recanonicalized_order()
    }

    fn recanonicalized_order(mut self) -> Self {
        let key = |(a, b): &(RVector, Rational)| {
            let mut v = a.0.clone();
            v.push(-b);
            RVector(v)
        };
        self.ineqs.sort_by_key(key);
        self
    }

    pub fn minkowski(&self, o: &ConvexPolyhedron) -> ConvexPolyhedron {
        assert_eq!(self.dim, o.dim, "dimension mismatch");
        let (a, b) = (self.vrep(), o.vrep());
        let mut points = Vec::new();
        for p in &a.points {
            for q in &b.points {
                points.push(p.add(q));
            }
        }
        let rays: Vec<RVector> = a.rays.iter().chain(&b.rays).cloned().collect();
        let lines: Vec<RVector> = a.lines.iter().chain(&b.lines).cloned().collect();
        Self::from_generators(self.dim, &points, &rays, &lines)
    }

    pub fn product(&self, o: &ConvexPolyhedron) -> ConvexPolyhedron {
        let d = self.dim + o.dim;
        let left = |(a, b): &(RVector, Rational)| (a.concat(&RVector::zeros(o.dim)), b.clone());
        let right = |(a, b): &(RVector, Rational)| (RVector::zeros(self.dim).concat(a), b.clone());
        let ineqs: Vec<_> = self.ineqs.iter().map(left).chain(o.ineqs.iter().map(right)).collect();
        let eqs: Vec<_> = self.eqs.iter().map(left).chain(o.eqs.iter().map(right)).collect();
        Self::build(d, &ineqs, &eqs).expect("product of nonempty sets is nonempty")
    }

    /// Containment `self ⊂ o`, decided on generators.
    pub fn subset_of(&self, o: &ConvexPolyhedron) -> bool {
        if self == o {
            return true;
        }
        let v = self.vrep();
        v.points.iter().all(|p| o.contains(p))
            && v.rays.iter().all(|r| {
                o.ineqs.iter().all(|(a, _)| !a.dot(r).is_positive())
                    && o.eqs.iter().all(|(a, _)| a.dot(r).is_zero())
            })
            && v.lines.iter().all(|l| o.normals().all(|a| a.dot(l).is_zero()))
    }

    /// A point in the relative interior.
    pub fn relative_interior_point(&self) -> RVector {
        let v = self.vrep();
        let n = Rational::from_int(v.points.len() as i64);
        let mut c = RVector::zeros(self.dim);
        for p in &v.points {
            c = c.add(p);
        }
        c = c.scale(&n.recip());
        for r in &v.rays {
            c = c.add(r);
        }
        c
    }

    /// Reorders coordinates: new coordinate `i` is old coordinate `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> ConvexPolyhedron {
        assert_eq!(perm.len(), self.dim);
        let re = |(a, b): &(RVector, Rational)| (RVector(perm.iter().map(|&j| a[j].clone()).collect()), b.clone());
        let ineqs: Vec<_> = self.ineqs.iter().map(re).collect();
        let eqs: Vec<_> = self.eqs.iter().map(re).collect();
        Self::build(self.dim, &ineqs, &eqs).expect("permutation preserves nonemptiness")
    }

    fn key(&self) -> (usize, &[(RVector, Rational)], &[(RVector, Rational)]) {
        (self.dim, &self.eqs, &self.ineqs)
    }
}

impl PartialEq for ConvexPolyhedron {
    fn eq(&self, o: &Self) -> bool {
        self.key() == o.key()
    }
}

impl Eq for ConvexPolyhedron {}

impl Hash for ConvexPolyhedron {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl Ord for ConvexPolyhedron {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key().cmp(&o.key())
    }
}

impl PartialOrd for ConvexPolyhedron {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Debug for ConvexPolyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for (a, b) in &self.ineqs {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{a:?}·z <= {b}")?;
        }
        for (a, b) in &self.eqs {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{a:?}·z = {b}")?;
        }
        if first {
            write!(f, "R^{}", self.dim)?;
        }
        write!(f, "}}")
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

    fn unit_box() -> ConvexPolyhedron {
        ConvexPolyhedron::new(
            2,
            vec![
                (v(&[1, 0]), r(1)),
                (v(&[-1, 0]), r(1)),
                (v(&[0, 1]), r(1)),
                (v(&[0, -1]), r(1)),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn canonical_scaling_and_redundancy() {
        let p = ConvexPolyhedron::new(
            2,
            vec![
                (v(&[2, 0]), r(2)),
                (v(&[-1, 0]), r(1)),
                (v(&[0, 3]), r(3)),
                (v(&[0, -1]), r(1)),
                (v(&[1, 1]), r(5)),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(p, unit_box());
        assert_eq!(p.ineqs().len(), 4);
        assert_eq!(p.vrep().points.len(), 4);
    }

    #[test]
    fn implicit_equalities_detected() {
        let p = ConvexPolyhedron::new(
            2,
            vec![(v(&[1, 1]), r(0)), (v(&[-1, -1]), r(0)), (v(&[1, 0]), r(1))],
            vec![],
        )
        .unwrap();
        assert_eq!(p.eqs().len(), 1);
        assert_eq!(p.affine_dim(), 1);
        assert_eq!(p.ineqs().len(), 1);
    }

    #[test]
    fn empty_rejected() {
        let e = ConvexPolyhedron::new(1, vec![(v(&[1]), r(0)), (v(&[-1]), r(-1))], vec![]);
        assert_eq!(e, Err(PolyError::EmptyPolyhedron));
    }

    #[test]
    fn image_and_preimage() {
        // Projection of {(y,x): |x| <= y} onto y is {y >= 0}.
        let bowtie_half = ConvexPolyhedron::new(
            2,
            vec![(v(&[-1, 1]), r(0)), (v(&[-1, -1]), r(0))],
            vec![],
        )
        .unwrap();
        let proj = bowtie_half.image(&Matrix::from_ints(&[&[1, 0]]), &[r(0)]);
        assert_eq!(proj, ConvexPolyhedron::new(1, vec![(v(&[-1]), r(0))], vec![]).unwrap());
        let id = Matrix::identity(2);
        assert_eq!(unit_box().image(&id, &[r(0), r(0)]), unit_box());
        assert_eq!(unit_box().preimage(&id, &[r(0), r(0)]).unwrap(), unit_box());
        // Pre-image of [0,1] under (x1,x2) -> x1 + x2.
        let seg = ConvexPolyhedron::new(1, vec![(v(&[1]), r(1)), (v(&[-1]), r(0))], vec![]).unwrap();
        let pre = seg.preimage(&Matrix::from_ints(&[&[1, 1]]), &[r(0)]).unwrap();
        assert!(pre.contains(&[r(3), r(-2)]));
        assert!(!pre.contains(&[r(3), r(-1)]));
        let pt = unit_box().image(&Matrix::from_ints(&[&[0, 0]]), &[r(5)]);
        assert!(pt.is_point());
    }

    #[test]
    fn boxes_intersect() {
        let shifted = unit_box().translate(&[r(1), r(1)]);
        let i = unit_box().intersect(&shifted).unwrap();
        let expected = ConvexPolyhedron::new(
            2,
            vec![
                (v(&[1, 0]), r(1)),
                (v(&[-1, 0]), r(0)),
                (v(&[0, 1]), r(1)),
                (v(&[0, -1]), r(0)),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(i, expected);
    }

    #[test]
    fn minkowski_of_axes_is_orthant() {
        let x = ConvexPolyhedron::cone(2, vec![v(&[-1, 0])], vec![v(&[0, 1])]);
        let y = ConvexPolyhedron::cone(2, vec![v(&[0, -1])], vec![v(&[1, 0])]);
        let o = ConvexPolyhedron::cone(2, vec![v(&[-1, 0]), v(&[0, -1])], vec![]);
        assert_eq!(x.minkowski(&y), o);
        assert_eq!(o.polar().unwrap(), ConvexPolyhedron::cone(2, vec![v(&[1, 0]), v(&[0, 1])], vec![]));
    }

    #[test]
    fn containment_on_generators() {
        let small = unit_box();
        let big = unit_box().image(&Matrix::from_ints(&[&[2, 0], &[0, 2]]), &[r(0), r(0)]);
        assert!(small.subset_of(&big));
        assert!(!big.subset_of(&small));
        let p = small.relative_interior_point();
        assert!(small.contains(&p));
    }
}
