//! Finite unions of convex polyhedra.

use std::fmt;

use crate::arrangement::CellSearch;
use crate::error::{PolyError, Result};
use crate::limits::Limits;
use crate::linalg::{Matrix, RVector};
use crate::lp::{minimize, strictly_feasible_point, Constraints, LpStatus};
use crate::polyhedron::ConvexPolyhedron;
use crate::rational::Rational;

/// A canonical finite union of convex polyhedra.
///
/// Pieces are sorted, deduplicated, and no piece is contained in another.
/// The empty set has no pieces.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolyhedralSet {
    dim: usize,
    pieces: Vec<ConvexPolyhedron>,
}

/// Outcome of a containment test; `witness` is a point of the left set outside the right one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subset {
    pub holds: bool,
    pub witness: Option<RVector>,
}

impl PolyhedralSet {
    /// Validated constructor for user input; enforces desk-scale limits.
    pub fn new(dim: usize, pieces: Vec<ConvexPolyhedron>) -> Result<Self> {
        let limits = Limits::from_env();
        limits.check_dim(dim)?;
        limits.check_pieces(pieces.len())?;
        for p in &pieces {
            if p.dim() != dim {
                return Err(PolyError::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            limits.check_constraints(p.num_constraints())?;
        }
        Ok(Self::from_pieces(dim, pieces))
    }

    /// Canonicalizing constructor without limit checks.
    pub fn from_pieces(dim: usize, mut pieces: Vec<ConvexPolyhedron>) -> Self {
        debug_assert!(pieces.iter().all(|p| p.dim() == dim));
        pieces.sort();
        pieces.dedup();
        // Larger pieces first so containment pruning keeps maximal ones.
        let mut order: Vec<usize> = (0..pieces.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(pieces[i].affine_dim()));
        let mut keep = vec![true; pieces.len()];
        for (oi, &i) in order.iter().enumerate() {
            if !keep[i] {
                continue;
            }
            for &j in &order[oi + 1..] {
                if !keep[j] {
                    continue;
                }
                if pieces[j].subset_of(&pieces[i]) {
                    keep[j] = false;
                } else if pieces[i].affine_dim() == pieces[j].affine_dim() && pieces[i].subset_of(&pieces[j]) {
                    keep[i] = false;
                    break;
                }
            }
        }
        let pieces = pieces
            .into_iter()
            .zip(keep)
            .filter_map(|(p, k)| k.then_some(p))
            .collect();
        PolyhedralSet { dim, pieces }
    }

    pub fn from_convex(p: ConvexPolyhedron) -> Self {
        PolyhedralSet {
            dim: p.dim(),
            pieces: vec![p],
        }
    }

    pub fn empty(dim: usize) -> Self {
        PolyhedralSet {
            dim,
            pieces: Vec::new(),
        }
    }

    pub fn universe(dim: usize) -> Self {
        Self::from_convex(ConvexPolyhedron::universe(dim))
    }

    pub fn origin(dim: usize) -> Self {
        Self::from_convex(ConvexPolyhedron::singleton(&RVector::zeros(dim)))
    }

    pub fn singleton(p: &RVector) -> Self {
        Self::from_convex(ConvexPolyhedron::singleton(p))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[ConvexPolyhedron] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn is_convex_piece(&self) -> bool {
        self.pieces.len() == 1
    }

    pub fn is_origin(&self) -> bool {
        self.pieces.len() == 1 && self.pieces[0].is_point() && self.pieces[0].is_cone()
    }

    pub fn is_cone(&self) -> bool {
        self.pieces.iter().all(ConvexPolyhedron::is_cone)
    }

    pub fn contains(&self, p: &[Rational]) -> bool {
        self.pieces.iter().any(|q| q.contains(p))
    }

    pub fn union(&self, o: &PolyhedralSet) -> PolyhedralSet {
        self.check_dim(o);
        let mut pieces = self.pieces.clone();
        pieces.extend(o.pieces.iter().cloned());
        Self::from_pieces(self.dim, pieces)
    }

    pub fn union_all<'a>(dim: usize, sets: impl IntoIterator<Item = &'a PolyhedralSet>) -> PolyhedralSet {
        let pieces = sets.into_iter().flat_map(|s| s.pieces.iter().cloned()).collect();
        Self::from_pieces(dim, pieces)
    }

    pub fn intersect(&self, o: &PolyhedralSet) -> PolyhedralSet {
        self.check_dim(o);
        let mut pieces = Vec::new();
        for p in &self.pieces {
            for q in &o.pieces {
                if let Some(r) = p.intersect(q) {
                    pieces.push(r);
                }
            }
        }
        Self::from_pieces(self.dim, pieces)
    }

    pub fn minkowski_sum(&self, o: &PolyhedralSet) -> PolyhedralSet {
        self.check_dim(o);
        let mut pieces = Vec::new();
        for p in &self.pieces {
            for q in &o.pieces {
                pieces.push(p.minkowski(q));
            }
        }
        Self::from_pieces(self.dim, pieces)
    }

    pub fn cartesian_product(&self, o: &PolyhedralSet) -> PolyhedralSet {
        let mut pieces = Vec::new();
        for p in &self.pieces {
            for q in &o.pieces {
                pieces.push(p.product(q));
            }
        }
        Self::from_pieces(self.dim + o.dim, pieces)
    }

    pub fn affine_image(&self, a: &Matrix, shift: &[Rational]) -> PolyhedralSet {
        assert_eq!(a.cols, self.dim, "shape mismatch");
        assert_eq!(shift.len(), a.rows, "shape mismatch");
        Self::from_pieces(a.rows, self.pieces.iter().map(|p| p.image(a, shift)).collect())
    }

    pub fn linear_image(&self, a: &Matrix) -> PolyhedralSet {
        self.affine_image(a, &RVector::zeros(a.rows))
    }

    pub fn affine_preimage(&self, a: &Matrix, shift: &[Rational]) -> PolyhedralSet {
        assert_eq!(a.rows, self.dim, "shape mismatch");
        assert_eq!(shift.len(), a.rows, "shape mismatch");
        Self::from_pieces(
            a.cols,
            self.pieces.iter().filter_map(|p| p.preimage(a, shift)).collect(),
        )
    }

    pub fn linear_preimage(&self, a: &Matrix) -> PolyhedralSet {
        self.affine_preimage(a, &RVector::zeros(a.rows))
    }

    /// Projection onto the listed coordinates.
    pub fn project(&self, coords: &[usize]) -> PolyhedralSet {
        self.linear_image(&Matrix::selection(self.dim, coords))
    }

    /// The slice `{x : (fixed, x) ∈ self}` where `fixed` occupies the first coordinates.
    pub fn slice_front(&self, fixed: &[Rational]) -> PolyhedralSet {
        let m = fixed.len();
        let n = self.dim - m;
        let mut a = Matrix::zeros(self.dim, n);
        for i in 0..n {
            a[(m + i, i)] = Rational::one();
        }
        let mut shift = fixed.to_vec();
        shift.extend(std::iter::repeat(Rational::zero()).take(n));
        self.affine_preimage(&a, &shift)
    }

    /// The slice `{y : (y, fixed) ∈ self}` where `fixed` occupies the last coordinates.
    pub fn slice_back(&self, fixed: &[Rational]) -> PolyhedralSet {
        let n = fixed.len();
        let m = self.dim - n;
        let mut a = Matrix::zeros(self.dim, m);
        for i in 0..m {
            a[(i, i)] = Rational::one();
        }
        let mut shift = vec![Rational::zero(); m];
        shift.extend(fixed.iter().cloned());
        self.affine_preimage(&a, &shift)
    }

    pub fn translate(&self, v: &[Rational]) -> PolyhedralSet {
        Self::from_pieces(self.dim, self.pieces.iter().map(|p| p.translate(v)).collect())
    }

    /// New coordinate `i` is old coordinate `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> PolyhedralSet {
        Self::from_pieces(self.dim, self.pieces.iter().map(|p| p.permute(perm)).collect())
    }

    pub fn negate(&self) -> PolyhedralSet {
        let mut a = Matrix::identity(self.dim);
        for i in 0..self.dim {
            a[(i, i)] = -Rational::one();
        }
        self.linear_image(&a)
    }

    /// Distinct constraint hyperplane normals over all pieces, scaled to leading entry 1.
    pub fn hyperplane_normals(&self) -> Vec<RVector> {
        crate::arrangement::distinct_hyperplanes(self.pieces.iter().flat_map(|p| p.normals()))
    }

    /// Decides `self ⊂ o`, returning a witness point of `self \ o` on failure.
    pub fn subset(&self, o: &PolyhedralSet) -> Subset {
        self.check_dim(o);
        for p in &self.pieces {
            if o.pieces.iter().any(|q| p.subset_of(q)) {
                continue;
            }
            let region = Region::from_constraints(p.constraints());
            let mut qs: Vec<&ConvexPolyhedron> = o.pieces.iter().collect();
            let w = p.relative_interior_point();
            qs.sort_by_key(|q| !q.contains(&w));
            if let Some(w) = uncovered(region, &qs) {
                return Subset {
                    holds: false,
                    witness: Some(w),
                };
            }
        }
        Subset {
            holds: true,
            witness: None,
        }
    }

    pub fn is_subset(&self, o: &PolyhedralSet) -> bool {
        self.subset(o).holds
    }

    pub fn set_equal(&self, o: &PolyhedralSet) -> bool {
        self == o || (self.is_subset(o) && o.is_subset(self))
    }

    /// ∞-norm distance from `p` to the set.
    pub fn distance_inf(&self, p: &[Rational]) -> Result<Rational> {
        if p.len() != self.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                found: p.len(),
            });
        }
        if self.is_empty() {
            return Err(PolyError::DistanceToEmptySet);
        }
        let n = self.dim;
        let mut best: Option<Rational> = None;
        for piece in &self.pieces {
            if piece.contains(p) {
                return Ok(Rational::zero());
            }
            let mut c = Constraints::new(n + 1);
            for (a, b) in piece.ineqs() {
                let mut r = a.0.clone();
                r.push(Rational::zero());
                c.le(r, b.clone());
            }
            for (a, b) in piece.eqs() {
                let mut r = a.0.clone();
                r.push(Rational::zero());
                c.eq(r, b.clone());
            }
            for i in 0..n {
                let mut up = vec![Rational::zero(); n + 1];
                up[i] = Rational::one();
                up[n] = -Rational::one();
                c.le(up, p[i].clone());
                let mut lo = vec![Rational::zero(); n + 1];
                lo[i] = -Rational::one();
                lo[n] = -Rational::one();
                c.le(lo, -&p[i]);
            }
            let mut obj = vec![Rational::zero(); n + 1];
            obj[n] = Rational::one();
            if let LpStatus::Optimal { value, .. } = minimize(&obj, &c) {
                best = Some(match best {
                    Some(b) => b.min(value),
                    None => value,
                });
            }
        }
        Ok(best.expect("nonempty pieces have finite distance"))
    }

    /// Polar of a cone union: the intersection of the piecewise polars.
    pub fn polar_cone(&self) -> Result<PolyhedralSet> {
        if !self.is_cone() {
            return Err(PolyError::NotACone);
        }
        let mut acc = ConvexPolyhedron::universe(self.dim);
        for p in &self.pieces {
            acc = acc
                .intersect(&p.polar()?)
                .expect("polar cones contain the origin");
        }
        Ok(Self::from_convex(acc))
    }

    /// Least ∞-norm over the set, `None` when empty.
    pub fn min_norm_inf(&self) -> Option<Rational> {
        self.distance_inf(&RVector::zeros(self.dim)).ok()
    }

    /// Distinct affine constraint hyperplanes over all pieces, normalized so
    /// the first nonzero normal entry is 1.
    pub fn affine_hyperplanes(&self) -> Vec<(RVector, Rational)> {
        let mut hs: Vec<(RVector, Rational)> = self
            .pieces
            .iter()
            .flat_map(|p| p.ineqs().iter().chain(p.eqs()))
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, b)| {
                let lead = a.leading().expect("nonzero normal").clone();
                let inv = lead.recip();
                (a.scale(&inv), b * &inv)
            })
            .collect();
        hs.sort();
        hs.dedup();
        hs
    }

    /// One relative-interior point per nonempty cell of the arrangement of
    /// the set's own hyperplanes, restricted to the set. Every local
    /// variational object of the set is constant on each such cell.
    pub fn cell_representatives(&self) -> Vec<RVector> {
        self.cell_representatives_with(&[])
    }

    /// As [`cell_representatives`](Self::cell_representatives), refining the
    /// arrangement by additional hyperplanes `⟨a, x⟩ = b`.
    pub fn cell_representatives_with(&self, extra: &[(RVector, Rational)]) -> Vec<RVector> {
        let mut hs = self.affine_hyperplanes();
        for (a, b) in extra {
            if let Some(lead) = a.leading() {
                let inv = lead.recip();
                hs.push((a.scale(&inv), b * &inv));
            }
        }
        hs.sort();
        hs.dedup();
        let mut seen = std::collections::BTreeMap::new();
        for p in &self.pieces {
            let mut search = CellSearch::new(self.dim);
            search.base = p.constraints();
            for (a, b) in &hs {
                let mask = if p.eqs().iter().any(|(c, d)| c == a && d == b) {
                    [false, true, false]
                } else if p.ineqs().iter().any(|(c, d)| c == a && d == b) {
                    [true, true, false]
                } else if p.ineqs().iter().any(|(c, d)| c.neg() == *a && -d == *b) {
                    [false, true, true]
                } else {
                    [true; 3]
                };
                search.push(a.clone(), b.clone(), mask);
            }
            for (signs, w) in search.run() {
                seen.entry(signs).or_insert(w);
            }
        }
        seen.into_values().collect()
    }

    /// Nonzero direction representatives of a cone union: one per cell of its
    /// arrangement refined by the coordinate hyperplanes and `extra`, so that
    /// the origin forms a cell of its own.
    pub fn direction_representatives(&self, extra: &[(RVector, Rational)]) -> Vec<RVector> {
        let mut hs: Vec<(RVector, Rational)> = (0..self.dim)
            .map(|i| (RVector::unit(self.dim, i), Rational::zero()))
            .collect();
        hs.extend(extra.iter().cloned());
        self.cell_representatives_with(&hs)
            .into_iter()
            .filter(|w| !w.is_zero())
            .collect()
    }

    /// Representatives of the fiber `{w : (fixed, w) ∈ self}`, one per cell of
    /// the set's own arrangement restricted to the fiber and refined by the
    /// coordinate hyperplanes. Local objects of the set are constant along
    /// each such cell.
    pub fn fiber_representatives(&self, fixed: &[Rational]) -> Vec<RVector> {
        let k = fixed.len();
        let rest = self.dim - k;
        let mut extra: Vec<(RVector, Rational)> = (0..rest)
            .map(|i| (RVector::unit(rest, i), Rational::zero()))
            .collect();
        for (a, b) in self.affine_hyperplanes() {
            let tail = a.slice(k, self.dim);
            if !tail.is_zero() {
                let off = b - a.slice(0, k).dot(fixed);
                extra.push((tail, off));
            }
        }
        self.slice_front(fixed).cell_representatives_with(&extra)
    }

    fn check_dim(&self, o: &PolyhedralSet) {
        assert_eq!(self.dim, o.dim, "dimension mismatch");
    }
}

#[derive(Clone)]
struct Region {
    cons: Constraints,
    strict: Vec<(Vec<Rational>, Rational)>,
}

impl Region {
    fn from_constraints(cons: Constraints) -> Self {
        Region {
            cons,
            strict: Vec::new(),
        }
    }
}

/// A point of `region` not covered by any of `qs`, splitting the region along
/// the constraints of each covering candidate in turn.
fn uncovered(region: Region, qs: &[&ConvexPolyhedron]) -> Option<RVector> {
    let w = strictly_feasible_point(&region.cons, &region.strict)?;
    let Some((q, rest)) = qs.split_first() else {
        return Some(w);
    };
    let mut with_q = region.cons.clone();
    for (a, b) in q.ineqs() {
        with_q.le(a.0.clone(), b.clone());
    }
    for (a, b) in q.eqs() {
        with_q.eq(a.0.clone(), b.clone());
    }
    if strictly_feasible_point(&with_q, &region.strict).is_none() {
        return uncovered(region, rest);
    }
    let mut halves: Vec<(Vec<Rational>, Rational)> = q
        .ineqs()
        .iter()
        .map(|(a, b)| (a.0.clone(), b.clone()))
        .collect();
    for (a, b) in q.eqs() {
        halves.push((a.0.clone(), b.clone()));
        halves.push((a.neg().0, -b));
    }
    let mut prefix = region.cons.clone();
    for (a, b) in halves {
        let mut sub = Region {
            cons: prefix.clone(),
            strict: region.strict.clone(),
        };
        sub.strict.push((a.iter().map(|x| -x).collect(), -&b));
        if let Some(w) = uncovered(sub, rest) {
            return Some(w);
        }
        prefix.le(a, b);
    }
    None
}

impl fmt::Debug for PolyhedralSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return write!(f, "∅^{}", self.dim);
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{p:?}")?;
        }
        Ok(())
    }
}
