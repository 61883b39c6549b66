//! Tangent, regular normal, limiting normal and directional limiting normal cones.

use std::fmt;

use crate::error::{PolyError, Result};
use crate::linalg::{Matrix, RVector};
use crate::polyhedron::ConvexPolyhedron;
use crate::rational::Rational;
use crate::set::PolyhedralSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConeKind {
    Tangent,
    RegularNormal,
    LimitingNormal,
    DirectionalLimitingNormal,
}

impl ConeKind {
    pub const ALL: [ConeKind; 4] = [
        ConeKind::Tangent,
        ConeKind::RegularNormal,
        ConeKind::LimitingNormal,
        ConeKind::DirectionalLimitingNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConeKind::Tangent => "tangent",
            ConeKind::RegularNormal => "regular_normal",
            ConeKind::LimitingNormal => "limiting_normal",
            ConeKind::DirectionalLimitingNormal => "directional_limiting_normal",
        }
    }

    pub fn parse(s: &str) -> Option<ConeKind> {
        ConeKind::ALL.into_iter().find(|k| k.name() == s).or(match s {
            "regular" => Some(ConeKind::RegularNormal),
            "limiting" => Some(ConeKind::LimitingNormal),
            "directional" => Some(ConeKind::DirectionalLimitingNormal),
            _ => None,
        })
    }

    pub fn is_normal(self) -> bool {
        self != ConeKind::Tangent
    }
}

impl fmt::Display for ConeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A cone union anchored at the origin, tagged with how it was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeResult {
    pub cone: PolyhedralSet,
    pub kind: ConeKind,
    pub base_point: RVector,
    pub direction: Option<RVector>,
}

impl ConeResult {
    fn new(cone: PolyhedralSet, kind: ConeKind, base_point: &[Rational], direction: Option<&[Rational]>) -> Self {
        ConeResult {
            cone,
            kind,
            base_point: RVector(base_point.to_vec()),
            direction: direction.map(|d| RVector(d.to_vec())),
        }
    }
}

/// Union of the local tangent cones of the pieces containing `p`.
pub fn tangent_set(set: &PolyhedralSet, p: &[Rational]) -> PolyhedralSet {
    PolyhedralSet::from_pieces(
        set.dim(),
        set.pieces()
            .iter()
            .filter(|q| q.contains(p))
            .map(|q| q.tangent_cone_at(p))
            .collect(),
    )
}

/// Intersection of the piecewise normal cones at `p`; empty when `p` is outside.
pub fn regular_normal_set(set: &PolyhedralSet, p: &[Rational]) -> PolyhedralSet {
    let mut acc: Option<ConvexPolyhedron> = None;
    for q in set.pieces().iter().filter(|q| q.contains(p)) {
        let n = q.normal_cone_at(p);
        acc = Some(match acc {
            None => n,
            Some(a) => a.intersect(&n).expect("normal cones contain the origin"),
        });
    }
    match acc {
        Some(c) => PolyhedralSet::from_convex(c),
        None => PolyhedralSet::empty(set.dim()),
    }
}

/// Limiting normal cone of a cone union at the origin: the union of regular
/// normal cones over one representative per cell of its arrangement.
pub fn limiting_normal_set_of_cone(cone: &PolyhedralSet) -> PolyhedralSet {
    if cone.is_empty() {
        return PolyhedralSet::empty(cone.dim());
    }
    let reps = cone.cell_representatives();
    let parts: Vec<PolyhedralSet> = reps.iter().map(|w| regular_normal_set(cone, w)).collect();
    PolyhedralSet::union_all(cone.dim(), &parts)
}

pub fn limiting_normal_set(set: &PolyhedralSet, p: &[Rational]) -> PolyhedralSet {
    limiting_normal_set_of_cone(&tangent_set(set, p))
}

/// Directional limiting normals: the limiting normal cone of the tangent cone at `dir`.
pub fn directional_normal_set(set: &PolyhedralSet, p: &[Rational], dir: &[Rational]) -> PolyhedralSet {
    let t = tangent_set(set, p);
    if !t.contains(dir) {
        return PolyhedralSet::empty(set.dim());
    }
    limiting_normal_set_of_cone(&tangent_set(&t, dir))
}

pub fn tangent_cone(set: &PolyhedralSet, p: &[Rational]) -> ConeResult {
    ConeResult::new(tangent_set(set, p), ConeKind::Tangent, p, None)
}

pub fn regular_normal_cone(set: &PolyhedralSet, p: &[Rational]) -> ConeResult {
    ConeResult::new(regular_normal_set(set, p), ConeKind::RegularNormal, p, None)
}

pub fn limiting_normal_cone(set: &PolyhedralSet, p: &[Rational]) -> ConeResult {
    ConeResult::new(limiting_normal_set(set, p), ConeKind::LimitingNormal, p, None)
}

pub fn directional_limiting_normal_cone(set: &PolyhedralSet, p: &[Rational], dir: &[Rational]) -> ConeResult {
    ConeResult::new(
        directional_normal_set(set, p, dir),
        ConeKind::DirectionalLimitingNormal,
        p,
        Some(dir),
    )
}

/// Dispatches on `kind`; a missing direction for the directional kind means 0.
pub fn cone_of(set: &PolyhedralSet, p: &[Rational], kind: ConeKind, dir: Option<&[Rational]>) -> ConeResult {
    match kind {
        ConeKind::Tangent => tangent_cone(set, p),
        ConeKind::RegularNormal => regular_normal_cone(set, p),
        ConeKind::LimitingNormal => limiting_normal_cone(set, p),
        ConeKind::DirectionalLimitingNormal => {
            let zero = RVector::zeros(set.dim());
            directional_limiting_normal_cone(set, p, dir.unwrap_or(&zero))
        }
    }
}

/// Nonzero direction representatives of the tangent cone, one per cell,
/// positively scaled so the first nonzero entry is ±1.
pub fn tangent_directions(set: &PolyhedralSet, p: &[Rational]) -> Vec<RVector> {
    let mut ds: Vec<RVector> = tangent_set(set, p)
        .direction_representatives(&[])
        .into_iter()
        .map(|w| w.normalize_positive())
        .collect();
    ds.sort();
    ds.dedup();
    ds
}

/// Cones of `{x : A x + shift ∈ C}` at `x` via the change-of-coordinates formulas.
pub fn preimage_cones(
    a: &Matrix,
    shift: &[Rational],
    c: &PolyhedralSet,
    x: &[Rational],
    kind: ConeKind,
    dir: Option<&[Rational]>,
) -> Result<ConeResult> {
    if a.rows != c.dim() || shift.len() != a.rows || x.len() != a.cols {
        return Err(PolyError::DimensionMismatch {
            expected: c.dim(),
            found: a.rows,
        });
    }
    if a.rank() != a.rows {
        return Err(PolyError::RankDeficient);
    }
    let gx = a.mul_vec(x).add(&RVector(shift.to_vec()));
    if !c.contains(&gx) {
        return Err(PolyError::NotInSet {
            distance: c.distance_inf(&gx)?,
        });
    }
    let at = a.transpose();
    let cone = match kind {
        ConeKind::Tangent => tangent_set(c, &gx).linear_preimage(a),
        ConeKind::RegularNormal => regular_normal_set(c, &gx).linear_image(&at),
        ConeKind::LimitingNormal => limiting_normal_set(c, &gx).linear_image(&at),
        ConeKind::DirectionalLimitingNormal => {
            let u = dir.map_or_else(|| RVector::zeros(a.cols), |d| RVector(d.to_vec()));
            directional_normal_set(c, &gx, &a.mul_vec(&u)).linear_image(&at)
        }
    };
    Ok(ConeResult::new(cone, kind, x, if kind == ConeKind::DirectionalLimitingNormal { dir } else { None }))
}

/// One factor of a Cartesian product: set, point and optional direction.
#[derive(Clone, Debug)]
pub struct ProductPart {
    pub set: PolyhedralSet,
    pub point: RVector,
    pub dir: Option<RVector>,
}

#[derive(Clone, Debug)]
pub struct ProductCones {
    /// Product of the factor cones.
    pub rhs: ConeResult,
    /// Cone of the product set computed directly.
    pub lhs: ConeResult,
    pub equal: bool,
}

pub fn product_cones(parts: &[ProductPart], kind: ConeKind) -> Result<ProductCones> {
    let mut dim = 0;
    let mut point = Vec::new();
    let mut dir = Vec::new();
    let mut set = PolyhedralSet::universe(0);
    let mut rhs = PolyhedralSet::universe(0);
    for part in parts {
        if part.point.dim() != part.set.dim() {
            return Err(PolyError::DimensionMismatch {
                expected: part.set.dim(),
                found: part.point.dim(),
            });
        }
        if !part.set.contains(&part.point) {
            return Err(PolyError::NotInSet {
                distance: part.set.distance_inf(&part.point)?,
            });
        }
        dim += part.set.dim();
        point.extend(part.point.iter().cloned());
        let d = part.dir.clone().unwrap_or_else(|| RVector::zeros(part.set.dim()));
        dir.extend(d.iter().cloned());
        set = set.cartesian_product(&part.set);
        let factor = cone_of(&part.set, &part.point, kind, Some(&d)).cone;
        rhs = rhs.cartesian_product(&factor);
    }
    debug_assert_eq!(set.dim(), dim);
    let lhs = cone_of(&set, &point, kind, Some(&dir));
    let dir = (kind == ConeKind::DirectionalLimitingNormal).then_some(dir.as_slice());
    let equal = lhs.cone.set_equal(&rhs);
    Ok(ProductCones {
        rhs: ConeResult::new(rhs, kind, &point, dir),
        lhs,
        equal,
    })
}
