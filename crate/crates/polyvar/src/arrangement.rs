//! Sign-vector cells of hyperplane arrangements.

use crate::linalg::RVector;
use crate::lp::{strictly_feasible_point, Constraints};
use crate::rational::Rational;

/// A nonempty relatively open cell of a central arrangement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignCell {
    pub normals: Vec<RVector>,
    pub signs: Vec<i8>,
    pub witness: RVector,
}

/// Enumerates cells of the affine arrangement `{a·x = b}` inside a base region.
///
/// `allowed[k]` restricts the admissible signs of hyperplane `k`, indexed as
/// `[−, 0, +]`. Cells are returned sorted by sign vector.
#[derive(Clone, Debug)]
pub struct CellSearch {
    pub dim: usize,
    pub hyperplanes: Vec<(RVector, Rational)>,
    pub allowed: Vec<[bool; 3]>,
    pub base: Constraints,
    pub base_strict: Vec<(Vec<Rational>, Rational)>,
}

const SIGNS: [i8; 3] = [-1, 0, 1];

impl CellSearch {
    pub fn new(dim: usize) -> Self {
        CellSearch {
            dim,
            hyperplanes: Vec::new(),
            allowed: Vec::new(),
            base: Constraints::new(dim),
            base_strict: Vec::new(),
        }
    }

    pub fn central(normals: &[RVector]) -> Self {
        let dim = normals.first().map_or(0, |n| n.dim());
        let mut s = Self::new(dim);
        for n in normals {
            s.push(n.clone(), Rational::zero(), [true; 3]);
        }
        s
    }

    pub fn push(&mut self, a: RVector, b: Rational, allowed: [bool; 3]) {
        self.hyperplanes.push((a, b));
        self.allowed.push(allowed);
    }

    pub fn run(&self) -> Vec<(Vec<i8>, RVector)> {
        let Some(w) = strictly_feasible_point(&self.base, &self.base_strict) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut signs = Vec::with_capacity(self.hyperplanes.len());
        self.dfs(
            &mut self.base.clone(),
            &mut self.base_strict.clone(),
            &mut signs,
            w,
            &mut out,
        );
        out.sort();
        out
    }

    fn dfs(
        &self,
        cons: &mut Constraints,
        strict: &mut Vec<(Vec<Rational>, Rational)>,
        signs: &mut Vec<i8>,
        w: RVector,
        out: &mut Vec<(Vec<i8>, RVector)>,
    ) {
        let k = signs.len();
        if k == self.hyperplanes.len() {
            out.push((signs.clone(), w));
            return;
        }
        let (a, b) = &self.hyperplanes[k];
        let here = (a.dot(&w) - b).signum() as i8;
        for (idx, &s) in SIGNS.iter().enumerate() {
            if !self.allowed[k][idx] {
                continue;
            }
            let push = |cons: &mut Constraints, strict: &mut Vec<(Vec<Rational>, Rational)>| match s {
                -1 => strict.push((a.0.clone(), b.clone())),
                0 => cons.eq(a.0.clone(), b.clone()),
                _ => strict.push((a.neg().0, -b)),
            };
            let pop = |cons: &mut Constraints, strict: &mut Vec<(Vec<Rational>, Rational)>| match s {
                0 => {
                    cons.eqs.pop();
                }
                _ => {
                    strict.pop();
                }
            };
            push(cons, strict);
            let witness = if s == here {
                Some(w.clone())
            } else {
                strictly_feasible_point(cons, strict)
            };
            if let Some(wit) = witness {
                signs.push(s);
                self.dfs(cons, strict, signs, wit, out);
                signs.pop();
            }
            pop(cons, strict);
        }
    }
}

/// All nonempty cells of the central arrangement with the given normals.
pub fn sign_cells(normals: &[RVector]) -> Vec<SignCell> {
    if normals.is_empty() {
        return Vec::new();
    }
    CellSearch::central(normals)
        .run()
        .into_iter()
        .map(|(signs, witness)| SignCell {
            normals: normals.to_vec(),
            signs,
            witness,
        })
        .collect()
}

/// Distinct hyperplanes through the origin, each normal scaled to leading entry 1.
pub fn distinct_hyperplanes<'a>(normals: impl IntoIterator<Item = &'a RVector>) -> Vec<RVector> {
    let mut hs: Vec<RVector> = normals
        .into_iter()
        .filter(|n| !n.is_zero())
        .map(RVector::normalize_sign)
        .collect();
    hs.sort();
    hs.dedup();
    hs
}
