//! Exact two-phase simplex over free variables with Bland's rule.

use crate::linalg::{dot, RVector};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal { value: Rational, point: RVector },
    /// Objective decreases without bound along `ray` starting from `point`.
    Unbounded { point: RVector, ray: RVector },
    Infeasible,
}

impl LpStatus {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpStatus::Infeasible)
    }

    pub fn point(&self) -> Option<&RVector> {
        match self {
            LpStatus::Optimal { point, .. } | LpStatus::Unbounded { point, .. } => Some(point),
            LpStatus::Infeasible => None,
        }
    }
}

/// A linear system `ineqs: a·x ≤ b`, `eqs: a·x = b` over `dim` free variables.
#[derive(Clone, Debug, Default)]
pub struct Constraints {
    pub dim: usize,
    pub ineqs: Vec<(Vec<Rational>, Rational)>,
    pub eqs: Vec<(Vec<Rational>, Rational)>,
}

impl Constraints {
    pub fn new(dim: usize) -> Self {
        Constraints {
            dim,
            ineqs: Vec::new(),
            eqs: Vec::new(),
        }
    }

    pub fn le(&mut self, a: Vec<Rational>, b: Rational) {
        debug_assert_eq!(a.len(), self.dim);
        self.ineqs.push((a, b));
    }

    pub fn eq(&mut self, a: Vec<Rational>, b: Rational) {
        debug_assert_eq!(a.len(), self.dim);
        self.eqs.push((a, b));
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    obj: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
}

enum Phase {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for x in self.rows[r].iter_mut() {
            if !x.is_zero() {
                *x = &*x * &inv;
            }
        }
        let prow = std::mem::take(&mut self.rows[r]);
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        let elim = |row: &mut Vec<Rational>| {
            if row[c].is_zero() {
                return;
            }
            let f = row[c].clone();
            for &j in &nz {
                let p = &f * &prow[j];
                row[j] = &row[j] - &p;
            }
        };
        for row in self.rows.iter_mut() {
            if !row.is_empty() {
                elim(row);
            }
        }
        elim(&mut self.obj);
        self.rows[r] = prow;
        self.basis[r] = c;
    }

    fn run(&mut self, allowed: usize) -> Phase {
        let rhs = self.ncols;
        loop {
            let Some(e) = (0..allowed).find(|&j| self.obj[j].is_negative()) else {
                return Phase::Optimal;
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[e].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[e];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return Phase::Unbounded(e),
                Some((r, _)) => self.pivot(r, e),
            }
        }
    }

    fn values(&self) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            v[b] = self.rows[i][self.ncols].clone();
        }
        v
    }
}

/// Minimizes `objective · x` subject to `cons`.
pub fn minimize(objective: &[Rational], cons: &Constraints) -> LpStatus {
    let n = cons.dim;
    assert_eq!(objective.len(), n, "objective dimension mismatch");
    let p = cons.ineqs.len();
    let nrows = p + cons.eqs.len();
    // Columns: x⁺ (n), x⁻ (n), slacks (p), artificials (one per row needing it).
    let structural = 2 * n + p;
    let mut needs_art = Vec::with_capacity(nrows);
    for (_, b) in &cons.ineqs {
        needs_art.push(b.is_negative());
    }
    needs_art.extend(std::iter::repeat(true).take(cons.eqs.len()));
    let nart = needs_art.iter().filter(|&&x| x).count();
    let ncols = structural + nart;

    let mut rows = Vec::with_capacity(nrows);
    let mut basis = Vec::with_capacity(nrows);
    let mut art = structural;
    let all = cons
        .ineqs
        .iter()
        .map(|c| (c, true))
        .chain(cons.eqs.iter().map(|c| (c, false)));
    for (i, ((a, b), is_ineq)) in all.enumerate() {
        let mut row = vec![Rational::zero(); ncols + 1];
        let flip = b.is_negative();
        for j in 0..n {
            let v = if flip { -&a[j] } else { a[j].clone() };
            row[n + j] = -&v;
            row[j] = v;
        }
        if is_ineq {
            row[2 * n + i] = if flip { -Rational::one() } else { Rational::one() };
        }
        row[ncols] = b.abs();
        if needs_art[i] {
            row[art] = Rational::one();
            basis.push(art);
            art += 1;
        } else {
            basis.push(2 * n + i);
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        obj: vec![Rational::zero(); ncols + 1],
        basis,
        ncols,
    };

    if nart > 0 {
        for j in structural..ncols {
            t.obj[j] = Rational::one();
        }
        for i in 0..nrows {
            if t.basis[i] >= structural {
                let row = t.rows[i].clone();
                for (o, x) in t.obj.iter_mut().zip(&row) {
                    if !x.is_zero() {
                        *o = &*o - x;
                    }
                }
            }
        }
        t.run(ncols);
        if !t.obj[ncols].is_zero() {
            return LpStatus::Infeasible;
        }
        // Drive artificial variables out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= structural {
                match (0..structural).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for row in t.rows.iter_mut() {
            for x in row[structural..ncols].iter_mut() {
                *x = Rational::zero();
            }
        }
    }

    let mut cost = vec![Rational::zero(); ncols + 1];
    for j in 0..n {
        cost[j] = objective[j].clone();
        cost[n + j] = -&objective[j];
    }
    let mut obj = cost.clone();
    for (i, &b) in t.basis.iter().enumerate() {
        if cost[b].is_zero() {
            continue;
        }
        let cb = cost[b].clone();
        for (o, x) in obj.iter_mut().zip(&t.rows[i]) {
            if !x.is_zero() {
                *o = &*o - &(&cb * x);
            }
        }
    }
    t.obj = obj;
    let phase = t.run(structural);
    let vals = t.values();
    let point = RVector((0..n).map(|j| &vals[j] - &vals[n + j]).collect());
    match phase {
        Phase::Optimal => LpStatus::Optimal {
            value: dot(objective, &point),
            point,
        },
        Phase::Unbounded(e) => {
            let mut d = vec![Rational::zero(); ncols];
            d[e] = Rational::one();
            for (i, &b) in t.basis.iter().enumerate() {
                d[b] = -&t.rows[i][e];
            }
            let ray = RVector((0..n).map(|j| &d[j] - &d[n + j]).collect());
            LpStatus::Unbounded { point, ray }
        }
    }
}

pub fn maximize(objective: &[Rational], cons: &Constraints) -> LpStatus {
    let neg: Vec<Rational> = objective.iter().map(|x| -x).collect();
    match minimize(&neg, cons) {
        LpStatus::Optimal { value, point } => LpStatus::Optimal {
            value: -value,
            point,
        },
        other => other,
    }
}

pub fn feasible_point(cons: &Constraints) -> Option<RVector> {
    let zero = vec![Rational::zero(); cons.dim];
    minimize(&zero, cons).point().cloned()
}

/// Finds a point satisfying `cons` and every row of `strict` with strict inequality.
pub fn strictly_feasible_point(
    cons: &Constraints,
    strict: &[(Vec<Rational>, Rational)],
) -> Option<RVector> {
    if strict.is_empty() {
        return feasible_point(cons);
    }
    let n = cons.dim;
    let mut lifted = Constraints::new(n + 1);
    let ext = |a: &Vec<Rational>, t: Rational| {
        let mut v = a.clone();
        v.push(t);
        v
    };
    for (a, b) in &cons.ineqs {
        lifted.le(ext(a, Rational::zero()), b.clone());
    }
    for (a, b) in &cons.eqs {
        lifted.eq(ext(a, Rational::zero()), b.clone());
    }
    for (a, b) in strict {
        lifted.le(ext(a, Rational::one()), b.clone());
    }
    let mut cap = vec![Rational::zero(); n + 1];
    cap[n] = Rational::one();
    lifted.le(cap.clone(), Rational::one());
    match maximize(&cap, &lifted) {
        LpStatus::Optimal { value, point } if value.is_positive() => {
            Some(RVector(point.0[..n].to_vec()))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn box_minimum_at_boundary() {
        let mut c = Constraints::new(1);
        c.le(vec![r("1")], r("1"));
        c.le(vec![r("-1")], r("0"));
        match minimize(&[r("1")], &c) {
            LpStatus::Optimal { value, point } => {
                assert_eq!(value, r("0"));
                assert_eq!(point, RVector::from_ints(&[0]));
            }
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn unbounded_with_ray() {
        let mut c = Constraints::new(1);
        c.le(vec![r("-1")], r("0"));
        match maximize(&[r("1")], &c) {
            LpStatus::Unbounded { ray, .. } => assert_eq!(ray, RVector::from_ints(&[1])),
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn thirds_and_sevenths() {
        let mut c = Constraints::new(2);
        c.le(vec![r("-1"), r("0")], r("-1/3"));
        c.le(vec![r("0"), r("-1")], r("-1/7"));
        match minimize(&[r("1"), r("1")], &c) {
            LpStatus::Optimal { value, point } => {
                assert_eq!(value, r("10/21"));
                assert_eq!(point.0, vec![r("1/3"), r("1/7")]);
            }
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn infeasible_and_equalities() {
        let mut c = Constraints::new(2);
        c.eq(vec![r("1"), r("1")], r("1"));
        c.eq(vec![r("2"), r("2")], r("2"));
        c.le(vec![r("-1"), r("0")], r("0"));
        c.le(vec![r("0"), r("-1")], r("0"));
        match minimize(&[r("1"), r("0")], &c) {
            LpStatus::Optimal { value, .. } => assert_eq!(value, r("0")),
            s => panic!("{s:?}"),
        }
        c.le(vec![r("1"), r("0")], r("-1"));
        assert_eq!(minimize(&[r("1"), r("0")], &c), LpStatus::Infeasible);
    }

    #[test]
    fn strict_feasibility() {
        let mut c = Constraints::new(1);
        c.le(vec![r("1")], r("0"));
        assert!(strictly_feasible_point(&c, &[(vec![r("-1")], r("0"))]).is_none());
        let p = strictly_feasible_point(&c, &[(vec![r("1")], r("0"))]).unwrap();
        assert!(p[0].is_negative());
    }

    #[test]
    fn degenerate_cycling_candidate() {
        // Beale's example; Bland's rule must terminate at the optimum.
        let mut c = Constraints::new(4);
        c.le(vec![r("1/4"), r("-60"), r("-1/25"), r("9")], r("0"));
        c.le(vec![r("1/2"), r("-90"), r("-1/50"), r("3")], r("0"));
        c.le(vec![r("0"), r("0"), r("1"), r("0")], r("1"));
        for i in 0..4 {
            let mut a = vec![r("0"); 4];
            a[i] = r("-1");
            c.le(a, r("0"));
        }
        match minimize(&[r("-3/4"), r("150"), r("-1/50"), r("6")], &c) {
            LpStatus::Optimal { value, .. } => assert_eq!(value, r("-1/20")),
            s => panic!("{s:?}"),
        }
    }
}
