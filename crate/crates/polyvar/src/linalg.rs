//! Dense exact vectors and matrices.

use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use crate::rational::Rational;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RVector(pub Vec<Rational>);

impl RVector {
    pub fn new(coords: Vec<Rational>) -> Self {
        RVector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        RVector(vec![Rational::zero(); dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = Rational::one();
        v
    }

    pub fn from_ints(xs: &[i64]) -> Self {
        RVector(xs.iter().map(|&x| Rational::from_int(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Rational::is_zero)
    }

    pub fn dot(&self, other: &[Rational]) -> Rational {
        debug_assert_eq!(self.0.len(), other.len());
        dot(&self.0, other)
    }

    pub fn add(&self, other: &RVector) -> RVector {
        RVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &RVector) -> RVector {
        RVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: &Rational) -> RVector {
        RVector(self.0.iter().map(|a| a * c).collect())
    }

    pub fn neg(&self) -> RVector {
        RVector(self.0.iter().map(|a| -a).collect())
    }

    pub fn norm_inf(&self) -> Rational {
        self.0
            .iter()
            .map(Rational::abs)
            .fold(Rational::zero(), Rational::max)
    }

    pub fn concat(&self, other: &RVector) -> RVector {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        RVector(v)
    }

    pub fn slice(&self, start: usize, end: usize) -> RVector {
        RVector(self.0[start..end].to_vec())
    }

    /// First nonzero entry, if any.
    pub fn leading(&self) -> Option<&Rational> {
        self.0.iter().find(|x| !x.is_zero())
    }

    /// Positive rescaling making the first nonzero entry ±1.
    pub fn normalize_positive(&self) -> RVector {
        match self.leading() {
            Some(l) => self.scale(&l.abs().recip()),
            None => self.clone(),
        }
    }

    /// Rescaling (possibly by a negative factor) making the first nonzero entry 1.
    pub fn normalize_sign(&self) -> RVector {
        match self.leading() {
            Some(l) => self.scale(&l.recip()),
            None => self.clone(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Rational::to_f64).collect()
    }
}

impl Deref for RVector {
    type Target = Vec<Rational>;
    fn deref(&self) -> &Vec<Rational> {
        &self.0
    }
}

impl DerefMut for RVector {
    fn deref_mut(&mut self) -> &mut Vec<Rational> {
        &mut self.0
    }
}

impl From<Vec<Rational>> for RVector {
    fn from(v: Vec<Rational>) -> Self {
        RVector(v)
    }
}

impl fmt::Debug for RVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for RVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    let mut s = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += &(x * y);
        }
    }
    s
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>, cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.into_iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged matrix");
            for (j, x) in r.into_iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        m
    }

    pub fn from_ints(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Rational::from_int(x)).collect())
                .collect(),
            cols,
        )
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> RVector {
        RVector(self.row(i).to_vec())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[Rational]) -> RVector {
        assert_eq!(v.len(), self.cols, "shape mismatch");
        RVector((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut m = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let p = a * &other[(k, j)];
                    m[(i, j)] += &p;
                }
            }
        }
        m
    }

    /// Block-diagonal combination.
    pub fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
        let mut m = Matrix::zeros(a.rows + b.rows, a.cols + b.cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                m[(i, j)] = a[(i, j)].clone();
            }
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                m[(a.rows + i, a.cols + j)] = b[(i, j)].clone();
            }
        }
        m
    }

    /// Selection matrix picking coordinates `idx` out of `dim`.
    pub fn selection(dim: usize, idx: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(idx.len(), dim);
        for (r, &c) in idx.iter().enumerate() {
            m[(r, c)] = Rational::one();
        }
        m
    }

    /// Inverse of a square matrix, `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            let col = solve(self, &RVector::unit(n, j))?;
            for i in 0..n {
                inv[(i, j)] = col[i].clone();
            }
        }
        Some(inv)
    }

    pub fn rank(&self) -> usize {
        rref(&(0..self.rows).map(|i| self.row(i).to_vec()).collect::<Vec<_>>(), self.cols)
            .1
            .len()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{:?}", self.row_vec(i))?;
        }
        write!(f, "]")
    }
}

/// Reduced row echelon form of the given rows; returns nonzero rows and pivot columns.
pub fn rref(rows: &[Vec<Rational>], cols: usize) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x = &*x - &(&f * y);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

/// Basis of the null space {x : rows · x = 0}.
pub fn nullspace(rows: &[Vec<Rational>], cols: usize) -> Vec<RVector> {
    let (red, pivots) = rref(rows, cols);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = RVector::zeros(cols);
            v[f] = Rational::one();
            for (row, &p) in red.iter().zip(&pivots) {
                v[p] = -&row[f];
            }
            v
        })
        .collect()
}

/// Reduces `v` modulo the row space of an RREF system (zeroes the pivot columns).
pub fn reduce_modulo(v: &[Rational], red: &[Vec<Rational>], pivots: &[usize]) -> Vec<Rational> {
    let mut out = v.to_vec();
    for (row, &p) in red.iter().zip(pivots) {
        if out[p].is_zero() {
            continue;
        }
        let f = out[p].clone();
        for (x, y) in out.iter_mut().zip(row) {
            if !y.is_zero() {
                *x = &*x - &(&f * y);
            }
        }
    }
    out
}

/// Solves `A x = b` for some x, if solvable.
pub fn solve(a: &Matrix, b: &[Rational]) -> Option<RVector> {
    let rows: Vec<Vec<Rational>> = (0..a.rows)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i].clone());
            r
        })
        .collect();
    let (red, pivots) = rref(&rows, a.cols + 1);
    if pivots.last() == Some(&a.cols) {
        return None;
    }
    let mut x = RVector::zeros(a.cols);
    for (row, &p) in red.iter().zip(&pivots) {
        x[p] = row[a.cols].clone();
    }
    Some(x)
}
