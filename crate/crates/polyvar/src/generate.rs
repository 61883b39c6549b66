//! Seeded pseudo-random polyhedral instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{Matrix, RVector};
use crate::maps::{PLFunction, PolyMap};
use crate::polyhedron::ConvexPolyhedron;
use crate::rational::Rational;
use crate::set::PolyhedralSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub max_dim: usize,
    pub max_pieces: usize,
    pub max_constraints: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_dim: 4,
            max_pieces: 4,
            max_constraints: 4,
        }
    }
}

/// A set with a point of it.
#[derive(Clone, Debug)]
pub struct SetInstance {
    pub set: PolyhedralSet,
    pub point: RVector,
}

/// A map with a point `(y, x)` of its graph.
#[derive(Clone, Debug)]
pub struct MapInstance {
    pub map: PolyMap,
    pub y: RVector,
    pub x: RVector,
}

/// `f : ℝⁿ × ℝᵐ → ℝ̄` whose infimum over the first `n` coordinates is
/// attained at every `y` in its domain, with a query point `y`.
#[derive(Clone, Debug)]
pub struct MarginalInstance {
    pub f: PLFunction,
    pub n: usize,
    pub y: RVector,
}

#[derive(Clone, Debug)]
pub struct Generator {
    rng: ChaCha8Rng,
    cfg: GenConfig,
}

impl Generator {
    pub fn new(seed: u64, cfg: GenConfig) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
        }
    }

    pub fn config(&self) -> GenConfig {
        self.cfg
    }

    fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn vector(&mut self, dim: usize, lo: i64, hi: i64) -> RVector {
        RVector((0..dim).map(|_| Rational::from_int(self.int(lo, hi))).collect())
    }

    fn normal(&mut self, dim: usize) -> RVector {
        loop {
            let v = self.vector(dim, -2, 2);
            if !v.is_zero() {
                return v;
            }
        }
    }

    fn point(&mut self, dim: usize) -> RVector {
        if self.chance(0.5) {
            RVector::zeros(dim)
        } else {
            self.vector(dim, -1, 1)
        }
    }

    /// A polyhedron containing `p`; most constraints are active at `p`.
    pub fn piece_through(&mut self, p: &RVector) -> ConvexPolyhedron {
        let dim = p.dim();
        let k = self.int(1, self.cfg.max_constraints as i64) as usize;
        let mut ineqs = Vec::new();
        let mut eqs = Vec::new();
        for _ in 0..k {
            let a = self.normal(dim);
            let b = a.dot(p);
            if self.chance(0.15) && eqs.len() + 1 < dim.max(1) {
                eqs.push((a, b));
            } else {
                let off = if self.chance(0.7) { 0 } else { self.int(1, 2) };
                ineqs.push((a, b + Rational::from_int(off)));
            }
        }
        ConvexPolyhedron::new(dim, ineqs, eqs).expect("the polyhedron contains p")
    }

    pub fn set_in(&mut self, dim: usize) -> SetInstance {
        let point = self.point(dim);
        let count = self.int(1, self.cfg.max_pieces as i64) as usize;
        let mut pieces = vec![self.piece_through(&point)];
        for _ in 1..count {
            let q = if self.chance(0.8) {
                point.clone()
            } else {
                point.add(&self.vector(dim, -1, 1))
            };
            pieces.push(self.piece_through(&q));
        }
        SetInstance {
            set: PolyhedralSet::from_pieces(dim, pieces),
            point,
        }
    }

    pub fn set(&mut self) -> SetInstance {
        let dim = self.int(1, self.cfg.max_dim as i64) as usize;
        self.set_in(dim)
    }

    pub fn map_with(&mut self, m: usize, n: usize) -> MapInstance {
        let s = self.set_in(m + n);
        MapInstance {
            map: PolyMap::from_graph(s.set, m),
            y: s.point.slice(0, m),
            x: s.point.slice(m, m + n),
        }
    }

    pub fn map(&mut self) -> MapInstance {
        let total = self.int(2, self.cfg.max_dim.max(2) as i64) as usize;
        let m = self.int(1, total as i64 - 1) as usize;
        self.map_with(m, total - m)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        Matrix::from_rows(
            (0..rows).map(|_| self.vector(cols, -2, 2).0).collect(),
            cols,
        )
    }

    /// `y ↦ F y + c` with small integer data.
    pub fn affine_map(&mut self, m: usize, n: usize) -> PolyMap {
        let f = self.matrix(n, m);
        let c = self.vector(n, -1, 1);
        PolyMap::affine(&f, &c)
    }

    /// `y ↦ max(⟨a, y⟩ + c, ⟨a', y⟩ + c')`, single-valued and piecewise affine.
    pub fn max_of_two(&mut self, m: usize) -> PolyMap {
        let (a1, a2) = (self.vector(m, -2, 2), self.vector(m, -2, 2));
        let (c1, c2) = (Rational::from_int(self.int(-1, 1)), Rational::from_int(self.int(-1, 1)));
        let piece = |a: &RVector, c: &Rational, b: &RVector, d: &Rational| {
            let mut graph_eq = a.neg().0;
            graph_eq.push(Rational::one());
            let mut dominates = b.sub(a).0;
            dominates.push(Rational::zero());
            ConvexPolyhedron::new(m + 1, vec![(RVector(dominates), c - d)], vec![(RVector(graph_eq), c.clone())])
        };
        let pieces: Vec<ConvexPolyhedron> = [piece(&a1, &c1, &a2, &c2), piece(&a2, &c2, &a1, &c1)]
            .into_iter()
            .flatten()
            .collect();
        PolyMap::from_graph(PolyhedralSet::from_pieces(m + 1, pieces), m)
    }

    /// A max-affine function (or a minimum of two) bounded below in `x` by
    /// `max_j |x_j|` minus an affine term in `y`, so minima are attained.
    pub fn marginal(&mut self, n: usize, m: usize) -> MarginalInstance {
        let parts = if self.chance(0.3) { 2 } else { 1 };
        let fs: Vec<PLFunction> = (0..parts).map(|_| self.coercive_max_affine(n, m)).collect();
        let f = if parts == 1 { fs[0].clone() } else { PLFunction::min_of(&fs) };
        MarginalInstance {
            f,
            n,
            y: self.vector(m, -1, 1),
        }
    }

    fn coercive_max_affine(&mut self, n: usize, m: usize) -> PLFunction {
        let mut pieces = Vec::new();
        for j in 0..n {
            for s in [1, -1] {
                let mut a = RVector::zeros(n + m);
                a[j] = Rational::from_int(s * self.int(1, 2));
                for k in n..n + m {
                    a[k] = Rational::from_int(self.int(-1, 1));
                }
                pieces.push((a, Rational::from_int(self.int(-1, 1))));
            }
        }
        for _ in 0..self.int(0, 2) {
            let a = self.vector(n + m, -1, 1);
            pieces.push((a, Rational::from_int(self.int(-1, 1))));
        }
        PLFunction::max_affine(n + m, &pieces, None)
    }
}
