//! Double description conversion between halfspace and generator forms of cones.

use crate::linalg::{dot, reduce_modulo, rref, RVector};
use crate::rational::Rational;

/// Generators of a polyhedral cone: `cone(rays) + span(lines)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ConeGenerators {
    pub dim: usize,
    pub rays: Vec<RVector>,
    pub lines: Vec<RVector>,
}

/// Halfspace form `{x : a·x ≤ 0 (ineqs), e·x = 0 (eqs)}` of a cone.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ConeHalfspaces {
    pub dim: usize,
    pub ineqs: Vec<RVector>,
    pub eqs: Vec<RVector>,
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn subset_of(&self, o: &Bits) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a & !b == 0)
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

struct Ray {
    v: Vec<Rational>,
    zeros: Bits,
}

fn normalize(v: &[Rational]) -> Vec<Rational> {
    match v.iter().find(|x| !x.is_zero()) {
        Some(l) => {
            let s = l.abs().recip();
            v.iter().map(|x| x * &s).collect()
        }
        None => v.to_vec(),
    }
}

/// Minimal generators of `{x : ineqs·x ≤ 0, eqs·x = 0}`.
pub fn generators(h: &ConeHalfspaces) -> ConeGenerators {
    let d = h.dim;
    let total = h.eqs.len() + h.ineqs.len();
    let mut lines: Vec<Vec<Rational>> = (0..d).map(|i| RVector::unit(d, i).0).collect();
    let mut rays: Vec<Ray> = Vec::new();
    let constraints = h
        .eqs
        .iter()
        .map(|a| (a, true))
        .chain(h.ineqs.iter().map(|a| (a, false)));
    for (k, (a, is_eq)) in constraints.enumerate() {
        let a = &a.0;
        if let Some(li) = lines.iter().position(|l| !dot(a, l).is_zero()) {
            let l0 = lines.swap_remove(li);
            let s0 = dot(a, &l0);
            for l in lines.iter_mut() {
                let s = dot(a, l);
                if !s.is_zero() {
                    let f = &s / &s0;
                    for (x, y) in l.iter_mut().zip(&l0) {
                        *x = &*x - &(&f * y);
                    }
                }
            }
            for r in rays.iter_mut() {
                let s = dot(a, &r.v);
                if !s.is_zero() {
                    let f = &s / &s0;
                    for (x, y) in r.v.iter_mut().zip(&l0) {
                        *x = &*x - &(&f * y);
                    }
                    r.v = normalize(&r.v);
                }
                r.zeros.set(k);
            }
            if !is_eq {
                let v: Vec<Rational> = if s0.is_positive() {
                    l0.iter().map(|x| -x).collect()
                } else {
                    l0
                };
                let mut zeros = Bits::new(total);
                for j in 0..k {
                    zeros.set(j);
                }
                rays.push(Ray {
                    v: normalize(&v),
                    zeros,
                });
            }
            continue;
        }
        let signs: Vec<Rational> = rays.iter().map(|r| dot(a, &r.v)).collect();
        let pointed = d - lines.len();
        let mut next: Vec<Ray> = Vec::new();
        for (i, p) in rays.iter().enumerate() {
            if !signs[i].is_positive() {
                continue;
            }
            for (j, n) in rays.iter().enumerate() {
                if !signs[j].is_negative() {
                    continue;
                }
                let common = p.zeros.and(&n.zeros);
                if common.count() + 2 < pointed {
                    continue;
                }
                let blocked = rays
                    .iter()
                    .enumerate()
                    .any(|(m, r)| m != i && m != j && common.subset_of(&r.zeros));
                if blocked {
                    continue;
                }
                let sp = &signs[i];
                let sn = -&signs[j];
                let v: Vec<Rational> = p
                    .v
                    .iter()
                    .zip(&n.v)
                    .map(|(x, y)| &(sp * y) + &(&sn * x))
                    .collect();
                let mut zeros = common;
                zeros.set(k);
                next.push(Ray {
                    v: normalize(&v),
                    zeros,
                });
            }
        }
        for (i, mut r) in rays.into_iter().enumerate() {
            if signs[i].is_zero() {
                r.zeros.set(k);
                next.push(r);
            } else if signs[i].is_negative() && !is_eq {
                next.push(r);
            }
        }
        rays = next;
    }
    finish_generators(d, lines, rays.into_iter().map(|r| r.v).collect())
}

fn finish_generators(d: usize, lines: Vec<Vec<Rational>>, rays: Vec<Vec<Rational>>) -> ConeGenerators {
    let (red, pivots) = rref(&lines, d);
    let mut rays: Vec<RVector> = rays
        .iter()
        .map(|r| RVector(normalize(&reduce_modulo(r, &red, &pivots))))
        .filter(|r| !r.is_zero())
        .collect();
    rays.sort();
    rays.dedup();
    ConeGenerators {
        dim: d,
        rays,
        lines: red.into_iter().map(RVector).collect(),
    }
}

/// Canonical irredundant halfspace form of `cone(rays) + span(lines)`.
pub fn halfspaces(g: &ConeGenerators) -> ConeHalfspaces {
    let polar = generators(&ConeHalfspaces {
        dim: g.dim,
        ineqs: g.rays.clone(),
        eqs: g.lines.clone(),
    });
    ConeHalfspaces {
        dim: g.dim,
        ineqs: polar.rays,
        eqs: polar.lines,
    }
}

/// Canonical form of a cone given by halfspaces.
pub fn canonical_cone(h: &ConeHalfspaces) -> (ConeHalfspaces, ConeGenerators) {
    let g = generators(h);
    (halfspaces(&g), g)
}

/// Generators of the polar cone `{y : y·x ≤ 0 for all x}` of `cone(rays) + span(lines)`.
pub fn polar_generators(g: &ConeGenerators) -> ConeGenerators {
    generators(&ConeHalfspaces {
        dim: g.dim,
        ineqs: g.rays.clone(),
        eqs: g.lines.clone(),
    })
}
