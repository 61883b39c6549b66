//! Floating-point sampling oracle for the limit and sequence definitions.
//!
//! Everything here is a heuristic cross-check of the exact kernel: distances
//! to polyhedral sets come from an exact active-set projection in binary64,
//! distances to sets given by residuals come from a local grid and pattern
//! search. Schedules and tolerances are fixed constants and are recorded in
//! every verdict.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cones::{ConeKind, ConeResult};
use crate::error::{PolyError, Result};
use crate::rational::Rational;
use crate::set::PolyhedralSet;

/// Membership slack for normalized constraint rows and residuals.
pub const MEMBER_TOL: f64 = 1e-9;
/// Angular tolerance for clustering rays and for regular-normal ratios.
pub const ANGLE_TOL: f64 = 1e-3;
/// Distance-ratio tolerance of the tangent test.
pub const RATIO_TOL: f64 = 1e-6;
/// Ratio above which a calmness search reports non-calm evidence.
pub const NON_CALM_RATIO: f64 = 1e6;
/// Default radius schedule for normal sampling.
pub const NORMAL_SCHEDULE: [f64; 4] = [1.0 / 256.0, 1.0 / 1024.0, 1.0 / 4096.0, 1.0 / 16384.0];

const TANGENT_LEVELS: std::ops::RangeInclusive<i32> = 4..=20;
const FINAL_WINDOW: usize = 4;
const SEARCH_SCALES: i32 = 100;
const MAX_ACTIVE_SUBSETS: usize = 200_000;
const POOL_SEED: u64 = 0x5eed;
const ORTHOGONAL_REFINEMENTS: usize = 3;
const RECALL_STEP_SHRINK: [f64; 3] = [1.0, 1.0 / 16.0, 1.0 / 256.0];

type Residual = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Debug)]
struct Piece {
    ineqs: Vec<(Vec<f64>, f64)>,
    eqs: Vec<(Vec<f64>, f64)>,
}

#[derive(Clone)]
enum Backing {
    Polyhedral(Vec<Piece>),
    Residual(Residual),
}

/// A set known through a membership test in binary64.
#[derive(Clone)]
pub struct SampledSet {
    dim: usize,
    radius: f64,
    backing: Backing,
}

impl fmt::Debug for SampledSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.backing {
            Backing::Polyhedral(p) => format!("polyhedral({} pieces)", p.len()),
            Backing::Residual(_) => "residual".to_string(),
        };
        f.debug_struct("SampledSet")
            .field("dim", &self.dim)
            .field("radius", &self.radius)
            .field("backing", &kind)
            .finish()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn axpy(a: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    a.iter().zip(d).map(|(x, y)| x + t * y).collect()
}

fn unit(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0).then(|| a.iter().map(|x| x / n).collect())
}

fn normalized_row(a: Vec<f64>, b: f64) -> Option<(Vec<f64>, f64)> {
    let n = norm(&a);
    (n > 1e-14).then(|| (a.iter().map(|x| x / n).collect(), b / n))
}

/// Solves the square system `g λ = r` by elimination with partial pivoting.
fn solve_dense(mut g: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let k = r.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| g[i][col].abs().total_cmp(&g[j][col].abs()))?;
        if g[piv][col].abs() < 1e-12 {
            return None;
        }
        g.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..k {
            let f = g[row][col] / g[col][col];
            if f != 0.0 {
                for c in col..k {
                    g[row][c] -= f * g[col][c];
                }
                r[row] -= f * r[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| g[row][c] * x[c]).sum();
        x[row] = (r[row] - s) / g[row][row];
    }
    Some(x)
}

fn binomial_sum(n: usize, k: usize) -> usize {
    let mut total = 0usize;
    let mut c = 1usize;
    for i in 0..=k.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul(n - i) / (i + 1);
    }
    total
}

impl Piece {
    fn slack(&self, p: &[f64]) -> f64 {
        let scale = 1.0 + norm_inf(p);
        let mut worst = 0.0f64;
        for (a, b) in &self.ineqs {
            worst = worst.max(dot(a, p) - b);
        }
        for (a, b) in &self.eqs {
            worst = worst.max((dot(a, p) - b).abs());
        }
        worst / scale
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.slack(p) <= MEMBER_TOL
    }

    /// Euclidean projection by enumerating active sets in increasing size.
    fn project(&self, q: &[f64]) -> Option<Vec<f64>> {
        if self.contains(q) {
            return Some(q.to_vec());
        }
        let d = q.len();
        let k = self.ineqs.len();
        let max_active = d.saturating_sub(self.eqs.len()).min(k);
        if binomial_sum(k, max_active) > MAX_ACTIVE_SUBSETS {
            return None;
        }
        let mut fallback: Option<(f64, Vec<f64>)> = None;
        let mut subset: Vec<usize> = Vec::new();
        for size in 0..=max_active {
            subset.clear();
            subset.extend(0..size);
            loop {
                if let Some((p, ok)) = self.kkt_point(q, &subset) {
                    if self.contains(&p) {
                        if ok {
                            return Some(p);
                        }
                        let dist = norm(&sub(q, &p));
                        if fallback.as_ref().map_or(true, |(b, _)| dist < *b) {
                            fallback = Some((dist, p));
                        }
                    }
                }
                if !next_combination(&mut subset, k) {
                    break;
                }
            }
        }
        fallback.map(|(_, p)| p)
    }

    /// Minimizer of `‖p − q‖` on the active affine subspace, and whether the
    /// inequality multipliers are nonnegative.
    fn kkt_point(&self, q: &[f64], active: &[usize]) -> Option<(Vec<f64>, bool)> {
        let rows: Vec<&(Vec<f64>, f64)> = self.eqs.iter().chain(active.iter().map(|&i| &self.ineqs[i])).collect();
        if rows.is_empty() {
            return Some((q.to_vec(), true));
        }
        let g: Vec<Vec<f64>> = rows.iter().map(|(a, _)| rows.iter().map(|(c, _)| dot(a, c)).collect()).collect();
        let r: Vec<f64> = rows.iter().map(|(a, b)| dot(a, q) - b).collect();
        let lambda = solve_dense(g, r)?;
        let mut p = q.to_vec();
        for ((a, _), l) in rows.iter().zip(&lambda) {
            for (pi, ai) in p.iter_mut().zip(a) {
                *pi -= l * ai;
            }
        }
        let ok = lambda[self.eqs.len()..].iter().all(|&l| l >= -1e-12);
        Some((p, ok))
    }

    fn fix(&self, coords: &[usize], values: &[f64], free: &[usize]) -> Option<Piece> {
        let split = |(a, b): &(Vec<f64>, f64)| {
            let shift: f64 = coords.iter().zip(values).map(|(&c, v)| a[c] * v).sum();
            (free.iter().map(|&c| a[c]).collect::<Vec<f64>>(), b - shift)
        };
        let mut out = Piece {
            ineqs: Vec::new(),
            eqs: Vec::new(),
        };
        for row in &self.ineqs {
            let (a, b) = split(row);
            match normalized_row(a, b) {
                Some(r) => out.ineqs.push(r),
                None if b < -MEMBER_TOL => return None,
                None => {}
            }
        }
        for row in &self.eqs {
            let (a, b) = split(row);
            match normalized_row(a, b) {
                Some(r) => out.eqs.push(r),
                None if b.abs() > MEMBER_TOL => return None,
                None => {}
            }
        }
        Some(out)
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Points `center + r·g` for `g` on a grid of `per_axis` points per axis in
/// `[−1, 1]ᵈ`, or on the coordinate star when the full grid is too large.
fn grid(center: &[f64], r: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let d = center.len();
    let step = |i: usize| -1.0 + 2.0 * i as f64 / (per_axis - 1) as f64;
    let full = (per_axis as f64).powi(d as i32);
    let mut out = Vec::new();
    if full <= 20_000.0 {
        let mut idx = vec![0usize; d];
        loop {
            out.push(center.iter().zip(&idx).map(|(c, &i)| c + r * step(i)).collect());
            let mut pos = 0;
            while pos < d {
                idx[pos] += 1;
                if idx[pos] < per_axis {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == d {
                break;
            }
        }
    } else {
        out.push(center.to_vec());
        for axis in 0..d {
            for i in 0..per_axis {
                let mut p = center.to_vec();
                p[axis] += r * step(i);
                out.push(p);
            }
        }
    }
    out
}

impl SampledSet {
    pub fn from_polyhedral(set: &PolyhedralSet) -> Self {
        let rows = |rs: &[(crate::linalg::RVector, Rational)]| -> Vec<(Vec<f64>, f64)> {
            rs.iter().filter_map(|(a, b)| normalized_row(a.to_f64(), b.to_f64())).collect()
        };
        let pieces = set
            .pieces()
            .iter()
            .map(|p| Piece {
                ineqs: rows(p.ineqs()),
                eqs: rows(p.eqs()),
            })
            .collect();
        SampledSet {
            dim: set.dim(),
            radius: 1.0,
            backing: Backing::Polyhedral(pieces),
        }
    }

    /// A set `{z : residual(z) ≤ 0}`; `residual` must be nonnegative outside
    /// and behave locally like a distance.
    pub fn from_residual(dim: usize, radius: f64, residual: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        SampledSet {
            dim,
            radius,
            backing: Backing::Residual(Arc::new(residual)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_polyhedral(&self) -> bool {
        matches!(self.backing, Backing::Polyhedral(_))
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match &self.backing {
            Backing::Polyhedral(pieces) => pieces.iter().any(|pc| pc.contains(p)),
            Backing::Residual(f) => f(p) <= MEMBER_TOL * (1.0 + norm_inf(p)),
        }
    }

    /// A nearest point of the set to `q`, if one is found.
    pub fn project(&self, q: &[f64]) -> Option<Vec<f64>> {
        match &self.backing {
            Backing::Polyhedral(pieces) => pieces
                .iter()
                .filter_map(|pc| pc.project(q))
                .map(|p| (norm(&sub(q, &p)), p))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, p)| p),
            Backing::Residual(_) => self.search_project(q),
        }
    }

    pub fn distance(&self, q: &[f64]) -> Option<f64> {
        self.project(q).map(|p| norm(&sub(q, &p)))
    }

    /// Grid search for a nearby member followed by a pattern search.
    fn search_project(&self, q: &[f64]) -> Option<Vec<f64>> {
        if self.contains(q) {
            return Some(q.to_vec());
        }
        let per_axis = if self.dim <= 2 { 9 } else { 5 };
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut scale = 0.0;
        for j in (0..=SEARCH_SCALES).rev() {
            let r = self.radius * 2f64.powi(-j);
            for p in grid(q, r, per_axis) {
                if self.contains(&p) {
                    let d = norm(&sub(q, &p));
                    if best.as_ref().map_or(true, |(b, _)| d < *b) {
                        best = Some((d, p));
                    }
                }
            }
            if best.is_some() {
                scale = r;
                break;
            }
        }
        let (mut bd, mut bp) = best?;
        let moves = grid(&vec![0.0; self.dim], 1.0, 3);
        let mut step = scale / 4.0;
        let floor = 1e-15 * (1.0 + norm_inf(q)) + 1e-300;
        while step > floor {
            let mut improved = false;
            let mut lo = 0.0;
            let mut hi = 1.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.contains(&axpy(&bp, mid, &sub(q, &bp))) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo > 0.0 {
                let p = axpy(&bp, lo, &sub(q, &bp));
                let d = norm(&sub(q, &p));
                if d < bd {
                    bd = d;
                    bp = p;
                    improved = true;
                }
            }
            for m in &moves {
                let p = axpy(&bp, step, m);
                if self.contains(&p) {
                    let d = norm(&sub(q, &p));
                    if d < bd {
                        bd = d;
                        bp = p;
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        Some(bp)
    }

    /// The slice obtained by fixing `coords` to `values`, in the remaining
    /// coordinates (original order).
    pub fn fix(&self, coords: &[usize], values: &[f64]) -> SampledSet {
        let free: Vec<usize> = (0..self.dim).filter(|i| !coords.contains(i)).collect();
        let backing = match &self.backing {
            Backing::Polyhedral(pieces) => {
                Backing::Polyhedral(pieces.iter().filter_map(|p| p.fix(coords, values, &free)).collect())
            }
            Backing::Residual(f) => {
                let f = f.clone();
                let (coords, values, free) = (coords.to_vec(), values.to_vec(), free.clone());
                let dim = self.dim;
                Backing::Residual(Arc::new(move |z: &[f64]| {
                    let mut full = vec![0.0; dim];
                    for (&c, v) in coords.iter().zip(&values) {
                        full[c] = *v;
                    }
                    for (&c, v) in free.iter().zip(z) {
                        full[c] = *v;
                    }
                    f(&full)
                }))
            }
        };
        SampledSet {
            dim: free.len(),
            radius: self.radius,
            backing,
        }
    }

    /// Members near `point` within ∞-radius `r`.
    fn nearby_points(&self, point: &[f64], r: f64) -> Vec<Vec<f64>> {
        let mut out = vec![point.to_vec()];
        match &self.backing {
            Backing::Polyhedral(_) => {
                for q in grid(point, r, 3) {
                    if let Some(p) = self.project(&q) {
                        if norm_inf(&sub(&p, point)) <= 2.0 * r {
                            out.push(p);
                        }
                    }
                }
            }
            Backing::Residual(_) => {
                let per_axis = match self.dim {
                    0..=2 => 41,
                    3 => 15,
                    _ => 7,
                };
                out.extend(grid(point, r, per_axis).into_iter().filter(|p| self.contains(p)));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryKind {
    Tangent,
    RegularNormal,
    Calmness,
}

/// For calmness queries `Member` reads as calm evidence and `NonMember` as
/// non-calm evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Member,
    NonMember,
    Undecided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleVerdict {
    pub query: QueryKind,
    pub decision: Decision,
    /// `(t_k, ratio_k)` in schedule order.
    pub trace: Vec<(f64, f64)>,
}

impl OracleVerdict {
    pub fn max_ratio(&self) -> f64 {
        self.trace.iter().fold(0.0, |m, &(_, r)| m.max(r))
    }
}

fn window_decision(query: QueryKind, trace: Vec<(f64, f64)>, tol: f64) -> OracleVerdict {
    let tail = &trace[trace.len().saturating_sub(FINAL_WINDOW)..];
    let below = tail.iter().all(|&(_, r)| r < tol);
    let floor = tol * 1e-6;
    let monotone = tail.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9) + floor);
    let decision = if below && monotone {
        Decision::Member
    } else if tail.iter().all(|&(_, r)| r >= tol) {
        Decision::NonMember
    } else {
        Decision::Undecided
    };
    OracleVerdict { query, decision, trace }
}

fn check_base(set: &SampledSet, point: &[f64]) -> Result<()> {
    if point.len() != set.dim() {
        return Err(PolyError::DimensionMismatch {
            expected: set.dim(),
            found: point.len(),
        });
    }
    if !set.contains(point) {
        return Err(PolyError::Invalid("base point is not in the sampled set".into()));
    }
    Ok(())
}

/// Sequence test for `dir ∈ T(point)`: for `t = 2⁻ᵏ`, `k = 4..20`, the
/// smallest `dist(point + t·w', set)/t` over a 5-point-per-axis grid of
/// radius `2^{−k/2}` around `dir`.
pub fn tangent_membership(set: &SampledSet, point: &[f64], dir: &[f64]) -> Result<OracleVerdict> {
    check_base(set, point)?;
    if dir.len() != set.dim() {
        return Err(PolyError::DimensionMismatch {
            expected: set.dim(),
            found: dir.len(),
        });
    }
    let mut trace = Vec::new();
    for k in TANGENT_LEVELS {
        let t = 2f64.powi(-k);
        let radius = 2f64.powf(-(k as f64) / 2.0);
        let mut best = f64::INFINITY;
        for w in grid(dir, radius, 5) {
            if let Some(d) = set.distance(&axpy(point, t, &w)) {
                best = best.min(d / t);
            }
            if best == 0.0 {
                break;
            }
        }
        trace.push((t, best));
    }
    Ok(window_decision(QueryKind::Tangent, trace, RATIO_TOL))
}

/// Definition test for `v ∈ N̂(point)`: the largest `⟨v, z − point⟩/‖z − point‖`
/// over sampled members `z` within each radius of the schedule.
pub fn regular_normal_test(set: &SampledSet, point: &[f64], v: &[f64], schedule: &[f64]) -> Result<OracleVerdict> {
    check_base(set, point)?;
    let v = unit(v).ok_or_else(|| PolyError::Invalid("zero candidate normal".into()))?;
    let noise = 1e-12 * (1.0 + norm_inf(point));
    let mut trace = Vec::new();
    for &r in schedule {
        let mut worst = 0.0f64;
        for z in set.nearby_points(point, r) {
            let d = sub(&z, point);
            let n = norm(&d);
            if n > noise {
                worst = worst.max(dot(&v, &d) / n);
            }
        }
        trace.push((r, worst));
    }
    Ok(window_decision(QueryKind::RegularNormal, trace, ANGLE_TOL))
}

/// Candidates that pass [`regular_normal_test`], as unit rays.
pub fn sample_regular_normals(
    set: &SampledSet,
    point: &[f64],
    candidates: &[Vec<f64>],
    schedule: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for c in candidates {
        if regular_normal_test(set, point, c, schedule)?.decision == Decision::Member {
            out.extend(unit(c));
        }
    }
    Ok(cluster(out))
}

/// Keeps one representative per angular cluster, in input order.
pub fn cluster(rays: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let cos = (ANGLE_TOL).cos();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for r in rays {
        if !kept.iter().any(|k| dot(k, &r) >= cos) {
            kept.push(r);
        }
    }
    kept
}

/// Proximal normal `(q − p)/‖q − p‖` with `p` the projection of `q`.
fn proximal_ray(set: &SampledSet, q: &[f64]) -> Option<Vec<f64>> {
    let p = set.project(q)?;
    let d = sub(q, &p);
    (norm(&d) > 1e-14 * (1.0 + norm_inf(q))).then(|| unit(&d)).flatten()
}

fn proximal_rays(set: &SampledSet, bases: &[Vec<f64>], step: f64, dirs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for b in bases {
        for d in dirs {
            if let Some(u) = unit(d) {
                out.extend(proximal_ray(set, &axpy(b, step, &u)));
            }
        }
    }
    out
}

/// Probe directions: `{−1, 0, 1}ᵈ \ {0}` in low dimension (the coordinate
/// star otherwise) and a fixed set of seeded integer directions.
pub fn direction_pool(dim: usize) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = Vec::new();
    if dim <= 4 {
        for g in grid(&vec![0.0; dim], 1.0, 3) {
            if norm_inf(&g) > 0.0 {
                out.push(g.iter().map(|x| x.round() as i64).collect());
            }
        }
    } else {
        for i in 0..dim {
            for s in [-1, 1] {
                let mut v = vec![0; dim];
                v[i] = s;
                out.push(v);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POOL_SEED + dim as u64);
    let available = 7usize.saturating_pow(dim as u32) - 1;
    let target = (3usize.pow(dim.min(4) as u32) + 15).min(available);
    while out.len() < target {
        let v: Vec<i64> = (0..dim).map(|_| rng.gen_range(-3..=3)).collect();
        if v.iter().any(|&x| x != 0) && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn pool_f64(dim: usize) -> Vec<Vec<f64>> {
    direction_pool(dim)
        .into_iter()
        .map(|v| v.into_iter().map(|x| x as f64).collect())
        .collect()
}

fn limiting_bases(set: &SampledSet, point: &[f64], r: f64) -> Vec<Vec<f64>> {
    set.nearby_points(point, r)
}

fn directional_bases(set: &SampledSet, point: &[f64], dir: &[f64], t: f64) -> Vec<Vec<f64>> {
    let Some(b) = set.project(&axpy(point, t, dir)) else {
        return Vec::new();
    };
    let rho = t * t.sqrt();
    let mut bases = set.nearby_points(&b, rho);
    bases.retain(|p| norm_inf(&sub(p, &axpy(point, t, dir))) <= t * (t.sqrt() + 1e-3));
    bases
}

/// Orthonormal basis of the complement of `g`.
fn orthogonal_complement(g: &[f64]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = unit(g).into_iter().collect();
    for i in 0..g.len() {
        let mut e = vec![0.0; g.len()];
        e[i] = 1.0;
        for b in &basis {
            e = axpy(&e, -dot(&e, b), b);
        }
        if norm(&e) > 1e-8 {
            basis.extend(unit(&e));
        }
    }
    basis.split_off(1.min(basis.len()))
}

/// Members near `center` on the hyperplane through it orthogonal to `g`,
/// together with the projections of those hyperplane points. For a cone the
/// face carrying a normal `g` is orthogonal to `g`, so these are the bases
/// where a targeted recall probe along `g` can succeed.
fn orthogonal_bases(set: &SampledSet, center: &[f64], g: &[f64], rho: f64, refine: usize) -> Vec<Vec<f64>> {
    let basis = orthogonal_complement(g);
    let per_axis = match basis.len() {
        0..=2 => 4 << refine,
        3 => 4 << refine.min(1),
        _ => 2,
    } + 1;
    let mut out = Vec::new();
    for coef in grid(&vec![0.0; basis.len()], 1.0, per_axis) {
        let mut q = center.to_vec();
        for (c, e) in coef.iter().zip(&basis) {
            q = axpy(&q, rho * c, e);
        }
        if set.contains(&q) {
            out.push(q.clone());
        }
        if let Some(p) = set.project(&q) {
            if norm_inf(&sub(&p, center)) <= 2.0 * rho {
                out.push(p);
            }
        }
    }
    out
}

/// Proximal normals at members near `point`, one probe step per radius.
pub fn sample_limiting_normals(set: &SampledSet, point: &[f64], schedule: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_base(set, point)?;
    let dirs = pool_f64(set.dim());
    let mut rays = Vec::new();
    for &r in schedule {
        rays.extend(proximal_rays(set, &limiting_bases(set, point, r), r / 16.0, &dirs));
    }
    Ok(cluster(rays))
}

/// Proximal normals at members near `point + t·dir` for `t` in the schedule.
pub fn sample_directional_normals(
    set: &SampledSet,
    point: &[f64],
    dir: &[f64],
    schedule: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_base(set, point)?;
    let dirs = pool_f64(set.dim());
    let mut rays = Vec::new();
    for &t in schedule {
        let bases = directional_bases(set, point, dir, t);
        rays.extend(proximal_rays(set, &bases, t * t / 16.0, &dirs));
    }
    Ok(cluster(rays))
}

/// Brute-force search for violations of calmness of the map whose graph is
/// `graph` (argument in the first `m` coordinates) at `(y, x)`: the largest
/// `dist(x', M(y))/dist(y, M⁻¹(x'))` over `x'` on the boundary of shrinking
/// boxes `‖x' − x‖∞ = 2⁻ᵏ`, `k = 1..=budget`.
pub fn calmness_search(graph: &SampledSet, m: usize, y: &[f64], x: &[f64], budget: usize) -> Result<OracleVerdict> {
    if y.len() != m || m + x.len() != graph.dim() {
        return Err(PolyError::DimensionMismatch {
            expected: graph.dim(),
            found: y.len() + x.len(),
        });
    }
    let base: Vec<f64> = y.iter().chain(x).copied().collect();
    check_base(graph, &base)?;
    let n = x.len();
    let front: Vec<usize> = (0..m).collect();
    let back: Vec<usize> = (m..m + n).collect();
    let image = graph.fix(&front, y);
    let mut trace = Vec::new();
    let mut nan_free = true;
    for k in 1..=budget as i32 {
        let rho = 2f64.powi(-k);
        let mut worst = 0.0f64;
        for g in grid(&vec![0.0; n], 1.0, 3) {
            if norm_inf(&g) < 1.0 {
                continue;
            }
            let xk = axpy(x, rho, &g);
            let Some(num) = image.distance(&xk) else {
                continue;
            };
            if num <= MEMBER_TOL * rho {
                continue;
            }
            let fiber = graph.fix(&back, &xk);
            let Some(yk) = fiber.project(y) else {
                continue;
            };
            let den = norm(&sub(&yk, y));
            if norm_inf(&sub(&yk, y)) > graph.radius() {
                continue;
            }
            if den > 0.0 {
                worst = worst.max(num / den);
            } else {
                nan_free = false;
            }
        }
        trace.push((rho, worst));
    }
    let max = trace.iter().fold(0.0f64, |a, &(_, r)| a.max(r));
    let decision = if max > NON_CALM_RATIO {
        Decision::NonMember
    } else if nan_free && trace.len() > FINAL_WINDOW {
        let split = trace.len() - FINAL_WINDOW;
        let early = trace[..split].iter().fold(0.0f64, |a, &(_, r)| a.max(r));
        let late = trace[split..].iter().fold(0.0f64, |a, &(_, r)| a.max(r));
        if late <= 2.0 * early + 1e-12 {
            Decision::Member
        } else {
            Decision::Undecided
        }
    } else {
        Decision::Undecided
    };
    Ok(OracleVerdict {
        query: QueryKind::Calmness,
        decision,
        trace,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MismatchReason {
    /// A sampled ray is farther than the tolerance from the exact cone.
    OutsideExact,
    /// A generator of a full-dimensional exact piece was not reproduced.
    NotRecalled,
    /// A tangent verdict contradicts exact membership.
    VerdictDisagrees,
    /// The oracle could not decide a tangent query.
    Undecided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub reason: MismatchReason,
    pub direction: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub kind: ConeKind,
    pub tol: f64,
    pub sampled: usize,
    pub generators_checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Rounds to the dyadic grid `2⁻²⁰ℤ`.
pub fn round_rational(v: &[f64]) -> Vec<Rational> {
    const DEN: i64 = 1 << 20;
    v.iter()
        .map(|x| Rational::new((x * DEN as f64).round() as i64, DEN))
        .collect()
}

fn within(exact: &PolyhedralSet, ray: &[f64], tol: &Rational) -> bool {
    let r = round_rational(ray);
    exact.contains(&r) || exact.distance_inf(&r).map_or(false, |d| &d <= tol)
}

/// Sampled rays that lie farther than `tol` (∞-norm, after rounding) from
/// the exact cone.
pub fn compare_rays(exact: &PolyhedralSet, rays: &[Vec<f64>], tol: f64) -> Vec<Mismatch> {
    let tol_r = Rational::from_f64(tol).unwrap_or_else(Rational::zero);
    rays.iter()
        .filter(|r| !within(exact, r, &tol_r))
        .map(|r| Mismatch {
            reason: MismatchReason::OutsideExact,
            direction: r.clone(),
        })
        .collect()
}

/// Generator directions of every piece, as unit rays.
fn piece_generators(exact: &PolyhedralSet) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for piece in exact.pieces() {
        let v = piece.vrep();
        for g in v.rays.iter().chain(&v.lines) {
            out.extend(unit(&g.to_f64()));
        }
        for g in &v.lines {
            out.extend(unit(&g.neg().to_f64()));
        }
    }
    out
}

fn recalled(g: &[f64], rays: &[Vec<f64>]) -> bool {
    let cos = ANGLE_TOL.cos();
    rays.iter().any(|r| dot(r, g) >= cos)
}

/// Cross-checks an exact cone against the oracle on `set`. Tangent cones are
/// compared verdict by verdict on the probe pool and on the exact
/// generators; normal cones through sampled rays (soundness) and through
/// targeted probes along the generators of every piece (recall).
pub fn compare_with_exact(exact: &ConeResult, set: &PolyhedralSet, tol: f64) -> Result<CompareReport> {
    let sampled_set = SampledSet::from_polyhedral(set);
    let point = exact.base_point.to_f64();
    let dim = set.dim();
    let mut report = CompareReport {
        kind: exact.kind,
        tol,
        sampled: 0,
        generators_checked: 0,
        mismatches: Vec::new(),
    };
    match exact.kind {
        ConeKind::Tangent => {
            let mut dirs: Vec<Vec<Rational>> = direction_pool(dim)
                .into_iter()
                .map(|v| v.into_iter().map(Rational::from_int).collect())
                .collect();
            for piece in exact.cone.pieces() {
                let v = piece.vrep();
                for g in v.rays.iter().chain(&v.lines) {
                    dirs.push(g.0.clone());
                    report.generators_checked += 1;
                }
            }
            for d in dirs {
                let df: Vec<f64> = d.iter().map(Rational::to_f64).collect();
                let verdict = tangent_membership(&sampled_set, &point, &df)?;
                report.sampled += 1;
                let inside = exact.cone.contains(&d);
                let reason = match verdict.decision {
                    Decision::Member if !inside => Some(MismatchReason::VerdictDisagrees),
                    Decision::NonMember if inside => Some(MismatchReason::VerdictDisagrees),
                    Decision::Undecided => Some(MismatchReason::Undecided),
                    _ => None,
                };
                if let Some(reason) = reason {
                    report.mismatches.push(Mismatch { reason, direction: df });
                }
            }
        }
        ConeKind::RegularNormal => {
            let rays = sample_regular_normals(&sampled_set, &point, &pool_f64(dim), &NORMAL_SCHEDULE)?;
            report.sampled = rays.len();
            report.mismatches.extend(compare_rays(&exact.cone, &rays, tol));
            for g in piece_generators(&exact.cone) {
                report.generators_checked += 1;
                let v = regular_normal_test(&sampled_set, &point, &g, &NORMAL_SCHEDULE)?;
                if v.decision != Decision::Member {
                    report.mismatches.push(Mismatch {
                        reason: MismatchReason::NotRecalled,
                        direction: g,
                    });
                }
            }
        }
        ConeKind::LimitingNormal | ConeKind::DirectionalLimitingNormal => {
            let dir = exact.direction.as_ref().map(|d| d.to_f64());
            let mut bases = Vec::new();
            let mut rays = Vec::new();
            let dirs = pool_f64(dim);
            for &r in &NORMAL_SCHEDULE {
                let (b, step) = match &dir {
                    None => (limiting_bases(&sampled_set, &point, r), r / 16.0),
                    Some(w) => (directional_bases(&sampled_set, &point, w, r), r * r / 16.0),
                };
                rays.extend(proximal_rays(&sampled_set, &b, step, &dirs));
                bases.push((b, step));
            }
            let rays = cluster(rays);
            report.sampled = rays.len();
            if exact.cone.is_empty() {
                if let Some(w) = &dir {
                    let v = tangent_membership(&sampled_set, &point, w)?;
                    if v.decision != Decision::NonMember {
                        report.mismatches.push(Mismatch {
                            reason: MismatchReason::VerdictDisagrees,
                            direction: w.clone(),
                        });
                    }
                }
                return Ok(report);
            }
            report.mismatches.extend(compare_rays(&exact.cone, &rays, tol));
            for g in piece_generators(&exact.cone) {
                report.generators_checked += 1;
                let probe = |b: &[Vec<f64>], step: f64| {
                    RECALL_STEP_SHRINK.iter().any(|f| {
                        recalled(&g, &proximal_rays(&sampled_set, b, step * f, std::slice::from_ref(&g)))
                    })
                };
                let hit = bases.iter().any(|(b, step)| probe(b, *step))
                    || (0..ORTHOGONAL_REFINEMENTS).any(|refine| {
                        NORMAL_SCHEDULE.iter().any(|&r| match &dir {
                            None => probe(&orthogonal_bases(&sampled_set, &point, &g, r, refine), r / 16.0),
                            Some(w) => {
                                let target = axpy(&point, r, w);
                                sampled_set.project(&target).is_some_and(|b| {
                                    let mut near = orthogonal_bases(&sampled_set, &b, &g, r * r.sqrt(), refine);
                                    near.retain(|p| norm_inf(&sub(p, &target)) <= r * (r.sqrt() + 1e-3));
                                    probe(&near, r * r / 16.0)
                                })
                            }
                        })
                    });
                if !hit {
                    report.mismatches.push(Mismatch {
                        reason: MismatchReason::NotRecalled,
                        direction: g,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Non-polyhedral test sets, given by residuals.
pub mod examples {
    use super::SampledSet;

    /// Graph of `M₂(y) = [−y², y²]` in coordinates `(y, x)`.
    pub fn quadratic_band() -> SampledSet {
        SampledSet::from_residual(2, 1.0, |z| (z[1].abs() - z[0] * z[0]).max(0.0))
    }

    /// Graph of `M(y) = [−|y|^{1/2}, ∞)` in coordinates `(y, x)`.
    pub fn root_halfline() -> SampledSet {
        SampledSet::from_residual(2, 1.0, |z| (-z[0].abs().sqrt() - z[1]).max(0.0))
    }

    /// Graph of `m(y) = 1/y` in coordinates `(y, x)`.
    pub fn reciprocal() -> SampledSet {
        SampledSet::from_residual(2, 1.0, |z| (z[0] * z[1] - 1.0).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{cone_of, tangent_cone};
    use crate::linalg::RVector;
    use crate::polyhedron::ConvexPolyhedron;

    fn cone(dim: usize, ineqs: &[&[i64]], eqs: &[&[i64]]) -> ConvexPolyhedron {
        ConvexPolyhedron::cone(
            dim,
            ineqs.iter().map(|v| RVector::from_ints(v)).collect(),
            eqs.iter().map(|v| RVector::from_ints(v)).collect(),
        )
    }

    fn bowtie() -> PolyhedralSet {
        PolyhedralSet::from_pieces(2, vec![cone(2, &[&[-1, 1], &[-1, -1]], &[]), cone(2, &[&[1, 1], &[1, -1]], &[])])
    }

    #[test]
    fn low_dimensional_pools_terminate() {
        assert!(direction_pool(0).is_empty());
        assert_eq!(direction_pool(1).len(), 6);
        assert_eq!(direction_pool(2).len(), 24);
        let interval = PolyhedralSet::from_pieces(
            1,
            vec![ConvexPolyhedron::new(1, vec![(RVector::from_ints(&[-1]), Rational::from_int(2)), (RVector::from_ints(&[1]), Rational::zero())], vec![]).unwrap()],
        );
        let p = RVector::from_ints(&[0]);
        for kind in ConeKind::ALL {
            let dir = RVector::from_ints(&[-1]);
            let exact = cone_of(&interval, &p, kind, (kind == ConeKind::DirectionalLimitingNormal).then_some(&dir.0[..]));
            assert!(compare_with_exact(&exact, &interval, 1e-6).unwrap().passed(), "{kind}");
        }
    }

    fn axes() -> PolyhedralSet {
        PolyhedralSet::from_pieces(2, vec![cone(2, &[], &[&[0, 1]]), cone(2, &[], &[&[1, 0]])])
    }

    fn orthant() -> PolyhedralSet {
        PolyhedralSet::from_pieces(2, vec![cone(2, &[&[-1, 0], &[0, -1]], &[])])
    }

    fn has(rays: &[Vec<f64>], target: &[f64]) -> bool {
        recalled(&unit(target).unwrap(), rays)
    }

    #[test]
    fn projection_onto_a_corner() {
        let s = SampledSet::from_polyhedral(&orthant());
        let p = s.project(&[-1.0, 2.0]).unwrap();
        assert!(norm(&sub(&p, &[0.0, 2.0])) < 1e-12);
        let p = s.project(&[-1.0, -3.0]).unwrap();
        assert!(norm(&p) < 1e-12);
        assert_eq!(s.distance(&[1.0, 1.0]), Some(0.0));
    }

    #[test]
    fn tangent_examples() {
        let s = SampledSet::from_polyhedral(&orthant());
        let inside = tangent_membership(&s, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(inside.decision, Decision::Member);
        let outside = tangent_membership(&s, &[0.0, 0.0], &[-1.0, 1.0]).unwrap();
        assert_eq!(outside.decision, Decision::NonMember);
        assert!(outside.trace.iter().all(|&(_, r)| r > 0.1));
        let band = examples::quadratic_band();
        assert_eq!(tangent_membership(&band, &[0.0, 0.0], &[1.0, 0.0]).unwrap().decision, Decision::Member);
        assert_eq!(tangent_membership(&band, &[0.0, 0.0], &[0.0, 1.0]).unwrap().decision, Decision::NonMember);
        assert!(tangent_membership(&s, &[-1.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn limiting_normal_examples() {
        let corner = sample_limiting_normals(&SampledSet::from_polyhedral(&orthant()), &[0.0, 0.0], &NORMAL_SCHEDULE).unwrap();
        assert!(has(&corner, &[-1.0, 0.0]) && has(&corner, &[0.0, -1.0]));
        assert!(corner.iter().all(|r| r[0] <= 1e-12 && r[1] <= 1e-12));

        let bow = sample_limiting_normals(&SampledSet::from_polyhedral(&bowtie()), &[0.0, 0.0], &NORMAL_SCHEDULE).unwrap();
        for t in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            assert!(has(&bow, &t), "missing {t:?}");
        }
        assert_eq!(bow.len(), 4);

        let ax = sample_limiting_normals(&SampledSet::from_polyhedral(&axes()), &[0.0, 0.0], &NORMAL_SCHEDULE).unwrap();
        for t in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            assert!(has(&ax, &t));
        }
        assert!(compare_rays(&axes(), &ax, 1e-6).is_empty());
    }

    #[test]
    fn quadratic_band_regular_normals_have_both_signs() {
        let band = examples::quadratic_band();
        let pool = pool_f64(2);
        let rays = sample_regular_normals(&band, &[0.0, 0.0], &pool, &NORMAL_SCHEDULE).unwrap();
        assert!(rays.iter().any(|r| r[1] > ANGLE_TOL));
        assert!(rays.iter().any(|r| r[1] < -ANGLE_TOL));
        assert!(rays.iter().all(|r| r[0].abs() < ANGLE_TOL));
    }

    #[test]
    fn calmness_examples() {
        let id = PolyhedralSet::from_pieces(2, vec![cone(2, &[], &[&[1, -1]])]);
        let v = calmness_search(&SampledSet::from_polyhedral(&id), 1, &[0.0], &[0.0], 30).unwrap();
        assert_eq!(v.decision, Decision::Member);
        assert!((v.max_ratio() - 1.0).abs() < 1e-9);

        let bow = PolyhedralSet::from_pieces(2, vec![cone(2, &[&[-1, 1], &[-1, -1]], &[]), cone(2, &[&[1, 1], &[1, -1]], &[])]);
        let v = calmness_search(&SampledSet::from_polyhedral(&bow), 1, &[0.0], &[0.0], 30).unwrap();
        assert_eq!(v.decision, Decision::Member);

        let v = calmness_search(&examples::root_halfline(), 1, &[0.0], &[0.0], 30).unwrap();
        assert_eq!(v.decision, Decision::NonMember);
        assert!(v.max_ratio() > NON_CALM_RATIO);
    }

    #[test]
    fn comparisons_pass_on_hand_instances() {
        let z = [Rational::zero(), Rational::zero()];
        for set in [orthant(), bowtie(), axes()] {
            for kind in [ConeKind::Tangent, ConeKind::RegularNormal, ConeKind::LimitingNormal] {
                let exact = cone_of(&set, &z, kind, None);
                let rep = compare_with_exact(&exact, &set, 1e-6).unwrap();
                assert!(rep.passed(), "{kind:?} {:?}", rep.mismatches);
            }
            let dir = [Rational::one(), Rational::zero()];
            let exact = cone_of(&set, &z, ConeKind::DirectionalLimitingNormal, Some(&dir));
            let rep = compare_with_exact(&exact, &set, 1e-6).unwrap();
            assert!(rep.passed(), "directional {:?}", rep.mismatches);
        }
    }

    #[test]
    fn empty_sample_against_origin_and_corrupted_cone() {
        assert!(compare_rays(&PolyhedralSet::origin(2), &[], 1e-6).is_empty());
        let rays = sample_limiting_normals(&SampledSet::from_polyhedral(&orthant()), &[0.0, 0.0], &NORMAL_SCHEDULE).unwrap();
        let corrupted = PolyhedralSet::from_pieces(2, vec![cone(2, &[&[1, 0]], &[&[0, 1]])]);
        let bad = compare_rays(&corrupted, &rays, 1e-6);
        assert!(!bad.is_empty());
        assert!(bad.iter().all(|m| m.reason == MismatchReason::OutsideExact && m.direction[1] < -1e-3));
        let t = tangent_cone(&orthant(), &[Rational::zero(), Rational::zero()]);
        let wrong = ConeResult {
            cone: corrupted,
            ..t
        };
        assert!(!compare_with_exact(&wrong, &orthant(), 1e-6).unwrap().passed());
    }

    #[test]
    fn lineality_of_a_ray_normal_cone_is_recalled() {
        let ray = PolyhedralSet::from_pieces(
            2,
            vec![ConvexPolyhedron::new(
                2,
                vec![(RVector::from_ints(&[0, 1]), Rational::from_int(-1))],
                vec![(RVector::from_ints(&[1, 2]), Rational::from_int(-2))],
            )
            .unwrap()],
        );
        let p = RVector::from_ints(&[0, -1]);
        for kind in [ConeKind::RegularNormal, ConeKind::LimitingNormal] {
            let rep = compare_with_exact(&cone_of(&ray, &p, kind, None), &ray, 1e-6).unwrap();
            assert!(rep.passed(), "{kind}: {:?}", rep.mismatches);
        }
    }

    #[test]
    fn spurious_normal_ray_is_not_recalled() {
        let origin = [Rational::zero(), Rational::zero()];
        let exact = cone_of(&orthant(), &origin, ConeKind::LimitingNormal, None);
        let mut pieces = exact.cone.pieces().to_vec();
        pieces.push(cone(2, &[&[0, -1]], &[&[1, -1]]));
        let padded = ConeResult {
            cone: PolyhedralSet::from_pieces(2, pieces),
            ..exact
        };
        let rep = compare_with_exact(&padded, &orthant(), 1e-6).unwrap();
        assert!(!rep.passed());
        assert!(rep
            .mismatches
            .iter()
            .any(|m| m.reason == MismatchReason::NotRecalled && m.direction[0] > 0.5 && m.direction[1] > 0.5));
    }
}
