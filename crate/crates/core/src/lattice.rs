//! Lattice polytopes, their dilations, and the intersection-count kernels built on them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harmonic::{Idx, Kernel, TrigPoly};
use crate::linalg::C64;

/// Half-space `normal · x ≤ offset` with a primitive integer normal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
}

impl Facet {
    pub fn contains(&self, x: &[i64]) -> bool {
        dot(&self.normal, x) <= self.offset
    }
}

/// Convex hull of finitely many points of `Z^d`, `d ≤ 3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeSpec", into = "PolytopeSpec")]
pub struct LatticePolytope {
    dim: usize,
    vertices: Vec<Idx>,
    facets: Vec<Facet>,
    full_dim: bool,
}

#[derive(Serialize, Deserialize)]
struct PolytopeSpec {
    vertices: Vec<Idx>,
}

impl TryFrom<PolytopeSpec> for LatticePolytope {
    type Error = Error;
    fn try_from(s: PolytopeSpec) -> Result<Self> {
        LatticePolytope::new(s.vertices)
    }
}

impl From<LatticePolytope> for PolytopeSpec {
    fn from(p: LatticePolytope) -> Self {
        PolytopeSpec { vertices: p.vertices }
    }
}

impl LatticePolytope {
    /// Hull of `points`; the stored vertex list drops duplicates and, for full-dimensional
    /// hulls, every point that is not a vertex.
    pub fn new(points: Vec<Idx>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| invalid("polytope needs at least one point"))?;
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("polytope dimension {dim} outside 1..=3")));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch("polytope points of mixed dimension".into()));
        }
        let pts: Vec<Idx> = points.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let full_dim = affine_rank(&pts) == dim;
        let facets = if full_dim { facets_of(&pts, dim) } else { Vec::new() };
        let vertices = if full_dim {
            pts.iter()
                .filter(|p| {
                    let tight: Vec<Vec<i64>> =
                        facets.iter().filter(|f| dot(&f.normal, p) == f.offset).map(|f| f.normal.clone()).collect();
                    rank(&tight) == dim
                })
                .cloned()
                .collect()
        } else {
            pts
        };
        Ok(Self { dim, vertices, facets, full_dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Idx] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// `conv{-1, 1}^d`.
    pub fn cube(dim: usize) -> Self {
        let pts = crate::harmonic::box_points(dim, 1)
            .into_iter()
            .filter(|p| p.iter().all(|x| x.abs() == 1))
            .collect();
        Self::new(pts).expect("cube is a valid polytope")
    }

    /// `conv{±e_μ}`.
    pub fn cross(dim: usize) -> Self {
        let mut pts = Vec::new();
        for mu in 0..dim {
            for s in [-1, 1] {
                let mut p = vec![0; dim];
                p[mu] = s;
                pts.push(p);
            }
        }
        Self::new(pts).expect("cross-polytope is a valid polytope")
    }

    pub fn contains_dilated(&self, x: &[i64], n: i64) -> bool {
        self.facets.iter().all(|f| dot(&f.normal, x) <= n * f.offset)
    }
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn primitive(v: Vec<i64>) -> Vec<i64> {
    let g = v.iter().fold(0, |g, &x| gcd(g, x));
    if g <= 1 {
        v
    } else {
        v.into_iter().map(|x| x / g).collect()
    }
}

/// Rank of a set of integer vectors, by fraction-free Gaussian elimination.
fn rank(vs: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = vs.iter().map(|v| v.iter().map(|&x| x as i128).collect()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, piv);
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let (a, b) = (m[r][c], m[i][c]);
                let pivot = m[r].clone();
                for (x, &y) in m[i].iter_mut().zip(&pivot) {
                    *x = *x * a - y * b;
                }
                let g = m[i].iter().fold(0i128, |g, &x| {
                    let (mut a, mut b) = (g.abs(), x.abs());
                    while b != 0 {
                        (a, b) = (b, a % b);
                    }
                    a
                });
                if g > 1 {
                    m[i].iter_mut().for_each(|x| *x /= g);
                }
            }
        }
        r += 1;
    }
    r
}

fn affine_rank(pts: &[Idx]) -> usize {
    let Some(p0) = pts.first() else { return 0 };
    let diffs: Vec<Vec<i64>> = pts[1..].iter().map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect()).collect();
    rank(&diffs)
}

/// Integer normal to the affine hull of `d` points in `Z^d` (zero if they are dependent).
fn normal_through(ps: &[&Idx], dim: usize) -> Vec<i64> {
    let diff = |a: &Idx, b: &Idx| -> Vec<i64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    match dim {
        1 => vec![1],
        2 => {
            let u = diff(ps[1], ps[0]);
            vec![-u[1], u[0]]
        }
        _ => {
            let u = diff(ps[1], ps[0]);
            let v = diff(ps[2], ps[0]);
            vec![u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
        }
    }
}

/// Facets by brute force over `d`-subsets of the points.
fn facets_of(pts: &[Idx], dim: usize) -> Vec<Facet> {
    let mut out = BTreeSet::new();
    let n = pts.len();
    let mut consider = |subset: &[&Idx]| {
        let normal = primitive(normal_through(subset, dim));
        if normal.iter().all(|&x| x == 0) {
            return;
        }
        let c = dot(&normal, subset[0]);
        let vals: Vec<i64> = pts.iter().map(|p| dot(&normal, p)).collect();
        if vals.iter().all(|&v| v <= c) {
            out.insert(Facet { normal: normal.clone(), offset: c });
        }
        if vals.iter().all(|&v| v >= c) {
            out.insert(Facet { normal: normal.iter().map(|x| -x).collect(), offset: -c });
        }
    };
    match dim {
        1 => (0..n).for_each(|i| consider(&[&pts[i]])),
        2 => {
            for i in 0..n {
                for j in i + 1..n {
                    consider(&[&pts[i], &pts[j]]);
                }
            }
        }
        _ => {
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        consider(&[&pts[i], &pts[j], &pts[k]]);
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Whether the origin lies strictly inside the polytope.
pub fn summability_check(p: &LatticePolytope) -> Result<bool> {
    if !p.full_dim {
        return Err(invalid(format!("hull of {:?} is not {}-dimensional", p.vertices, p.dim)));
    }
    Ok(p.facets.iter().all(|f| f.offset > 0))
}

/// Lattice points of a dilated polytope or a Euclidean ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticePointSet {
    pub dim: usize,
    pub level: usize,
    pub points: Vec<Idx>,
}

impl LatticePointSet {
    /// `{n ∈ Z^d : ‖n‖₂ ≤ radius}`.
    pub fn ball(dim: usize, radius: usize) -> Self {
        let r2 = (radius * radius) as i64;
        let points = crate::harmonic::box_points(dim, radius as i64)
            .into_iter()
            .filter(|p| p.iter().map(|x| x * x).sum::<i64>() <= r2)
            .collect();
        Self { dim, level: radius, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `Z^d ∩ N·P`, scanned over the bounding box with exact integer facet tests.
pub fn lattice_points(p: &LatticePolytope, n: usize) -> Result<LatticePointSet> {
    if n == 0 {
        return Err(invalid("dilation level must be positive"));
    }
    if !summability_check(p)? {
        return Err(Error::NotSummable(format!("origin is not interior to the hull of {:?}", p.vertices)));
    }
    let ni = n as i64;
    let lo: Vec<i64> = (0..p.dim).map(|mu| p.vertices.iter().map(|v| v[mu]).min().unwrap_or(0) * ni).collect();
    let hi: Vec<i64> = (0..p.dim).map(|mu| p.vertices.iter().map(|v| v[mu]).max().unwrap_or(0) * ni).collect();
    let mut points = vec![vec![]];
    for mu in 0..p.dim {
        points = points
            .into_iter()
            .flat_map(|q: Idx| {
                (lo[mu]..=hi[mu]).map(move |x| {
                    let mut r = q.clone();
                    r.push(x);
                    r
                })
            })
            .collect();
    }
    points.retain(|x| p.contains_dilated(x, ni));
    Ok(LatticePointSet { dim: p.dim, level: n, points })
}

/// `m ↦ |S ∩ (S + m)|` over the difference set `S − S`.
pub fn intersection_counts(s: &LatticePointSet) -> BTreeMap<Idx, usize> {
    let mut counts = BTreeMap::new();
    for a in &s.points {
        for b in &s.points {
            let m: Idx = a.iter().zip(b).map(|(x, y)| x - y).collect();
            *counts.entry(m).or_insert(0) += 1;
        }
    }
    counts
}

/// Kernel with coefficients `|S ∩ (S + m)| / |S|`.
pub fn intersection_kernel(s: &LatticePointSet) -> Result<Kernel> {
    if s.is_empty() {
        return Err(invalid("empty lattice point set"));
    }
    let total = s.len() as f64;
    let poly = TrigPoly::from_coeffs(
        s.dim,
        intersection_counts(s).into_iter().map(|(m, c)| (m, C64::new(c as f64 / total, 0.0))),
    );
    Kernel::new(poly)
}

/// Polyhedron Fejér kernel of `P` at dilation `N`.
pub fn polyhedral_fejer_kernel(p: &LatticePolytope, n: usize) -> Result<Kernel> {
    intersection_kernel(&lattice_points(p, n)?)
}
