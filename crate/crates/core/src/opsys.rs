//! Toeplitz operator systems, truncated Dirac operators and the Toeplitz/Fejér-Riesz duality.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harmonic::{sup_norm_vec, Bracket, Idx, TrigPoly, TOL_NORM};
use crate::lattice::{lattice_points, LatticePointSet, LatticePolytope};
use crate::linalg::{eigh, CMat, C64, I, ONE, ZERO};

pub use crate::linalg::operator_norm;

/// Which truncation an index set comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum IndexKind {
    Interval { n: usize },
    Ball { dim: usize, radius: usize },
    Polytope { polytope: LatticePolytope, level: usize },
}

/// Ordered finite subset of `Z^d` indexing a truncated Hilbert space.
#[derive(Clone, Debug)]
pub struct IndexSet {
    kind: IndexKind,
    dim: usize,
    points: Vec<Idx>,
    position: HashMap<Idx, usize>,
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl IndexSet {
    /// `{0, …, n-1}`.
    pub fn interval(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("interval index set needs n >= 1"));
        }
        Ok(Self::from_points(IndexKind::Interval { n }, 1, (0..n as i64).map(|k| vec![k]).collect()))
    }

    /// `{k ∈ Z^d : ‖k‖₂ ≤ radius}`.
    pub fn ball(dim: usize, radius: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("ball dimension {dim} outside 1..=3")));
        }
        let s = LatticePointSet::ball(dim, radius);
        Ok(Self::from_points(IndexKind::Ball { dim, radius }, dim, s.points))
    }

    /// Lattice points of the dilation `level · P`.
    pub fn polytope(polytope: LatticePolytope, level: usize) -> Result<Self> {
        let s = lattice_points(&polytope, level)?;
        let dim = polytope.dim();
        Ok(Self::from_points(IndexKind::Polytope { polytope, level }, dim, s.points))
    }

    /// Rebuilds the index set described by `kind`.
    pub fn from_kind(kind: &IndexKind) -> Result<Self> {
        match kind {
            IndexKind::Interval { n } => Self::interval(*n),
            IndexKind::Ball { dim, radius } => Self::ball(*dim, *radius),
            IndexKind::Polytope { polytope, level } => Self::polytope(polytope.clone(), *level),
        }
    }

    fn from_points(kind: IndexKind, dim: usize, points: Vec<Idx>) -> Self {
        let position = points.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        Self { kind, dim, points, position }
    }

    /// Every index moved by `v`.
    pub fn shifted(&self, v: &[i64]) -> Self {
        let pts = self.points.iter().map(|p| p.iter().zip(v).map(|(a, b)| a + b).collect()).collect();
        Self::from_points(self.kind.clone(), self.dim, pts)
    }

    pub fn kind(&self) -> &IndexKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Idx] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, k: &[i64]) -> Option<usize> {
        self.position.get(k).copied()
    }

    pub fn lattice_set(&self) -> LatticePointSet {
        let level = match &self.kind {
            IndexKind::Interval { n } => *n,
            IndexKind::Ball { radius, .. } => *radius,
            IndexKind::Polytope { level, .. } => *level,
        };
        LatticePointSet { dim: self.dim, level, points: self.points.clone() }
    }

    /// Differences `k - l` in first-seen order over `(k, l)` scanned row-major.
    pub fn differences(&self) -> Vec<Idx> {
        let mut seen = std::collections::BTreeSet::new();
        for k in &self.points {
            for l in &self.points {
                seen.insert(k.iter().zip(l).map(|(a, b)| a - b).collect::<Idx>());
            }
        }
        seen.into_iter().collect()
    }

    /// Size of the irreducible spinor module used with this index set.
    pub fn spinor_dim(&self) -> usize {
        spinor_dim(self.dim)
    }
}

pub fn spinor_dim(d: usize) -> usize {
    1 << (d / 2)
}

/// Hermitian generators of the Clifford algebra of `R^d`, of size `2^{⌊d/2⌋}`.
pub fn gamma_matrices(d: usize) -> Result<Vec<CMat>> {
    let sx = CMat::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]);
    let sy = CMat::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]);
    let sz = CMat::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]);
    match d {
        1 => Ok(vec![CMat::identity(1)]),
        2 => Ok(vec![sx, sy]),
        3 => Ok(vec![sx, sy, sz]),
        _ => Err(invalid(format!("gamma matrices available for d in 1..=3, got {d}"))),
    }
}

/// `Σ_μ c_μ γ^μ`.
pub fn clifford(gamma: &[CMat], c: &[f64]) -> CMat {
    let s = gamma[0].rows();
    let mut out = CMat::zeros(s, s);
    for (g, &x) in gamma.iter().zip(c) {
        if x != 0.0 {
            out.add_scaled(g, C64::new(x, 0.0));
        }
    }
    out
}

/// Matrix `((t_{k-l}))` over an index set, stored through its symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzOperator {
    index_set: Arc<IndexSet>,
    symbol: BTreeMap<Idx, C64>,
}

impl ToeplitzOperator {
    /// Keeps the entries of `symbol` lying in the difference set and drops zeros.
    pub fn new(index_set: Arc<IndexSet>, symbol: impl IntoIterator<Item = (Idx, C64)>) -> Self {
        let diffs: std::collections::BTreeSet<Idx> = index_set.differences().into_iter().collect();
        let symbol = symbol.into_iter().filter(|(m, c)| *c != ZERO && diffs.contains(m)).collect();
        Self { index_set, symbol }
    }

    pub fn identity(index_set: Arc<IndexSet>) -> Self {
        let d = index_set.dim();
        Self::new(index_set, [(vec![0; d], ONE)])
    }

    pub fn index_set(&self) -> &Arc<IndexSet> {
        &self.index_set
    }

    pub fn symbol(&self) -> &BTreeMap<Idx, C64> {
        &self.symbol
    }

    pub fn entry(&self, m: &[i64]) -> C64 {
        self.symbol.get(m).copied().unwrap_or(ZERO)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            index_set: self.index_set.clone(),
            symbol: self.symbol.iter().map(|(m, c)| (crate::harmonic::neg(m), c.conj())).collect(),
        }
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.symbol.iter().all(|(m, c)| (self.entry(&crate::harmonic::neg(m)) - c.conj()).norm() <= tol)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut s = self.symbol.clone();
        for (m, c) in &other.symbol {
            *s.entry(m.clone()).or_insert(ZERO) += c;
        }
        Self::new(self.index_set.clone(), s)
    }

    pub fn scale(&self, a: C64) -> Self {
        Self::new(self.index_set.clone(), self.symbol.iter().map(|(m, c)| (m.clone(), c * a)))
    }

    /// The `|S| × |S|` matrix.
    pub fn matrix(&self) -> CMat {
        let pts = self.index_set.points();
        CMat::from_fn(pts.len(), pts.len(), |i, j| {
            let m: Idx = pts[i].iter().zip(&pts[j]).map(|(a, b)| a - b).collect();
            self.entry(&m)
        })
    }

    /// Operator norm of the matrix.
    pub fn norm(&self) -> Result<f64> {
        operator_norm(&self.matrix())
    }
}

/// Sparse self-adjoint `f` as a Toeplitz operator: `symbol(m) = a_m` on the difference set.
pub fn toeplitz_from_function(f: &TrigPoly, s: &Arc<IndexSet>) -> Result<ToeplitzOperator> {
    if f.dim() != s.dim() {
        return Err(Error::DimensionMismatch(format!("function on T^{} and index set in Z^{}", f.dim(), s.dim())));
    }
    Ok(ToeplitzOperator::new(s.clone(), f.iter().map(|(k, c)| (k.clone(), *c))))
}

/// Block-diagonal truncated Dirac operator with block `Σ_μ k_μ γ^μ` at index `k`.
#[derive(Clone, Debug)]
pub struct DiracTruncation {
    index_set: Arc<IndexSet>,
    gamma: Vec<CMat>,
}

impl DiracTruncation {
    pub fn new(index_set: Arc<IndexSet>) -> Result<Self> {
        let gamma = gamma_matrices(index_set.dim())?;
        Ok(Self { index_set, gamma })
    }

    pub fn index_set(&self) -> &Arc<IndexSet> {
        &self.index_set
    }

    pub fn gamma(&self) -> &[CMat] {
        &self.gamma
    }

    pub fn spinor_dim(&self) -> usize {
        self.gamma[0].rows()
    }

    pub fn matrix(&self) -> CMat {
        let s = self.spinor_dim();
        let pts = self.index_set.points();
        let mut out = CMat::zeros(pts.len() * s, pts.len() * s);
        for (i, k) in pts.iter().enumerate() {
            let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
            out.set_block(i * s, i * s, &clifford(&self.gamma, &kf));
        }
        out
    }
}

/// `[D_N, T ⊗ I_s]`, block `(k, l)` equal to `t_{k-l} Σ_μ (k-l)_μ γ^μ`.
pub fn commutator(d: &DiracTruncation, t: &ToeplitzOperator) -> Result<CMat> {
    if d.index_set.points() != t.index_set.points() {
        return Err(Error::DimensionMismatch("Dirac operator and Toeplitz operator live on different index sets".into()));
    }
    let s = d.spinor_dim();
    let pts = t.index_set.points();
    let mut out = CMat::zeros(pts.len() * s, pts.len() * s);
    let mut blocks: BTreeMap<Idx, CMat> = BTreeMap::new();
    for (m, c) in t.symbol() {
        let mf: Vec<f64> = m.iter().map(|&x| x as f64).collect();
        blocks.insert(m.clone(), clifford(&d.gamma, &mf).scale(*c));
    }
    for (i, k) in pts.iter().enumerate() {
        for (j, l) in pts.iter().enumerate() {
            let m: Idx = k.iter().zip(l).map(|(a, b)| a - b).collect();
            if let Some(b) = blocks.get(&m) {
                out.set_block(i * s, j * s, b);
            }
        }
    }
    Ok(out)
}

/// `‖[D_N, T]‖`.
pub fn lipschitz_seminorm_op(d: &DiracTruncation, t: &ToeplitzOperator) -> Result<f64> {
    operator_norm(&commutator(d, t)?)
}

/// Certified bracket of `sup_x ‖∇f(x)‖₂`.
pub fn lipschitz_seminorm_fn(f: &TrigPoly) -> Bracket {
    let grads: Vec<TrigPoly> = (0..f.dim()).map(|mu| f.derivative(mu)).collect();
    sup_norm_vec(&grads, TOL_NORM)
}

/// `φ_t(f) = Σ_k t_{-k} a_k` for `t` on `interval(n)` and `f` of degree below `n`.
pub fn duality_pairing(t: &ToeplitzOperator, f: &TrigPoly) -> Result<C64> {
    let n = match t.index_set.kind() {
        IndexKind::Interval { n } => *n as i64,
        _ => return Err(invalid("duality pairing needs an interval index set")),
    };
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch("duality pairing needs a polynomial on the circle".into()));
    }
    if let Some((k, _)) = f.iter().find(|(k, _)| k[0].abs() >= n) {
        return Err(invalid(format!("coefficient at {} outside the Fejér-Riesz band of degree {}", k[0], n - 1)));
    }
    Ok(f.iter().map(|(k, a)| t.entry(&[-k[0]]) * a).sum())
}

/// Outcome of comparing positivity of `t` with positivity of `φ_t` on squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub n: usize,
    pub min_eigenvalue: f64,
    pub psd: bool,
    pub min_pairing: f64,
    pub pairing_nonnegative: bool,
    /// Coefficients `q_0, …, q_{n-1}` (as `[re, im]`) with `φ_t(|q|²) < 0`, if one was found.
    pub witness: Option<Vec<[f64; 2]>>,
    pub agree: bool,
}

const ORDER_TOL: f64 = 1e-10;
const DESCENT_STEPS: usize = 400;

/// `|q|²` for `q(z) = Σ_j q_j z^j`.
fn abs_square(q: &[C64]) -> TrigPoly {
    let p = TrigPoly::from_coeffs(1, q.iter().enumerate().map(|(j, c)| (vec![j as i64], *c)));
    p.mul(&p.conj())
}

/// Positivity of `t` by eigensolve against positivity of `φ_t(|q|²)` over `trials` random
/// unit-norm `q` of degree below `n`. Each draw is refined by shifted power steps
/// `q ← σq − ∇` with `σ = n·max|t_k|`, the gradient of `q ↦ φ_t(|q|²)` being read off the
/// pairing with `z^{-j} q`.
pub fn duality_order_check(t: &ToeplitzOperator, trials: usize, seed: u64) -> Result<DualityReport> {
    let n = match t.index_set.kind() {
        IndexKind::Interval { n } => *n,
        _ => return Err(invalid("duality check needs an interval index set")),
    };
    if n > 8 {
        return Err(invalid("duality check supports n <= 8"));
    }
    if !t.is_self_adjoint(1e-12) {
        return Err(invalid("duality check needs a self-adjoint Toeplitz matrix"));
    }
    let min_eigenvalue = eigh(&t.matrix()).min();
    let psd = min_eigenvalue >= -ORDER_TOL;
    let shift = n as f64 * t.symbol().values().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_pairing = f64::INFINITY;
    let mut witness = None;
    for _ in 0..trials {
        let mut q: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        normalize(&mut q);
        let mut val = duality_pairing(t, &abs_square(&q))?.re;
        for _ in 0..DESCENT_STEPS {
            if val < -ORDER_TOL {
                break;
            }
            let grad: Vec<C64> = (0..n)
                .map(|j| {
                    let shifted = TrigPoly::from_coeffs(1, q.iter().enumerate().map(|(l, c)| (vec![l as i64 - j as i64], *c)));
                    duality_pairing(t, &shifted)
                })
                .collect::<Result<_>>()?;
            let mut next: Vec<C64> = q.iter().zip(&grad).map(|(a, g)| a * shift - g).collect();
            normalize(&mut next);
            let v = duality_pairing(t, &abs_square(&next))?.re;
            if v >= val - 1e-15 * shift {
                break;
            }
            q = next;
            val = v;
        }
        if val < min_pairing {
            min_pairing = val;
            if val < -ORDER_TOL {
                witness = Some(q.iter().map(|c| [c.re, c.im]).collect());
            }
        }
    }
    let pairing_nonnegative = min_pairing >= -ORDER_TOL;
    Ok(DualityReport { n, min_eigenvalue, psd, min_pairing, pairing_nonnegative, witness, agree: psd == pairing_nonnegative })
}

fn normalize(q: &mut [C64]) {
    let norm = q.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        q.iter_mut().for_each(|c| *c /= norm);
    }
}
