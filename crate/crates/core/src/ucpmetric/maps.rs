//! Unital completely positive maps into `M_m`: Choi-form maps on Toeplitz systems, atomic
//! maps on function systems, and their pullbacks along truncation maps.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::system::Element;
#[cfg(test)]
use super::system::GridFn;
use crate::error::{invalid, Error, Result};
use crate::harmonic::{eval, TrigPoly};
use crate::linalg::{eigh, CMat, C64, ZERO};
#[cfg(test)]
use crate::linalg::ONE;
use crate::opsys::{IndexKind, IndexSet};
use crate::truncation::{Truncated, TruncationPair, Variant};

const PSD_TOL: f64 = 1e-10;
const UNITAL_TOL: f64 = 1e-12;
const MAX_RESAMPLE: usize = 10;

/// UCP map on the Toeplitz system over `domain`, acting on `T ⊗ I_spinor` through the Choi
/// matrix `Σ_ab E_ab ⊗ Φ(E_ab)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiUcp {
    domain: Arc<IndexSet>,
    spinor: usize,
    m: usize,
    choi: CMat,
}

impl ChoiUcp {
    pub fn new(domain: Arc<IndexSet>, spinor: usize, m: usize, choi: CMat) -> Result<Self> {
        let q = domain.len() * spinor;
        if m == 0 || spinor == 0 || choi.rows() != q * m || choi.cols() != q * m {
            return Err(Error::DimensionMismatch(format!("Choi matrix must be {0}×{0}", q * m)));
        }
        if !choi.is_finite() {
            return Err(Error::NonFinite("Choi matrix"));
        }
        if choi.hermitian_defect() > PSD_TOL || eigh(&choi).min() < -PSD_TOL {
            return Err(invalid("Choi matrix is not positive semidefinite"));
        }
        let map = Self { domain, spinor, m, choi };
        let mut sum = CMat::zeros(m, m);
        for a in 0..q {
            sum = sum.add(&map.block(a, a));
        }
        if sum.sub(&CMat::identity(m)).max_abs() > UNITAL_TOL {
            return Err(invalid("Choi matrix is not unital"));
        }
        Ok(map)
    }

    /// `x ↦ V*(x ⊗ I_r)V` for an isometry `V : C^m → C^q ⊗ C^r`, rows indexed by `a·r + ρ`.
    pub fn from_isometry(domain: Arc<IndexSet>, spinor: usize, v: &CMat, r: usize) -> Result<Self> {
        let q = domain.len() * spinor;
        let m = v.cols();
        if v.rows() != q * r {
            return Err(Error::DimensionMismatch(format!("isometry needs {} rows", q * r)));
        }
        let mut choi = CMat::zeros(q * m, q * m);
        for a in 0..q {
            for b in 0..q {
                for i in 0..m {
                    for j in 0..m {
                        let s: C64 = (0..r).map(|rho| v[(a * r + rho, i)].conj() * v[(b * r + rho, j)]).sum();
                        choi[(a * m + i, b * m + j)] = s;
                    }
                }
            }
        }
        Self::new(domain, spinor, m, choi)
    }

    /// The identity map of `M_q`.
    pub fn identity(domain: Arc<IndexSet>, spinor: usize) -> Result<Self> {
        let q = domain.len() * spinor;
        Self::from_isometry(domain, spinor, &CMat::identity(q), 1)
    }

    pub fn domain(&self) -> &Arc<IndexSet> {
        &self.domain
    }

    pub fn spinor(&self) -> usize {
        self.spinor
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    /// `Φ(E_ab)`.
    pub fn block(&self, a: usize, b: usize) -> CMat {
        self.choi.block(a * self.m, b * self.m, self.m, self.m)
    }

    /// `Φ(x ⊗ I_spinor)` for a matrix `x` on `ℓ²(S)`.
    pub fn evaluate_matrix(&self, x: &CMat) -> Result<CMat> {
        let n = self.domain.len();
        if x.rows() != n || x.cols() != n {
            return Err(Error::DimensionMismatch(format!("operand must be {n}×{n}")));
        }
        let (s, m) = (self.spinor, self.m);
        let mut out = CMat::zeros(m, m);
        for k in 0..n {
            for l in 0..n {
                let t = x[(k, l)];
                if t == ZERO {
                    continue;
                }
                for sig in 0..s {
                    let (a, b) = (k * s + sig, l * s + sig);
                    for i in 0..m {
                        for j in 0..m {
                            out[(i, j)] += t * self.choi[(a * m + i, b * m + j)];
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Atom `(x_j, A_j)` of an atomic UCP map.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub matrix: CMat,
}

/// `Φ(f) = Σ_j f(x_j) A_j` on functions on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicUcp {
    dim: usize,
    m: usize,
    atoms: Vec<Atom>,
}

impl AtomicUcp {
    pub fn new(dim: usize, m: usize, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() || m == 0 {
            return Err(invalid("atomic map needs at least one atom and m ≥ 1"));
        }
        let mut sum = CMat::zeros(m, m);
        for a in &atoms {
            if a.point.len() != dim || a.matrix.rows() != m || a.matrix.cols() != m {
                return Err(Error::DimensionMismatch("atom shape".into()));
            }
            if !a.matrix.is_finite() || a.point.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("atom"));
            }
            if a.matrix.hermitian_defect() > PSD_TOL || eigh(&a.matrix).min() < -PSD_TOL {
                return Err(invalid("atom weight is not positive semidefinite"));
            }
            sum = sum.add(&a.matrix);
        }
        if sum.sub(&CMat::identity(m)).max_abs() > UNITAL_TOL {
            return Err(invalid("atom weights do not sum to the identity"));
        }
        Ok(Self { dim, m, atoms })
    }

    /// The state `f ↦ f(x)`.
    pub fn point_state(x: Vec<f64>) -> Result<Self> {
        Self::new(x.len(), 1, vec![Atom { point: x, matrix: CMat::identity(1) }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn evaluate_with(&self, f: impl Fn(&[f64]) -> Result<C64>) -> Result<CMat> {
        let mut out = CMat::zeros(self.m, self.m);
        for a in &self.atoms {
            out.add_scaled(&a.matrix, f(&a.point)?);
        }
        Ok(out)
    }
}

/// A UCP map on one of the systems.
#[derive(Clone, Debug)]
pub enum UcpMap {
    Choi(ChoiUcp),
    Atomic(AtomicUcp),
    /// `φ ∘ R` for `φ` on the truncated system.
    PullbackR { inner: Box<UcpMap>, pair: Arc<TruncationPair> },
    /// `φ ∘ S` for `φ` on the function system.
    PullbackS { inner: Box<UcpMap>, pair: Arc<TruncationPair> },
}

impl UcpMap {
    pub fn m(&self) -> usize {
        match self {
            UcpMap::Choi(c) => c.m(),
            UcpMap::Atomic(a) => a.m(),
            UcpMap::PullbackR { inner, .. } | UcpMap::PullbackS { inner, .. } => inner.m(),
        }
    }

    pub fn pullback_r(inner: UcpMap, pair: Arc<TruncationPair>) -> Self {
        UcpMap::PullbackR { inner: Box::new(inner), pair }
    }

    pub fn pullback_s(inner: UcpMap, pair: Arc<TruncationPair>) -> Self {
        UcpMap::PullbackS { inner: Box::new(inner), pair }
    }

    /// `Φ(x)`.
    pub fn evaluate(&self, x: &Element) -> Result<CMat> {
        match (self, x) {
            (UcpMap::Choi(c), Element::Op(t)) => {
                if t.index_set().points() != c.domain().points() {
                    return Err(Error::DimensionMismatch("operator on a foreign index set".into()));
                }
                c.evaluate_matrix(&t.matrix())
            }
            (UcpMap::Atomic(a), Element::Poly(f)) => {
                if f.dim() != a.dim() {
                    return Err(Error::DimensionMismatch(format!("function on T^{} for atoms in T^{}", f.dim(), a.dim())));
                }
                a.evaluate_with(|p| eval(f, p))
            }
            (UcpMap::Atomic(a), Element::Grid(g)) => {
                if a.dim() != 1 {
                    return Err(Error::DimensionMismatch("grid functions live on the circle".into()));
                }
                a.evaluate_with(|p| Ok(g.at(p[0])))
            }
            (UcpMap::PullbackR { inner, pair }, x) => inner.evaluate(&apply_r(pair, x)?),
            (UcpMap::PullbackS { inner, pair }, x) => inner.evaluate(&apply_s(pair, x)?),
            _ => Err(Error::DimensionMismatch("map and element live on different systems".into())),
        }
    }
}

/// `R` on an element of the function system.
pub fn apply_r(pair: &TruncationPair, x: &Element) -> Result<Element> {
    if matches!(pair.variant(), Variant::Identity { .. }) {
        return Ok(x.clone());
    }
    let f = match x {
        Element::Poly(f) => f.clone(),
        Element::Grid(g) => {
            let b = pair.band();
            TrigPoly::from_coeffs(1, (-b..=b).map(|k| (vec![k], g.fourier(k))))
        }
        Element::Op(_) => return Err(invalid("R acts on functions")),
    };
    Ok(match pair.compress(&f)? {
        Truncated::Poly(p) => Element::Poly(p),
        Truncated::Op(t) => Element::Op(t),
    })
}

/// `S` on an element of the truncated system.
pub fn apply_s(pair: &TruncationPair, x: &Element) -> Result<Element> {
    if matches!(pair.variant(), Variant::Identity { .. }) {
        return Ok(x.clone());
    }
    let t = match x {
        Element::Poly(p) => Truncated::Poly(p.clone()),
        Element::Op(t) => Truncated::Op(t.clone()),
        Element::Grid(_) => return Err(invalid("S acts on the truncated system")),
    };
    Ok(Element::Poly(pair.symbolize(&t)?))
}

fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Orthonormalizes the columns by modified Gram-Schmidt; `None` if they are dependent.
fn orthonormalize(mut a: CMat) -> Option<CMat> {
    let (n, k) = (a.rows(), a.cols());
    for j in 0..k {
        for i in 0..j {
            let dot: C64 = (0..n).map(|r| a[(r, i)].conj() * a[(r, j)]).sum();
            for r in 0..n {
                let v = a[(r, i)];
                a[(r, j)] -= dot * v;
            }
        }
        let norm = (0..n).map(|r| a[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return None;
        }
        for r in 0..n {
            a[(r, j)] /= norm;
        }
    }
    Some(a)
}

/// Random map `x ↦ V*(x ⊗ I_r)V` with `V` a Haar-random isometry `C^m → C^q ⊗ C^r`.
pub fn sample_choi_ucp(domain: Arc<IndexSet>, spinor: usize, m: usize, r: usize, seed: u64) -> Result<ChoiUcp> {
    let q = domain.len() * spinor;
    if r == 0 || m == 0 {
        return Err(invalid("dilation rank and target dimension must be positive"));
    }
    if m > q * r {
        return Err(invalid(format!("no isometry from C^{m} into C^{}", q * r)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RESAMPLE {
        if let Some(v) = orthonormalize(gaussian_matrix(q * r, m, &mut rng)) {
            return ChoiUcp::from_isometry(domain, spinor, &v, r);
        }
    }
    Err(Error::Sampling("columns of the Gaussian matrix stayed dependent".into()))
}

/// Random atomic map with `j` atoms uniform on the torus; with `grid = Some(M)` the atoms are
/// moved to the nearest node of the uniform grid of `M` points per axis.
pub fn sample_atomic_ucp(dim: usize, m: usize, j: usize, seed: u64, grid: Option<usize>) -> Result<AtomicUcp> {
    if j == 0 || m == 0 || dim == 0 {
        return Err(invalid("atom count, target dimension and dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.map(|g| 2.0 * PI / g as f64);
    for _ in 0..MAX_RESAMPLE {
        let points: Vec<Vec<f64>> = (0..j)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        let x = rng.random_range(0.0..2.0 * PI);
                        match (h, grid) {
                            (Some(h), Some(g)) => ((x / h).round() as usize % g) as f64 * h,
                            _ => x,
                        }
                    })
                    .collect()
            })
            .collect();
        let bs: Vec<CMat> = (0..j)
            .map(|_| {
                let g = gaussian_matrix(m, m, &mut rng);
                g.mul(&g.adjoint())
            })
            .collect();
        let sigma = bs.iter().fold(CMat::zeros(m, m), |acc, b| acc.add(b));
        let e = eigh(&sigma);
        if e.min() <= 1e-12 * e.max().max(1.0) {
            continue;
        }
        let isqrt = e.apply(|l| 1.0 / l.sqrt());
        let mut mats: Vec<CMat> = bs.iter().map(|b| isqrt.mul(b).mul(&isqrt).hermitian_part()).collect();
        let total = mats.iter().fold(CMat::zeros(m, m), |acc, b| acc.add(b));
        // Fold the rounding residue of the normalization into the last weight.
        let last = mats.len() - 1;
        let fix = CMat::identity(m).sub(&total);
        mats[last] = mats[last].add(&fix);
        if eigh(&mats[last]).min() < -PSD_TOL {
            continue;
        }
        let atoms = points.into_iter().zip(mats).map(|(point, matrix)| Atom { point, matrix }).collect();
        return AtomicUcp::new(dim, m, atoms);
    }
    Err(Error::Sampling("atom weights stayed singular".into()))
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MapRepr {
    Choi { m: usize, domain: IndexKind, spinor: usize, data: Vec<Vec<[f64; 2]>> },
    Atomic { m: usize, dim: usize, atoms: Vec<AtomRepr> },
}

#[derive(Serialize, Deserialize)]
struct AtomRepr {
    point: Vec<f64>,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn mat_to_rows(a: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..a.rows()).map(|i| a.row(i).iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn rows_to_mat(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != n) {
        return Err(invalid("ragged matrix"));
    }
    Ok(CMat::from_rows(&rows.iter().map(|r| r.iter().map(|&[a, b]| C64::new(a, b)).collect()).collect::<Vec<_>>()))
}

impl UcpMap {
    /// JSON form `{kind: "choi" | "atomic", m, ...}` with matrices as rows of `[re, im]` pairs.
    pub fn to_json(&self) -> Result<String> {
        let repr = match self {
            UcpMap::Choi(c) => MapRepr::Choi {
                m: c.m,
                domain: c.domain.kind().clone(),
                spinor: c.spinor,
                data: mat_to_rows(&c.choi),
            },
            UcpMap::Atomic(a) => MapRepr::Atomic {
                m: a.m,
                dim: a.dim,
                atoms: a.atoms.iter().map(|t| AtomRepr { point: t.point.clone(), matrix: mat_to_rows(&t.matrix) }).collect(),
            },
            _ => return Err(invalid("pullbacks are evaluated lazily and have no stored form")),
        };
        Ok(serde_json::to_string(&repr)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        match serde_json::from_str::<MapRepr>(s)? {
            MapRepr::Choi { m, domain, spinor, data } => {
                Ok(UcpMap::Choi(ChoiUcp::new(Arc::new(IndexSet::from_kind(&domain)?), spinor, m, rows_to_mat(&data)?)?))
            }
            MapRepr::Atomic { m, dim, atoms } => {
                let atoms = atoms
                    .into_iter()
                    .map(|a| Ok(Atom { point: a.point, matrix: rows_to_mat(&a.matrix)? }))
                    .collect::<Result<Vec<_>>>()?;
                Ok(UcpMap::Atomic(AtomicUcp::new(dim, m, atoms)?))
            }
        }
    }
}

#[cfg(test)]
fn unit_of(dim: usize) -> Element {
    Element::Poly(TrigPoly::constant(dim, ONE))
}

#[cfg(test)]
fn grid_unit(nodes: usize) -> Result<Element> {
    Ok(Element::Grid(GridFn::new(vec![ONE; nodes])?))
}
