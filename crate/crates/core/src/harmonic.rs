//! Trigonometric polynomials on the circle and the flat torus, convolution kernels,
//! certified sup-norms and kernel first moments.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{C64, ONE, ZERO};

/// A point of `Z^d`.
pub type Idx = Vec<i64>;

/// Default accuracy of the certified sup-norm brackets.
pub const TOL_NORM: f64 = 1e-6;
/// Slack allowed for nonnegativity of kernels on the verification grid.
pub const EPS_NUM: f64 = 1e-10;

const TWO_PI: f64 = 2.0 * PI;
const BNB_MAX_POINTS: usize = 4_000_000;

/// Finitely supported Fourier series `f(x) = Σ_k a_k e^{i k·x}` on `T^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    dim: usize,
    coeffs: BTreeMap<Idx, C64>,
}

impl TrigPoly {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self { dim, coeffs: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        Self::monomial(vec![0; dim], c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, ONE)
    }

    /// `c e^{i k·x}`.
    pub fn monomial(k: Idx, c: C64) -> Self {
        let mut p = Self::zero(k.len());
        p.set(k, c);
        p
    }

    pub fn from_coeffs(dim: usize, coeffs: impl IntoIterator<Item = (Idx, C64)>) -> Self {
        let mut p = Self::zero(dim);
        for (k, c) in coeffs {
            assert_eq!(k.len(), dim, "index dimension mismatch");
            let v = p.coeff(&k) + c;
            p.set(k, v);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, k: &[i64]) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn set(&mut self, k: Idx, c: C64) {
        assert_eq!(k.len(), self.dim, "index dimension mismatch");
        if c == ZERO {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, c);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Idx, &C64)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest `|k_μ|` in the support.
    pub fn bandwidth(&self) -> i64 {
        self.coeffs.keys().flat_map(|k| k.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    /// Largest `‖k‖₂` in the support.
    pub fn radius(&self) -> f64 {
        self.coeffs.keys().map(|k| l2(k)).fold(0.0, f64::max)
    }

    /// Pointwise complex conjugate: `a_k ↦ conj(a_{-k})`.
    pub fn conj(&self) -> Self {
        Self::from_coeffs(self.dim, self.coeffs.iter().map(|(k, c)| (neg(k), c.conj())))
    }

    /// Largest deviation of `a_{-k}` from `conj(a_k)`.
    pub fn self_adjoint_defect(&self) -> f64 {
        self.coeffs.iter().map(|(k, c)| (self.coeff(&neg(k)) - c.conj()).norm()).fold(0.0, f64::max)
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.self_adjoint_defect() <= tol
    }

    /// Real part `(f + f*) / 2`.
    pub fn real_part(&self) -> Self {
        self.add(&self.conj()).scale(C64::new(0.5, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self::from_coeffs(self.dim, self.iter().chain(other.iter()).map(|(k, c)| (k.clone(), *c)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_coeffs(self.dim, self.iter().map(|(k, c)| (k.clone(), c * s)))
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut acc: BTreeMap<Idx, C64> = BTreeMap::new();
        for (k, a) in self.iter() {
            for (l, b) in other.iter() {
                let s: Idx = k.iter().zip(l).map(|(x, y)| x + y).collect();
                *acc.entry(s).or_insert(ZERO) += a * b;
            }
        }
        Self::from_coeffs(self.dim, acc)
    }

    /// Partial derivative along axis `mu`.
    pub fn derivative(&self, mu: usize) -> Self {
        assert!(mu < self.dim);
        Self::from_coeffs(
            self.dim,
            self.iter().map(|(k, c)| (k.clone(), c * C64::new(0.0, k[mu] as f64))),
        )
    }

    /// Largest coefficientwise difference.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.sub(other).iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    /// `Σ |a_k|`, an upper bound for the sup-norm.
    pub fn wiener_norm(&self) -> f64 {
        self.iter().map(|(_, c)| c.norm()).sum()
    }
}

pub(crate) fn neg(k: &[i64]) -> Idx {
    k.iter().map(|x| -x).collect()
}

pub(crate) fn l2(k: &[i64]) -> f64 {
    k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt()
}

/// Random self-adjoint polynomial supported in the box `‖k‖_∞ ≤ band`, with
/// coefficients drawn uniformly and damped by `1/(1+‖k‖₂)`.
pub fn random_self_adjoint<R: Rng + ?Sized>(dim: usize, band: i64, rng: &mut R) -> TrigPoly {
    let mut p = TrigPoly::zero(dim);
    for k in box_points(dim, band) {
        let nk = neg(&k);
        if k < nk {
            continue;
        }
        let damp = 1.0 / (1.0 + l2(&k));
        if k == nk {
            p.set(k, C64::new(rng.random_range(-1.0..1.0) * damp, 0.0));
        } else {
            let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * damp;
            p.set(nk, c.conj());
            p.set(k, c);
        }
    }
    p
}

/// All points of `{-band..=band}^d` in lexicographic order.
pub fn box_points(dim: usize, band: i64) -> Vec<Idx> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p: Idx| {
                (-band..=band).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Evaluate `f` at `x`, summing in index order.
pub fn eval(f: &TrigPoly, x: &[f64]) -> Result<C64> {
    if x.len() != f.dim {
        return Err(Error::DimensionMismatch(format!("point of dimension {} for a polynomial on T^{}", x.len(), f.dim)));
    }
    Ok(f.iter()
        .map(|(k, c)| {
            let phase: f64 = k.iter().zip(x).map(|(&ki, xi)| ki as f64 * xi).sum();
            c * C64::from_polar(1.0, phase)
        })
        .sum())
}

/// Flattened polynomial prepared for repeated pointwise evaluation.
struct Evaluator {
    dim: usize,
    keys: Vec<i64>,
    coeffs: Vec<C64>,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl Evaluator {
    fn new(f: &TrigPoly) -> Self {
        let dim = f.dim;
        let mut lo = vec![0; dim];
        let mut hi = vec![0; dim];
        let mut keys = Vec::with_capacity(f.len() * dim);
        let mut coeffs = Vec::with_capacity(f.len());
        for (k, c) in f.iter() {
            for mu in 0..dim {
                lo[mu] = lo[mu].min(k[mu]);
                hi[mu] = hi[mu].max(k[mu]);
            }
            keys.extend_from_slice(k);
            coeffs.push(*c);
        }
        Self { dim, keys, coeffs, lo, hi }
    }

    fn tables(&self, x: &[f64]) -> Vec<Vec<C64>> {
        (0..self.dim)
            .map(|mu| (self.lo[mu]..=self.hi[mu]).map(|k| C64::from_polar(1.0, k as f64 * x[mu])).collect())
            .collect()
    }

    /// Value and gradient at `x`.
    fn value_grad(&self, x: &[f64], grad: &mut [C64]) -> C64 {
        let t = self.tables(x);
        let mut v = ZERO;
        grad.iter_mut().for_each(|g| *g = ZERO);
        for (j, c) in self.coeffs.iter().enumerate() {
            let k = &self.keys[j * self.dim..(j + 1) * self.dim];
            let mut e = *c;
            for mu in 0..self.dim {
                e *= t[mu][(k[mu] - self.lo[mu]) as usize];
            }
            v += e;
            for mu in 0..self.dim {
                grad[mu] += e * C64::new(0.0, k[mu] as f64);
            }
        }
        v
    }
}

/// Contract the coefficients of `f` against one table per axis:
/// `out[j_1..j_d] = Σ_k a_k Π_μ table_μ(k_μ, j_μ)`, where `table(k, j)` is supplied as a
/// closure and `m` is the number of output samples per axis. Output is row-major.
fn tensor_contract(f: &TrigPoly, m: usize, table: impl Fn(i64, usize) -> C64) -> Vec<C64> {
    let d = f.dim;
    if f.is_empty() {
        return vec![ZERO; m.pow(d as u32)];
    }
    let band = f.bandwidth();
    let b = (2 * band + 1) as usize;
    let mut data = vec![ZERO; b.pow(d as u32)];
    for (k, c) in f.iter() {
        let pos = k.iter().fold(0usize, |acc, &x| acc * b + (x + band) as usize);
        data[pos] = *c;
    }
    let tab: Vec<C64> = (0..b).flat_map(|bi| (0..m).map(|j| table(bi as i64 - band, j)).collect::<Vec<_>>()).collect();
    contract_axes(data, &vec![b; d], m, &tab)
}

/// Apply the same `n_in × n_out` table (row-major) along every axis of a row-major tensor of
/// shape `shape`, where each axis has length `n_in` on input and `n_out` on output.
pub(crate) fn contract_axes(mut data: Vec<C64>, shape: &[usize], n_out: usize, tab: &[C64]) -> Vec<C64> {
    let mut shape = shape.to_vec();
    for axis in 0..shape.len() {
        let n_in = shape[axis];
        debug_assert_eq!(tab.len(), n_in * n_out);
        let pre: usize = shape[..axis].iter().product();
        let post: usize = shape[axis + 1..].iter().product();
        let mut out = vec![ZERO; pre * n_out * post];
        for p in 0..pre {
            for bi in 0..n_in {
                let src = &data[(p * n_in + bi) * post..(p * n_in + bi + 1) * post];
                if src.iter().all(|z| *z == ZERO) {
                    continue;
                }
                for j in 0..n_out {
                    let w = tab[bi * n_out + j];
                    let dst = &mut out[(p * n_out + j) * post..(p * n_out + j + 1) * post];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += w * s;
                    }
                }
            }
        }
        shape[axis] = n_out;
        data = out;
    }
    data
}

/// Values of `f` at the points `(x_{j_1}, …, x_{j_d})` with `x_j = (j + offset)·2π/m`.
pub fn eval_grid(f: &TrigPoly, m: usize, offset: f64) -> Vec<C64> {
    let h = TWO_PI / m as f64;
    tensor_contract(f, m, |k, j| C64::from_polar(1.0, k as f64 * (j as f64 + offset) * h))
}

/// Normalized integrals `(2π)^{-d} ∫_cell f` over the cells `Π [j_μ h, (j_μ+1) h]`, `h = 2π/m`.
pub fn cell_integrals(f: &TrigPoly, m: usize) -> Vec<C64> {
    let h = TWO_PI / m as f64;
    tensor_contract(f, m, |k, j| {
        if k == 0 {
            C64::new(h / TWO_PI, 0.0)
        } else {
            let kf = k as f64;
            let a = C64::from_polar(1.0, kf * j as f64 * h);
            let b = C64::from_polar(1.0, kf * (j + 1) as f64 * h);
            (b - a) / C64::new(0.0, kf * TWO_PI)
        }
    })
}

/// Two-sided bound on a nonnegative quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn exact(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Certified bracket of `‖f‖_∞`.
pub fn sup_norm(f: &TrigPoly) -> Bracket {
    sup_norm_vec(std::slice::from_ref(f), TOL_NORM)
}

/// Certified bracket of `sup_x ‖(f_1(x), …, f_r(x))‖₂` for polynomials on a common torus.
///
/// Starts from a grid with at least 8 samples per unit of bandwidth and refines cells by
/// bisection. A cell of half-diagonal `r` around `c` is bounded by
/// `φ(c) + |∇φ(c)| r + 2σ²U²r²` with `φ = Σ|f_j|²`, `σ` the largest frequency norm and `U`
/// a running upper bound, using Bernstein's inequality for functions of exponential type.
pub fn sup_norm_vec(fs: &[TrigPoly], tol: f64) -> Bracket {
    let Some(first) = fs.first() else { return Bracket::exact(0.0) };
    let d = first.dim;
    assert!(fs.iter().all(|f| f.dim == d), "dimension mismatch");
    if fs.iter().all(TrigPoly::is_empty) {
        return Bracket::exact(0.0);
    }
    let sigma = fs.iter().map(TrigPoly::radius).fold(0.0, f64::max);
    if sigma == 0.0 {
        let v = fs.iter().map(|f| f.coeff(&vec![0; d]).norm_sqr()).sum::<f64>().sqrt();
        return Bracket::exact(v);
    }
    let band = fs.iter().map(TrigPoly::bandwidth).max().unwrap_or(0) as usize;
    let m = (8 * band).max(16);
    let h = TWO_PI / m as f64;

    // Initial grid values and gradients through tensor contractions.
    let vals: Vec<Vec<C64>> = fs.iter().map(|f| eval_grid(f, m, 0.5)).collect();
    let grads: Vec<Vec<Vec<C64>>> =
        fs.iter().map(|f| (0..d).map(|mu| eval_grid(&f.derivative(mu), m, 0.5)).collect()).collect();
    let npts = m.pow(d as u32);
    let mut cells: Vec<Cell> = (0..npts)
        .map(|p| {
            let mut center = vec![0.0; d];
            let mut rem = p;
            for mu in (0..d).rev() {
                center[mu] = ((rem % m) as f64 + 0.5) * h;
                rem /= m;
            }
            let phi: f64 = vals.iter().map(|v| v[p].norm_sqr()).sum();
            let gnorm = (0..d)
                .map(|mu| {
                    let g: f64 = vals.iter().zip(&grads).map(|(v, gr)| 2.0 * (v[p].conj() * gr[mu][p]).re).sum();
                    g * g
                })
                .sum::<f64>()
                .sqrt();
            Cell { center, side: h, phi, gnorm }
        })
        .collect();

    let evals: Vec<Evaluator> = fs.iter().map(Evaluator::new).collect();
    let wiener_sq: f64 = fs.iter().map(|f| f.wiener_norm().powi(2)).sum();
    let mut u_sq = wiener_sq;
    let mut lower_sq = cells.iter().map(|c| c.phi).fold(0.0, f64::max);
    let mut discarded_sq: f64 = 0.0;
    let mut used = npts;
    let sqrt_d = (d as f64).sqrt();
    loop {
        // Tighten U from the current cover: ‖G‖² ≤ A + q‖G‖².
        let (a, q) = cells.iter().fold((discarded_sq, 0.0f64), |(a, q), c| {
            let r = 0.5 * c.side * sqrt_d;
            (a.max(c.phi + c.gnorm * r), q.max(2.0 * sigma * sigma * r * r))
        });
        if q < 1.0 {
            u_sq = u_sq.min(a / (1.0 - q));
        }
        let bound = |c: &Cell| {
            let r = 0.5 * c.side * sqrt_d;
            c.phi + c.gnorm * r + 2.0 * sigma * sigma * u_sq * r * r
        };
        let upper_sq = cells.iter().map(bound).fold(discarded_sq, f64::max).min(u_sq);
        let lower = lower_sq.sqrt();
        let upper = upper_sq.sqrt().max(lower);
        if upper - lower <= tol || used >= BNB_MAX_POINTS || cells.is_empty() {
            return Bracket { lower, upper };
        }
        let keep = (lower + 0.5 * tol).powi(2);
        let mut next = Vec::new();
        for c in cells.drain(..) {
            let b = bound(&c);
            if b <= keep {
                discarded_sq = discarded_sq.max(b);
                continue;
            }
            let half = 0.5 * c.side;
            for corner in 0..(1usize << d) {
                let center: Vec<f64> = (0..d)
                    .map(|mu| c.center[mu] + if corner >> mu & 1 == 1 { 0.5 * half } else { -0.5 * half })
                    .collect();
                next.push(eval_cell(&evals, center, half, d));
            }
        }
        used += next.len();
        lower_sq = next.iter().map(|c| c.phi).fold(lower_sq, f64::max);
        cells = next;
    }
}

struct Cell {
    center: Vec<f64>,
    side: f64,
    phi: f64,
    gnorm: f64,
}

fn eval_cell(evals: &[Evaluator], center: Vec<f64>, side: f64, d: usize) -> Cell {
    let mut grad = vec![ZERO; d];
    let mut gphi = vec![0.0; d];
    let mut phi = 0.0;
    for e in evals {
        let v = e.value_grad(&center, &mut grad);
        phi += v.norm_sqr();
        for mu in 0..d {
            gphi[mu] += 2.0 * (v.conj() * grad[mu]).re;
        }
    }
    let gnorm = gphi.iter().map(|g| g * g).sum::<f64>().sqrt();
    Cell { center, side, phi, gnorm }
}

/// A nonnegative self-adjoint trigonometric polynomial with unit mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    poly: TrigPoly,
}

impl Kernel {
    /// Validates unit mean, self-adjointness and nonnegativity on a grid with at least
    /// 8 samples per unit of bandwidth.
    pub fn new(poly: TrigPoly) -> Result<Self> {
        let zero = vec![0; poly.dim()];
        if poly.coeff(&zero) != ONE {
            return Err(invalid("kernel coefficient at the origin must equal 1"));
        }
        if !poly.is_self_adjoint(1e-14) {
            return Err(invalid("kernel must be self-adjoint"));
        }
        let k = Self { poly };
        let min = k.grid_min();
        if min < -EPS_NUM {
            return Err(invalid(format!("kernel takes the negative value {min:e}")));
        }
        Ok(k)
    }

    pub fn poly(&self) -> &TrigPoly {
        &self.poly
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    pub fn mean(&self) -> f64 {
        self.poly.coeff(&vec![0; self.dim()]).re
    }

    /// Fourier coefficient `K̂(k)`.
    pub fn hat(&self, k: &[i64]) -> C64 {
        self.poly.coeff(k)
    }

    /// Minimum of the real part over the verification grid.
    pub fn grid_min(&self) -> f64 {
        let m = (8 * self.poly.bandwidth() as usize).max(16);
        let g0 = eval_grid(&self.poly, m, 0.0);
        let g1 = eval_grid(&self.poly, m, 0.5);
        g0.iter().chain(&g1).map(|z| z.re).fold(f64::INFINITY, f64::min)
    }
}

/// `f ↦ K * f`, coefficientwise `K̂(k) a_k`.
pub fn convolve(k: &Kernel, f: &TrigPoly) -> Result<TrigPoly> {
    if k.dim() != f.dim() {
        return Err(Error::DimensionMismatch(format!("kernel on T^{} and polynomial on T^{}", k.dim(), f.dim())));
    }
    Ok(TrigPoly::from_coeffs(f.dim(), f.iter().map(|(idx, c)| (idx.clone(), k.hat(idx) * c))))
}

/// Fejér kernel `F_n = Σ_{|k|<n} (1 - |k|/n) e^{ikθ}`.
pub fn fejer_kernel(n: usize) -> Result<Kernel> {
    if n == 0 {
        return Err(invalid("Fejér kernel needs n >= 1"));
    }
    let n_i = n as i64;
    let poly = TrigPoly::from_coeffs(
        1,
        (-(n_i - 1)..n_i).map(|k| (vec![k], C64::new((n_i - k.abs()) as f64 / n as f64, 0.0))),
    );
    Kernel::new(poly)
}

/// Quadrature cells per axis for kernel integrals.
pub fn quadrature_cells(dim: usize) -> usize {
    match dim {
        1 => 16384,
        2 => 1024,
        _ => 128,
    }
}

/// Arc distance from `t ∈ [0, 2π]` to `0` on the circle.
fn arc(t: f64) -> f64 {
    t.min(TWO_PI - t).max(0.0)
}

/// Minimum and maximum of the arc distance over `[a, b] ⊂ [0, 2π]`.
fn arc_range(a: f64, b: f64) -> (f64, f64) {
    let lo = arc(a).min(arc(b));
    let hi = if a <= PI && PI <= b { PI } else { arc(a).max(arc(b)) };
    (lo, hi)
}

struct CellGeometry {
    integral: f64,
    rho_center: f64,
    rho_min: f64,
    rho_max: f64,
}

fn for_each_cell(k: &Kernel, mut visit: impl FnMut(CellGeometry)) {
    let d = k.dim();
    let m = quadrature_cells(d);
    let h = TWO_PI / m as f64;
    let ints = cell_integrals(&k.poly, m);
    let axis: Vec<(f64, f64, f64)> = (0..m)
        .map(|j| {
            let (lo, hi) = arc_range(j as f64 * h, (j + 1) as f64 * h);
            (arc((j as f64 + 0.5) * h), lo, hi)
        })
        .collect();
    for (p, integral) in ints.iter().enumerate() {
        let (mut c2, mut lo2, mut hi2) = (0.0, 0.0, 0.0);
        let mut rem = p;
        for _ in 0..d {
            let (c, lo, hi) = axis[rem % m];
            c2 += c * c;
            lo2 += lo * lo;
            hi2 += hi * hi;
            rem /= m;
        }
        visit(CellGeometry { integral: integral.re, rho_center: c2.sqrt(), rho_min: lo2.sqrt(), rho_max: hi2.sqrt() });
    }
}

/// First moment `(2π)^{-d} ∫ K(x) ρ(x) dx` with `ρ` the ℓ² norm of per-axis arc distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub value: f64,
    pub certified_upper: f64,
}

/// Midpoint value from exact cell integrals of `K`; the certified upper bound pairs each
/// cell integral with the extreme of `ρ` over the cell.
pub fn kernel_first_moment(k: &Kernel) -> Result<Moment> {
    let min = k.grid_min();
    if min < -EPS_NUM {
        return Err(invalid(format!("kernel takes the negative value {min:e}")));
    }
    let (mut value, mut upper) = (0.0, 0.0);
    for_each_cell(k, |c| {
        value += c.integral * c.rho_center;
        upper += if c.integral >= 0.0 { c.integral * c.rho_max } else { c.integral * c.rho_min };
    });
    Ok(Moment { value, certified_upper: upper.max(value) })
}

/// Diagnostics for the defining properties of a good kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub min_value: f64,
    pub coeff_at_zero: f64,
    pub window: Vec<(Idx, f64)>,
    pub delta: f64,
    pub outside_mass: f64,
    pub outside_mass_err: f64,
}

/// Minimum grid value, mean, Fourier coefficients on `window`, and the mass of `K`
/// outside the geodesic `δ`-ball around the origin.
pub fn kernel_checks(k: &Kernel, delta: f64, window: &[Idx]) -> KernelReport {
    let (mut mass, mut err) = (0.0, 0.0);
    for_each_cell(k, |c| {
        if c.rho_center > delta {
            mass += c.integral;
        }
        if c.rho_min <= delta && delta < c.rho_max {
            err += c.integral.abs();
        }
    });
    KernelReport {
        min_value: k.grid_min(),
        coeff_at_zero: k.mean(),
        window: window.iter().map(|m| (m.clone(), k.hat(m).re)).collect(),
        delta,
        outside_mass: mass,
        outside_mass_err: err,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn eval_examples() {
        let e1 = TrigPoly::monomial(vec![1], ONE);
        assert_eq!(eval(&e1, &[0.0]).unwrap(), ONE);
        let f = TrigPoly::one(1).add(&e1);
        assert!(eval(&f, &[PI]).unwrap().norm() < 1e-15);
        let g = TrigPoly::from_coeffs(1, [(vec![0], c(1.0)), (vec![1], c(0.5)), (vec![-1], c(0.5))]);
        assert!((eval(&g, &[PI / 2.0]).unwrap() - ONE).norm() < 1e-15);
        assert!(eval(&g, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let mut p = TrigPoly::monomial(vec![2], ONE);
        p.set(vec![2], ZERO);
        assert!(p.is_empty());
        let q = TrigPoly::monomial(vec![1], ONE).sub(&TrigPoly::monomial(vec![1], ONE));
        assert!(q.is_empty());
    }

    #[test]
    fn grid_eval_matches_pointwise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for d in 1..=3 {
            let f = random_self_adjoint(d, 3, &mut rng);
            let m = 7;
            let g = eval_grid(&f, m, 0.25);
            for p in [0, 5, g.len() - 1] {
                let mut x = vec![0.0; d];
                let mut rem = p;
                for mu in (0..d).rev() {
                    x[mu] = ((rem % m) as f64 + 0.25) * TWO_PI / m as f64;
                    rem /= m;
                }
                assert!((g[p] - eval(&f, &x).unwrap()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cell_integrals_sum_to_mean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let f = random_self_adjoint(2, 4, &mut rng);
        let s: C64 = cell_integrals(&f, 32).iter().sum();
        assert!((s - f.coeff(&[0, 0])).norm() < 1e-13);
    }

    #[test]
    fn sup_norm_examples() {
        for k in [0, 1, 5] {
            assert!(sup_norm(&TrigPoly::monomial(vec![k], ONE)).contains(1.0));
        }
        let b = sup_norm(&TrigPoly::one(1).add(&TrigPoly::monomial(vec![1], ONE)));
        assert!(b.contains(2.0) && b.width() <= TOL_NORM, "{b:?}");
        let b = sup_norm(fejer_kernel(3).unwrap().poly());
        assert!(b.lower <= 3.0 + 1e-12 && 3.0 - 1e-12 <= b.upper && b.width() <= TOL_NORM, "{b:?}");
    }

    #[test]
    fn sup_norm_two_dimensional() {
        let f = TrigPoly::from_coeffs(2, [(vec![1, 0], c(1.0)), (vec![0, 1], c(1.0)), (vec![0, 0], c(1.0))]);
        let b = sup_norm(&f);
        assert!(b.contains(3.0) || (b.lower - 3.0).abs() < 1e-12, "{b:?}");
        assert!(b.width() <= TOL_NORM);
    }

    #[test]
    fn convolution_examples() {
        let e1 = TrigPoly::monomial(vec![1], ONE);
        let r = convolve(&fejer_kernel(2).unwrap(), &e1).unwrap();
        assert_eq!(r, TrigPoly::monomial(vec![1], c(0.5)));
        let one = TrigPoly::one(1);
        assert_eq!(convolve(&fejer_kernel(5).unwrap(), &one).unwrap(), one);
        let r = convolve(&fejer_kernel(3).unwrap(), &TrigPoly::monomial(vec![2], ONE)).unwrap();
        assert!((r.coeff(&[2]) - c(1.0 / 3.0)).norm() < 1e-15);
        assert!(convolve(&fejer_kernel(3).unwrap(), &TrigPoly::one(2)).is_err());
    }

    #[test]
    fn fejer_examples() {
        assert!(fejer_kernel(0).is_err());
        assert_eq!(fejer_kernel(1).unwrap().poly(), &TrigPoly::one(1));
        let f3 = fejer_kernel(3).unwrap();
        let want = [(-2, 1.0 / 3.0), (-1, 2.0 / 3.0), (0, 1.0), (1, 2.0 / 3.0), (2, 1.0 / 3.0)];
        assert_eq!(f3.poly().len(), 5);
        for (k, v) in want {
            assert!((f3.hat(&[k]) - c(v)).norm() < 1e-15);
        }
        assert!((eval(fejer_kernel(2).unwrap().poly(), &[0.0]).unwrap() - c(2.0)).norm() < 1e-15);
    }

    #[test]
    fn kernel_rejects_negative_polynomials() {
        let p = TrigPoly::from_coeffs(1, [(vec![0], c(1.0)), (vec![1], c(1.0)), (vec![-1], c(1.0))]);
        assert!(Kernel::new(p).is_err());
        assert!(Kernel::new(TrigPoly::constant(1, c(2.0))).is_err());
    }

    /// `(1/2π)∫|t| e^{ikt} dt` is `π/2` at `k = 0`, `-2/(πk²)` for odd `k`, `0` otherwise.
    fn circle_moment_oracle(k: &Kernel) -> f64 {
        k.poly()
            .iter()
            .map(|(idx, a)| match idx[0] {
                0 => a.re * PI / 2.0,
                j if j % 2 != 0 => a.re * (-2.0 / (PI * (j * j) as f64)),
                _ => 0.0,
            })
            .sum()
    }

    #[test]
    fn first_moment_matches_fourier_oracle() {
        let m1 = kernel_first_moment(&fejer_kernel(1).unwrap()).unwrap();
        assert!((m1.value - PI / 2.0).abs() < 1e-9, "{m1:?}");
        let mut prev = f64::INFINITY;
        for n in [2, 4, 8, 16, 32, 64] {
            let k = fejer_kernel(n).unwrap();
            let m = kernel_first_moment(&k).unwrap();
            let exact = circle_moment_oracle(&k);
            assert!((m.value - exact).abs() < 1e-6, "n={n} {m:?} {exact}");
            assert!(exact <= m.certified_upper && m.certified_upper - exact < 2e-4);
            assert!(m.value < prev);
            prev = m.value;
        }
    }

    #[test]
    fn outside_mass_of_constant_kernel() {
        let r = kernel_checks(&fejer_kernel(1).unwrap(), PI / 2.0, &[vec![0], vec![1]]);
        assert!((r.outside_mass - 0.5).abs() < 1e-12 && r.outside_mass_err < 1e-3, "{r:?}");
        assert_eq!(r.coeff_at_zero, 1.0);
        assert_eq!(r.window[1].1, 0.0);
        let r4 = kernel_checks(&fejer_kernel(4).unwrap(), 0.5, &[]);
        assert!(r4.min_value >= -EPS_NUM);
    }
}
