//! Dense complex matrices and a cyclic Jacobi eigensolver for Hermitian matrices.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = Complex64::new(0.0, 0.0);
pub const ONE: C64 = Complex64::new(1.0, 0.0);
pub const I: C64 = Complex64::new(0.0, 1.0);

/// Off-diagonal threshold of the Jacobi sweeps, relative to the Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(*v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        CMat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn add_scaled(&mut self, other: &CMat, s: C64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(A + A*) / 2`.
    pub fn hermitian_part(&self) -> CMat {
        let adj = self.adjoint();
        self.add(&adj).scale(C64::new(0.5, 0.0))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMat) -> CMat {
        CMat::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    /// Real Frobenius inner product `Re tr(A* B)`.
    pub fn real_inner(&self, other: &CMat) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
    }

    /// Quadratic form `<A k, k>`.
    pub fn quad_form(&self, k: &[C64]) -> C64 {
        let ak = self.mul_vec(k);
        k.iter().zip(&ak).map(|(ki, aki)| ki.conj() * aki).sum()
    }

    /// Sub-block copy.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition `A = V diag(values) V*` of a Hermitian matrix, values ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns.
    pub vectors: CMat,
}

impl Eigh {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    /// `V diag(f(λ)) V*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = CMat::zeros(n, n);
        for k in 0..n {
            if fv[k] == 0.0 {
                continue;
            }
            for i in 0..n {
                let a = v[(i, k)] * fv[k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * v[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Only the Hermitian part of `a` is used. The iteration stops once the off-diagonal
/// Frobenius mass drops below `JACOBI_TOL` times the Frobenius norm of `a`.
pub fn eigh(a: &CMat) -> Eigh {
    assert!(a.is_square(), "eigh needs a square matrix");
    jacobi(a.hermitian_part(), CMat::identity(a.rows))
}

/// Jacobi iteration started from a guess `v0` for the eigenvectors (unitary).
pub fn eigh_warm(a: &CMat, v0: &CMat) -> Eigh {
    let start = v0.adjoint().mul(&a.hermitian_part()).mul(v0);
    jacobi(start.hermitian_part(), v0.clone())
}

fn jacobi(mut a: CMat, mut v: CMat) -> Eigh {
    let n = a.rows;
    let scale = a.frobenius_norm();
    if n <= 1 || scale == 0.0 {
        let values = (0..n).map(|i| a[(i, i)].re).collect();
        return sorted(values, v);
    }
    let target = JACOBI_TOL * scale;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = a[(p, q)];
                let g_abs = g.norm();
                if g_abs <= 1e-300 || g_abs < 1e-18 * scale {
                    continue;
                }
                rotate(&mut a, &mut v, p, q, g, g_abs);
            }
        }
    }
    let values = (0..n).map(|i| a[(i, i)].re).collect();
    sorted(values, v)
}

fn rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize, g: C64, g_abs: f64) {
    let n = a.rows;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let phase = g / g_abs;
    let theta = (aqq - app) / (2.0 * g_abs);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J = [[c, s], [-s conj(phase), c conj(phase)]] on the (p, q) plane.
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;
    // columns: A <- A J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * jqp;
        a[(k, q)] = akp * s + akq * jqq;
    }
    // rows: A <- J* A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * jqp.conj();
        a[(q, k)] = apk * s + aqk * jqq.conj();
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(app - t * g_abs, 0.0);
    a[(q, q)] = C64::new(aqq + t * g_abs, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * jqp;
        v[(k, q)] = vkp * s + vkq * jqq;
    }
}

fn sorted(values: Vec<f64>, v: CMat) -> Eigh {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let vectors = CMat::from_fn(v.rows, n, |r, k| v[(r, order[k])]);
    Eigh { values: order.iter().map(|&i| values[i]).collect(), vectors }
}

/// Hermitian dilation `[[0, A], [A*, 0]]`; its eigenvalues are `±` the singular values of `A`.
pub fn dilation(a: &CMat) -> CMat {
    let (r, c) = (a.rows, a.cols);
    let mut d = CMat::zeros(r + c, r + c);
    d.set_block(0, r, a);
    d.set_block(r, 0, &a.adjoint());
    d
}

/// Largest singular value, via the eigenvalues of the Hermitian dilation.
pub fn operator_norm(a: &CMat) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite("operator_norm input"));
    }
    if a.rows == 0 || a.cols == 0 {
        return Ok(0.0);
    }
    if a.is_square() && a.hermitian_defect() <= 1e-14 * a.max_abs().max(1.0) {
        return Ok(eigh(a).spectral_radius());
    }
    Ok(eigh(&dilation(a)).max())
}

/// Nuclear norm (sum of singular values).
pub fn nuclear_norm(a: &CMat) -> f64 {
    if a.is_square() && a.hermitian_defect() <= 1e-14 * a.max_abs().max(1.0) {
        return eigh(a).values.iter().map(|l| l.abs()).sum();
    }
    0.5 * eigh(&dilation(a)).values.iter().map(|l| l.abs()).sum::<f64>()
}

/// Minimum eigenvalue of the Hermitian part.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigh(a).min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        g.hermitian_part()
    }

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        for (n, seed) in [(1, 0), (2, 1), (5, 2), (12, 3), (30, 4)] {
            let a = random_hermitian(n, seed);
            let e = eigh(&a);
            let rec = e.apply(|l| l);
            assert!(rec.sub(&a).max_abs() < 1e-11, "n={n}");
            let vv = e.vectors.adjoint().mul(&e.vectors);
            assert!(vv.sub(&CMat::identity(n)).max_abs() < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn warm_start_matches_cold() {
        let a = random_hermitian(10, 7);
        let b = a.add(&random_hermitian(10, 8).scale(c(1e-3, 0.0)));
        let ea = eigh(&a);
        let eb = eigh_warm(&b, &ea.vectors);
        let cold = eigh(&b);
        for (x, y) in eb.values.iter().zip(&cold.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_y_has_unit_spectrum() {
        let y = CMat::from_rows(&[vec![ZERO, c(0.0, -1.0)], vec![c(0.0, 1.0), ZERO]]);
        let e = eigh(&y);
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&CMat::identity(4)).unwrap() - 1.0).abs() < 1e-12);
        let a = CMat::from_real_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]);
        assert!((operator_norm(&a).unwrap() - 2.0).abs() < 1e-12);
        let mut bad = CMat::identity(2);
        bad[(0, 1)] = c(f64::NAN, 0.0);
        assert!(operator_norm(&bad).is_err());
    }

    #[test]
    fn nuclear_norm_of_rank_one() {
        let u = [c(1.0, 0.0), c(0.0, 2.0)];
        let v = [c(3.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)];
        let a = CMat::from_fn(2, 3, |i, j| u[i] * v[j].conj());
        assert!((nuclear_norm(&a) - 5.0f64.sqrt() * 5.0).abs() < 1e-10);
    }
}
