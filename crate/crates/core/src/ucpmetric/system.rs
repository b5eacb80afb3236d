//! Real parametrizations of the unit balls `{f : ‖f‖ ≤ 1, ‖f‖₁ ≤ 1}` of the systems on
//! which distances are computed.
//!
//! Every system is written as `u ↦ (A_0 u, A_1 u)` with `A_0` the norm block and `A_1` the
//! Lipschitz block. The parameters are scaled so that `A_0ᵀA_0 = I`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::harmonic::{contract_axes, neg, Idx, TrigPoly};
use crate::linalg::{CMat, C64, I, ZERO};
use crate::opsys::{clifford, gamma_matrices, IndexSet, ToeplitzOperator};

const TWO_PI: f64 = 2.0 * PI;

/// Piecewise-linear function on the uniform grid `x_j = 2πj/M` of the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    values: Vec<C64>,
}

impl GridFn {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("grid function needs at least two nodes"));
        }
        Ok(Self { values })
    }

    /// Samples of `f` at the grid nodes.
    pub fn sample(f: &TrigPoly, nodes: usize) -> Result<Self> {
        if f.dim() != 1 {
            return Err(invalid("grid functions live on the circle"));
        }
        Self::new(crate::harmonic::eval_grid(f, nodes, 0.0))
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn step(&self) -> f64 {
        TWO_PI / self.nodes() as f64
    }

    /// Linear interpolation at `x`.
    pub fn at(&self, x: f64) -> C64 {
        let m = self.nodes();
        let t = x.rem_euclid(TWO_PI) / self.step();
        let j = (t.floor() as usize).min(m - 1);
        let frac = t - j as f64;
        self.values[j] * (1.0 - frac) + self.values[(j + 1) % m] * frac
    }

    /// Fourier coefficient `(2π)^{-1} ∫ f e^{-ikx} dx`.
    pub fn fourier(&self, k: i64) -> C64 {
        let h = self.step();
        let t = 0.5 * k as f64 * h;
        let sinc2 = if k == 0 { 1.0 } else { (t.sin() / t).powi(2) };
        let w = h / TWO_PI * sinc2;
        self.values.iter().enumerate().map(|(j, v)| v * C64::from_polar(w, -(k as f64) * j as f64 * h)).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Lipschitz constant for the geodesic metric.
    pub fn lipschitz(&self) -> f64 {
        let m = self.nodes();
        (0..m).map(|j| (self.values[(j + 1) % m] - self.values[j]).norm()).fold(0.0, f64::max) / self.step()
    }
}

/// Element of one of the systems.
#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    Op(ToeplitzOperator),
    Poly(TrigPoly),
    Grid(GridFn),
}

/// Shape of a constraint block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// Hermitian `n × n` matrices, unit ball of the operator norm.
    SpecHerm { n: usize },
    /// General `n × n` matrices, unit ball of the operator norm.
    SpecGeneral { n: usize },
    /// `count` groups of `size` reals, each in the Euclidean unit ball.
    Groups { size: usize, count: usize },
}

/// Value of a constraint block.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockVal {
    Mat(CMat),
    Vec(Vec<f64>),
}

impl BlockVal {
    pub fn zeros(kind: BlockKind) -> Self {
        match kind {
            BlockKind::SpecHerm { n } | BlockKind::SpecGeneral { n } => BlockVal::Mat(CMat::zeros(n, n)),
            BlockKind::Groups { size, count } => BlockVal::Vec(vec![0.0; size * count]),
        }
    }

    /// `self + a·other`.
    pub fn axpy(&mut self, a: f64, other: &BlockVal) {
        match (self, other) {
            (BlockVal::Mat(x), BlockVal::Mat(y)) => x.add_scaled(y, C64::new(a, 0.0)),
            (BlockVal::Vec(x), BlockVal::Vec(y)) => x.iter_mut().zip(y).for_each(|(p, q)| *p += a * q),
            _ => panic!("block shape mismatch"),
        }
    }

    pub fn scaled(&self, a: f64) -> BlockVal {
        match self {
            BlockVal::Mat(x) => BlockVal::Mat(x.scale(C64::new(a, 0.0))),
            BlockVal::Vec(x) => BlockVal::Vec(x.iter().map(|v| a * v).collect()),
        }
    }

    pub fn inner(&self, other: &BlockVal) -> f64 {
        match (self, other) {
            (BlockVal::Mat(x), BlockVal::Mat(y)) => x.real_inner(y),
            (BlockVal::Vec(x), BlockVal::Vec(y)) => x.iter().zip(y).map(|(p, q)| p * q).sum(),
            _ => panic!("block shape mismatch"),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }
}

/// Where the real and imaginary parts of one coefficient sit in the parameter vector.
#[derive(Clone, Copy, Debug)]
struct ParamRef {
    re: usize,
    im: Option<usize>,
    scale: f64,
    sgn: f64,
}

impl ParamRef {
    fn value(&self, u: &[f64]) -> C64 {
        let im = self.im.map_or(0.0, |i| self.sgn * u[i]);
        C64::new(u[self.re], im) * self.scale
    }

    /// Adds the gradient of `Re(conj(value(u)) g)`.
    fn pull(&self, g: C64, out: &mut [f64]) {
        out[self.re] += self.scale * g.re;
        if let Some(i) = self.im {
            out[i] += self.sgn * self.scale * g.im;
        }
    }
}

/// Parameter references for coefficients indexed by a symmetric set of frequencies.
/// `norm_sq(k)` is the squared norm-block contribution of a unit coefficient at `k`.
fn layout(freqs: &[Idx], self_adjoint: bool, norm_sq: impl Fn(&Idx) -> f64) -> (Vec<ParamRef>, usize) {
    let pos: std::collections::HashMap<&Idx, usize> = freqs.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut refs = vec![ParamRef { re: 0, im: None, scale: 0.0, sgn: 1.0 }; freqs.len()];
    let mut next = 0;
    if self_adjoint {
        let zero = vec![0; freqs[0].len()];
        if let Some(&z) = pos.get(&zero) {
            refs[z] = ParamRef { re: next, im: None, scale: 1.0 / norm_sq(&zero).sqrt(), sgn: 1.0 };
            next += 1;
        }
        for (i, k) in freqs.iter().enumerate() {
            let nk = neg(k);
            if *k <= nk {
                continue;
            }
            let j = pos[&nk];
            let scale = 1.0 / (2.0 * norm_sq(k)).sqrt();
            refs[i] = ParamRef { re: next, im: Some(next + 1), scale, sgn: 1.0 };
            refs[j] = ParamRef { re: next, im: Some(next + 1), scale, sgn: -1.0 };
            next += 2;
        }
    } else {
        for (i, k) in freqs.iter().enumerate() {
            refs[i] = ParamRef { re: next, im: Some(next + 1), scale: 1.0 / norm_sq(k).sqrt(), sgn: 1.0 };
            next += 2;
        }
    }
    (refs, next)
}

#[derive(Clone, Debug)]
struct ToeplitzSys {
    index_set: Arc<IndexSet>,
    diffs: Vec<Idx>,
    did: Vec<usize>,
    refs: Vec<ParamRef>,
    /// `i Σ_μ m_μ γ^μ` for every difference `m`.
    igam: Vec<CMat>,
    spinor: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LipMode {
    /// `|f(x_{j+1}) - f(x_j)| ≤ h` on the circle grid.
    FiniteDifference,
    /// `‖∇f(x_g)‖₂ ≤ 1` at the grid points.
    Gradient,
}

#[derive(Clone, Debug)]
struct BandSys {
    dim: usize,
    freqs: Vec<Idx>,
    refs: Vec<ParamRef>,
    band: i64,
    grid: usize,
    lip: LipMode,
    fwd: Vec<C64>,
    bwd: Vec<C64>,
}

#[derive(Clone, Debug)]
enum Structure {
    Toeplitz(ToeplitzSys),
    Band(BandSys),
    Grid { nodes: usize },
}

/// A system together with its seminorm, parametrized for the distance solver.
#[derive(Clone, Debug)]
pub struct Triple {
    structure: Structure,
    self_adjoint: bool,
    lipschitz: bool,
    nparams: usize,
    blocks: Vec<BlockKind>,
}

impl Triple {
    /// Toeplitz matrices over `index_set` with the seminorm `‖[D_N, ·]‖`.
    pub fn toeplitz(index_set: Arc<IndexSet>, self_adjoint: bool, lipschitz: bool) -> Result<Self> {
        let q = index_set.len();
        let gamma = gamma_matrices(index_set.dim())?;
        let spinor = gamma[0].rows();
        let diffs = index_set.differences();
        let dpos: std::collections::HashMap<&Idx, usize> = diffs.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let pts = index_set.points();
        let mut did = Vec::with_capacity(q * q);
        let mut counts = vec![0usize; diffs.len()];
        for k in pts {
            for l in pts {
                let m: Idx = k.iter().zip(l).map(|(a, b)| a - b).collect();
                let d = dpos[&m];
                did.push(d);
                counts[d] += 1;
            }
        }
        let (refs, nparams) = layout(&diffs, self_adjoint, |m| counts[dpos[m]] as f64);
        let igam = diffs
            .iter()
            .map(|m| clifford(&gamma, &m.iter().map(|&x| x as f64).collect::<Vec<_>>()).scale(I))
            .collect();
        let (norm, lip) = if self_adjoint {
            (BlockKind::SpecHerm { n: q }, BlockKind::SpecHerm { n: q * spinor })
        } else {
            (BlockKind::SpecGeneral { n: q }, BlockKind::SpecGeneral { n: q * spinor })
        };
        let blocks = if lipschitz { vec![norm, lip] } else { vec![norm] };
        Ok(Self {
            structure: Structure::Toeplitz(ToeplitzSys { index_set, diffs, did, refs, igam, spinor }),
            self_adjoint,
            lipschitz,
            nparams,
            blocks,
        })
    }

    /// Polynomials with Fourier support `freqs` (symmetric, containing 0), constrained on the
    /// grid of `grid` points per axis.
    pub fn band_limited(dim: usize, freqs: Vec<Idx>, grid: usize, lip: LipMode, self_adjoint: bool, lipschitz: bool) -> Result<Self> {
        if freqs.is_empty() || freqs.iter().any(|k| k.len() != dim) {
            return Err(invalid("frequency support must be nonempty and match the dimension"));
        }
        if lip == LipMode::FiniteDifference && dim != 1 {
            return Err(invalid("finite-difference seminorm is defined on the circle only"));
        }
        if lip == LipMode::Gradient && dim > 1 && !self_adjoint && lipschitz {
            return Err(invalid("gradient seminorm of complex functions on tori is not a pointwise Euclidean norm"));
        }
        let band = freqs.iter().flat_map(|k| k.iter().map(|x| x.abs())).max().unwrap_or(0);
        if grid as i64 <= 2 * band {
            return Err(invalid("constraint grid must exceed twice the bandwidth"));
        }
        let npts = (grid as f64).powi(dim as i32);
        let (refs, nparams) = layout(&freqs, self_adjoint, |_| npts);
        let b = (2 * band + 1) as usize;
        let h = TWO_PI / grid as f64;
        let mut fwd = Vec::with_capacity(b * grid);
        for bi in 0..b {
            for j in 0..grid {
                fwd.push(C64::from_polar(1.0, (bi as i64 - band) as f64 * j as f64 * h));
            }
        }
        let mut bwd = Vec::with_capacity(b * grid);
        for j in 0..grid {
            for bi in 0..b {
                bwd.push(C64::from_polar(1.0, -((bi as i64 - band) as f64) * j as f64 * h));
            }
        }
        let gpts = grid.pow(dim as u32);
        let g = if self_adjoint { 1 } else { 2 };
        let norm = BlockKind::Groups { size: g, count: gpts };
        let lipb = match lip {
            LipMode::FiniteDifference => BlockKind::Groups { size: g, count: gpts },
            LipMode::Gradient => BlockKind::Groups { size: g * dim, count: gpts },
        };
        let blocks = if lipschitz { vec![norm, lipb] } else { vec![norm] };
        Ok(Self {
            structure: Structure::Band(BandSys { dim, freqs, refs, band, grid, lip, fwd, bwd }),
            self_adjoint,
            lipschitz,
            nparams,
            blocks,
        })
    }

    /// Piecewise-linear functions on the circle grid of `nodes` points, with exact sup-norm
    /// and Lipschitz constant.
    pub fn piecewise_linear(nodes: usize, self_adjoint: bool, lipschitz: bool) -> Result<Self> {
        if nodes < 3 {
            return Err(invalid("piecewise-linear system needs at least three nodes"));
        }
        let g = if self_adjoint { 1 } else { 2 };
        let b = BlockKind::Groups { size: g, count: nodes };
        let blocks = if lipschitz { vec![b, b] } else { vec![b] };
        Ok(Self { structure: Structure::Grid { nodes }, self_adjoint, lipschitz, nparams: g * nodes, blocks })
    }

    pub fn nparams(&self) -> usize {
        self.nparams
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    pub fn self_adjoint(&self) -> bool {
        self.self_adjoint
    }

    pub fn lipschitz(&self) -> bool {
        self.lipschitz
    }

    /// Grid size of the circle systems.
    pub fn grid_nodes(&self) -> Option<usize> {
        match &self.structure {
            Structure::Grid { nodes } => Some(*nodes),
            Structure::Band(b) if b.dim == 1 => Some(b.grid),
            _ => None,
        }
    }

    pub fn index_set(&self) -> Option<&Arc<IndexSet>> {
        match &self.structure {
            Structure::Toeplitz(t) => Some(&t.index_set),
            _ => None,
        }
    }

    /// Parameter carrying the unit, when the unit is a coordinate direction.
    pub fn unit_param(&self) -> Option<usize> {
        match &self.structure {
            Structure::Toeplitz(_) | Structure::Band(_) if self.self_adjoint => Some(0),
            _ => None,
        }
    }

    /// Element with parameters `u`.
    pub fn element(&self, u: &[f64]) -> Element {
        match &self.structure {
            Structure::Toeplitz(t) => Element::Op(ToeplitzOperator::new(
                t.index_set.clone(),
                t.diffs.iter().zip(&t.refs).map(|(m, r)| (m.clone(), r.value(u))),
            )),
            Structure::Band(b) => {
                Element::Poly(TrigPoly::from_coeffs(b.dim, b.freqs.iter().zip(&b.refs).map(|(k, r)| (k.clone(), r.value(u)))))
            }
            Structure::Grid { nodes } => {
                let vals = if self.self_adjoint {
                    u.iter().map(|&x| C64::new(x, 0.0)).collect()
                } else {
                    (0..*nodes).map(|j| C64::new(u[2 * j], u[2 * j + 1])).collect()
                };
                Element::Grid(GridFn { values: vals })
            }
        }
    }

    /// `A_b u`.
    pub fn apply(&self, block: usize, u: &[f64]) -> BlockVal {
        match &self.structure {
            Structure::Toeplitz(t) => {
                let tau: Vec<C64> = t.refs.iter().map(|r| r.value(u)).collect();
                BlockVal::Mat(if block == 0 { t.norm_matrix(&tau) } else { t.lip_matrix(&tau) })
            }
            Structure::Band(b) => {
                let coeffs: Vec<C64> = b.refs.iter().map(|r| r.value(u)).collect();
                BlockVal::Vec(b.apply(block, &coeffs, self.self_adjoint))
            }
            Structure::Grid { nodes } => BlockVal::Vec(grid_apply(*nodes, block, u, self.self_adjoint)),
        }
    }

    /// `out += A_bᵀ y`.
    pub fn apply_t(&self, block: usize, y: &BlockVal, out: &mut [f64]) {
        match (&self.structure, y) {
            (Structure::Toeplitz(t), BlockVal::Mat(m)) => {
                let g = if block == 0 { t.norm_adjoint(m) } else { t.lip_adjoint(m) };
                for (r, gd) in t.refs.iter().zip(g) {
                    r.pull(gd, out);
                }
            }
            (Structure::Band(b), BlockVal::Vec(v)) => {
                let g = b.adjoint(block, v, self.self_adjoint);
                for (r, gk) in b.refs.iter().zip(g) {
                    r.pull(gk, out);
                }
            }
            (Structure::Grid { nodes }, BlockVal::Vec(v)) => grid_adjoint(*nodes, block, v, self.self_adjoint, out),
            _ => panic!("block shape mismatch"),
        }
    }
}

impl ToeplitzSys {
    fn norm_matrix(&self, tau: &[C64]) -> CMat {
        let q = self.index_set.len();
        let mut x = CMat::zeros(q, q);
        x.data_mut().iter_mut().zip(&self.did).for_each(|(e, &d)| *e = tau[d]);
        x
    }

    fn lip_matrix(&self, tau: &[C64]) -> CMat {
        let q = self.index_set.len();
        let s = self.spinor;
        let mut x = CMat::zeros(q * s, q * s);
        for k in 0..q {
            for l in 0..q {
                let d = self.did[k * q + l];
                if tau[d] == ZERO {
                    continue;
                }
                let g = &self.igam[d];
                for a in 0..s {
                    for b in 0..s {
                        x[(k * s + a, l * s + b)] = tau[d] * g[(a, b)];
                    }
                }
            }
        }
        x
    }

    fn norm_adjoint(&self, y: &CMat) -> Vec<C64> {
        let mut g = vec![ZERO; self.diffs.len()];
        for (v, &d) in y.data().iter().zip(&self.did) {
            g[d] += v;
        }
        g
    }

    fn lip_adjoint(&self, y: &CMat) -> Vec<C64> {
        let q = self.index_set.len();
        let s = self.spinor;
        let mut g = vec![ZERO; self.diffs.len()];
        for k in 0..q {
            for l in 0..q {
                let d = self.did[k * q + l];
                let gm = &self.igam[d];
                let mut acc = ZERO;
                for a in 0..s {
                    for b in 0..s {
                        acc += gm[(a, b)].conj() * y[(k * s + a, l * s + b)];
                    }
                }
                g[d] += acc;
            }
        }
        g
    }
}

impl BandSys {
    fn box_len(&self) -> usize {
        (2 * self.band + 1) as usize
    }

    fn box_pos(&self, k: &[i64]) -> usize {
        let b = self.box_len();
        k.iter().fold(0usize, |acc, &x| acc * b + (x + self.band) as usize)
    }

    /// Values on the grid of the polynomial with coefficients `c_k · w(k)`.
    fn values(&self, coeffs: &[C64], w: impl Fn(&Idx) -> C64) -> Vec<C64> {
        let b = self.box_len();
        let mut dense = vec![ZERO; b.pow(self.dim as u32)];
        for (k, c) in self.freqs.iter().zip(coeffs) {
            dense[self.box_pos(k)] = c * w(k);
        }
        contract_axes(dense, &vec![b; self.dim], self.grid, &self.fwd)
    }

    /// `Σ_g y_g e^{-ik·x_g}` on the coefficient box.
    fn analyze(&self, y: Vec<C64>) -> Vec<C64> {
        contract_axes(y, &vec![self.grid; self.dim], self.box_len(), &self.bwd)
    }

    fn apply(&self, block: usize, coeffs: &[C64], sa: bool) -> Vec<f64> {
        let push = |out: &mut Vec<f64>, z: C64| {
            out.push(z.re);
            if !sa {
                out.push(z.im);
            }
        };
        let npts = self.grid.pow(self.dim as u32);
        let mut out = Vec::new();
        if block == 0 {
            for z in self.values(coeffs, |_| C64::new(1.0, 0.0)) {
                push(&mut out, z);
            }
            return out;
        }
        match self.lip {
            LipMode::FiniteDifference => {
                let v = self.values(coeffs, |_| C64::new(1.0, 0.0));
                let h = TWO_PI / self.grid as f64;
                for j in 0..npts {
                    push(&mut out, (v[(j + 1) % npts] - v[j]) / h);
                }
            }
            LipMode::Gradient => {
                let parts: Vec<Vec<C64>> =
                    (0..self.dim).map(|mu| self.values(coeffs, |k| C64::new(0.0, k[mu] as f64))).collect();
                for g in 0..npts {
                    for p in &parts {
                        push(&mut out, p[g]);
                    }
                }
            }
        }
        out
    }

    fn adjoint(&self, block: usize, y: &[f64], sa: bool) -> Vec<C64> {
        let npts = self.grid.pow(self.dim as u32);
        let gs = if sa { 1 } else { 2 };
        let at = |i: usize| if sa { C64::new(y[i], 0.0) } else { C64::new(y[2 * i], y[2 * i + 1]) };
        let pick = |spec: &[C64]| -> Vec<C64> { self.freqs.iter().map(|k| spec[self.box_pos(k)]).collect() };
        if block == 0 {
            return pick(&self.analyze((0..npts).map(at).collect()));
        }
        match self.lip {
            LipMode::FiniteDifference => {
                let h = TWO_PI / self.grid as f64;
                let z: Vec<C64> = (0..npts).map(|j| (at((j + npts - 1) % npts) - at(j)) / h).collect();
                pick(&self.analyze(z))
            }
            LipMode::Gradient => {
                let d = self.dim;
                let mut total = vec![ZERO; self.freqs.len()];
                for mu in 0..d {
                    let comp: Vec<C64> = (0..npts)
                        .map(|g| {
                            let i = (g * d + mu) * gs;
                            if sa {
                                C64::new(y[i], 0.0)
                            } else {
                                C64::new(y[i], y[i + 1])
                            }
                        })
                        .collect();
                    let spec = pick(&self.analyze(comp));
                    for ((t, s), k) in total.iter_mut().zip(spec).zip(&self.freqs) {
                        *t += C64::new(0.0, -(k[mu] as f64)) * s;
                    }
                }
                total
            }
        }
    }
}

fn grid_apply(nodes: usize, block: usize, u: &[f64], sa: bool) -> Vec<f64> {
    if block == 0 {
        return u.to_vec();
    }
    let h = TWO_PI / nodes as f64;
    let g = if sa { 1 } else { 2 };
    let mut out = vec![0.0; u.len()];
    for j in 0..nodes {
        let n = (j + 1) % nodes;
        for c in 0..g {
            out[j * g + c] = (u[n * g + c] - u[j * g + c]) / h;
        }
    }
    out
}

fn grid_adjoint(nodes: usize, block: usize, y: &[f64], sa: bool, out: &mut [f64]) {
    if block == 0 {
        out.iter_mut().zip(y).for_each(|(o, v)| *o += v);
        return;
    }
    let h = TWO_PI / nodes as f64;
    let g = if sa { 1 } else { 2 };
    for j in 0..nodes {
        let p = (j + nodes - 1) % nodes;
        for c in 0..g {
            out[j * g + c] += (y[p * g + c] - y[j * g + c]) / h;
        }
    }
}
