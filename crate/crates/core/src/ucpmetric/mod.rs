//! The distance `d(φ, ψ) = sup Σ_p 2^{-p} |⟨(φ-ψ)(f) k_p, k_p⟩|` between UCP maps, the sup
//! running over `‖f‖ ≤ 1` and `‖[D, f]‖ ≤ 1`.
//!
//! The sup is computed on the parametrized systems of [`system`]. Each map is first reduced to
//! its values on a basis of the system ([`Embedding`]); the absolute values are removed by
//! enumerating sign patterns, each sign pattern being a linear problem with certified bounds.

mod maps;
mod oracle;
mod solver;
mod system;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use maps::{apply_r, apply_s, sample_atomic_ucp, sample_choi_ucp, Atom, AtomicUcp, ChoiUcp, UcpMap};
pub use oracle::distance_oracle;
pub use system::{BlockKind, Element, GridFn, LipMode, Triple};

use crate::error::{invalid, Error, Result};
use crate::harmonic::box_points;
use crate::linalg::C64;
use crate::truncation::{TruncationPair, Variant};
use solver::{Iterate, LinearProblem, LpForm, Scaling};

/// Largest per-axis bandwidth of the function system on tori.
pub const TORUS_FUNCTION_BAND: i64 = 8;
/// Longest weighted sum handled by sign enumeration.
pub const MAX_DEPTH: usize = 8;

/// Parameters of the distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Target dimension `m` of the maps.
    pub m: usize,
    /// Number `P` of vectors `k_p` in the weighted sum.
    pub depth: usize,
    /// Seed of the shift applied to the low-discrepancy sequence.
    pub seed: u64,
    /// Restrict the sup to self-adjoint elements.
    pub self_adjoint_only: bool,
    /// Impose `‖[D, f]‖ ≤ 1`; without it the sup is over the unit ball only.
    pub lipschitz: bool,
    pub tol_obj: f64,
    pub max_iter: usize,
    /// Grid step of the brute-force oracle.
    pub oracle_step: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            m: 1,
            depth: 6,
            seed: 0,
            self_adjoint_only: true,
            lipschitz: true,
            tol_obj: 1e-4,
            max_iter: 20_000,
            oracle_step: 1e-2,
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| !c.is_multiple_of(p)) {
            out.push(c);
        }
        c += 1;
    }
    out
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("target dimension must be positive"));
        }
        if !(1..=MAX_DEPTH).contains(&self.depth) {
            return Err(invalid(format!("depth must lie in 1..={MAX_DEPTH}")));
        }
        if !(self.tol_obj > 0.0 && self.oracle_step > 0.0 && self.oracle_step <= 1.0) || self.max_iter == 0 {
            return Err(invalid("tolerances and iteration limits must be positive"));
        }
        Ok(())
    }

    /// `k_1, …, k_P`: shifted Halton points in `[0,1)^{2m+1}` mapped uniformly into the unit
    /// ball of `C^m` (Box-Muller direction, radius `u^{1/2m}`).
    pub fn kp(&self) -> Vec<Vec<C64>> {
        let dims = 2 * self.m + 1;
        let bases = primes(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let shift: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();
        (1..=self.depth as u64)
            .map(|i| {
                let u: Vec<f64> = bases.iter().zip(&shift).map(|(&b, s)| (radical_inverse(i, b) + s).fract()).collect();
                let g: Vec<C64> = (0..self.m)
                    .map(|j| {
                        let r = (-2.0 * (1.0 - u[2 * j]).ln()).sqrt();
                        let t = 2.0 * std::f64::consts::PI * u[2 * j + 1];
                        C64::new(r * t.cos(), r * t.sin())
                    })
                    .collect();
                let norm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let radius = u[dims - 1].powf(1.0 / (2 * self.m) as f64);
                if norm == 0.0 {
                    return vec![C64::new(0.0, 0.0); self.m];
                }
                g.into_iter().map(|z| z * (radius / norm)).collect()
            })
            .collect()
    }

    /// `w = Σ_p 2^{-p} ‖k_p‖²`.
    pub fn weight(&self) -> f64 {
        self.kp().iter().enumerate().map(|(p, k)| 0.5f64.powi(p as i32 + 1) * k.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum()
    }

    /// Bound `2·2^{-P}` on the terms beyond the depth.
    pub fn tail(&self) -> f64 {
        2.0 * 0.5f64.powi(self.depth as i32)
    }
}

/// Grid size of the circle systems at a truncation level.
pub fn circle_grid(level: usize) -> usize {
    (32 * level).max(256).div_ceil(8) * 8
}

/// The function system paired with a truncation.
pub fn function_triple(pair: &TruncationPair, cfg: &MetricConfig) -> Result<Triple> {
    match pair.dim() {
        1 => Triple::piecewise_linear(circle_grid(pair.variant().level()), cfg.self_adjoint_only, cfg.lipschitz),
        d => {
            let b = (4 * pair.band()).clamp(1, TORUS_FUNCTION_BAND);
            Triple::band_limited(d, box_points(d, b), 4 * b as usize, LipMode::Gradient, cfg.self_adjoint_only, cfg.lipschitz)
        }
    }
}

/// The truncated system of a pair.
pub fn truncated_triple(pair: &TruncationPair, cfg: &MetricConfig) -> Result<Triple> {
    let sa = cfg.self_adjoint_only;
    match pair.variant() {
        Variant::FejerRiesz { n } => {
            let b = *n as i64 - 1;
            let freqs = (-b..=b).map(|k| vec![k]).collect();
            Triple::band_limited(1, freqs, circle_grid(*n), LipMode::FiniteDifference, sa, cfg.lipschitz)
        }
        Variant::Identity { level } => Triple::piecewise_linear(circle_grid(*level), sa, cfg.lipschitz),
        _ => Triple::toeplitz(pair.index_set().expect("operator variants carry an index set").clone(), sa, cfg.lipschitz),
    }
}

/// Values `⟨Φ(e_i) k_p, k_p⟩` of a map on the basis of a system.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    values: Vec<Vec<C64>>,
}

impl Embedding {
    pub fn values(&self) -> &[Vec<C64>] {
        &self.values
    }
}

/// Outcome of a distance computation. `lower ≤ d ≤ upper` holds for the truncated sum when
/// `certified`; the omitted terms add at most `tail`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    pub gap: f64,
    pub lower: f64,
    pub upper: f64,
    pub tail: f64,
    pub iterations: usize,
    pub subproblems: usize,
    pub pruned: usize,
    pub certified: bool,
}

impl DistanceResult {
    fn zero(tail: f64) -> Self {
        Self { value: 0.0, gap: 0.0, lower: 0.0, upper: 0.0, tail, iterations: 0, subproblems: 0, pruned: 0, certified: true }
    }
}

/// Distance solver bound to one system.
#[derive(Clone, Debug)]
pub struct DistanceSolver {
    triple: Triple,
    cfg: MetricConfig,
    scaling: Scaling,
    lp: Option<LpForm>,
    kp: Vec<Vec<C64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Total order on embeddings, so that a distance and its reverse run the same computation.
fn canonical_order(a: &Embedding, b: &Embedding) -> std::cmp::Ordering {
    let flat = |e: &Embedding| e.values.iter().flatten().flat_map(|z| [z.re, z.im]).collect::<Vec<f64>>();
    flat(a).iter().zip(&flat(b)).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// Merges parallel functionals (`Σ |c·u|` is unchanged) and drops vanishing ones.
fn merge(cs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let scale = cs.iter().map(|c| dot(c, c).sqrt()).fold(0.0, f64::max);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for c in cs {
        let n = dot(&c, &c).sqrt();
        if n <= 1e-14 * scale.max(f64::MIN_POSITIVE) || n == 0.0 {
            continue;
        }
        let hit = out.iter_mut().find_map(|o| {
            let no = dot(o, o).sqrt();
            let cos = dot(o, &c) / (no * n);
            (cos.abs() >= 1.0 - 1e-12).then_some((o, cos.signum()))
        });
        match hit {
            Some((o, s)) => o.iter_mut().zip(&c).for_each(|(a, b)| *a += s * b),
            None => out.push(c),
        }
    }
    out
}

impl DistanceSolver {
    pub fn new(triple: Triple, cfg: MetricConfig) -> Result<Self> {
        cfg.validate()?;
        if triple.self_adjoint() != cfg.self_adjoint_only || triple.lipschitz() != cfg.lipschitz {
            return Err(invalid("system parametrization does not match the configuration"));
        }
        let scaling = Scaling::new(&triple);
        let lp = LpForm::new(&triple);
        let kp = cfg.kp();
        Ok(Self { triple, cfg, scaling, lp, kp })
    }

    pub fn triple(&self) -> &Triple {
        &self.triple
    }

    pub fn config(&self) -> &MetricConfig {
        &self.cfg
    }

    pub fn embed(&self, map: &UcpMap) -> Result<Embedding> {
        if map.m() != self.cfg.m {
            return Err(Error::DimensionMismatch(format!("map into M_{} for a metric on M_{}", map.m(), self.cfg.m)));
        }
        let n = self.triple.nparams();
        let mut values = vec![vec![C64::new(0.0, 0.0); n]; self.kp.len()];
        let mut e = vec![0.0; n];
        for i in 0..n {
            e[i] = 1.0;
            let x = map.evaluate(&self.triple.element(&e))?;
            e[i] = 0.0;
            if !x.is_finite() {
                return Err(Error::NonFinite("map evaluation"));
            }
            for (p, k) in self.kp.iter().enumerate() {
                values[p][i] = x.quad_form(k);
            }
        }
        Ok(Embedding { values })
    }

    pub fn distance(&self, phi: &UcpMap, psi: &UcpMap) -> Result<DistanceResult> {
        self.distance_embedded(&self.embed(phi)?, &self.embed(psi)?)
    }

    fn problem(&self) -> LinearProblem<'_> {
        LinearProblem { sys: &self.triple, scaling: &self.scaling, lp: self.lp.as_ref(), tol: self.cfg.tol_obj, max_iter: self.cfg.max_iter }
    }

    pub fn distance_embedded(&self, a: &Embedding, b: &Embedding) -> Result<DistanceResult> {
        if a.values.len() != self.kp.len() || b.values.len() != self.kp.len() {
            return Err(Error::DimensionMismatch("embeddings from another solver".into()));
        }
        let (a, b) = if canonical_order(a, b).is_le() { (a, b) } else { (b, a) };
        let funcs: Vec<Vec<C64>> = a
            .values
            .iter()
            .zip(&b.values)
            .enumerate()
            .map(|(p, (x, y))| {
                let w = 0.5f64.powi(p as i32 + 1);
                x.iter().zip(y).map(|(s, t)| (s - t) * w).collect()
            })
            .collect();
        if self.cfg.self_adjoint_only {
            self.solve_signs(funcs.iter().map(|f| f.iter().map(|z| z.re).collect()).collect())
        } else {
            self.solve_phases(funcs)
        }
    }

    fn solve_signs(&self, cs: Vec<Vec<f64>>) -> Result<DistanceResult> {
        let tail = self.cfg.tail();
        let cs = merge(cs);
        if cs.is_empty() {
            return Ok(DistanceResult::zero(tail));
        }
        let tol = self.cfg.tol_obj;
        let lp = self.problem();
        let objective = |u: &[f64]| cs.iter().map(|c| dot(c, u).abs()).sum::<f64>();
        let k = cs.len();
        let (mut lower, mut upper) = (0.0f64, 0.0f64);
        let (mut iterations, mut subproblems, mut pruned) = (0, 0, 0);
        let mut warm: Option<Iterate> = None;
        let mut cert: Option<Vec<system::BlockVal>> = None;
        for g in 0..1usize << (k - 1) {
            let s = g ^ (g >> 1);
            let mut c = cs[0].clone();
            for (p, cp) in cs.iter().enumerate().skip(1) {
                let sign = if s >> (p - 1) & 1 == 1 { -1.0 } else { 1.0 };
                c.iter_mut().zip(cp).for_each(|(a, b)| *a += sign * b);
            }
            if let Some(y) = &cert {
                let ub = lp.upper(&c, y);
                if ub <= lower + 0.5 * tol {
                    upper = upper.max(ub);
                    pruned += 1;
                    continue;
                }
            }
            let r = lp.solve(&c, warm.take(), lower);
            iterations += r.iterations;
            subproblems += 1;
            lower = lower.max(objective(&r.point));
            upper = upper.max(r.upper);
            if !r.converged {
                return Err(Error::NotConverged {
                    value: 0.5 * (lower + upper),
                    gap: upper - lower,
                    detail: format!("sign pattern {s:#b} after {} iterations", r.iterations),
                });
            }
            warm = Some(r.last);
            cert = Some(r.dual);
        }
        let upper = upper.max(lower);
        Ok(DistanceResult {
            value: 0.5 * (lower + upper),
            gap: upper - lower,
            lower,
            upper,
            tail,
            iterations,
            subproblems,
            pruned,
            certified: true,
        })
    }

    /// Alternates between a linear problem with fixed phases and the phases of the maximizer.
    fn solve_phases(&self, zs: Vec<Vec<C64>>) -> Result<DistanceResult> {
        let tail = self.cfg.tail();
        if zs.iter().all(|z| z.iter().all(|v| v.norm() == 0.0)) {
            return Ok(DistanceResult::zero(tail));
        }
        let tol = self.cfg.tol_obj;
        let lp = self.problem();
        let objective = |u: &[f64]| {
            zs.iter().map(|z| z.iter().zip(u).map(|(a, b)| a * b).sum::<C64>().norm()).sum::<f64>()
        };
        let mut phases = vec![C64::new(1.0, 0.0); zs.len()];
        let (mut best, mut gap) = (0.0f64, f64::INFINITY);
        let (mut iterations, mut subproblems) = (0, 0);
        let mut warm: Option<Iterate> = None;
        for _ in 0..12 {
            let mut c = vec![0.0; self.triple.nparams()];
            for (z, ph) in zs.iter().zip(&phases) {
                c.iter_mut().zip(z).for_each(|(a, v)| *a += (ph.conj() * v).re);
            }
            let r = lp.solve(&c, warm.take(), f64::NEG_INFINITY);
            iterations += r.iterations;
            subproblems += 1;
            if !r.converged {
                return Err(Error::NotConverged { value: best, gap: r.upper - r.lower, detail: "phase alternation".into() });
            }
            let v = objective(&r.point);
            gap = r.upper - r.lower;
            let improved = v > best + 0.1 * tol;
            best = best.max(v);
            for (z, ph) in zs.iter().zip(phases.iter_mut()) {
                let zu: C64 = z.iter().zip(&r.point).map(|(a, b)| a * b).sum();
                if zu.norm() > 0.0 {
                    *ph = zu / zu.norm();
                }
            }
            warm = Some(r.last);
            if !improved {
                break;
            }
        }
        Ok(DistanceResult {
            value: best,
            gap,
            lower: best,
            upper: best + gap,
            tail,
            iterations,
            subproblems,
            pruned: 0,
            certified: false,
        })
    }
}

/// `d(φ, ψ)` on `triple`.
pub fn distance(phi: &UcpMap, psi: &UcpMap, cfg: &MetricConfig, triple: &Triple) -> Result<DistanceResult> {
    DistanceSolver::new(triple.clone(), cfg.clone())?.distance(phi, psi)
}
