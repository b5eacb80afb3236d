//! Compression and symbol maps between the function system and its spectral truncations.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::harmonic::{
    convolve, eval_grid, fejer_kernel, kernel_first_moment, random_self_adjoint, sup_norm, Bracket,
    Idx, Kernel, TrigPoly,
};
use crate::lattice::{intersection_counts, intersection_kernel, LatticePolytope};
use crate::linalg::{eigh, CMat, C64, ZERO};
use crate::opsys::{
    commutator, lipschitz_seminorm_fn, operator_norm, toeplitz_from_function, DiracTruncation, IndexSet,
    ToeplitzOperator,
};

/// A spectral truncation of the circle or of a flat torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    /// Band-limited functions of degree below `n` with Fejér smoothing.
    FejerRiesz { n: usize },
    /// `n × n` Toeplitz matrices.
    ToeplitzCircle { n: usize },
    /// Multi-Toeplitz matrices over the lattice points of the ball of radius `radius` in `Z^dim`.
    TorusSpherical { dim: usize, radius: usize },
    /// Multi-Toeplitz matrices over the lattice points of `level · polytope`.
    TorusPolyhedral { polytope: LatticePolytope, level: usize },
    /// The circle function system compared with itself.
    Identity { level: usize },
}

impl Variant {
    pub fn family(&self) -> &'static str {
        match self {
            Variant::FejerRiesz { .. } => "fejer_riesz",
            Variant::ToeplitzCircle { .. } => "toeplitz_circle",
            Variant::TorusSpherical { .. } => "torus_spherical",
            Variant::TorusPolyhedral { .. } => "torus_polyhedral",
            Variant::Identity { .. } => "identity",
        }
    }

    pub fn level(&self) -> usize {
        match self {
            Variant::FejerRiesz { n } | Variant::ToeplitzCircle { n } => *n,
            Variant::TorusSpherical { radius, .. } => *radius,
            Variant::TorusPolyhedral { level, .. } => *level,
            Variant::Identity { level } => *level,
        }
    }

    /// Same family at another truncation level.
    pub fn at_level(&self, l: usize) -> Variant {
        match self {
            Variant::FejerRiesz { .. } => Variant::FejerRiesz { n: l },
            Variant::ToeplitzCircle { .. } => Variant::ToeplitzCircle { n: l },
            Variant::TorusSpherical { dim, .. } => Variant::TorusSpherical { dim: *dim, radius: l },
            Variant::TorusPolyhedral { polytope, .. } => Variant::TorusPolyhedral { polytope: polytope.clone(), level: l },
            Variant::Identity { .. } => Variant::Identity { level: l },
        }
    }

    /// Dimension of the torus.
    pub fn dim(&self) -> usize {
        match self {
            Variant::TorusSpherical { dim, .. } => *dim,
            Variant::TorusPolyhedral { polytope, .. } => polytope.dim(),
            _ => 1,
        }
    }

    pub fn is_operator(&self) -> bool {
        !matches!(self, Variant::FejerRiesz { .. } | Variant::Identity { .. })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.family(), self.level())
    }
}

/// Element of a truncated system.
#[derive(Clone, Debug, PartialEq)]
pub enum Truncated {
    Poly(TrigPoly),
    Op(ToeplitzOperator),
}

impl Truncated {
    pub fn as_poly(&self) -> Option<&TrigPoly> {
        match self {
            Truncated::Poly(p) => Some(p),
            Truncated::Op(_) => None,
        }
    }

    pub fn as_op(&self) -> Option<&ToeplitzOperator> {
        match self {
            Truncated::Op(t) => Some(t),
            Truncated::Poly(_) => None,
        }
    }
}

/// Map pair `(R, S)` of a variant with its roundtrip kernel and certified constants.
#[derive(Clone, Debug)]
pub struct TruncationPair {
    variant: Variant,
    index_set: Option<Arc<IndexSet>>,
    dirac: Option<DiracTruncation>,
    weights: BTreeMap<Idx, f64>,
    kernel: Option<Kernel>,
    c_fwd: f64,
    c_bwd: f64,
}

impl TruncationPair {
    pub fn new(variant: Variant) -> Result<Self> {
        if variant.level() == 0 {
            return Err(invalid("truncation level must be positive"));
        }
        let index_set = match &variant {
            Variant::ToeplitzCircle { n } => Some(IndexSet::interval(*n)?),
            Variant::TorusSpherical { dim, radius } => Some(IndexSet::ball(*dim, *radius)?),
            Variant::TorusPolyhedral { polytope, level } => Some(IndexSet::polytope(polytope.clone(), *level)?),
            _ => None,
        }
        .map(Arc::new);
        let dirac = index_set.as_ref().map(|s| DiracTruncation::new(s.clone())).transpose()?;
        let kernel = roundtrip_kernel_for(&variant, index_set.as_deref())?;
        let weights = match &index_set {
            Some(s) => {
                let total = s.len() as f64;
                intersection_counts(&s.lattice_set()).into_iter().map(|(m, c)| (m, c as f64 / total)).collect()
            }
            None => BTreeMap::new(),
        };
        let (c_fwd, c_bwd) = match &kernel {
            Some(k) => {
                let c = kernel_first_moment(k)?.certified_upper;
                (c, c)
            }
            None => (0.0, 0.0),
        };
        Ok(Self { variant, index_set, dirac, weights, kernel, c_fwd, c_bwd })
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn dim(&self) -> usize {
        self.variant.dim()
    }

    pub fn index_set(&self) -> Option<&Arc<IndexSet>> {
        self.index_set.as_ref()
    }

    pub fn dirac(&self) -> Option<&DiracTruncation> {
        self.dirac.as_ref()
    }

    /// Roundtrip kernel `K` with `S∘R = K * ·`; absent for the identity variant.
    pub fn kernel(&self) -> Option<&Kernel> {
        self.kernel.as_ref()
    }

    pub fn c_fwd(&self) -> f64 {
        self.c_fwd
    }

    pub fn c_bwd(&self) -> f64 {
        self.c_bwd
    }

    /// Largest frequency representable in the truncated system, per axis.
    pub fn band(&self) -> i64 {
        match &self.variant {
            Variant::FejerRiesz { n } => *n as i64 - 1,
            Variant::Identity { level } => *level as i64,
            _ => self.index_set.as_ref().map_or(0, |s| {
                s.differences().iter().flat_map(|m| m.iter().map(|x| x.abs())).max().unwrap_or(0)
            }),
        }
    }

    /// Unit of the truncated system.
    pub fn unit(&self) -> Truncated {
        match &self.index_set {
            Some(s) => Truncated::Op(ToeplitzOperator::identity(s.clone())),
            None => Truncated::Poly(TrigPoly::one(self.dim())),
        }
    }

    /// `R`: Fejér smoothing for the Fejér-Riesz system, compression to Toeplitz matrices otherwise.
    pub fn compress(&self, f: &TrigPoly) -> Result<Truncated> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!("function on T^{} for {}", f.dim(), self.variant)));
        }
        match (&self.variant, &self.index_set) {
            (Variant::FejerRiesz { .. }, _) => {
                Ok(Truncated::Poly(convolve(self.kernel.as_ref().expect("Fejér kernel present"), f)?))
            }
            (Variant::Identity { .. }, _) => Ok(Truncated::Poly(f.clone())),
            (_, Some(s)) => Ok(Truncated::Op(toeplitz_from_function(f, s)?)),
            _ => unreachable!("operator variants carry an index set"),
        }
    }

    /// `S`: inclusion for the Fejér-Riesz system, the weighted symbol `Σ_m w_m t_m e_m` otherwise.
    pub fn symbolize(&self, t: &Truncated) -> Result<TrigPoly> {
        match (t, self.variant.is_operator()) {
            (Truncated::Poly(p), false) => {
                if let Variant::FejerRiesz { n } = self.variant {
                    if p.bandwidth() >= n as i64 {
                        return Err(invalid(format!("polynomial of degree {} is not in {}", p.bandwidth(), self.variant)));
                    }
                }
                Ok(p.clone())
            }
            (Truncated::Op(op), true) => {
                let s = self.index_set.as_ref().expect("operator variants carry an index set");
                if op.index_set().points() != s.points() {
                    return Err(Error::DimensionMismatch(format!("operator on a foreign index set for {}", self.variant)));
                }
                Ok(TrigPoly::from_coeffs(
                    self.dim(),
                    op.symbol().iter().map(|(m, c)| (m.clone(), c * self.weights.get(m).copied().unwrap_or(0.0))),
                ))
            }
            _ => Err(invalid(format!("operand kind does not match {}", self.variant))),
        }
    }

    /// Weight of the symbol map at the difference `m`.
    pub fn weight(&self, m: &[i64]) -> f64 {
        match &self.variant {
            Variant::FejerRiesz { n } if (m[0].unsigned_abs() as usize) < *n => 1.0,
            Variant::Identity { .. } => 1.0,
            _ => self.weights.get(m).copied().unwrap_or(0.0),
        }
    }

    /// Certified bracket of the norm of a truncated element.
    pub fn norm(&self, t: &Truncated) -> Result<Bracket> {
        match t {
            Truncated::Poly(p) => Ok(sup_norm(p)),
            Truncated::Op(op) => Ok(Bracket::exact(op.norm()?)),
        }
    }

    /// Certified bracket of the Lipschitz seminorm of a truncated element.
    pub fn lipschitz(&self, t: &Truncated) -> Result<Bracket> {
        match t {
            Truncated::Poly(p) => Ok(lipschitz_seminorm_fn(p)),
            Truncated::Op(op) => {
                let d = self.dirac.as_ref().expect("operator variants carry a Dirac operator");
                Ok(Bracket::exact(operator_norm(&commutator(d, op)?)?))
            }
        }
    }
}

fn roundtrip_kernel_for(v: &Variant, s: Option<&IndexSet>) -> Result<Option<Kernel>> {
    match v {
        Variant::FejerRiesz { n } | Variant::ToeplitzCircle { n } => fejer_kernel(*n).map(Some),
        Variant::TorusSpherical { .. } | Variant::TorusPolyhedral { .. } => {
            intersection_kernel(&s.expect("torus variants carry an index set").lattice_set()).map(Some)
        }
        Variant::Identity { .. } => Ok(None),
    }
}

/// Roundtrip kernel `K` with `S∘R = K * ·`.
pub fn roundtrip_kernel(v: &Variant) -> Result<Kernel> {
    let pair = TruncationPair::new(v.clone())?;
    pair.kernel.ok_or_else(|| invalid(format!("{v} has no smoothing kernel")))
}

pub fn compress(pair: &TruncationPair, f: &TrigPoly) -> Result<Truncated> {
    pair.compress(f)
}

pub fn symbolize(pair: &TruncationPair, t: &Truncated) -> Result<TrigPoly> {
    pair.symbolize(t)
}

/// `(c_fwd, c_bwd)`, both the certified first moment of the roundtrip kernel.
pub fn certified_constants(pair: &TruncationPair) -> (f64, f64) {
    (pair.c_fwd, pair.c_bwd)
}

/// Band of the random test functions for the empirical constant: four times the level,
/// capped at [`TORUS_SAMPLE_BAND`] on tori.
pub fn empirical_band(pair: &TruncationPair) -> i64 {
    let l = pair.variant.level() as i64;
    if pair.dim() == 1 {
        4 * l
    } else {
        (4 * l).min(TORUS_SAMPLE_BAND)
    }
}

pub const TORUS_SAMPLE_BAND: i64 = 8;

/// Largest observed `‖S∘R f − f‖_∞ / ‖f‖₁` over random self-adjoint `f`; a lower bound on
/// the best constant.
pub fn empirical_constant(pair: &TruncationPair, trials: usize, seed: u64, exec: Exec) -> Result<f64> {
    if trials == 0 {
        return Err(invalid("empirical constant needs at least one trial"));
    }
    let band = empirical_band(pair);
    let ratios = exec.map_range(trials, |i| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let b = rng.random_range(1..=band.max(1));
        let f = random_self_adjoint(pair.dim(), b, &mut rng);
        let lip = lipschitz_seminorm_fn(&f);
        if lip.upper == 0.0 {
            return Ok(0.0);
        }
        let diff = pair.symbolize(&pair.compress(&f)?)?.sub(&f);
        Ok(sup_norm(&diff).lower / lip.upper)
    });
    ratios.into_iter().try_fold(0.0f64, |m, r| r.map(|v| m.max(v)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Fwd,
    Bwd,
}

/// Outcome of sampled unitality, positivity, and contractivity checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcpReport {
    pub direction: Direction,
    pub amplification: usize,
    pub trials: usize,
    pub unital: bool,
    pub min_eigenvalue: f64,
    pub positivity_violations: usize,
    pub norm_violations: usize,
    pub lipschitz_violations: usize,
}

impl UcpReport {
    pub fn passed(&self) -> bool {
        self.unital && self.positivity_violations == 0 && self.norm_violations == 0 && self.lipschitz_violations == 0
    }
}

const POS_TOL: f64 = 1e-8;
const CONTRACT_TOL: f64 = 1e-10;

/// `L × L` matrix with entries in a truncated system or in the function system.
enum Amplified {
    Polys(Vec<TrigPoly>),
    Ops(Vec<ToeplitzOperator>),
}

/// Minimum eigenvalue of an `L × L` matrix of polynomials over a grid of the torus.
fn min_eig_poly_matrix(g: &[TrigPoly], l: usize) -> f64 {
    let d = g[0].dim();
    let band = g.iter().map(TrigPoly::bandwidth).max().unwrap_or(0) as usize;
    let m = (8 * band).max(8);
    let values: Vec<Vec<C64>> = g.iter().map(|p| eval_grid(p, m, 0.0)).collect();
    (0..m.pow(d as u32))
        .map(|x| eigh(&CMat::from_fn(l, l, |i, j| values[i * l + j][x])).min())
        .fold(f64::INFINITY, f64::min)
}

/// Minimum eigenvalue of the block matrix `((T_ij))`.
fn min_eig_op_matrix(ts: &[ToeplitzOperator], l: usize) -> f64 {
    let q = ts[0].index_set().len();
    let mut big = CMat::zeros(l * q, l * q);
    for i in 0..l {
        for j in 0..l {
            big.set_block(i * q, j * q, &ts[i * l + j].matrix());
        }
    }
    eigh(&big).min()
}

fn min_eig(a: &Amplified, l: usize) -> f64 {
    match a {
        Amplified::Polys(p) => min_eig_poly_matrix(p, l),
        Amplified::Ops(t) => min_eig_op_matrix(t, l),
    }
}

/// Random `H*H` with `H` an `L × L` matrix of polynomials of degree at most `band`.
fn random_positive_function<R: Rng>(dim: usize, l: usize, band: i64, rng: &mut R) -> Vec<TrigPoly> {
    let h: Vec<TrigPoly> = (0..l * l)
        .map(|_| {
            TrigPoly::from_coeffs(
                dim,
                crate::harmonic::box_points(dim, band)
                    .into_iter()
                    .map(|k| (k, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))),
            )
        })
        .collect();
    let mut g = Vec::with_capacity(l * l);
    for i in 0..l {
        for j in 0..l {
            let mut acc = TrigPoly::zero(dim);
            for k in 0..l {
                acc = acc.add(&h[k * l + i].conj().mul(&h[k * l + j]));
            }
            g.push(acc);
        }
    }
    g
}

/// Random positive element `Σ_j v(x_j) v(x_j)* ⊗ W_j` of the amplified Toeplitz system,
/// with `v(x)_k = e^{i k·x}` and `W_j = G_j G_j*`.
fn random_positive_toeplitz<R: Rng>(s: &Arc<IndexSet>, l: usize, rng: &mut R) -> Vec<ToeplitzOperator> {
    let d = s.dim();
    let diffs = s.differences();
    let atoms = 1 + rng.random_range(0..4);
    let mut sym: Vec<BTreeMap<Idx, C64>> = vec![BTreeMap::new(); l * l];
    for _ in 0..atoms {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let g = CMat::from_fn(l, l, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let w = g.mul(&g.adjoint());
        for m in &diffs {
            let phase: f64 = m.iter().zip(&x).map(|(a, b)| *a as f64 * b).sum();
            let e = C64::from_polar(1.0, phase);
            for i in 0..l {
                for j in 0..l {
                    *sym[i * l + j].entry(m.clone()).or_insert(ZERO) += e * w[(i, j)];
                }
            }
        }
    }
    sym.into_iter().map(|s_ij| ToeplitzOperator::new(s.clone(), s_ij)).collect()
}

/// Sampled verification of unitality, complete positivity at amplification `L`, and
/// norm and Lipschitz contractivity of `R` (`Fwd`) or `S` (`Bwd`).
pub fn ucp_check(pair: &TruncationPair, direction: Direction, l: usize, trials: usize, seed: u64) -> Result<UcpReport> {
    if !(1..=3).contains(&l) {
        return Err(invalid("amplification level must be in 1..=3"));
    }
    if pair.index_set.as_ref().is_some_and(|s| s.len() > 16) || pair.band() > 16 {
        return Err(invalid("ucp check supports truncations of size at most 16"));
    }
    let dim = pair.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unital = match direction {
        Direction::Fwd => pair.compress(&TrigPoly::one(dim))? == pair.unit(),
        Direction::Bwd => pair.symbolize(&pair.unit())? == TrigPoly::one(dim),
    };
    let apply = |a: &Amplified| -> Result<Amplified> {
        match (direction, a) {
            (Direction::Fwd, Amplified::Polys(ps)) => {
                let out: Vec<Truncated> = ps.iter().map(|p| pair.compress(p)).collect::<Result<_>>()?;
                Ok(match out[0] {
                    Truncated::Poly(_) => Amplified::Polys(out.into_iter().filter_map(|t| t.as_poly().cloned()).collect()),
                    Truncated::Op(_) => Amplified::Ops(out.into_iter().filter_map(|t| t.as_op().cloned()).collect()),
                })
            }
            (Direction::Bwd, Amplified::Polys(ps)) => {
                Ok(Amplified::Polys(ps.iter().map(|p| pair.symbolize(&Truncated::Poly(p.clone()))).collect::<Result<_>>()?))
            }
            (Direction::Bwd, Amplified::Ops(ts)) => {
                Ok(Amplified::Polys(ts.iter().map(|t| pair.symbolize(&Truncated::Op(t.clone()))).collect::<Result<_>>()?))
            }
            (Direction::Fwd, Amplified::Ops(_)) => Err(invalid("forward map takes functions")),
        }
    };
    let sample_band = pair.band().max(1);
    let mut min_eigenvalue = f64::INFINITY;
    let mut positivity_violations = 0;
    let mut norm_violations = 0;
    let mut lipschitz_violations = 0;
    for trial in 0..trials {
        let input = match direction {
            Direction::Fwd => Amplified::Polys(random_positive_function(dim, l, 1 + rng.random_range(0..sample_band), &mut rng)),
            Direction::Bwd => match &pair.index_set {
                Some(s) if trial % 2 == 0 => Amplified::Ops(random_positive_toeplitz(s, l, &mut rng)),
                _ => {
                    let g = random_positive_function(dim, l, 1 + rng.random_range(0..sample_band), &mut rng);
                    let compressed = g.iter().map(|p| pair.compress(p)).collect::<Result<Vec<_>>>()?;
                    match &compressed[0] {
                        Truncated::Op(_) => Amplified::Ops(compressed.into_iter().filter_map(|t| t.as_op().cloned()).collect()),
                        Truncated::Poly(_) => Amplified::Polys(compressed.into_iter().filter_map(|t| t.as_poly().cloned()).collect()),
                    }
                }
            },
        };
        let e = min_eig(&apply(&input)?, l);
        min_eigenvalue = min_eigenvalue.min(e);
        if e < -POS_TOL {
            positivity_violations += 1;
        }

        let f = random_self_adjoint(dim, sample_band, &mut rng);
        let (before, after, lip_before, lip_after) = match direction {
            Direction::Fwd => {
                let t = pair.compress(&f)?;
                (sup_norm(&f), pair.norm(&t)?, lipschitz_seminorm_fn(&f), pair.lipschitz(&t)?)
            }
            Direction::Bwd => {
                let t = pair.compress(&f)?;
                let s = pair.symbolize(&t)?;
                (pair.norm(&t)?, sup_norm(&s), pair.lipschitz(&t)?, lipschitz_seminorm_fn(&s))
            }
        };
        if after.lower > before.upper + CONTRACT_TOL {
            norm_violations += 1;
        }
        if lip_after.lower > lip_before.upper + CONTRACT_TOL {
            lipschitz_violations += 1;
        }
    }
    Ok(UcpReport {
        direction,
        amplification: l,
        trials,
        unital,
        min_eigenvalue,
        positivity_violations,
        norm_violations,
        lipschitz_violations,
    })
}

/// Identity input at amplification `L` mapped forward; its minimum eigenvalue is 1.
pub fn forward_identity_min_eigenvalue(pair: &TruncationPair, l: usize) -> Result<f64> {
    let dim = pair.dim();
    let g: Vec<TrigPoly> =
        (0..l * l).map(|k| if k / l == k % l { TrigPoly::one(dim) } else { TrigPoly::zero(dim) }).collect();
    let mapped: Vec<Truncated> = g.iter().map(|p| pair.compress(p)).collect::<Result<_>>()?;
    Ok(match &mapped[0] {
        Truncated::Op(_) => min_eig_op_matrix(&mapped.into_iter().filter_map(|t| t.as_op().cloned()).collect::<Vec<_>>(), l),
        Truncated::Poly(_) => {
            min_eig_poly_matrix(&mapped.into_iter().filter_map(|t| t.as_poly().cloned()).collect::<Vec<_>>(), l)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::TOL_NORM;
    use crate::linalg::ONE;

    fn pair(v: Variant) -> TruncationPair {
        TruncationPair::new(v).unwrap()
    }

    fn all_variants(l: usize) -> Vec<Variant> {
        vec![
            Variant::FejerRiesz { n: l },
            Variant::ToeplitzCircle { n: l },
            Variant::TorusSpherical { dim: 2, radius: l },
            Variant::TorusPolyhedral { polytope: LatticePolytope::cube(2), level: l },
        ]
    }

    #[test]
    fn compress_examples() {
        for v in all_variants(2) {
            let p = pair(v);
            assert_eq!(p.compress(&TrigPoly::one(p.dim())).unwrap(), p.unit());
            assert_eq!(p.symbolize(&p.unit()).unwrap(), TrigPoly::one(p.dim()));
        }
        let e1 = TrigPoly::monomial(vec![1], ONE);
        let fr = pair(Variant::FejerRiesz { n: 2 });
        assert_eq!(fr.compress(&e1).unwrap(), Truncated::Poly(TrigPoly::monomial(vec![1], C64::new(0.5, 0.0))));
        let tc = pair(Variant::ToeplitzCircle { n: 2 });
        let t = tc.compress(&e1).unwrap();
        assert_eq!(t.as_op().unwrap().symbol().iter().collect::<Vec<_>>(), vec![(&vec![1], &ONE)]);
        assert_eq!(tc.symbolize(&t).unwrap(), TrigPoly::monomial(vec![1], C64::new(0.5, 0.0)));
        assert!(tc.compress(&TrigPoly::one(2)).is_err());
    }

    #[test]
    fn symbolize_square_example() {
        let p = pair(Variant::TorusPolyhedral { polytope: LatticePolytope::cube(2), level: 1 });
        let s = p.index_set().unwrap().clone();
        let t = ToeplitzOperator::new(s, [(vec![1, 1], ONE)]);
        let f = p.symbolize(&Truncated::Op(t)).unwrap();
        assert!((f.coeff(&[1, 1]) - C64::new(4.0 / 9.0, 0.0)).norm() < 1e-15);
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn kernels_per_variant() {
        for n in [1, 3, 6] {
            let want = fejer_kernel(n).unwrap();
            assert_eq!(roundtrip_kernel(&Variant::FejerRiesz { n }).unwrap(), want);
            assert_eq!(roundtrip_kernel(&Variant::ToeplitzCircle { n }).unwrap(), want);
        }
        let cube = LatticePolytope::cube(2);
        let k = roundtrip_kernel(&Variant::TorusPolyhedral { polytope: cube.clone(), level: 2 }).unwrap();
        assert_eq!(k, crate::lattice::polyhedral_fejer_kernel(&cube, 2).unwrap());
        assert!(roundtrip_kernel(&Variant::Identity { level: 3 }).is_err());
    }

    #[test]
    fn roundtrip_is_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for v in all_variants(3) {
            let p = pair(v);
            for _ in 0..10 {
                let f = random_self_adjoint(p.dim(), 6, &mut rng);
                let lhs = p.symbolize(&p.compress(&f).unwrap()).unwrap();
                let rhs = convolve(p.kernel().unwrap(), &f).unwrap();
                assert!(lhs.max_coeff_diff(&rhs) <= 1e-12);
            }
        }
    }

    #[test]
    fn constants_examples() {
        let (c, cb) = certified_constants(&pair(Variant::FejerRiesz { n: 1 }));
        assert!((c - std::f64::consts::FRAC_PI_2).abs() < 1e-3 && c >= std::f64::consts::FRAC_PI_2 && c == cb);
        let c4 = pair(Variant::ToeplitzCircle { n: 4 }).c_fwd();
        let c16 = pair(Variant::ToeplitzCircle { n: 16 }).c_fwd();
        assert!(c16 < c4);
        assert_eq!(certified_constants(&pair(Variant::Identity { level: 2 })), (0.0, 0.0));
    }

    #[test]
    fn empirical_below_certified() {
        let p = pair(Variant::FejerRiesz { n: 4 });
        let e = empirical_constant(&p, 40, 3, Exec::Sequential).unwrap();
        assert!(e > 0.0 && e <= p.c_fwd() + TOL_NORM, "{e} vs {}", p.c_fwd());
        let id = pair(Variant::Identity { level: 3 });
        assert_eq!(empirical_constant(&id, 5, 3, Exec::Sequential).unwrap(), 0.0);
    }

    #[test]
    fn ucp_examples() {
        for v in [Variant::FejerRiesz { n: 3 }, Variant::ToeplitzCircle { n: 3 }] {
            let p = pair(v);
            assert!((forward_identity_min_eigenvalue(&p, 2).unwrap() - 1.0).abs() < 1e-12);
            for dir in [Direction::Fwd, Direction::Bwd] {
                let r = ucp_check(&p, dir, 2, 20, 9).unwrap();
                assert!(r.passed(), "{r:?}");
            }
        }
    }
}
