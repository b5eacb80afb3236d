//! Correspondences between the UCP spaces of a truncation and of the function system,
//! their empirical distortion, and the certified Gromov-Hausdorff upper bound.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::opsys::spinor_dim;
use crate::truncation::TruncationPair;
use crate::ucpmetric::{
    circle_grid, function_triple, sample_atomic_ucp, sample_choi_ucp, truncated_triple, DistanceResult,
    DistanceSolver, Embedding, MetricConfig, UcpMap,
};

/// Rank of the Stinespring dilation of sampled Choi maps.
pub const CHOI_RANK: usize = 2;
/// Atoms per sampled atomic map.
pub const ATOMS: usize = 3;
/// Largest truncated Hilbert space dimension for which distortion is computed by default.
pub const MAX_DISTORTION_DIM: usize = 64;

/// Which pullback produced a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `(φ_n, φ_n ∘ R)` for a sampled `φ_n` on the truncated system.
    RStar,
    /// `(φ ∘ S, φ)` for a sampled `φ` on the function system.
    SStar,
}

/// One element of the correspondence.
#[derive(Clone, Debug)]
pub struct CorrespondencePair {
    pub branch: Branch,
    pub seed: u64,
    /// Map on the truncated system.
    pub truncated: UcpMap,
    /// Map on the function system.
    pub function: UcpMap,
}

/// Sampled subset of the correspondence of a truncation pair.
#[derive(Clone, Debug)]
pub struct CorrespondenceSample {
    pub pair: Arc<TruncationPair>,
    pub m: usize,
    pub seed: u64,
    pub pairs: Vec<CorrespondencePair>,
}

/// Map on the truncated system drawn for the `R*` branch.
fn sample_truncated(pair: &TruncationPair, m: usize, seed: u64) -> Result<UcpMap> {
    match pair.index_set() {
        Some(set) => Ok(UcpMap::Choi(sample_choi_ucp(set.clone(), spinor_dim(pair.dim()), m, CHOI_RANK, seed)?)),
        None => {
            let grid = circle_grid(pair.variant().level());
            Ok(UcpMap::Atomic(sample_atomic_ucp(1, m, ATOMS, seed, Some(grid))?))
        }
    }
}

/// Map on the function system drawn for the `S*` branch.
fn sample_function(pair: &TruncationPair, m: usize, seed: u64) -> Result<UcpMap> {
    let grid = (pair.dim() == 1).then(|| circle_grid(pair.variant().level()));
    Ok(UcpMap::Atomic(sample_atomic_ucp(pair.dim(), m, ATOMS, seed, grid)?))
}

/// Draws `samples_each` pairs from each branch of the correspondence.
pub fn build_correspondence(pair: Arc<TruncationPair>, samples_each: usize, m: usize, seed: u64) -> Result<CorrespondenceSample> {
    if samples_each == 0 {
        return Err(invalid("samples_each must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(2 * samples_each);
    for _ in 0..samples_each {
        let s = rng.random::<u64>();
        let phi = sample_truncated(&pair, m, s)?;
        pairs.push(CorrespondencePair {
            branch: Branch::RStar,
            seed: s,
            function: UcpMap::pullback_r(phi.clone(), pair.clone()),
            truncated: phi,
        });
    }
    for _ in 0..samples_each {
        let s = rng.random::<u64>();
        let phi = sample_function(&pair, m, s)?;
        pairs.push(CorrespondencePair {
            branch: Branch::SStar,
            seed: s,
            truncated: UcpMap::pullback_s(phi.clone(), pair.clone()),
            function: phi,
        });
    }
    Ok(CorrespondenceSample { pair, m, seed, pairs })
}

/// Distance solvers on the truncated and on the function system of a pair.
#[derive(Clone, Debug)]
pub struct Systems {
    pub truncated: DistanceSolver,
    pub function: DistanceSolver,
}

impl Systems {
    pub fn new(pair: &TruncationPair, cfg: &MetricConfig) -> Result<Self> {
        Ok(Self {
            truncated: DistanceSolver::new(truncated_triple(pair, cfg)?, cfg.clone())?,
            function: DistanceSolver::new(function_triple(pair, cfg)?, cfg.clone())?,
        })
    }
}

/// Distances between two elements of the correspondence on both sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDiscrepancy {
    pub i: usize,
    pub j: usize,
    pub branch_i: Branch,
    pub branch_j: Branch,
    pub d_truncated: f64,
    pub d_function: f64,
    pub gap_truncated: f64,
    pub gap_function: f64,
    pub discrepancy: f64,
    /// For pairs from the same branch, the amount by which the two-sided estimate between
    /// the distances fails (0 when it holds).
    pub chain_violation: Option<f64>,
}

/// Empirical distortion of a sampled correspondence with its certified bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub variant: String,
    pub level: usize,
    pub m: usize,
    pub seed: u64,
    pub c_fwd: f64,
    pub c_bwd: f64,
    /// `2(c_fwd + c_bwd)`.
    pub certified_bound: f64,
    /// Upper bound on the Gromov-Hausdorff distance, `c_fwd + c_bwd`.
    pub gh_upper: f64,
    pub emp_distortion: f64,
    pub max_solver_gap: f64,
    pub max_chain_violation: f64,
    /// Truncation error of the weighted sums, identical on both sides.
    pub tail: f64,
    pub tol_obj: f64,
    pub all_certified: bool,
    pub pairs: Vec<PairDiscrepancy>,
    /// Tolerances that a rigorous bound would need to absorb.
    pub caveat: String,
}

impl DistortionReport {
    /// Excess of the empirical distortion over the certified bound, net of `slack`.
    pub fn bound_excess(&self, slack: f64) -> f64 {
        (self.emp_distortion - self.certified_bound - slack).max(0.0)
    }
}

/// `c_fwd + c_bwd`, an upper bound on the Gromov-Hausdorff distance between the UCP spaces.
pub fn gh_upper_bound(pair: &TruncationPair) -> f64 {
    pair.c_fwd() + pair.c_bwd()
}

/// Whether distortion is computed for this pair under the default size cap.
pub fn distortion_supported(pair: &TruncationPair) -> bool {
    pair.index_set().is_none_or(|s| s.len() * spinor_dim(pair.dim()) <= MAX_DISTORTION_DIM)
}

fn pair_error(e: Error, i: usize, j: usize, side: &str) -> Error {
    match e {
        Error::NotConverged { value, gap, detail } => {
            Error::NotConverged { value, gap, detail: format!("pair ({i}, {j}) on the {side} system: {detail}") }
        }
        other => other,
    }
}

/// Largest `|d_{E_n}(φ_n, φ_n') − d_E(φ, φ')|` over all pairs of sampled elements.
pub fn empirical_distortion(cs: &CorrespondenceSample, systems: &Systems, exec: Exec) -> Result<DistortionReport> {
    let k = cs.pairs.len();
    if k < 2 {
        return Err(invalid("distortion needs at least 2 pairs"));
    }
    let cfg = systems.truncated.config();
    if cfg.m != cs.m {
        return Err(Error::DimensionMismatch(format!("maps into M_{} for a metric on M_{}", cs.m, cfg.m)));
    }
    let embedded: Vec<Result<(Embedding, Embedding)>> = exec.map(&cs.pairs, |p| {
        Ok((systems.truncated.embed(&p.truncated)?, systems.function.embed(&p.function)?))
    });
    let embedded: Vec<(Embedding, Embedding)> = embedded.into_iter().collect::<Result<_>>()?;
    let index: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let solved: Vec<Result<(DistanceResult, DistanceResult)>> = exec.map(&index, |&(i, j)| {
        let dn = systems
            .truncated
            .distance_embedded(&embedded[i].0, &embedded[j].0)
            .map_err(|e| pair_error(e, i, j, "truncated"))?;
        let de = systems
            .function
            .distance_embedded(&embedded[i].1, &embedded[j].1)
            .map_err(|e| pair_error(e, i, j, "function"))?;
        Ok((dn, de))
    });
    let (c_fwd, c_bwd) = (cs.pair.c_fwd(), cs.pair.c_bwd());
    let mut pairs = Vec::with_capacity(index.len());
    let mut all_certified = true;
    let mut tail: f64 = 0.0;
    for (&(i, j), r) in index.iter().zip(solved) {
        let (dn, de) = r?;
        all_certified &= dn.certified && de.certified;
        tail = tail.max(dn.tail).max(de.tail);
        let (bi, bj) = (cs.pairs[i].branch, cs.pairs[j].branch);
        let chain_violation = (bi == bj).then(|| match bi {
            Branch::RStar => (de.value - dn.value).max(dn.value - de.value - 2.0 * c_bwd).max(0.0),
            Branch::SStar => (dn.value - de.value).max(de.value - dn.value - 2.0 * c_fwd).max(0.0),
        });
        pairs.push(PairDiscrepancy {
            i,
            j,
            branch_i: bi,
            branch_j: bj,
            d_truncated: dn.value,
            d_function: de.value,
            gap_truncated: dn.gap,
            gap_function: de.gap,
            discrepancy: (dn.value - de.value).abs(),
            chain_violation,
        });
    }
    let emp_distortion = pairs.iter().map(|p| p.discrepancy).fold(0.0, f64::max);
    let max_solver_gap = pairs.iter().map(|p| p.gap_truncated.max(p.gap_function)).fold(0.0, f64::max);
    let max_chain_violation = pairs.iter().filter_map(|p| p.chain_violation).fold(0.0, f64::max);
    Ok(DistortionReport {
        variant: cs.pair.variant().family().to_string(),
        level: cs.pair.variant().level(),
        m: cs.m,
        seed: cs.seed,
        c_fwd,
        c_bwd,
        certified_bound: 2.0 * (c_fwd + c_bwd),
        gh_upper: c_fwd + c_bwd,
        emp_distortion,
        max_solver_gap,
        max_chain_violation,
        tail,
        tol_obj: cfg.tol_obj,
        all_certified,
        pairs,
        caveat: "distances are weighted sums truncated at depth P, evaluated on discretized systems; \
                 values carry the solver gap, and the omitted terms add at most `tail` to each distance"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use crate::truncation::Variant;
    use crate::ucpmetric::Element;

    fn pair(v: Variant) -> Arc<TruncationPair> {
        Arc::new(TruncationPair::new(v).unwrap())
    }

    #[test]
    fn one_sample_per_branch_gives_two_unital_pairs() {
        let p = pair(Variant::ToeplitzCircle { n: 3 });
        let cs = build_correspondence(p.clone(), 1, 1, 5).unwrap();
        assert_eq!(cs.pairs.len(), 2);
        assert_eq!(cs.pairs[0].branch, Branch::RStar);
        assert_eq!(cs.pairs[1].branch, Branch::SStar);
        let un = Element::Op(crate::opsys::ToeplitzOperator::identity(p.index_set().unwrap().clone()));
        let ue = Element::Grid(crate::ucpmetric::GridFn::new(vec![crate::linalg::ONE; circle_grid(3)]).unwrap());
        for c in &cs.pairs {
            let a = c.truncated.evaluate(&un).unwrap();
            let b = c.function.evaluate(&ue).unwrap();
            assert!(a.sub(&CMat::identity(1)).max_abs() < 1e-9);
            assert!(b.sub(&CMat::identity(1)).max_abs() < 1e-9);
        }
    }

    #[test]
    fn equal_seeds_give_equal_samples() {
        let p = pair(Variant::FejerRiesz { n: 4 });
        let a = build_correspondence(p.clone(), 2, 2, 9).unwrap();
        let b = build_correspondence(p, 2, 2, 9).unwrap();
        let seeds = |c: &CorrespondenceSample| c.pairs.iter().map(|p| p.seed).collect::<Vec<_>>();
        assert_eq!(seeds(&a), seeds(&b));
        let ja: Vec<String> = a.pairs.iter().map(|p| p.function.to_json().or_else(|_| p.truncated.to_json()).unwrap()).collect();
        let jb: Vec<String> = b.pairs.iter().map(|p| p.function.to_json().or_else(|_| p.truncated.to_json()).unwrap()).collect();
        assert_eq!(ja, jb);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(build_correspondence(pair(Variant::ToeplitzCircle { n: 2 }), 0, 1, 0).is_err());
    }

    #[test]
    fn identity_truncation_has_no_distortion() {
        let p = pair(Variant::Identity { level: 2 });
        let cfg = MetricConfig { depth: 3, ..Default::default() };
        let cs = build_correspondence(p.clone(), 2, 1, 1).unwrap();
        let r = empirical_distortion(&cs, &Systems::new(&p, &cfg).unwrap(), Exec::Parallel).unwrap();
        assert_eq!(r.gh_upper, 0.0);
        assert!(r.emp_distortion <= 2.0 * cfg.tol_obj, "{}", r.emp_distortion);
    }

    #[test]
    fn duplicate_pair_contributes_zero() {
        let p = pair(Variant::ToeplitzCircle { n: 2 });
        let cfg = MetricConfig { depth: 3, ..Default::default() };
        let mut cs = build_correspondence(p.clone(), 1, 1, 3).unwrap();
        cs.pairs.push(cs.pairs[0].clone());
        let r = empirical_distortion(&cs, &Systems::new(&p, &cfg).unwrap(), Exec::Sequential).unwrap();
        let dup = r.pairs.iter().find(|d| d.i == 0 && d.j == 2).unwrap();
        assert_eq!(dup.d_truncated, 0.0);
        assert_eq!(dup.d_function, 0.0);
        assert_eq!(dup.discrepancy, 0.0);
    }

    #[test]
    fn gh_upper_is_sum_of_constants() {
        let p = pair(Variant::ToeplitzCircle { n: 4 });
        assert_eq!(gh_upper_bound(&p), p.c_fwd() + p.c_bwd());
        assert_eq!(gh_upper_bound(&pair(Variant::Identity { level: 1 })), 0.0);
    }
}
