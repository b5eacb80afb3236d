//! Kernel reports, one-off distances and the Toeplitz duality corpus.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use ucp_trunc::harmonic::{box_points, kernel_checks, kernel_first_moment, KernelReport, Moment};
use ucp_trunc::linalg::C64;
use ucp_trunc::opsys::{duality_order_check, DualityReport, IndexSet, ToeplitzOperator};
use ucp_trunc::truncation::{roundtrip_kernel, TruncationPair, Variant};
use ucp_trunc::ucpmetric::{distance, function_triple, truncated_triple, DistanceResult, MetricConfig, UcpMap};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Radius of the Fourier window reported for each kernel.
pub const KERNEL_WINDOW: i64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelLevel {
    pub variant: Variant,
    pub level: usize,
    pub checks: KernelReport,
    pub first_moment: Moment,
}

pub fn kernel_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.join(format!("{}_kernels.json", cfg.variant.family()))
}

/// Kernel diagnostics at every sweep level, written as one JSON array.
pub fn kernel_report(cfg: &ExperimentConfig) -> Result<Vec<KernelLevel>, CliError> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.sweep.len());
    for &level in &cfg.sweep {
        let variant = cfg.variant.at(level);
        let k = roundtrip_kernel(&variant)?;
        let window = box_points(k.dim(), KERNEL_WINDOW);
        out.push(KernelLevel { variant, level, checks: kernel_checks(&k, cfg.kernel_delta, &window), first_moment: kernel_first_moment(&k)? });
    }
    std::fs::create_dir_all(&cfg.out)?;
    std::fs::write(kernel_path(cfg), serde_json::to_string_pretty(&out)?)?;
    Ok(out)
}

/// Which system of a truncation pair a distance is computed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Truncated,
    Function,
}

/// Distance between two serialized maps on one side of a truncation pair.
pub fn one_off_distance(a: &str, b: &str, variant: Variant, side: Side, metric: &MetricConfig) -> Result<DistanceResult, CliError> {
    let pair = Arc::new(TruncationPair::new(variant)?);
    let triple = match side {
        Side::Truncated => truncated_triple(&pair, metric)?,
        Side::Function => function_triple(&pair, metric)?,
    };
    let (a, b) = (UcpMap::from_json(a)?, UcpMap::from_json(b)?);
    Ok(distance(&a, &b, metric, &triple)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    /// Moments of a positive atomic measure, hence positive semidefinite.
    Moment,
    /// Independent uniform entries, usually indefinite.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityCase {
    pub kind: CorpusKind,
    /// `t_k` for `k = -(n-1), …, n-1`, as `[re, im]`.
    pub symbol: Vec<[f64; 2]>,
    pub report: DualityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityCorpusReport {
    pub count: usize,
    pub trials: usize,
    pub seed: u64,
    pub psd: usize,
    pub agreements: usize,
    pub agreement_rate: f64,
    pub cases: Vec<DualityCase>,
}

fn corpus_symbol(kind: CorpusKind, n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let b = n as i64 - 1;
    let mut t = vec![C64::new(0.0, 0.0); 2 * n - 1];
    match kind {
        CorpusKind::Moment => {
            for _ in 0..n {
                let theta = rng.random_range(0.0..2.0 * PI);
                let w = rng.random_range(0.1..1.0);
                for k in -b..=b {
                    t[(k + b) as usize] += C64::from_polar(w, -(k as f64) * theta);
                }
            }
        }
        CorpusKind::Uniform => {
            t[b as usize] = C64::new(rng.random_range(-0.5..2.0), 0.0);
            for k in 1..=b {
                let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                t[(b + k) as usize] = z;
                t[(b - k) as usize] = z.conj();
            }
        }
    }
    t
}

/// Order checks on `count` random self-adjoint Toeplitz matrices with sizes cycling through
/// 2..=5, alternating positive moment matrices and uniform draws.
pub fn duality_corpus(count: usize, trials: usize, seed: u64) -> Result<DualityCorpusReport, CliError> {
    if trials == 0 {
        return Err(CliError::Config("trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(count);
    for i in 0..count {
        let n = 2 + i % 4;
        let kind = if i % 2 == 0 { CorpusKind::Moment } else { CorpusKind::Uniform };
        let t = corpus_symbol(kind, n, &mut rng);
        let b = n as i64 - 1;
        let set = Arc::new(IndexSet::interval(n)?);
        let op = ToeplitzOperator::new(set, (-b..=b).map(|k| (vec![k], t[(k + b) as usize])));
        let report = duality_order_check(&op, trials, rng.random())?;
        cases.push(DualityCase { kind, symbol: t.iter().map(|z| [z.re, z.im]).collect(), report });
    }
    let agreements = cases.iter().filter(|c| c.report.agree).count();
    Ok(DualityCorpusReport {
        count,
        trials,
        seed,
        psd: cases.iter().filter(|c| c.report.psd).count(),
        agreements,
        agreement_rate: if count == 0 { 1.0 } else { agreements as f64 / count as f64 },
        cases,
    })
}
