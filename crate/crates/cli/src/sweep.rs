//! Sweeps over truncation levels: certified constants, GH bounds and empirical distortion.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use ucp_trunc::exec::Exec;
use ucp_trunc::gh::{build_correspondence, empirical_distortion, gh_upper_bound, DistortionReport, Systems};
use ucp_trunc::opsys::spinor_dim;
use ucp_trunc::truncation::{TruncationPair, Variant};
use ucp_trunc::ucpmetric::MetricConfig;

use crate::config::ExperimentConfig;
use crate::CliError;

pub const CSV_HEADER: [&str; 8] =
    ["variant", "level", "c_fwd", "c_bwd", "gh_upper", "emp_distortion", "max_solver_gap", "runtime_ms"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Distortion not computed because the truncated system exceeds the size cap.
    Skipped,
    Failed,
}

/// Everything computed at one level, written as the JSON audit file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelAudit {
    pub variant: Variant,
    pub level: usize,
    pub status: Status,
    pub error: Option<String>,
    pub c_fwd: Option<f64>,
    pub c_bwd: Option<f64>,
    pub gh_upper: Option<f64>,
    pub samples_each: usize,
    pub seed: u64,
    pub metric: MetricConfig,
    pub distortion: Option<DistortionReport>,
    pub runtime_ms: u64,
}

impl LevelAudit {
    /// The CSV row, with `failed` or `skipped` in the distortion columns when not computed.
    pub fn row(&self) -> [String; 8] {
        let num = |x: Option<f64>| x.map_or_else(|| "NaN".to_string(), |v| v.to_string());
        let (emp, gap) = match (&self.status, &self.distortion) {
            (Status::Ok, Some(d)) => (d.emp_distortion.to_string(), d.max_solver_gap.to_string()),
            (Status::Skipped, _) => ("skipped".into(), "skipped".into()),
            _ => ("failed".into(), "failed".into()),
        };
        [
            self.variant.family().to_string(),
            self.level.to_string(),
            num(self.c_fwd),
            num(self.c_bwd),
            num(self.gh_upper),
            emp,
            gap,
            self.runtime_ms.to_string(),
        ]
    }
}

/// Seed of the correspondence sample at a level.
pub fn level_seed(seed: u64, level: usize) -> u64 {
    seed ^ (level as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn truncated_dim(pair: &TruncationPair) -> usize {
    pair.index_set().map_or(0, |s| s.len() * spinor_dim(pair.dim()))
}

/// Computes one level; failures are recorded in the audit, never returned.
pub fn run_level(cfg: &ExperimentConfig, level: usize, exec: Exec) -> LevelAudit {
    let t0 = Instant::now();
    let variant = cfg.variant.at(level);
    let seed = level_seed(cfg.seed, level);
    let metric = cfg.metric();
    let mut audit = LevelAudit {
        variant: variant.clone(),
        level,
        status: Status::Failed,
        error: None,
        c_fwd: None,
        c_bwd: None,
        gh_upper: None,
        samples_each: cfg.samples_each,
        seed,
        metric: metric.clone(),
        distortion: None,
        runtime_ms: 0,
    };
    let outcome = (|| -> Result<Status, ucp_trunc::Error> {
        let pair = Arc::new(TruncationPair::new(variant)?);
        audit.c_fwd = Some(pair.c_fwd());
        audit.c_bwd = Some(pair.c_bwd());
        audit.gh_upper = Some(gh_upper_bound(&pair));
        if truncated_dim(&pair) > cfg.max_distortion_dim {
            return Ok(Status::Skipped);
        }
        let cs = build_correspondence(pair.clone(), cfg.samples_each, cfg.m, seed)?;
        let systems = Systems::new(&pair, &metric)?;
        audit.distortion = Some(empirical_distortion(&cs, &systems, exec)?);
        Ok(Status::Ok)
    })();
    match outcome {
        Ok(s) => audit.status = s,
        Err(e) => audit.error = Some(e.to_string()),
    }
    if cfg.record_runtime {
        audit.runtime_ms = t0.elapsed().as_millis() as u64;
    }
    audit
}

/// Output of a sweep.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub levels: Vec<LevelAudit>,
    pub csv: PathBuf,
}

impl SweepOutcome {
    /// True when there was at least one level and every level failed.
    pub fn all_failed(&self) -> bool {
        !self.levels.is_empty() && self.levels.iter().all(|l| l.status == Status::Failed)
    }
}

pub fn csv_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.join(format!("{}_sweep.csv", cfg.variant.family()))
}

pub fn audit_path(cfg: &ExperimentConfig, level: usize) -> PathBuf {
    cfg.out.join(format!("{}_level_{level}.json", cfg.variant.family()))
}

fn write_csv(path: &Path, levels: &[LevelAudit]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for l in levels {
        w.write_record(l.row())?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every level of the sweep and writes the CSV and one audit file per level. Levels
/// run one after another unless `parallel_levels`; rows keep sweep order either way.
pub fn run_sweep(cfg: &ExperimentConfig, parallel_levels: bool) -> Result<SweepOutcome, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let levels = if parallel_levels {
        Exec::Parallel.map(&cfg.sweep, |&l| run_level(cfg, l, Exec::Parallel))
    } else {
        cfg.sweep.iter().map(|&l| run_level(cfg, l, Exec::Parallel)).collect()
    };
    for l in &levels {
        std::fs::write(audit_path(cfg, l.level), serde_json::to_string_pretty(l)?)?;
    }
    let csv = csv_path(cfg);
    write_csv(&csv, &levels)?;
    Ok(SweepOutcome { levels, csv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::VariantSpec;

    #[test]
    fn empty_sweep_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(VariantSpec::FejerRiesz);
        cfg.out = dir.path().to_path_buf();
        let out = run_sweep(&cfg, false).unwrap();
        assert!(out.levels.is_empty() && !out.all_failed());
        assert_eq!(std::fs::read_to_string(out.csv).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn oversized_levels_are_skipped() {
        let mut cfg = ExperimentConfig::new(VariantSpec::ToeplitzCircle);
        cfg.max_distortion_dim = 2;
        cfg.record_runtime = false;
        let a = run_level(&cfg, 3, Exec::Sequential);
        assert_eq!(a.status, Status::Skipped);
        assert_eq!(a.row()[5], "skipped");
        assert_eq!(a.runtime_ms, 0);
        assert!(a.gh_upper.unwrap() > 0.0);
    }

    #[test]
    fn level_seeds_differ() {
        assert_ne!(level_seed(0, 2), level_seed(0, 4));
        assert_eq!(level_seed(7, 3), level_seed(7, 3));
    }
}
