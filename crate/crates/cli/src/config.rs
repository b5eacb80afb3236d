//! Experiment configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ucp_trunc::gh::MAX_DISTORTION_DIM;
use ucp_trunc::lattice::LatticePolytope;
use ucp_trunc::truncation::Variant;
use ucp_trunc::ucpmetric::{MetricConfig, MAX_DEPTH};

use crate::CliError;

/// A truncation family without its level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum VariantSpec {
    FejerRiesz,
    ToeplitzCircle,
    TorusSpherical { dim: usize },
    TorusPolyhedral { polytope: LatticePolytope },
    Identity,
}

impl VariantSpec {
    pub fn at(&self, level: usize) -> Variant {
        match self {
            VariantSpec::FejerRiesz => Variant::FejerRiesz { n: level },
            VariantSpec::ToeplitzCircle => Variant::ToeplitzCircle { n: level },
            VariantSpec::TorusSpherical { dim } => Variant::TorusSpherical { dim: *dim, radius: level },
            VariantSpec::TorusPolyhedral { polytope } => Variant::TorusPolyhedral { polytope: polytope.clone(), level },
            VariantSpec::Identity => Variant::Identity { level },
        }
    }

    pub fn family(&self) -> &'static str {
        self.at(1).family()
    }

    /// Parses `fejer_riesz`, `toeplitz_circle`, `identity`, `torus_spherical[:d]`,
    /// `torus_polyhedral:square|cross[:d]`.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let dim = |i: usize, default: usize| -> Result<usize, CliError> {
            match parts.get(i) {
                None => Ok(default),
                Some(d) => d.parse().map_err(|_| CliError::Config(format!("bad dimension `{d}` in `{s}`"))),
            }
        };
        let spec = match parts[0] {
            "fejer_riesz" if parts.len() == 1 => VariantSpec::FejerRiesz,
            "toeplitz_circle" if parts.len() == 1 => VariantSpec::ToeplitzCircle,
            "identity" if parts.len() == 1 => VariantSpec::Identity,
            "torus_spherical" if parts.len() <= 2 => VariantSpec::TorusSpherical { dim: dim(1, 2)? },
            "torus_polyhedral" if (2..=3).contains(&parts.len()) => {
                let d = dim(2, 2)?;
                let polytope = match parts[1] {
                    "square" | "cube" => LatticePolytope::cube(d),
                    "cross" => LatticePolytope::cross(d),
                    other => return Err(CliError::Config(format!("unknown polytope `{other}`"))),
                };
                VariantSpec::TorusPolyhedral { polytope }
            }
            _ => return Err(CliError::Config(format!("unknown variant `{s}`"))),
        };
        Ok(spec)
    }
}

fn default_m() -> usize {
    1
}
fn default_depth() -> usize {
    6
}
fn default_samples() -> usize {
    6
}
fn default_tol() -> f64 {
    1e-4
}
fn default_max_iter() -> usize {
    MetricConfig::default().max_iter
}
fn default_cap() -> usize {
    MAX_DISTORTION_DIM
}
fn default_true() -> bool {
    true
}
fn default_delta() -> f64 {
    std::f64::consts::FRAC_PI_4
}
fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// Everything a sweep or kernel report needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub variant: VariantSpec,
    #[serde(default)]
    pub sweep: Vec<usize>,
    #[serde(default = "default_m")]
    pub m: usize,
    /// Number `P` of vectors in the weighted sum of the distance.
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_samples")]
    pub samples_each: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol_obj: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Distortion is skipped at levels whose truncated Hilbert space is larger.
    #[serde(default = "default_cap")]
    pub max_distortion_dim: usize,
    /// Radius of the ball outside which kernel mass is reported.
    #[serde(default = "default_delta")]
    pub kernel_delta: f64,
    /// When false, the runtime column is written as 0 so that reruns are byte-identical.
    #[serde(default = "default_true")]
    pub record_runtime: bool,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn new(variant: VariantSpec) -> Self {
        Self {
            variant,
            sweep: Vec::new(),
            m: default_m(),
            depth: default_depth(),
            samples_each: default_samples(),
            seed: 0,
            tol_obj: default_tol(),
            max_iter: default_max_iter(),
            max_distortion_dim: default_cap(),
            kernel_delta: default_delta(),
            record_runtime: true,
            out: default_out(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.sweep.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sweep levels must be strictly increasing".into());
        }
        if self.sweep.first() == Some(&0) {
            return bad("sweep levels must be positive".into());
        }
        if self.m == 0 || self.samples_each == 0 {
            return bad("m and samples_each must be positive".into());
        }
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return bad(format!("depth must lie in 1..={MAX_DEPTH}"));
        }
        if self.tol_obj.is_nan() || self.tol_obj <= 0.0 || self.max_iter == 0 {
            return bad("tolerances and iteration limits must be positive".into());
        }
        if !(self.kernel_delta > 0.0 && self.kernel_delta < std::f64::consts::PI) {
            return bad("kernel_delta must lie in (0, π)".into());
        }
        if let VariantSpec::TorusSpherical { dim } = self.variant {
            if !(1..=3).contains(&dim) {
                return bad("torus dimension must lie in 1..=3".into());
            }
        }
        Ok(())
    }

    pub fn metric(&self) -> MetricConfig {
        MetricConfig { m: self.m, depth: self.depth, seed: self.seed, tol_obj: self.tol_obj, max_iter: self.max_iter, ..MetricConfig::default() }
    }
}

/// Parses `2,4,8` or `1..8` (inclusive).
pub fn parse_sweep(s: &str) -> Result<Vec<usize>, CliError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| CliError::Config(format!("bad sweep level `{t}`")));
    if let Some((a, b)) = s.split_once("..") {
        return Ok((num(a)?..=num(b)?).collect());
    }
    s.split(',').map(num).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_strings() {
        assert_eq!(VariantSpec::parse("fejer_riesz").unwrap(), VariantSpec::FejerRiesz);
        assert_eq!(VariantSpec::parse("torus_spherical:3").unwrap(), VariantSpec::TorusSpherical { dim: 3 });
        assert_eq!(
            VariantSpec::parse("torus_polyhedral:cross").unwrap(),
            VariantSpec::TorusPolyhedral { polytope: LatticePolytope::cross(2) }
        );
        assert!(VariantSpec::parse("torus_polyhedral").is_err());
        assert!(VariantSpec::parse("sphere").is_err());
        assert_eq!(VariantSpec::parse("toeplitz_circle").unwrap().at(4), Variant::ToeplitzCircle { n: 4 });
    }

    #[test]
    fn sweep_lists() {
        assert_eq!(parse_sweep("2,4,8").unwrap(), vec![2, 4, 8]);
        assert_eq!(parse_sweep("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert!(parse_sweep("").unwrap().is_empty());
        assert!(parse_sweep("2,x").is_err());
    }

    #[test]
    fn json_roundtrip_and_defaults() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"variant": {"family": "torus_polyhedral", "polytope": {"vertices": [[-1,-1],[1,-1],[1,1],[-1,1]]}}, "sweep": [1, 2]}"#,
        )
        .unwrap();
        assert_eq!(c.variant, VariantSpec::TorusPolyhedral { polytope: LatticePolytope::cube(2) });
        assert_eq!((c.m, c.depth, c.samples_each), (1, 6, 6));
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::new(VariantSpec::FejerRiesz);
        c.sweep = vec![2, 4, 8];
        assert!(c.validate().is_ok());
        c.sweep = vec![4, 2];
        assert!(c.validate().is_err());
        c.sweep = vec![2];
        c.tol_obj = 0.0;
        assert!(c.validate().is_err());
    }
}
