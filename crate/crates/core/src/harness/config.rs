use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{HarnessError, Result};
use crate::embedding::DEFAULT_SHRINK;
use crate::engine::{NoiseKind, PrivacyParams};
use crate::release::ReleaseSettings;

fn default_beta() -> f64 {
    0.1
}

fn default_shrink() -> f64 {
    DEFAULT_SHRINK
}

fn default_noise() -> NoiseKind {
    NoiseKind::Laplace
}

/// Constants of the random projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionConfig {
    pub alpha_target: f64,
    pub c0: f64,
    /// Scale is `√(π/2)/(ℓ'(1 + shrink·α))`.
    #[serde(default = "default_shrink")]
    pub shrink: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            alpha_target: 0.25,
            c0: 4.0,
            shrink: DEFAULT_SHRINK,
        }
    }
}

/// The JSON config file shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub k_max: usize,
    #[serde(default = "default_noise")]
    pub noise: NoiseKind,
    #[serde(default)]
    pub seed: u64,
    /// Fixed accuracy for noise-free runs (skips calibration).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub projection: ProjectionConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.params()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<PrivacyParams> {
        Ok(PrivacyParams::new(
            self.epsilon,
            self.delta,
            self.beta,
            self.k_max,
        )?)
    }

    pub fn settings(&self) -> Result<ReleaseSettings> {
        Ok(ReleaseSettings {
            params: self.params()?,
            noise: self.noise,
            alpha: self.alpha,
            seed: self.seed,
        })
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, noise: Option<NoiseKind>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(n) = noise {
            self.noise = n;
        }
        self
    }

    /// SHA-256 of the effective config's canonical JSON.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = ExperimentConfig::from_json(r#"{"epsilon": 1.0, "k_max": 10}"#).unwrap();
        assert_eq!(cfg.delta, 0.0);
        assert_eq!(cfg.beta, 0.1);
        assert_eq!(cfg.noise, NoiseKind::Laplace);
        let h = cfg.hash();
        assert_eq!(h.len(), 64);
        let other = cfg.clone().with_overrides(Some(5), Some(NoiseKind::Off));
        assert_eq!(other.seed, 5);
        assert_ne!(other.hash(), h);
        assert_eq!(cfg.clone().with_overrides(None, None).hash(), h);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"epsilon": 0.0, "k_max": 10}"#,
            r#"{"epsilon": 1.0}"#,
            r#"{"epsilon": 1.0, "k_max": 10, "colour": 1}"#,
            r#"{"epsilon": 1.0, "k_max": 10, "noise": "cauchy"}"#,
            "not json",
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }
}
