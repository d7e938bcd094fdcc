//! Oblivious random projection from `(ℓ2, [0,1]^ℓ)` into ℓ1.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EmbeddingError, Result};
use crate::learner::ceil_tolerant;

/// Target dimension `⌈c₀·ℓ·ln(1/α)/α²⌉`.
pub fn projection_dimension(dimension: usize, alpha_target: f64, c0: f64) -> usize {
    ceil_tolerant(c0 * dimension as f64 * (1.0 / alpha_target).ln() / (alpha_target * alpha_target))
        .max(1)
}

/// Default shrink `γ`: the mean image ratio `1/(1+γα)` sits roughly midway
/// (in relative terms) between the expansion limit 1 and the contraction
/// limit `1/((1+α)·1.1)` at the default constants.
pub const DEFAULT_SHRINK: f64 = 2.0 / 3.0;

/// Slack over `1 + α` in the contraction the projection claims.
pub const CONTRACTION_SLACK: f64 = 1.1;

/// `π(x) = s·G(x − ½) + ½` with `G` an `ℓ' × ℓ` standard Gaussian matrix
/// and `s = √(π/2)/(ℓ'(1+γα))`. Since `E|⟨g, u⟩| = √(2/π)‖u‖₂`, the
/// expected ℓ1 image distance is `‖x − y‖₂/(1+γα)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMap {
    source_dimension: usize,
    target_dimension: usize,
    alpha_target: f64,
    c0: f64,
    shrink: f64,
    scale: f64,
    /// Row-major `ℓ' × ℓ`, already multiplied by `scale`.
    matrix: Vec<f64>,
}

impl ProjectionMap {
    /// Draws the matrix with the default shrink. Only the dimensions are
    /// read, never data or queries, so the map is oblivious.
    pub fn build<R: Rng + ?Sized>(
        dimension: usize,
        alpha_target: f64,
        c0: f64,
        rng: &mut R,
    ) -> Result<Self> {
        Self::build_with_shrink(dimension, alpha_target, c0, DEFAULT_SHRINK, rng)
    }

    /// Draws the matrix with scale `√(π/2)/(ℓ'(1+shrink·α))`, `shrink` in
    /// `[0, 1]`.
    pub fn build_with_shrink<R: Rng + ?Sized>(
        dimension: usize,
        alpha_target: f64,
        c0: f64,
        shrink: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(EmbeddingError::Invalid("dimension must be >= 1".into()));
        }
        if !(alpha_target > 0.0 && alpha_target < 1.0) {
            return Err(EmbeddingError::Invalid(format!(
                "alpha_target must lie in (0, 1), got {alpha_target}"
            )));
        }
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(EmbeddingError::Invalid(format!(
                "c0 must be positive, got {c0}"
            )));
        }
        if !(0.0..=1.0).contains(&shrink) {
            return Err(EmbeddingError::Invalid(format!(
                "shrink must lie in [0, 1], got {shrink}"
            )));
        }
        let target = projection_dimension(dimension, alpha_target, c0);
        let scale =
            (std::f64::consts::PI / 2.0).sqrt() / (target as f64 * (1.0 + shrink * alpha_target));
        let matrix = (0..target * dimension)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(Self {
            source_dimension: dimension,
            target_dimension: target,
            alpha_target,
            c0,
            shrink,
            scale,
            matrix,
        })
    }

    pub fn source_dimension(&self) -> usize {
        self.source_dimension
    }

    pub fn target_dimension(&self) -> usize {
        self.target_dimension
    }

    pub fn alpha_target(&self) -> f64 {
        self.alpha_target
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn shrink(&self) -> f64 {
        self.shrink
    }

    /// `(1 + α)·1.1`: an empirical bound, not a guarantee.
    pub fn claimed_contraction(&self) -> f64 {
        (1.0 + self.alpha_target) * CONTRACTION_SLACK
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Applies the map, clamping coordinates into `[0, 1]` (with a
    /// warning; not expected for inputs in the unit cube).
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.source_dimension {
            return Err(crate::metric::MetricError::DimensionMismatch {
                expected: self.source_dimension,
                got: x.len(),
            }
            .into());
        }
        let centred: Vec<f64> = x.iter().map(|v| v - 0.5).collect();
        let mut clamped = 0usize;
        let image = self
            .matrix
            .chunks_exact(self.source_dimension)
            .map(|row| {
                let v = 0.5 + row.iter().zip(&centred).map(|(a, b)| a * b).sum::<f64>();
                if !(0.0..=1.0).contains(&v) {
                    clamped += 1;
                }
                v.clamp(0.0, 1.0)
            })
            .collect();
        if clamped > 0 {
            log::warn!("projection clamped {clamped} coordinates into [0, 1]");
        }
        Ok(image)
    }
}
