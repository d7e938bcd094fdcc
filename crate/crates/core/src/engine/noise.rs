//! Noise samplers and the seeded generator used by every mechanism.
//!
//! The generator is ChaCha20 seeded from a `u64`. It is reproducible, not
//! hardened: floating-point Laplace sampling is known to leak through
//! rounding artefacts, and nothing here defends against that.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EngineError, Result};

pub type DpRng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> DpRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Derives an independent child generator, advancing the parent.
pub fn split_rng(parent: &mut DpRng) -> DpRng {
    ChaCha20Rng::from_rng(parent)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Laplace,
    Gaussian,
    /// Noise disabled: every draw is exactly zero.
    Off,
}

impl std::str::FromStr for NoiseKind {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplace" => Ok(NoiseKind::Laplace),
            "gaussian" => Ok(NoiseKind::Gaussian),
            "off" => Ok(NoiseKind::Off),
            other => Err(EngineError::InvalidParams(format!(
                "unknown noise kind `{other}` (expected laplace, gaussian or off)"
            ))),
        }
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(EngineError::NonPositiveScale(scale))
    }
}

/// One draw from the Laplace density `(1/2b) exp(−|x|/b)`.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    check_scale(scale)?;
    // 1 − U lies in (0, 1], so the logarithm is finite.
    let u: f64 = rng.random();
    let magnitude = -scale * (1.0 - u).ln();
    Ok(if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    })
}

/// One draw from `N(0, sigma²)`.
pub fn sample_gaussian<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Result<f64> {
    check_scale(sigma)?;
    let z: f64 = rng.sample(StandardNormal);
    Ok(sigma * z)
}

/// Draws noise of the given kind; `Off` yields exactly zero and consumes no
/// randomness.
pub fn draw<R: Rng + ?Sized>(kind: NoiseKind, scale: f64, rng: &mut R) -> Result<f64> {
    match kind {
        NoiseKind::Off => Ok(0.0),
        NoiseKind::Laplace => sample_laplace(scale, rng),
        NoiseKind::Gaussian => sample_gaussian(scale, rng),
    }
}

/// `P(|X| > t)` for Laplace noise of scale `b`.
pub fn laplace_tail(scale: f64, t: f64) -> f64 {
    (-t / scale).exp().min(1.0)
}

/// `P(|X| > t)` for Gaussian noise with standard deviation `sigma`.
pub fn gaussian_tail(sigma: f64, t: f64) -> f64 {
    libm::erfc(t / (sigma * std::f64::consts::SQRT_2))
}
