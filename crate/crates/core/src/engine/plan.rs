//! Privacy parameters and the calibrated noise plan.
//!
//! The target accuracy `α` is the fixed point of
//!
//! ```text
//! pure:    c·α = 3000 · |S| · m(α) · ln(k/β) / (n·ε)
//! approx:  c·α = 3000 · √(|S|·m(α)) · ln(4/δ) · ln(k/β) / (n·ε)
//! ```
//!
//! with tolerance `c = 1/(4ℓ)`, `|S| = 2ℓ` advice functions per round and
//! mistake rate `m(α) = ℓ · 3/√(α/(2ℓ))`. The left side increases and the
//! right side decreases in `α`, so the root is unique and found by
//! bisection. The integer mistake budget is the ceiling form
//! `ℓ·⌈3/√(α/(2ℓ))⌉` evaluated at the root.

use serde::{Deserialize, Serialize};

use super::noise::{gaussian_tail, laplace_tail, NoiseKind};
use super::{EngineError, Result};
use crate::learner::ceil_tolerant;

/// Leading constant of the accuracy equations.
pub const IDC_CONSTANT: f64 = 3000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    /// `0` selects pure differential privacy.
    pub delta: f64,
    /// Failure probability of the accuracy guarantee.
    pub beta: f64,
    /// Maximum number of queries the analyst may ask.
    pub k_max: usize,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, beta: f64, k_max: usize) -> Result<Self> {
        let p = Self {
            epsilon,
            delta,
            beta,
            k_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EngineError::InvalidParams(msg));
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return bad(format!("delta must lie in [0, 1), got {}", self.delta));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if self.k_max == 0 {
            return bad("k_max must be >= 1".into());
        }
        Ok(())
    }
}

/// Which accuracy equation (and measurement noise) applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// ε-DP, Laplace measurements.
    Pure,
    /// (ε, δ)-DP, Gaussian measurements.
    Approx,
}

impl Regime {
    pub fn for_noise(noise: NoiseKind, params: &PrivacyParams) -> Result<Self> {
        match noise {
            NoiseKind::Laplace => Ok(Regime::Pure),
            NoiseKind::Gaussian if params.delta > 0.0 => Ok(Regime::Approx),
            NoiseKind::Gaussian => Err(EngineError::InvalidParams(
                "gaussian noise needs delta > 0".into(),
            )),
            NoiseKind::Off if params.delta > 0.0 => Ok(Regime::Approx),
            NoiseKind::Off => Ok(Regime::Pure),
        }
    }
}

/// Continuous mistake rate `ℓ · 3/√(α/(2ℓ))` used in the fixed point.
pub fn mistake_rate(alpha: f64, dimension: usize) -> f64 {
    let l = dimension as f64;
    l * 3.0 / (alpha / (2.0 * l)).sqrt()
}

/// Integer mistake budget `ℓ · ⌈3/√(α/(2ℓ))⌉`.
pub fn mistake_budget(alpha: f64, dimension: usize) -> usize {
    let l = dimension as f64;
    dimension * ceil_tolerant(3.0 / (alpha / (2.0 * l)).sqrt())
}

/// Both sides of the accuracy equation at `alpha`.
pub fn equation_sides(
    regime: Regime,
    params: &PrivacyParams,
    n: usize,
    dimension: usize,
    alpha: f64,
) -> (f64, f64) {
    let l = dimension as f64;
    let s_count = 2.0 * l;
    let lhs = alpha / (4.0 * l);
    let m = mistake_rate(alpha, dimension);
    let log_kb = (params.k_max as f64 / params.beta).ln();
    let denom = n as f64 * params.epsilon;
    let rhs = match regime {
        Regime::Pure => IDC_CONSTANT * s_count * m * log_kb / denom,
        Regime::Approx => {
            IDC_CONSTANT * (s_count * m).sqrt() * (4.0 / params.delta).ln() * log_kb / denom
        }
    };
    (lhs, rhs)
}

/// Everything a mechanism needs to run at a given accuracy: the error
/// split, the mistake budget and the noise scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePlan {
    pub noise: NoiseKind,
    pub regime: Regime,
    pub params: PrivacyParams,
    pub n: usize,
    pub dimension: usize,
    /// Target additive error of a released answer.
    pub alpha: f64,
    /// Per-coordinate share `α/ℓ`.
    pub alpha1: f64,
    /// Advice tolerance `c·α = α/(4ℓ)`.
    pub tolerance: f64,
    /// Maximum number of mistake rounds `m`.
    pub mistake_budget: usize,
    /// Advice values per round, `|S| = 2ℓ`.
    pub s_count: usize,
    /// Mistake threshold `T = α/2`.
    pub threshold: f64,
    /// Sensitivity of every advice measurement, `2/n`.
    pub sensitivity: f64,
    /// Sensitivity of the detector's query `|F̂(y) − F(y)|`.
    pub query_sensitivity: f64,
    pub svt_threshold_scale: f64,
    pub svt_query_scale: f64,
    pub measurement_scale: f64,
}

impl NoisePlan {
    /// Solves the accuracy equation and derives the noise scales. Fails
    /// with [`EngineError::Infeasible`] when the root exceeds `ℓ`, the
    /// largest meaningful error.
    pub fn calibrate(
        params: &PrivacyParams,
        noise: NoiseKind,
        n: usize,
        dimension: usize,
    ) -> Result<Self> {
        params.validate()?;
        check_sizes(n, dimension)?;
        let regime = Regime::for_noise(noise, params)?;
        let alpha = solve_alpha(regime, params, n, dimension)?;
        let plan = Self::build(params, noise, regime, n, dimension, alpha)?;
        if plan.noise != NoiseKind::Off && plan.measurement_tail() > plan.tail_target() {
            return Err(EngineError::TailViolation {
                tail: plan.measurement_tail(),
                target: plan.tail_target(),
            });
        }
        Ok(plan)
    }

    /// A noise-free plan at a caller-chosen accuracy. Accounting still
    /// tracks the budget the noisy mechanism would spend.
    pub fn noise_free(
        params: &PrivacyParams,
        n: usize,
        dimension: usize,
        alpha: f64,
    ) -> Result<Self> {
        params.validate()?;
        check_sizes(n, dimension)?;
        if !(alpha.is_finite() && alpha > 0.0 && alpha <= dimension as f64) {
            return Err(EngineError::InvalidParams(format!(
                "alpha must lie in (0, {dimension}], got {alpha}"
            )));
        }
        let regime = Regime::for_noise(NoiseKind::Off, params)?;
        Self::build(params, NoiseKind::Off, regime, n, dimension, alpha)
    }

    fn build(
        params: &PrivacyParams,
        noise: NoiseKind,
        regime: Regime,
        n: usize,
        dimension: usize,
        alpha: f64,
    ) -> Result<Self> {
        let l = dimension as f64;
        let sensitivity = 2.0 / n as f64;
        let mut plan = Self {
            noise,
            regime,
            params: *params,
            n,
            dimension,
            alpha,
            alpha1: alpha / l,
            tolerance: alpha / (4.0 * l),
            mistake_budget: mistake_budget(alpha, dimension),
            s_count: 2 * dimension,
            threshold: alpha / 2.0,
            sensitivity,
            query_sensitivity: sensitivity.max(l / n as f64),
            svt_threshold_scale: 0.0,
            svt_query_scale: 0.0,
            measurement_scale: 0.0,
        };
        plan.rescale();
        Ok(plan)
    }

    fn rescale(&mut self) {
        let m = self.mistake_budget as f64;
        let eps = self.params.epsilon;
        self.svt_threshold_scale = 4.0 * m * self.query_sensitivity / eps;
        self.svt_query_scale = 8.0 * m * self.query_sensitivity / eps;
        let draws = m * self.s_count as f64;
        self.measurement_scale = match self.regime {
            Regime::Pure => 2.0 * draws * self.sensitivity / eps,
            Regime::Approx => {
                self.sensitivity / (eps / 2.0)
                    * (2.0 * draws * (2.0 / self.params.delta).ln()).sqrt()
            }
        };
    }

    /// Caps the detector query: when every data-query distance is clipped
    /// at `cap`, `|F̂(y) − F(y)|` moves by at most `cap/n` between
    /// neighbours. The default cap is `ℓ`, the cube's ℓ1 diameter.
    pub fn with_query_cap(mut self, cap: f64) -> Self {
        self.query_sensitivity = self.sensitivity.max(cap / self.n as f64);
        self.rescale();
        self
    }

    /// Overrides the mistake budget and rescales the noise accordingly.
    pub fn with_mistake_budget(mut self, m: usize) -> Self {
        self.mistake_budget = m.max(1);
        self.rescale();
        self
    }

    /// Noise applied to advice measurements.
    pub fn measurement_noise(&self) -> NoiseKind {
        match (self.noise, self.regime) {
            (NoiseKind::Off, _) => NoiseKind::Off,
            (_, Regime::Pure) => NoiseKind::Laplace,
            (_, Regime::Approx) => NoiseKind::Gaussian,
        }
    }

    /// Noise applied by the mistake detector (always Laplace unless off).
    pub fn detector_noise(&self) -> NoiseKind {
        match self.noise {
            NoiseKind::Off => NoiseKind::Off,
            _ => NoiseKind::Laplace,
        }
    }

    /// Probability that one measurement draw exceeds the tolerance `c·α`.
    pub fn measurement_tail(&self) -> f64 {
        match self.measurement_noise() {
            NoiseKind::Off => 0.0,
            NoiseKind::Laplace => laplace_tail(self.measurement_scale, self.tolerance),
            NoiseKind::Gaussian => gaussian_tail(self.measurement_scale, self.tolerance),
        }
    }

    /// Per-draw failure allowance `β / (2·m·|S|)`.
    pub fn tail_target(&self) -> f64 {
        self.params.beta / (2.0 * self.mistake_budget as f64 * self.s_count as f64)
    }

    /// `|lhs − rhs|` of the accuracy equation at the plan's `α`.
    pub fn residual(&self) -> f64 {
        let (lhs, rhs) = equation_sides(
            self.regime,
            &self.params,
            self.n,
            self.dimension,
            self.alpha,
        );
        (lhs - rhs).abs()
    }

    /// Privacy spent per mistake round when all `|S|` advice values are drawn.
    pub fn epsilon_per_round(&self) -> f64 {
        self.params.epsilon / self.mistake_budget as f64
    }
}

fn check_sizes(n: usize, dimension: usize) -> Result<()> {
    if n == 0 || dimension == 0 {
        return Err(EngineError::InvalidParams(
            "database size and dimension must be >= 1".into(),
        ));
    }
    Ok(())
}

fn solve_alpha(regime: Regime, params: &PrivacyParams, n: usize, dimension: usize) -> Result<f64> {
    let gap = |a: f64| {
        let (lhs, rhs) = equation_sides(regime, params, n, dimension, a);
        lhs - rhs
    };
    let l = dimension as f64;
    let mut hi = l;
    let infeasible = gap(hi) < 0.0;
    if infeasible {
        while gap(hi) < 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(EngineError::Infeasible {
                    minimal_alpha: f64::INFINITY,
                    dimension,
                });
            }
        }
    }
    let mut lo = hi;
    while gap(lo) >= 0.0 {
        lo /= 2.0;
    }
    // gap(lo) < 0 <= gap(hi)
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if infeasible {
        return Err(EngineError::Infeasible {
            minimal_alpha: hi,
            dimension,
        });
    }
    Ok(hi)
}
