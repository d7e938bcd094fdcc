//! Differential-privacy machinery: noise, calibration, accounting and the
//! sparse vector mistake detector.

pub mod ledger;
pub mod noise;
pub mod plan;
pub mod svt;

use thiserror::Error;

pub use ledger::BudgetLedger;
pub use noise::{draw, sample_gaussian, sample_laplace, seeded_rng, split_rng, DpRng, NoiseKind};
pub use plan::{mistake_budget, NoisePlan, PrivacyParams, Regime, IDC_CONSTANT};
pub use svt::{measure, SparseVector, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("noise scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    #[error("invalid privacy parameters: {0}")]
    InvalidParams(String),
    #[error(
        "insufficient data for target privacy: smallest achievable alpha is {minimal_alpha}, \
         above the dimension {dimension}"
    )]
    Infeasible {
        minimal_alpha: f64,
        dimension: usize,
    },
    #[error("privacy budget exhausted after {mistakes} mistake rounds")]
    BudgetExhausted { mistakes: usize },
    #[error("advice measurement outside a mistake round ({draws} draws, {rounds} rounds)")]
    MeasurementBudgetExceeded { draws: usize, rounds: usize },
    #[error("measurement noise tail {tail} exceeds per-draw allowance {target}")]
    TailViolation { tail: f64, target: f64 },
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
