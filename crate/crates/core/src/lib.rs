//! Differentially private release of answers to distance queries over a
//! metric-space database.
//!
//! A database is a multiset of points; a distance query `y` asks for the
//! average distance `F(y) = (1/n) Σ d(x, y)`. For the ℓ1 metric on the
//! unit cube the mechanism learns a piecewise-linear lower envelope of `F`
//! from a bounded number of noisy advice measurements, which bounds the
//! privacy cost independently of how many queries are asked. Other metrics
//! are handled by embedding them into ℓ1 first.

pub mod embedding;
pub mod engine;
pub mod harness;
pub mod io;
pub mod learner;
pub mod metric;
pub mod release;

pub use engine::{BudgetLedger, EngineError, NoiseKind, NoisePlan, PrivacyParams, Regime};
pub use learner::{DecomposableHypothesis, LearnerError, OracleReading, PiecewiseLinearHypothesis};
pub use metric::{Database, MetricError, MetricKind, MetricSpec, Point, QuerySet};
pub use release::{
    answer_offline, release_offline, InteractiveMechanism, OfflineRelease, QueryAnswer,
    ReleaseError, ReleaseSettings,
};
