//! Low-sensitivity embeddings into ℓ1 and the embed-then-release pipeline.
//!
//! Both maps are 1-sensitive: a point's image depends only on that point
//! (and on data-independent randomness or the query set), so neighbouring
//! databases give neighbouring proxy databases.

pub mod bourgain;
pub mod pipeline;
pub mod projection;
pub mod quality;

use serde_json::json;
use thiserror::Error;

use crate::metric::{MetricError, MetricSpec, Point};
use crate::release::ReleaseError;

pub use bourgain::{bourgain_shape, BourgainMap};
pub use pipeline::{embed_database, release_via_embedding, PipelineAnswer, PipelineOutput};
pub use projection::{projection_dimension, ProjectionMap, DEFAULT_SHRINK};
pub use quality::{measure_quality, measure_quality_with, EmbeddingQuality};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Release(#[from] ReleaseError),
    #[error("query set must contain at least one query")]
    EmptyQuerySet,
    #[error("queries differ from the set the embedding was built on")]
    QueryMismatch,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = EmbeddingError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
pub enum EmbeddingMap {
    Projection(ProjectionMap),
    Bourgain(BourgainMap),
}

impl EmbeddingMap {
    pub fn kind(&self) -> &'static str {
        match self {
            EmbeddingMap::Projection(_) => "projection",
            EmbeddingMap::Bourgain(_) => "bourgain",
        }
    }

    pub fn target_dimension(&self) -> usize {
        match self {
            EmbeddingMap::Projection(p) => p.target_dimension(),
            EmbeddingMap::Bourgain(b) => b.target_dimension(),
        }
    }

    pub fn embed(&self, x: &Point) -> Result<Vec<f64>> {
        match self {
            EmbeddingMap::Projection(p) => {
                let coords = x.as_coords().ok_or_else(|| {
                    MetricError::Incompatible("projection expects coordinate points".into())
                })?;
                p.apply(coords)
            }
            EmbeddingMap::Bourgain(b) => b.apply(x),
        }
    }

    /// Contraction the construction promises: `(1 + α)·1.1` for the
    /// projection, `64·L` for the Bourgain map.
    pub fn claimed_contraction(&self) -> f64 {
        match self {
            EmbeddingMap::Projection(p) => p.claimed_contraction(),
            EmbeddingMap::Bourgain(b) => 64.0 * b.levels() as f64,
        }
    }

    /// Factor that turns an image distance into the normalized source
    /// scale: the projection is built against raw ℓ2 distances, the
    /// Bourgain map against normalized ones.
    pub fn image_normalizer(&self, metric: &MetricSpec) -> f64 {
        match self {
            EmbeddingMap::Projection(_) => metric.scale(),
            EmbeddingMap::Bourgain(_) => 1.0,
        }
    }

    /// Provenance written next to an embedded proxy database.
    pub fn provenance(&self, seed: u64) -> serde_json::Value {
        match self {
            EmbeddingMap::Projection(p) => json!({
                "kind": "projection",
                "seed": seed,
                "source_dimension": p.source_dimension(),
                "target_dimension": p.target_dimension(),
                "alpha_target": p.alpha_target(),
                "c0": p.c0(),
                "shrink": p.shrink(),
                "scale": p.scale(),
            }),
            EmbeddingMap::Bourgain(b) => json!({
                "kind": "bourgain",
                "seed": seed,
                "levels": b.levels(),
                "copies": b.copies(),
                "target_dimension": b.target_dimension(),
                "normalizer": b.normalizer(),
                "queries": b.queries().len(),
            }),
        }
    }
}
