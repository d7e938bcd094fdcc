//! Embed the database, release ℓ1 answers on the proxy, and translate them
//! back to the source scale.
//!
//! With expansion at most 1 and contraction `C`, a proxy answer `a` within
//! `α` of the proxy truth brackets the source answer:
//! `a − α ≤ F(y) ≤ C·(a + α)`.

use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingMap, Result};
use crate::metric::{Database, MetricKind, MetricSpec, QuerySet};
use crate::release::{InteractiveMechanism, ReleaseSettings};

/// Images of every database point, in order. Row `i` depends only on
/// point `i`.
pub fn embed_database(map: &EmbeddingMap, db: &Database) -> Result<Database> {
    let rows = db
        .points()
        .iter()
        .map(|x| map.embed(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(Database::from_coords(rows)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineAnswer {
    pub query: usize,
    /// Released value on the normalized source scale, in `[0, 1]`.
    pub value: f64,
    /// Lower end of the bracket for the exact source answer.
    pub lower: f64,
    /// Upper end of the bracket for the exact source answer.
    pub upper: f64,
    pub mistake: bool,
    pub refused: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub answers: Vec<PipelineAnswer>,
    /// Additive error of the proxy release on the normalized scale.
    pub alpha: f64,
    pub contraction: f64,
    pub mistakes: usize,
    pub epsilon_spent: f64,
}

fn check_compatible(map: &EmbeddingMap, queries: &QuerySet, metric: &MetricSpec) -> Result<()> {
    match map {
        EmbeddingMap::Projection(p) => {
            if metric.kind() != MetricKind::L2 || metric.dimension() != Some(p.source_dimension()) {
                return Err(EmbeddingError::Invalid(format!(
                    "projection needs an l2 metric of dimension {}",
                    p.source_dimension()
                )));
            }
        }
        // Bourgain answers are only defined for the queries the map was
        // sampled from, released as one fixed batch.
        EmbeddingMap::Bourgain(b) => {
            if b.queries() != queries {
                return Err(EmbeddingError::QueryMismatch);
            }
        }
    }
    Ok(())
}

/// Streams `queries` through an ℓ1 mechanism on the proxy database.
///
/// A fixed `alpha` in `settings` is read on the normalized source scale.
/// Proxy distances are clipped at the source diameter, which bounds the
/// detector's sensitivity and only removes error while expansion holds.
pub fn release_via_embedding(
    db: &Database,
    queries: &QuerySet,
    map: &EmbeddingMap,
    metric: &MetricSpec,
    settings: &ReleaseSettings,
) -> Result<PipelineOutput> {
    check_compatible(map, queries, metric)?;
    let normalizer = map.image_normalizer(metric);
    let proxy = embed_database(map, db)?;
    let mut proxy_settings = *settings;
    proxy_settings.alpha = settings.alpha.map(|a| a * normalizer);
    let plan = proxy_settings.plan(proxy.len(), map.target_dimension())?;
    let mut mech =
        InteractiveMechanism::with_plan(proxy, plan, settings.seed)?.with_cap(normalizer)?;
    let alpha = mech.alpha() / normalizer;
    let contraction = map.claimed_contraction();
    let mut answers = Vec::with_capacity(queries.len());
    for (index, y) in queries.queries().iter().enumerate() {
        let image = map.embed(y)?;
        let a = mech.answer_coords(&image)?;
        let value = (a.value / normalizer).clamp(0.0, 1.0);
        answers.push(PipelineAnswer {
            query: index,
            value,
            lower: (value - alpha).max(0.0),
            upper: (contraction * (value + alpha)).min(1.0),
            mistake: a.mistake,
            refused: a.refused,
        });
    }
    Ok(PipelineOutput {
        answers,
        alpha,
        contraction,
        mistakes: mech.ledger().mistakes_used(),
        epsilon_spent: mech.ledger().epsilon_spent(),
    })
}
