use serde::{Deserialize, Serialize};

use super::{EmbeddingMap, Result};
use crate::metric::{Database, MetricSpec, Point, QuerySet};

/// Worst-case stretch and shrink over all data-query pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingQuality {
    /// `max d'(π(x), π(y)) / d(x, y)`.
    pub expansion: f64,
    /// `max d(x, y) / d'(π(x), π(y))`; infinite if a separated pair collapses.
    pub contraction: f64,
    pub distortion: f64,
    /// Pairs whose image distance exceeds the source distance.
    pub expansion_violations: usize,
    /// Pairs shrunk by more than the claimed contraction.
    pub contraction_violations: usize,
    /// Pairs compared (pairs at source distance 0 are skipped).
    pub pairs: usize,
}

impl EmbeddingQuality {
    pub fn violations(&self) -> usize {
        self.expansion_violations + self.contraction_violations
    }
}

const SLACK: f64 = 1e-12;

/// Quality of `embed` against `metric`, with image distances divided by
/// `normalizer` and contraction checked against `claimed_contraction`.
pub fn measure_quality_with<F>(
    embed: F,
    normalizer: f64,
    claimed_contraction: f64,
    db: &Database,
    queries: &QuerySet,
    metric: &MetricSpec,
) -> Result<EmbeddingQuality>
where
    F: Fn(&Point) -> Result<Vec<f64>>,
{
    let q_images = queries
        .queries()
        .iter()
        .map(&embed)
        .collect::<Result<Vec<_>>>()?;
    let mut quality = EmbeddingQuality {
        expansion: 0.0,
        contraction: 0.0,
        distortion: 0.0,
        expansion_violations: 0,
        contraction_violations: 0,
        pairs: 0,
    };
    for x in db.points() {
        let xi = embed(x)?;
        for (y, yi) in queries.queries().iter().zip(&q_images) {
            let d = metric.distance(x, y)?;
            if d == 0.0 {
                continue;
            }
            let image: f64 =
                xi.iter().zip(yi).map(|(a, b)| (a - b).abs()).sum::<f64>() / normalizer;
            quality.pairs += 1;
            quality.expansion = quality.expansion.max(image / d);
            quality.contraction = quality.contraction.max(d / image);
            if image > d * (1.0 + SLACK) + SLACK {
                quality.expansion_violations += 1;
            }
            if d > claimed_contraction * image * (1.0 + SLACK) + SLACK {
                quality.contraction_violations += 1;
            }
        }
    }
    quality.distortion = quality.expansion * quality.contraction;
    Ok(quality)
}

pub fn measure_quality(
    map: &EmbeddingMap,
    db: &Database,
    queries: &QuerySet,
    metric: &MetricSpec,
) -> Result<EmbeddingQuality> {
    measure_quality_with(
        |p| map.embed(p),
        map.image_normalizer(metric),
        map.claimed_contraction(),
        db,
        queries,
        metric,
    )
}
