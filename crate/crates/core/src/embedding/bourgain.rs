//! Bourgain-style embedding built only from the query points.
//!
//! For `i ∈ 1..=L` and `j ∈ 1..=K`, `S_ij` keeps each query independently
//! with probability `2^{-(i-1)}`, and `π_ij(x) = d(x, S_ij)/(K·L)`. Since
//! `|d(x, S) − d(y, S)| ≤ d(x, y)`, the ℓ1 image distance never exceeds the
//! source distance; contraction `64·L` holds with high probability.

use rand::Rng;

use super::{EmbeddingError, Result};
use crate::metric::{MetricSpec, Point, QuerySet};

/// `(L, K)` for `k` queries and database size `n`:
/// `L = max(1, ⌈log₂ k⌉)`, `K = max(1, ⌈512·(log₂ k + log₂ n)⌉)`.
pub fn bourgain_shape(k: usize, n: usize) -> (usize, usize) {
    let lk = (k.max(1) as f64).log2();
    let ln = (n.max(1) as f64).log2();
    let levels = (lk.ceil() as usize).max(1);
    let copies = ((512.0 * (lk + ln) - 1e-9).ceil().max(1.0)) as usize;
    (levels, copies)
}

#[derive(Debug, Clone)]
pub struct BourgainMap {
    queries: QuerySet,
    metric: MetricSpec,
    levels: usize,
    copies: usize,
    /// Indices into `queries`, level-major: `subsets[(i-1)·K + (j-1)]`.
    subsets: Vec<Vec<u32>>,
}

impl BourgainMap {
    /// Samples every `S_ij`. The database enters only through its size.
    pub fn build<R: Rng + ?Sized>(
        queries: &QuerySet,
        n: usize,
        metric: &MetricSpec,
        rng: &mut R,
    ) -> Result<Self> {
        let k = queries.len();
        if k == 0 {
            return Err(EmbeddingError::EmptyQuerySet);
        }
        for q in queries.queries() {
            metric.check_point(q)?;
        }
        let (levels, copies) = bourgain_shape(k, n);
        let mut subsets = Vec::with_capacity(levels * copies);
        for i in 1..=levels {
            let p = 0.5f64.powi(i as i32 - 1);
            for _ in 0..copies {
                let s: Vec<u32> = if i == 1 {
                    (0..k as u32).collect()
                } else {
                    (0..k as u32).filter(|_| rng.random_bool(p)).collect()
                };
                subsets.push(s);
            }
        }
        Ok(Self {
            queries: queries.clone(),
            metric: metric.clone(),
            levels,
            copies,
            subsets,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn target_dimension(&self) -> usize {
        self.levels * self.copies
    }

    /// `1/(K·L)`.
    pub fn normalizer(&self) -> f64 {
        1.0 / self.target_dimension() as f64
    }

    pub fn queries(&self) -> &QuerySet {
        &self.queries
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    /// `S_ij` as query indices, with 1-based `i` and `j`.
    pub fn subset(&self, i: usize, j: usize) -> &[u32] {
        &self.subsets[(i - 1) * self.copies + (j - 1)]
    }

    /// Coordinates `d(x, S_ij)/(K·L)`; an empty subset reads as distance 1,
    /// the diameter.
    pub fn apply(&self, x: &Point) -> Result<Vec<f64>> {
        self.metric.check_point(x)?;
        let to_queries = self
            .queries
            .queries()
            .iter()
            .map(|q| self.metric.distance(x, q))
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        let norm = self.normalizer();
        Ok(self
            .subsets
            .iter()
            .map(|s| {
                let d = s
                    .iter()
                    .map(|&q| to_queries[q as usize])
                    .fold(f64::INFINITY, f64::min);
                norm * if d.is_finite() { d } else { 1.0 }
            })
            .collect())
    }
}
