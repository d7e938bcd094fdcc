use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::report::{records_jsonl, Provenance, Record, Report};
use super::{HarnessError, Result};
use crate::embedding::{
    measure_quality, release_via_embedding, BourgainMap, EmbeddingMap, ProjectionMap,
};
use crate::engine::{seeded_rng, split_rng};
use crate::metric::{avg_distance, avg_distance_raw, Database, MetricKind, MetricSpec, QuerySet};
use crate::release::{release_offline, InteractiveMechanism, OfflineRelease};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    L1Interactive,
    L1Offline,
    ProjectionPipeline,
    BourgainPipeline,
    Oracle,
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::L1Interactive => "l1_interactive",
            Mechanism::L1Offline => "l1_offline",
            Mechanism::ProjectionPipeline => "projection_pipeline",
            Mechanism::BourgainPipeline => "bourgain_pipeline",
            Mechanism::Oracle => "oracle",
        }
    }
}

/// A fully loaded experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub mechanism: Mechanism,
    pub db: Database,
    pub queries: QuerySet,
    pub metric: MetricSpec,
    pub config: ExperimentConfig,
    /// Compute exact answers for evaluation. This reads the raw database
    /// outside any privacy mechanism.
    pub with_oracle: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    /// JSON lines, one per query.
    pub transcript: String,
    pub synopsis: Option<OfflineRelease>,
    pub embedding: Option<EmbeddingMap>,
}

/// Exact answer in the units a mechanism reports: raw average ℓ1 distance
/// for the ℓ1 mechanisms, the normalized scale for everything else.
pub fn oracle_value(
    mechanism: Mechanism,
    db: &Database,
    y: &crate::metric::Point,
    metric: &MetricSpec,
) -> Result<f64> {
    let raw_units = match mechanism {
        Mechanism::L1Interactive | Mechanism::L1Offline => true,
        Mechanism::Oracle => metric.kind() == MetricKind::L1,
        Mechanism::ProjectionPipeline | Mechanism::BourgainPipeline => false,
    };
    Ok(if raw_units {
        avg_distance_raw(db, y, metric)?
    } else {
        avg_distance(db, y, metric)?
    })
}

fn require_l1(metric: &MetricSpec) -> Result<()> {
    if metric.kind() != MetricKind::L1 {
        return Err(HarnessError::Config(
            "the l1 mechanisms need coordinate points under the l1 metric".into(),
        ));
    }
    Ok(())
}

/// Builds the embedding for a pipeline run. Map randomness and mechanism
/// randomness come from independent streams derived from the seed.
pub fn build_embedding(
    mechanism: Mechanism,
    queries: &QuerySet,
    n: usize,
    metric: &MetricSpec,
    config: &ExperimentConfig,
) -> Result<(EmbeddingMap, u64)> {
    let mut master = seeded_rng(config.seed);
    let mut map_rng = split_rng(&mut master);
    let mechanism_seed: u64 = master.random();
    let map = match mechanism {
        Mechanism::ProjectionPipeline => {
            let dimension = metric
                .dimension()
                .ok_or_else(|| HarnessError::Config("projection needs coordinate points".into()))?;
            EmbeddingMap::Projection(
                ProjectionMap::build_with_shrink(
                    dimension,
                    config.projection.alpha_target,
                    config.projection.c0,
                    config.projection.shrink,
                    &mut map_rng,
                )
                .map_err(HarnessError::Embedding)?,
            )
        }
        Mechanism::BourgainPipeline => {
            EmbeddingMap::Bourgain(BourgainMap::build(queries, n, metric, &mut map_rng)?)
        }
        _ => return Err(HarnessError::Config("not an embedding mechanism".into())),
    };
    Ok((map, mechanism_seed))
}

pub fn run_experiment(exp: &Experiment) -> Result<Outcome> {
    let settings = exp.config.settings()?;
    let oracle = |y| -> Result<Option<f64>> {
        if exp.with_oracle {
            Ok(Some(oracle_value(exp.mechanism, &exp.db, y, &exp.metric)?))
        } else {
            Ok(None)
        }
    };
    let mut records = Vec::with_capacity(exp.queries.len());
    let mut synopsis = None;
    let mut embedding = None;
    let mut distortion = None;
    let mut transcript = None;
    let (eps_spent, alpha) = match exp.mechanism {
        Mechanism::Oracle => {
            for (i, y) in exp.queries.queries().iter().enumerate() {
                let v = oracle_value(exp.mechanism, &exp.db, y, &exp.metric)?;
                records.push(Record::new(i, v).with_oracle(oracle(y)?));
            }
            (0.0, 0.0)
        }
        Mechanism::L1Interactive => {
            require_l1(&exp.metric)?;
            let mut mech = InteractiveMechanism::new(exp.db.clone(), &settings)?;
            for (i, y) in exp.queries.queries().iter().enumerate() {
                let a = mech.answer(y)?;
                let mut r = Record::new(i, a.value).with_oracle(oracle(y)?);
                r.mistake = a.mistake;
                r.refused = a.refused;
                records.push(r);
            }
            transcript = Some(mech.transcript_jsonl());
            (mech.ledger().epsilon_spent(), mech.alpha())
        }
        Mechanism::L1Offline => {
            require_l1(&exp.metric)?;
            let rel = release_offline(&exp.db, &settings)?;
            for (i, y) in exp.queries.queries().iter().enumerate() {
                let coords = y.as_coords().expect("l1 metric has coordinates");
                let v = rel.answer(coords)?;
                records.push(Record::new(i, v).with_oracle(oracle(y)?));
            }
            let out = (rel.provenance.epsilon_spent, rel.alpha);
            synopsis = Some(rel);
            out
        }
        Mechanism::ProjectionPipeline | Mechanism::BourgainPipeline => {
            let (map, mech_seed) = build_embedding(
                exp.mechanism,
                &exp.queries,
                exp.db.len(),
                &exp.metric,
                &exp.config,
            )?;
            let mut s = settings;
            s.seed = mech_seed;
            let out = release_via_embedding(&exp.db, &exp.queries, &map, &exp.metric, &s)?;
            for (a, y) in out.answers.iter().zip(exp.queries.queries()) {
                let mut r = Record::new(a.query, a.value).with_oracle(oracle(y)?);
                r.mistake = a.mistake;
                r.refused = a.refused;
                r.lower = Some(a.lower);
                r.upper = Some(a.upper);
                records.push(r);
            }
            if exp.with_oracle {
                distortion = Some(measure_quality(&map, &exp.db, &exp.queries, &exp.metric)?);
            }
            embedding = Some(map);
            (out.epsilon_spent, out.alpha)
        }
    };
    let provenance = Provenance {
        mechanism: exp.mechanism.name().into(),
        config_hash: exp.config.hash(),
        seed: exp.config.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        with_oracle: exp.with_oracle,
    };
    let transcript = transcript.unwrap_or_else(|| records_jsonl(&records));
    let report = Report::new(records, eps_spent, alpha, distortion, provenance);
    Ok(Outcome {
        report,
        transcript,
        synopsis,
        embedding,
    })
}
