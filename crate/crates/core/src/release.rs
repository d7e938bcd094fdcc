//! Private release of ℓ1 distance queries on `[0,1]^ℓ`.
//!
//! [`InteractiveMechanism`] answers an online stream of queries: the sparse
//! vector detector watches `|F̂(y) − F(y)|`, and only on a detected mistake
//! does the mechanism buy noisy advice (per-coordinate values and
//! subgradients) and extend the hypothesis. Per-query work is
//! `O(ℓ·(n + #lines))`; `#lines` is bounded by the mistake budget.
//!
//! [`release_offline`] drives the same learner over a fixed grid of
//! per-coordinate probes and publishes the final hypothesis, which answers
//! every query without touching the database again.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    measure, seeded_rng, BudgetLedger, DpRng, EngineError, NoiseKind, NoisePlan, PrivacyParams,
    SparseVector, Verdict,
};
use crate::learner::{ceil_tolerant, DecomposableHypothesis, LearnerError, OracleReading};
use crate::metric::{coord_subgradient, coord_value, Database, MetricError, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReleaseError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = ReleaseError> = std::result::Result<T, E>;

/// Everything a release needs besides the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSettings {
    pub params: PrivacyParams,
    pub noise: NoiseKind,
    /// Fixed accuracy instead of calibration; only valid with noise off.
    pub alpha: Option<f64>,
    pub seed: u64,
}

impl ReleaseSettings {
    pub fn new(params: PrivacyParams, noise: NoiseKind, seed: u64) -> Self {
        Self {
            params,
            noise,
            alpha: None,
            seed,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    /// Calibrated plan, or a noise-free plan at the configured `alpha`.
    pub fn plan(&self, n: usize, dimension: usize) -> Result<NoisePlan> {
        match self.alpha {
            None => Ok(NoisePlan::calibrate(
                &self.params,
                self.noise,
                n,
                dimension,
            )?),
            Some(alpha) if self.noise == NoiseKind::Off => {
                Ok(NoisePlan::noise_free(&self.params, n, dimension, alpha)?)
            }
            Some(_) => Err(ReleaseError::Invalid(
                "a fixed alpha is only allowed with noise off".into(),
            )),
        }
    }
}

fn l1_dimension(db: &Database) -> Result<usize> {
    db.dimension()
        .ok_or_else(|| ReleaseError::Invalid("the l1 mechanism needs a coordinate database".into()))
}

fn check_query(y: &[f64], dimension: usize) -> Result<()> {
    if y.len() != dimension {
        return Err(MetricError::DimensionMismatch {
            expected: dimension,
            got: y.len(),
        }
        .into());
    }
    if let Some((position, &value)) = y
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
    {
        return Err(MetricError::OutOfRange { position, value }.into());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    /// Mistake budget spent: answers come from the frozen hypothesis.
    Refusing,
}

/// One released answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryAnswer {
    pub value: f64,
    /// The detector flagged this query and the hypothesis was updated.
    pub mistake: bool,
    /// Answered after the budget ran out; accuracy no longer guaranteed.
    pub refused: bool,
    pub epsilon_spent: f64,
}

/// One transcript line: the query's position in the stream and its answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub query: usize,
    pub answer: f64,
    pub mistake: bool,
    pub eps_spent: f64,
    pub refused: bool,
}

#[derive(Debug, Clone)]
pub struct InteractiveMechanism {
    db: Database,
    dimension: usize,
    hypothesis: DecomposableHypothesis,
    plan: NoisePlan,
    ledger: BudgetLedger,
    detector: SparseVector,
    rng: DpRng,
    status: Status,
    cap: f64,
    transcript: Vec<TranscriptEntry>,
}

impl InteractiveMechanism {
    pub fn new(db: Database, settings: &ReleaseSettings) -> Result<Self> {
        let dimension = l1_dimension(&db)?;
        let plan = settings.plan(db.len(), dimension)?;
        Self::with_plan(db, plan, settings.seed)
    }

    /// Builds the mechanism from an explicit plan (which must match the
    /// database's size and dimension).
    pub fn with_plan(db: Database, plan: NoisePlan, seed: u64) -> Result<Self> {
        let dimension = l1_dimension(&db)?;
        if plan.dimension != dimension || plan.n != db.len() {
            return Err(ReleaseError::Invalid(format!(
                "plan built for n={}, dimension={} but database has n={}, dimension={}",
                plan.n,
                plan.dimension,
                db.len(),
                dimension
            )));
        }
        let hypothesis = DecomposableHypothesis::new(dimension, plan.alpha)?;
        let ledger = BudgetLedger::new(&plan);
        let cap = dimension as f64;
        Ok(Self {
            db,
            dimension,
            hypothesis,
            plan,
            ledger,
            detector: SparseVector::new(),
            rng: seeded_rng(seed),
            status: Status::Active,
            cap,
            transcript: Vec::new(),
        })
    }

    /// Clips every data-query distance at `cap` inside the detector and
    /// clamps answers to `[0, cap]`. Lowering the cap below `ℓ` lowers the
    /// detector's sensitivity; the plan's noise is rescaled to match.
    pub fn with_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(ReleaseError::Invalid(format!(
                "cap must be positive, got {cap}"
            )));
        }
        let cap = cap.min(self.dimension as f64);
        self.plan = self.plan.clone().with_query_cap(cap);
        self.ledger = BudgetLedger::new(&self.plan);
        self.cap = cap;
        Ok(self)
    }

    pub fn plan(&self) -> &NoisePlan {
        &self.plan
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn hypothesis(&self) -> &DecomposableHypothesis {
        &self.hypothesis
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn alpha(&self) -> f64 {
        self.plan.alpha
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// The transcript as JSON lines.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.transcript {
            out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    /// Exact (capped) query value; only the detector and tests see it.
    pub fn exact_value(&self, y: &[f64]) -> Result<f64> {
        check_query(y, self.dimension)?;
        Ok(self.exact_unchecked(y))
    }

    fn exact_unchecked(&self, y: &[f64]) -> f64 {
        let total: f64 = self
            .db
            .points()
            .iter()
            .map(|x| {
                let x = x.as_coords().expect("coordinate database");
                let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                d.min(self.cap)
            })
            .sum();
        total / self.db.len() as f64
    }

    fn predict(&self, y: &[f64]) -> f64 {
        self.hypothesis
            .evaluate(y)
            .expect("dimension checked")
            .clamp(0.0, self.cap)
    }

    pub fn answer(&mut self, y: &Point) -> Result<QueryAnswer> {
        let coords = y.as_coords().ok_or(MetricError::MixedRepresentation)?;
        self.answer_coords(coords)
    }

    pub fn answer_coords(&mut self, y: &[f64]) -> Result<QueryAnswer> {
        check_query(y, self.dimension)?;
        self.ledger.record_query();
        let mut mistake = false;
        if self.status == Status::Active {
            let gap = (self.exact_unchecked(y) - self.predict(y)).abs();
            let verdict = self.detector.step(
                gap,
                self.plan.threshold,
                &self.plan,
                &mut self.ledger,
                &mut self.rng,
            )?;
            if verdict == Verdict::Above {
                mistake = true;
                self.update_round(y)?;
                if self.ledger.exhausted() {
                    log::warn!(
                        "mistake budget of {} rounds spent; further answers are frozen",
                        self.plan.mistake_budget
                    );
                    self.status = Status::Refusing;
                }
            }
        }
        let answer = QueryAnswer {
            value: self.predict(y),
            mistake,
            refused: self.status == Status::Refusing && !mistake,
            epsilon_spent: self.ledger.epsilon_spent(),
        };
        self.transcript.push(TranscriptEntry {
            query: self.transcript.len(),
            answer: answer.value,
            mistake: answer.mistake,
            eps_spent: answer.epsilon_spent,
            refused: answer.refused,
        });
        Ok(answer)
    }

    /// Buys advice on every coordinate and adds tangents where the
    /// hypothesis is off by more than `α/(2ℓ)` from the measured value.
    fn update_round(&mut self, y: &[f64]) -> Result<()> {
        let flag_level = self.plan.threshold / self.dimension as f64;
        let mut readings = vec![None; self.dimension];
        for (i, &t) in y.iter().enumerate() {
            let exact = coord_value(&self.db, i, t)?;
            let value = measure(exact, &self.plan, &mut self.ledger, &mut self.rng)?;
            let current = self.hypothesis.coordinate(i).evaluate(t);
            if (current - value).abs() > flag_level {
                let g = coord_subgradient(&self.db, i, t)?;
                let slope = measure(g, &self.plan, &mut self.ledger, &mut self.rng)?;
                readings[i] = Some(OracleReading {
                    value,
                    slope,
                    tolerance: self.plan.tolerance,
                });
            }
        }
        if readings.iter().any(Option::is_some) {
            self.hypothesis = self.hypothesis.update(y, &readings)?;
        }
        Ok(())
    }
}

/// Probe points `0, s, 2s, …, 1` with `s = α'/ℓ`; the last step is
/// shortened so that `1` is always included.
pub fn offline_grid(alpha_prime: f64, dimension: usize) -> Vec<f64> {
    let step = alpha_prime / dimension as f64;
    let count = ceil_tolerant(dimension as f64 / alpha_prime) + 1;
    (0..count)
        .map(|j| {
            if j + 1 == count {
                1.0
            } else {
                (j as f64 * step).min(1.0)
            }
        })
        .collect()
}

/// Provenance of an offline release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineProvenance {
    pub plan: NoisePlan,
    pub seed: u64,
    pub probes: usize,
    pub mistakes: usize,
    pub epsilon_spent: f64,
}

/// A published synopsis. It holds no database, so evaluating it is pure
/// post-processing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineRelease {
    pub hypothesis: DecomposableHypothesis,
    /// Guaranteed error bound `α = 2α'`.
    pub alpha: f64,
    pub provenance: OfflineProvenance,
}

impl OfflineRelease {
    pub fn dimension(&self) -> usize {
        self.hypothesis.dimension()
    }

    pub fn answer(&self, y: &[f64]) -> Result<f64> {
        answer_offline(self, y)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("release serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ReleaseError::Invalid(format!("bad synopsis: {e}")))
    }
}

/// Evaluates the published hypothesis at `y`, clamped to `[0, ℓ]`.
pub fn answer_offline(release: &OfflineRelease, y: &[f64]) -> Result<f64> {
    let dimension = release.dimension();
    check_query(y, dimension)?;
    Ok(release.hypothesis.evaluate(y)?.clamp(0.0, dimension as f64))
}

/// Plan for the offline mechanism. The mechanism runs at accuracy `α'`
/// and asks `ℓ·|grid(α')|` probe queries, which feeds back into the
/// calibration through `k`; iterate until the probe count is stable.
fn offline_plan(db: &Database, settings: &ReleaseSettings, dimension: usize) -> Result<NoisePlan> {
    let n = db.len();
    let plan = match settings.alpha {
        Some(alpha) => {
            let mut s = *settings;
            s.alpha = Some(alpha / 2.0);
            s.plan(n, dimension)?
        }
        None => {
            let mut params = settings.params;
            let mut plan = NoisePlan::calibrate(&params, settings.noise, n, dimension)?;
            for _ in 0..64 {
                let k = dimension * offline_grid(plan.alpha, dimension).len();
                if k == params.k_max {
                    break;
                }
                params.k_max = k;
                plan = NoisePlan::calibrate(&params, settings.noise, n, dimension)?;
            }
            plan
        }
    };
    // Each probe is a single coordinate value, which is 1/n-sensitive.
    Ok(plan.with_query_cap(1.0))
}

/// Runs the learner over the probe grid and publishes the hypothesis.
/// Grid points end within `α'/ℓ` per coordinate, points between them
/// within `2α'/ℓ`, so every query is answered within `α = 2α'`.
pub fn release_offline(db: &Database, settings: &ReleaseSettings) -> Result<OfflineRelease> {
    let dimension = l1_dimension(db)?;
    let plan = offline_plan(db, settings, dimension)?;
    let alpha_prime = plan.alpha;
    let grid = offline_grid(alpha_prime, dimension);
    let level = alpha_prime / dimension as f64;
    let mut hypothesis = DecomposableHypothesis::new(dimension, alpha_prime)?;
    let mut ledger = BudgetLedger::new(&plan);
    let mut detector = SparseVector::new();
    let mut rng = seeded_rng(settings.seed);
    let mut probes = 0;
    'coords: for i in 0..dimension {
        for &t in &grid {
            if ledger.exhausted() {
                log::warn!("offline release stopped early: mistake budget spent");
                break 'coords;
            }
            probes += 1;
            let exact = coord_value(db, i, t)?;
            let current = hypothesis.coordinate(i).evaluate(t);
            let verdict =
                detector.step((exact - current).abs(), level, &plan, &mut ledger, &mut rng)?;
            if verdict == Verdict::Below {
                continue;
            }
            let value = measure(exact, &plan, &mut ledger, &mut rng)?;
            let slope = measure(coord_subgradient(db, i, t)?, &plan, &mut ledger, &mut rng)?;
            let mut readings = vec![None; dimension];
            readings[i] = Some(OracleReading {
                value,
                slope,
                tolerance: plan.tolerance,
            });
            let mut y = vec![0.0; dimension];
            y[i] = t;
            hypothesis = hypothesis.update(&y, &readings)?;
        }
    }
    Ok(OfflineRelease {
        hypothesis,
        alpha: 2.0 * alpha_prime,
        provenance: OfflineProvenance {
            mistakes: ledger.mistakes_used(),
            epsilon_spent: ledger.epsilon_spent(),
            plan,
            seed: settings.seed,
            probes,
        },
    })
}
