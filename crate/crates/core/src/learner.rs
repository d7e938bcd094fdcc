//! Online learner for 1-Lipschitz convex functions on `[0, 1]`.
//!
//! The hypothesis is the upper envelope `max_k (a_k·x + b_k)` of the tangent
//! lines collected on mistake rounds, starting from the zero line. With an
//! exact oracle, an adversary can force at most `3/√α₁` updates at error
//! level `α₁`; with readings perturbed by at most `α₁/4` the count is bounded
//! by the exact bound at level `α₁/2`.
//!
//! [`DecomposableHypothesis`] runs one learner per coordinate and predicts
//! with the sum, which is how ℓ1 distance queries decompose.
//!
//! Hypotheses are persistent values: every update returns a new hypothesis
//! and leaves the receiver untouched.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("query point {0} lies outside [0, 1]")]
    OutOfDomain(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("update requested with no flagged coordinate")]
    NoFlaggedCoordinate,
    #[error("error bound must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("reading tolerance {tolerance} exceeds alpha1/4 = {limit}")]
    ToleranceTooLoose { tolerance: f64, limit: f64 },
    #[error("invalid hypothesis: {0}")]
    Invalid(String),
}

pub type Result<T, E = LearnerError> = std::result::Result<T, E>;

/// `⌈x⌉`, ignoring floating-point dust just above an integer.
pub(crate) fn ceil_tolerant(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Update bound `⌈3/√α₁⌉` of the one-dimensional learner with an exact
/// oracle at error level `alpha1`.
pub fn mistake_bound(alpha1: f64) -> usize {
    ceil_tolerant(3.0 / alpha1.sqrt())
}

/// Update bound with readings perturbed by at most `alpha1/4`: the exact
/// bound at level `alpha1/2`.
pub fn noisy_mistake_bound(alpha1: f64) -> usize {
    mistake_bound(alpha1 / 2.0)
}

/// A supporting line `slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    pub slope: f64,
    pub intercept: f64,
}

impl Tangent {
    pub const ZERO: Tangent = Tangent {
        slope: 0.0,
        intercept: 0.0,
    };

    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// A (possibly noisy) oracle answer at a query point: the function value,
/// a subgradient, and the bound on the error of each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReading {
    pub value: f64,
    pub slope: f64,
    pub tolerance: f64,
}

impl OracleReading {
    pub fn exact(value: f64, slope: f64) -> Self {
        Self {
            value,
            slope,
            tolerance: 0.0,
        }
    }
}

/// One-dimensional learner state.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearHypothesis {
    lines: Vec<Tangent>,
    alpha1: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(LearnerError::InvalidAlpha(alpha))
    }
}

impl PiecewiseLinearHypothesis {
    /// A fresh learner holding only the zero line.
    pub fn new(alpha1: f64) -> Result<Self> {
        check_alpha(alpha1)?;
        Ok(Self {
            lines: vec![Tangent::ZERO],
            alpha1,
        })
    }

    /// Rebuilds a learner from stored lines; the zero line must be present
    /// and every slope must lie in `[-1, 1]`.
    pub fn from_lines(alpha1: f64, lines: Vec<Tangent>) -> Result<Self> {
        check_alpha(alpha1)?;
        if !lines.contains(&Tangent::ZERO) {
            return Err(LearnerError::Invalid("missing initial zero line".into()));
        }
        for t in &lines {
            if !(-1.0..=1.0).contains(&t.slope) || !t.intercept.is_finite() {
                return Err(LearnerError::Invalid(format!("bad line {t:?}")));
            }
        }
        Ok(Self { lines, alpha1 })
    }

    pub fn lines(&self) -> &[Tangent] {
        &self.lines
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    /// Number of tangents added since the initial step.
    pub fn updates(&self) -> usize {
        self.lines.len() - 1
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.lines
            .iter()
            .map(|t| t.at(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Adds the tangent suggested by `reading` at `x_star`. Slopes are
    /// clamped to `[-1, 1]`, which never moves them away from a true
    /// subgradient of a 1-Lipschitz function.
    pub fn add_tangent(&self, x_star: f64, reading: &OracleReading) -> Result<Self> {
        if !(0.0..=1.0).contains(&x_star) {
            return Err(LearnerError::OutOfDomain(x_star));
        }
        let limit = self.alpha1 / 4.0;
        if reading.tolerance > limit * (1.0 + 1e-12) {
            return Err(LearnerError::ToleranceTooLoose {
                tolerance: reading.tolerance,
                limit,
            });
        }
        let slope = reading.slope.clamp(-1.0, 1.0);
        let mut lines = Vec::with_capacity(self.lines.len() + 1);
        lines.extend_from_slice(&self.lines);
        lines.push(Tangent {
            slope,
            intercept: reading.value - slope * x_star,
        });
        Ok(Self {
            lines,
            alpha1: self.alpha1,
        })
    }
}

/// Sum of per-coordinate learners, sharing `alpha1 = alpha / ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HypothesisRecord", into = "HypothesisRecord")]
pub struct DecomposableHypothesis {
    coords: Vec<PiecewiseLinearHypothesis>,
    alpha: f64,
}

impl DecomposableHypothesis {
    pub fn new(dimension: usize, alpha: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(LearnerError::Invalid("dimension must be >= 1".into()));
        }
        if !(alpha.is_finite() && alpha > 0.0 && alpha <= dimension as f64) {
            return Err(LearnerError::InvalidAlpha(alpha));
        }
        let alpha1 = alpha / dimension as f64;
        let coord = PiecewiseLinearHypothesis::new(alpha1)?;
        Ok(Self {
            coords: vec![coord; dimension],
            alpha,
        })
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha / self.coords.len() as f64
    }

    pub fn coordinate(&self, index: usize) -> &PiecewiseLinearHypothesis {
        &self.coords[index]
    }

    pub fn coordinates(&self) -> &[PiecewiseLinearHypothesis] {
        &self.coords
    }

    /// Total number of tangents added across coordinates.
    pub fn total_updates(&self) -> usize {
        self.coords.iter().map(|c| c.updates()).sum()
    }

    fn check_dimension(&self, got: usize) -> Result<()> {
        if got == self.coords.len() {
            Ok(())
        } else {
            Err(LearnerError::DimensionMismatch {
                expected: self.coords.len(),
                got,
            })
        }
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<f64> {
        self.check_dimension(y.len())?;
        Ok(self.coords.iter().zip(y).map(|(h, &t)| h.evaluate(t)).sum())
    }

    /// Applies a tangent update on every coordinate with a reading. The
    /// caller decides which coordinates erred; at least one must be flagged.
    pub fn update(&self, y: &[f64], readings: &[Option<OracleReading>]) -> Result<Self> {
        self.check_dimension(y.len())?;
        self.check_dimension(readings.len())?;
        if readings.iter().all(Option::is_none) {
            return Err(LearnerError::NoFlaggedCoordinate);
        }
        let coords = self
            .coords
            .iter()
            .zip(y)
            .zip(readings)
            .map(|((h, &t), r)| match r {
                Some(r) => h.add_tangent(t, r),
                None => Ok(h.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            coords,
            alpha: self.alpha,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("hypothesis serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LearnerError::Invalid(e.to_string()))
    }
}

/// On-disk form: `{alpha, dims: [[[a, b], ...] per coordinate]}`.
#[derive(Serialize, Deserialize)]
struct HypothesisRecord {
    alpha: f64,
    dims: Vec<Vec<[f64; 2]>>,
}

impl From<DecomposableHypothesis> for HypothesisRecord {
    fn from(h: DecomposableHypothesis) -> Self {
        HypothesisRecord {
            alpha: h.alpha,
            dims: h
                .coords
                .iter()
                .map(|c| c.lines.iter().map(|t| [t.slope, t.intercept]).collect())
                .collect(),
        }
    }
}

impl TryFrom<HypothesisRecord> for DecomposableHypothesis {
    type Error = LearnerError;

    fn try_from(r: HypothesisRecord) -> Result<Self> {
        let mut h = DecomposableHypothesis::new(r.dims.len(), r.alpha)?;
        let alpha1 = h.alpha1();
        h.coords = r
            .dims
            .into_iter()
            .map(|lines| {
                let lines = lines
                    .into_iter()
                    .map(|[slope, intercept]| Tangent { slope, intercept })
                    .collect();
                PiecewiseLinearHypothesis::from_lines(alpha1, lines)
            })
            .collect::<Result<_>>()?;
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sgn(v: f64) -> f64 {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    fn hyp(lines: &[(f64, f64)]) -> PiecewiseLinearHypothesis {
        PiecewiseLinearHypothesis {
            lines: lines
                .iter()
                .map(|&(slope, intercept)| Tangent { slope, intercept })
                .collect(),
            alpha1: 0.1,
        }
    }

    #[test]
    fn evaluate_examples() {
        let fresh = PiecewiseLinearHypothesis::new(0.1).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(fresh.evaluate(x), 0.0);
        }
        assert!((hyp(&[(0.0, 0.0), (1.0, -0.3)]).evaluate(0.9) - 0.6).abs() < 1e-15);
        assert_eq!(hyp(&[(1.0, 0.0), (-1.0, 1.0)]).evaluate(0.25), 0.75);
    }

    #[test]
    fn add_tangent_examples() {
        let h = PiecewiseLinearHypothesis::new(0.1).unwrap();
        let h2 = h.add_tangent(0.7, &OracleReading::exact(0.4, 1.0)).unwrap();
        let t = h2.lines()[1];
        assert_eq!(t.slope, 1.0);
        assert!((t.intercept + 0.3).abs() < 1e-15);
        assert_eq!(h.lines().len(), 1, "receiver untouched");

        let clamped = h.add_tangent(0.5, &OracleReading::exact(0.2, 1.1)).unwrap();
        assert_eq!(clamped.lines()[1].slope, 1.0);
        let clamped = h
            .add_tangent(0.5, &OracleReading::exact(0.2, -1.3))
            .unwrap();
        assert_eq!(clamped.lines()[1].slope, -1.0);

        let dup = h.add_tangent(0.5, &OracleReading::exact(0.0, 0.0)).unwrap();
        assert_eq!(dup.lines().len(), 2);
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert_eq!(dup.evaluate(x), h.evaluate(x));
        }
    }

    #[test]
    fn add_tangent_rejects_outside_domain_and_loose_readings() {
        let h = PiecewiseLinearHypothesis::new(0.1).unwrap();
        assert_eq!(
            h.add_tangent(1.2, &OracleReading::exact(0.0, 0.0)),
            Err(LearnerError::OutOfDomain(1.2))
        );
        let loose = OracleReading {
            value: 0.1,
            slope: 0.0,
            tolerance: 0.05,
        };
        assert!(matches!(
            h.add_tangent(0.5, &loose),
            Err(LearnerError::ToleranceTooLoose { .. })
        ));
    }

    #[test]
    fn decomposable_examples() {
        let dh = DecomposableHypothesis::new(3, 0.3).unwrap();
        assert_eq!(dh.evaluate(&[0.1, 0.5, 0.9]).unwrap(), 0.0);
        assert!(matches!(
            dh.evaluate(&[0.1]),
            Err(LearnerError::DimensionMismatch { .. })
        ));

        let y = [0.4, 0.6];
        let dh = DecomposableHypothesis::new(2, 0.2).unwrap();
        let dh = dh
            .update(
                &y,
                &[
                    Some(OracleReading::exact(0.1, 0.0)),
                    Some(OracleReading::exact(0.25, 0.0)),
                ],
            )
            .unwrap();
        assert!((dh.evaluate(&y).unwrap() - 0.35).abs() < 1e-15);
        assert_eq!(dh.coordinate(0).updates(), 1);
        assert_eq!(dh.coordinate(1).updates(), 1);

        let one = dh
            .update(&y, &[None, Some(OracleReading::exact(0.3, 0.5))])
            .unwrap();
        assert_eq!(one.coordinate(0).updates(), 1);
        assert_eq!(one.coordinate(1).updates(), 2);

        assert_eq!(
            dh.update(&y, &[None, None]),
            Err(LearnerError::NoFlaggedCoordinate)
        );
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let dh = DecomposableHypothesis::new(2, 0.2).unwrap();
        let dh = dh
            .update(
                &[1.0 / 3.0, 0.7],
                &[Some(OracleReading::exact(0.123456789, 0.1 / 3.0)), None],
            )
            .unwrap();
        let text = dh.to_json();
        assert!(text.contains("\"dims\""));
        assert_eq!(DecomposableHypothesis::from_json(&text).unwrap(), dh);
        assert!(
            DecomposableHypothesis::from_json(r#"{"alpha":0.1,"dims":[[[0.5,0.0]]]}"#).is_err()
        );
    }

    /// Exact game against `|x − c|` with a maximal-error adversary on a grid.
    fn exact_updates(c: f64, alpha1: f64) -> usize {
        let g = |x: f64| (x - c).abs();
        let dg = |x: f64| sgn(x - c);
        let grid: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
        let mut h = PiecewiseLinearHypothesis::new(alpha1).unwrap();
        loop {
            let (x, err) = grid
                .iter()
                .map(|&x| (x, (h.evaluate(x) - g(x)).abs()))
                .fold((0.0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            if err <= alpha1 {
                return h.updates();
            }
            h = h
                .add_tangent(x, &OracleReading::exact(g(x), dg(x)))
                .unwrap();
        }
    }

    #[test]
    fn noise_free_mistake_bound_two_point_database() {
        // F(t) = (|t − 0.2| + |t − 0.8|) / 2 with α₁ = 0.04.
        let g = |x: f64| 0.5 * ((x - 0.2).abs() + (x - 0.8).abs());
        let dg = |x: f64| 0.5 * (sgn(x - 0.2) + sgn(x - 0.8));
        let alpha1 = 0.04;
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let mut h = PiecewiseLinearHypothesis::new(alpha1).unwrap();
        while let Some(&x) = grid
            .iter()
            .find(|&&x| (h.evaluate(x) - g(x)).abs() > alpha1)
        {
            h = h
                .add_tangent(x, &OracleReading::exact(g(x), dg(x)))
                .unwrap();
        }
        assert!(h.updates() <= 15);
    }

    proptest! {
        #[test]
        fn mistake_bound_abs(c in 0.0f64..=1.0, alpha1 in 0.005f64..0.5) {
            let bound = (3.0 / alpha1.sqrt()).ceil() as usize;
            prop_assert!(exact_updates(c, alpha1) <= bound);
        }

        #[test]
        fn exact_tangents_underestimate_and_adding_lines_is_monotone(
            kinks in proptest::collection::vec(0.0f64..=1.0, 1..6),
            points in proptest::collection::vec(0.0f64..=1.0, 1..12),
        ) {
            let n = kinks.len() as f64;
            let g = |x: f64| kinks.iter().map(|k| (x - k).abs()).sum::<f64>() / n;
            let dg = |x: f64| kinks.iter().map(|&k| sgn(x - k)).sum::<f64>() / n;
            let mut h = PiecewiseLinearHypothesis::new(0.1).unwrap();
            for &p in &points {
                let next = h.add_tangent(p, &OracleReading::exact(g(p), dg(p))).unwrap();
                for i in 0..=100 {
                    let x = i as f64 / 100.0;
                    prop_assert!(next.evaluate(x) >= h.evaluate(x));
                    prop_assert!(next.evaluate(x) <= g(x) + 1e-12);
                }
                h = next;
            }
        }

        #[test]
        fn noisy_tangents_stay_within_twice_tolerance(
            kinks in proptest::collection::vec(0.0f64..=1.0, 1..6),
            updates in proptest::collection::vec((0.0f64..=1.0, -1.0f64..=1.0, -1.0f64..=1.0), 1..10),
        ) {
            let alpha1 = 0.08;
            let tau = alpha1 / 4.0;
            let n = kinks.len() as f64;
            let g = |x: f64| kinks.iter().map(|k| (x - k).abs()).sum::<f64>() / n;
            let dg = |x: f64| kinks.iter().map(|&k| sgn(x - k)).sum::<f64>() / n;
            let mut h = PiecewiseLinearHypothesis::new(alpha1).unwrap();
            for &(p, ev, es) in &updates {
                let reading = OracleReading { value: g(p) + ev * tau, slope: dg(p) + es * tau, tolerance: tau };
                h = h.add_tangent(p, &reading).unwrap();
            }
            for i in 0..=200 {
                let x = i as f64 / 200.0;
                prop_assert!(h.evaluate(x) <= g(x) + 2.0 * tau + 1e-12);
            }
        }
    }
}
