//! Sparse vector mistake detection (AboveThreshold with a cutoff of `m`
//! positives) and noisy advice measurement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ledger::BudgetLedger;
use super::noise::draw;
use super::plan::NoisePlan;
use super::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Below,
    Above,
}

/// Detector state: the noisy threshold offset of the current epoch.
/// A fresh offset is drawn at start and after every `Above`.
#[derive(Debug, Clone)]
pub struct SparseVector {
    threshold_noise: Option<f64>,
}

impl Default for SparseVector {
    fn default() -> Self {
        Self::new()
    }
}

impl SparseVector {
    pub fn new() -> Self {
        Self {
            threshold_noise: None,
        }
    }

    /// Compares a query value (the hypothesis error `gap`) with
    /// `threshold`. `Above` charges one mistake round to the ledger.
    /// Without noise the comparison is the strict `gap > threshold`.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        gap: f64,
        threshold: f64,
        plan: &NoisePlan,
        ledger: &mut BudgetLedger,
        rng: &mut R,
    ) -> Result<Verdict> {
        if ledger.exhausted() {
            return Err(super::EngineError::BudgetExhausted {
                mistakes: ledger.mistakes_used(),
            });
        }
        let kind = plan.detector_noise();
        let rho = match self.threshold_noise {
            Some(r) => r,
            None => {
                let r = draw(kind, plan.svt_threshold_scale, rng)?;
                self.threshold_noise = Some(r);
                r
            }
        };
        let nu = draw(kind, plan.svt_query_scale, rng)?;
        if gap + nu > threshold + rho {
            ledger.record_mistake()?;
            self.threshold_noise = None;
            Ok(Verdict::Above)
        } else {
            Ok(Verdict::Below)
        }
    }
}

/// Releases `value` plus measurement noise, charging one advice draw.
pub fn measure<R: Rng + ?Sized>(
    value: f64,
    plan: &NoisePlan,
    ledger: &mut BudgetLedger,
    rng: &mut R,
) -> Result<f64> {
    ledger.record_draw()?;
    Ok(value + draw(plan.measurement_noise(), plan.measurement_scale, rng)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{seeded_rng, EngineError, NoiseKind, PrivacyParams};

    fn params() -> PrivacyParams {
        PrivacyParams::new(50.0, 0.0, 0.1, 100).unwrap()
    }

    #[test]
    fn noise_free_is_strict_comparison() {
        let plan = NoisePlan::noise_free(&params(), 100, 1, 0.2).unwrap();
        let mut ledger = BudgetLedger::new(&plan);
        let mut rng = seeded_rng(0);
        let mut svt = SparseVector::new();
        assert_eq!(
            svt.step(0.1, plan.threshold, &plan, &mut ledger, &mut rng)
                .unwrap(),
            Verdict::Below
        );
        assert_eq!(
            svt.step(0.05, plan.threshold, &plan, &mut ledger, &mut rng)
                .unwrap(),
            Verdict::Below
        );
        assert_eq!(
            svt.step(0.11, plan.threshold, &plan, &mut ledger, &mut rng)
                .unwrap(),
            Verdict::Above
        );
        assert_eq!(ledger.mistakes_used(), 1);
    }

    #[test]
    fn stops_after_budget() {
        let plan = NoisePlan::noise_free(&params(), 100, 1, 0.2)
            .unwrap()
            .with_mistake_budget(2);
        let mut ledger = BudgetLedger::new(&plan);
        let mut rng = seeded_rng(0);
        let mut svt = SparseVector::new();
        svt.step(1.0, plan.threshold, &plan, &mut ledger, &mut rng)
            .unwrap();
        svt.step(1.0, plan.threshold, &plan, &mut ledger, &mut rng)
            .unwrap();
        assert!(matches!(
            svt.step(1.0, plan.threshold, &plan, &mut ledger, &mut rng),
            Err(EngineError::BudgetExhausted { mistakes: 2 })
        ));
    }

    #[test]
    fn at_threshold_is_a_coin_flip() {
        // Gap exactly at T: threshold and query noise are symmetric, so
        // Above has probability one half.
        let p = params();
        let plan = NoisePlan::calibrate(&p, NoiseKind::Laplace, 100_000, 1).unwrap();
        let mut rng = seeded_rng(5);
        let trials = 10_000;
        let mut above = 0;
        for _ in 0..trials {
            let mut ledger = BudgetLedger::new(&plan);
            let mut svt = SparseVector::new();
            if svt
                .step(plan.threshold, plan.threshold, &plan, &mut ledger, &mut rng)
                .unwrap()
                == Verdict::Above
            {
                above += 1;
            }
        }
        let frac = above as f64 / trials as f64;
        assert!((frac - 0.5).abs() <= 0.02, "fraction {frac}");
    }

    #[test]
    fn measurement_tail_within_allowance() {
        let p = params();
        let plan = NoisePlan::calibrate(&p, NoiseKind::Laplace, 100_000, 1).unwrap();
        let mut rng = seeded_rng(9);
        let trials = 200_000;
        let mut exceed = 0;
        for _ in 0..trials {
            let mut ledger = BudgetLedger::new(&plan);
            ledger.record_mistake().unwrap();
            let x = measure(0.0, &plan, &mut ledger, &mut rng).unwrap();
            if x.abs() > plan.tolerance {
                exceed += 1;
            }
        }
        let rate = exceed as f64 / trials as f64;
        let target = plan.tail_target();
        // Three binomial standard errors of slack.
        let slack = 3.0 * (target / trials as f64).sqrt();
        assert!(rate <= target + slack, "rate {rate} target {target}");
    }

    #[test]
    fn measure_requires_open_round() {
        let plan = NoisePlan::noise_free(&params(), 100, 1, 0.2).unwrap();
        let mut ledger = BudgetLedger::new(&plan);
        let mut rng = seeded_rng(0);
        assert!(measure(0.3, &plan, &mut ledger, &mut rng).is_err());
        ledger.record_mistake().unwrap();
        assert_eq!(measure(0.3, &plan, &mut ledger, &mut rng).unwrap(), 0.3);
    }
}
