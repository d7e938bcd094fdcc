use serde::Serialize;

use super::plan::{NoisePlan, Regime};
use super::{EngineError, Result};

/// Privacy accounting for one mechanism instance.
///
/// Half of ε pays for mistake detection (`ε/(2m)` per mistake round), the
/// other half for advice measurements (`ε/(2m|S|)` per draw). Spend is
/// derived from counters, so a fully used budget lands exactly on ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetLedger {
    epsilon: f64,
    delta: f64,
    regime: Regime,
    mistake_budget: usize,
    s_count: usize,
    mistakes_used: usize,
    draws_used: usize,
    queries_answered: u64,
}

impl BudgetLedger {
    pub fn new(plan: &NoisePlan) -> Self {
        Self {
            epsilon: plan.params.epsilon,
            delta: plan.params.delta,
            regime: plan.regime,
            mistake_budget: plan.mistake_budget,
            s_count: plan.s_count,
            mistakes_used: 0,
            draws_used: 0,
            queries_answered: 0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn epsilon_spent(&self) -> f64 {
        let m = self.mistake_budget as f64;
        let half = self.epsilon / 2.0;
        half * (self.mistakes_used as f64 / m)
            + half * (self.draws_used as f64 / (m * self.s_count as f64))
    }

    pub fn delta_spent(&self) -> f64 {
        match self.regime {
            Regime::Pure => 0.0,
            Regime::Approx => {
                self.delta * self.draws_used as f64 / (self.mistake_budget * self.s_count) as f64
            }
        }
    }

    pub fn mistakes_used(&self) -> usize {
        self.mistakes_used
    }

    pub fn mistake_budget(&self) -> usize {
        self.mistake_budget
    }

    pub fn draws_used(&self) -> usize {
        self.draws_used
    }

    pub fn queries_answered(&self) -> u64 {
        self.queries_answered
    }

    pub fn exhausted(&self) -> bool {
        self.mistakes_used >= self.mistake_budget
    }

    pub fn record_query(&mut self) {
        self.queries_answered += 1;
    }

    pub fn record_mistake(&mut self) -> Result<()> {
        if self.exhausted() {
            return Err(EngineError::BudgetExhausted {
                mistakes: self.mistakes_used,
            });
        }
        self.mistakes_used += 1;
        self.check();
        Ok(())
    }

    /// Charges one advice draw; only allowed inside a mistake round with
    /// unused slots.
    pub fn record_draw(&mut self) -> Result<()> {
        if self.draws_used >= self.mistakes_used * self.s_count {
            return Err(EngineError::MeasurementBudgetExceeded {
                draws: self.draws_used,
                rounds: self.mistakes_used,
            });
        }
        self.draws_used += 1;
        self.check();
        Ok(())
    }

    fn check(&self) {
        assert!(self.mistakes_used <= self.mistake_budget);
        assert!(self.draws_used <= self.mistake_budget * self.s_count);
        assert!(self.epsilon_spent() <= self.epsilon);
        assert!(self.delta_spent() <= self.delta);
    }
}
