use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};

/// Absolute-error statistics between two answer streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub max: f64,
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
}

/// Reads the `value` field of every JSON line.
pub fn read_values(text: &str) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    struct Line {
        value: f64,
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<Line>(l)
                .map(|line| line.value)
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Nearest-rank quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn compare(answers: &[f64], oracle: &[f64]) -> Result<ErrorStats> {
    if answers.len() != oracle.len() {
        return Err(HarnessError::LengthMismatch {
            answers: answers.len(),
            oracle: oracle.len(),
        });
    }
    if answers.is_empty() {
        return Err(HarnessError::Config("no answers to compare".into()));
    }
    let mut errors: Vec<f64> = answers
        .iter()
        .zip(oracle)
        .map(|(a, o)| (a - o).abs())
        .collect();
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    errors.sort_by(f64::total_cmp);
    Ok(ErrorStats {
        count: errors.len(),
        max: *errors.last().unwrap(),
        mean,
        p50: quantile(&errors, 0.5),
        p90: quantile(&errors, 0.9),
        p99: quantile(&errors, 0.99),
    })
}
