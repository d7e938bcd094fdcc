use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingQuality;

/// One answered query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub query: usize,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
    #[serde(default)]
    pub mistake: bool,
    #[serde(default)]
    pub refused: bool,
    /// Bracket for the exact answer (embedding pipelines).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

impl Record {
    pub fn new(query: usize, value: f64) -> Self {
        Self {
            query,
            value,
            oracle: None,
            abs_error: None,
            mistake: false,
            refused: false,
            lower: None,
            upper: None,
        }
    }

    pub fn with_oracle(mut self, oracle: Option<f64>) -> Self {
        self.oracle = oracle;
        self.abs_error = oracle.map(|o| (self.value - o).abs());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub queries: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_error: Option<f64>,
    pub mistakes: usize,
    pub refused: usize,
    pub eps_spent: f64,
    /// Additive error bound the mechanism was run at.
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<EmbeddingQuality>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub mechanism: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub with_oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<Record>,
    pub aggregates: Aggregates,
    pub provenance: Provenance,
}

/// Error statistics from the records alone.
pub fn error_stats(records: &[Record]) -> (Option<f64>, Option<f64>) {
    let errors: Vec<f64> = records.iter().filter_map(|r| r.abs_error).collect();
    if errors.is_empty() || errors.len() != records.len() {
        return (None, None);
    }
    let max = errors.iter().copied().fold(0.0, f64::max);
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    (Some(max), Some(mean))
}

impl Report {
    pub fn new(
        records: Vec<Record>,
        eps_spent: f64,
        alpha: f64,
        distortion: Option<EmbeddingQuality>,
        provenance: Provenance,
    ) -> Self {
        let (max_error, mean_error) = error_stats(&records);
        let aggregates = Aggregates {
            queries: records.len(),
            max_error,
            mean_error,
            mistakes: records.iter().filter(|r| r.mistake).count(),
            refused: records.iter().filter(|r| r.refused).count(),
            eps_spent,
            alpha,
            distortion,
        };
        Self {
            records,
            aggregates,
            provenance,
        }
    }

    /// True when the stored aggregates match a recomputation from records.
    pub fn is_consistent(&self) -> bool {
        let again = Report::new(
            self.records.clone(),
            self.aggregates.eps_spent,
            self.aggregates.alpha,
            self.aggregates.distortion,
            self.provenance.clone(),
        );
        again.aggregates == self.aggregates
    }

    pub fn records_jsonl(&self) -> String {
        records_jsonl(&self.records)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn records_jsonl(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}
