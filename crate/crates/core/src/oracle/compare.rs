//! Comparison of engine output with exact oracle values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::absorption::AbsorptionDistribution;
use super::chain::Estimate;
use crate::error::{Error, Result};
use crate::model::{SentenceState, SymbolCell};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    /// z-score for moment checks, total-variation distance for distributions.
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub entries: Vec<CheckEntry>,
}

impl ComparisonReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn extend(&mut self, other: ComparisonReport) {
        self.entries.extend(other.entries);
    }
}

/// Total-variation distance of an empirical outcome histogram from the exact law.
pub fn total_variation(
    dist: &AbsorptionDistribution,
    counts: &BTreeMap<Vec<SymbolCell>, u64>,
) -> Result<f64> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::ParameterMismatch(
            "no empirical outcomes to compare".into(),
        ));
    }
    let mut tv = 0.0;
    for (cells, &p) in &dist.outcomes {
        let observed = counts.get(cells).copied().unwrap_or(0) as f64 / total as f64;
        tv += (observed - p).abs();
    }
    for (cells, &c) in counts {
        if !dist.outcomes.contains_key(cells) {
            tv += c as f64 / total as f64;
        }
    }
    Ok(0.5 * tv)
}

/// Tallies final fixed-length sentences; every sample must have `max_len` cells.
pub fn outcome_counts(
    samples: &[SentenceState],
    max_len: usize,
) -> Result<BTreeMap<Vec<SymbolCell>, u64>> {
    let mut counts = BTreeMap::new();
    for s in samples {
        if s.len() != max_len {
            return Err(Error::ParameterMismatch(format!(
                "sample of length {} compared with outcomes of length {max_len}",
                s.len()
            )));
        }
        *counts.entry(s.cells().to_vec()).or_insert(0) += 1;
    }
    Ok(counts)
}

pub fn compare_absorption(
    name: &str,
    dist: &AbsorptionDistribution,
    samples: &[SentenceState],
    tv_threshold: f64,
) -> Result<ComparisonReport> {
    if samples.is_empty() {
        return Err(Error::ParameterMismatch("no empirical samples".into()));
    }
    let tv = total_variation(dist, &outcome_counts(samples, dist.max_len)?)?;
    Ok(ComparisonReport {
        entries: vec![CheckEntry {
            name: name.to_string(),
            observed: tv,
            expected: 0.0,
            statistic: tv,
            threshold: tv_threshold,
            pass: tv < tv_threshold,
        }],
    })
}

/// One z-score entry per `(name, estimate, exact)` triple.
pub fn compare_moments(
    checks: &[(String, Estimate, f64)],
    z_threshold: f64,
) -> Result<ComparisonReport> {
    if checks.is_empty() {
        return Err(Error::ParameterMismatch("no moments to compare".into()));
    }
    Ok(ComparisonReport {
        entries: checks
            .iter()
            .map(|(name, est, exact)| {
                let z = est.z_score(*exact);
                CheckEntry {
                    name: name.clone(),
                    observed: est.mean,
                    expected: *exact,
                    statistic: z,
                    threshold: z_threshold,
                    pass: z.abs() <= z_threshold,
                }
            })
            .collect(),
    })
}
