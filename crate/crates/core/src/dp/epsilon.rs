use serde::{Deserialize, Serialize};

use super::{DpError, Result};
use crate::harness::Dataset;

/// Floor and ceiling applied to the raw privacy-budget bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for EpsilonBounds {
    fn default() -> Self {
        EpsilonBounds { min: 0.01, max: 10.0 }
    }
}

/// Column statistics feeding the budget bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeStats {
    /// Largest absolute attribute value; equals `max(A_j)` for nonnegative data.
    pub delta_f: f64,
    /// `max(A_j) - min(A_j)`.
    pub delta_v: f64,
    /// Occurrences of the modal value.
    pub count_max: usize,
    pub m: usize,
}

impl AttributeStats {
    pub fn from_column(column: &[f64]) -> Result<Self> {
        if column.is_empty() {
            return Err(DpError::EmptyColumn);
        }
        let (lo, hi) = column
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        Ok(AttributeStats {
            delta_f: lo.abs().max(hi.abs()),
            delta_v: hi - lo,
            count_max: mode_count(column),
            m: column.len(),
        })
    }

    pub fn rho(&self) -> f64 {
        self.count_max as f64 / self.m as f64
    }
}

fn mode_count(column: &[f64]) -> usize {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = 0;
    let mut run = 0;
    for (i, x) in sorted.iter().enumerate() {
        run = if i > 0 && sorted[i - 1] == *x { run + 1 } else { 1 };
        best = best.max(run);
    }
    best
}

/// Share of the modal value in the column, the upper bound of the
/// adversary's guessing probability.
pub fn rho_upper_bound(column: &[f64]) -> Result<f64> {
    Ok(AttributeStats::from_column(column)?.rho())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonChoice {
    pub epsilon: f64,
    /// Bound before clamping; infinite when undefined.
    pub raw: f64,
    /// Set when the bound was clamped or undefined (`rho = 1` or `delta_v = 0`).
    pub degenerate: bool,
}

/// `clamp((delta_f / delta_v) * ln((m - 1) rho / (1 - rho)), min, max)`.
pub fn epsilon_for_attribute(stats: &AttributeStats, bounds: &EpsilonBounds) -> Result<EpsilonChoice> {
    if stats.m < 2 {
        return Err(DpError::Parameter(format!(
            "need at least two records, got {}",
            stats.m
        )));
    }
    let rho = stats.rho();
    if rho >= 1.0 || stats.delta_v <= 0.0 {
        return Ok(EpsilonChoice {
            epsilon: bounds.max,
            raw: f64::INFINITY,
            degenerate: true,
        });
    }
    let raw = stats.delta_f / stats.delta_v * ((stats.m as f64 - 1.0) * rho / (1.0 - rho)).ln();
    let epsilon = raw.clamp(bounds.min, bounds.max);
    Ok(EpsilonChoice {
        epsilon,
        raw,
        degenerate: epsilon != raw,
    })
}

/// Per-attribute budgets; the dataset-level budget is their maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBudget {
    pub per_attribute: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl EpsilonBudget {
    pub fn uniform(epsilon: f64, d: usize) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(DpError::Parameter(format!("epsilon {epsilon} must be positive")));
        }
        Ok(EpsilonBudget {
            per_attribute: vec![epsilon; d],
            degenerate: vec![false; d],
        })
    }

    pub fn dataset_epsilon(&self) -> f64 {
        self.per_attribute.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn select_epsilon(data: &Dataset, bounds: &EpsilonBounds) -> Result<EpsilonBudget> {
    let mut per_attribute = Vec::with_capacity(data.d());
    let mut degenerate = Vec::with_capacity(data.d());
    for j in 0..data.d() {
        let stats = AttributeStats::from_column(&data.column(j))?;
        let choice = epsilon_for_attribute(&stats, bounds)?;
        if choice.degenerate {
            log::debug!(
                "attribute {j}: epsilon bound {} clamped to {}",
                choice.raw,
                choice.epsilon
            );
        }
        per_attribute.push(choice.epsilon);
        degenerate.push(choice.degenerate);
    }
    Ok(EpsilonBudget {
        per_attribute,
        degenerate,
    })
}
