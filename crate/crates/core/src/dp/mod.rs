//! Differential-privacy publishing: per-attribute budget selection,
//! insensitive microaggregation (IMA), Laplace noise, and the information
//! loss / disclosure metrics.

mod epsilon;
mod ima;
mod laplace;
mod metrics;

use serde::Serialize;

use crate::harness::Dataset;

pub use epsilon::{
    epsilon_for_attribute, rho_upper_bound, select_epsilon, AttributeStats, EpsilonBounds,
    EpsilonBudget, EpsilonChoice,
};
pub use ima::{best_cluster_size, ima_cluster, ima_sensitivity, normalized_distance, ClusteredDataset};
pub use laplace::{attribute_rng, laplace_cdf, sample_laplace};
pub use metrics::{record_linkage, sse};

#[derive(Debug, thiserror::Error)]
pub enum DpError {
    #[error("empty attribute column")]
    EmptyColumn,
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, DpError>;

/// A released dataset plus what is needed to reproduce it.
#[derive(Debug, Clone)]
pub struct NoisedDataset {
    pub data: Dataset,
    pub epsilon: Vec<f64>,
    pub delta_f: Vec<f64>,
    /// Sensitivity actually used for the noise scale.
    pub delta_f_prime: Vec<f64>,
    /// Cluster size, absent for the raw-data baseline.
    pub k: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PublishSummary {
    pub epsilon: Vec<f64>,
    pub delta_f: Vec<f64>,
    pub delta_f_prime: Vec<f64>,
    pub k: Option<usize>,
    pub seed: u64,
}

impl NoisedDataset {
    pub fn summary(&self) -> PublishSummary {
        PublishSummary {
            epsilon: self.epsilon.clone(),
            delta_f: self.delta_f.clone(),
            delta_f_prime: self.delta_f_prime.clone(),
            k: self.k,
            seed: self.seed,
        }
    }
}

fn check_budget(data: &Dataset, budget: &EpsilonBudget) -> Result<()> {
    if budget.per_attribute.len() != data.d() {
        return Err(DpError::Parameter(format!(
            "budget has {} entries for {} attributes",
            budget.per_attribute.len(),
            data.d()
        )));
    }
    if let Some(e) = budget.per_attribute.iter().find(|e| !(**e > 0.0)) {
        return Err(DpError::Parameter(format!("epsilon {e} must be positive")));
    }
    Ok(())
}

fn add_noise(rows: &mut [Vec<f64>], scales: &[f64], seed: u64) {
    for (j, &scale) in scales.iter().enumerate() {
        let mut rng = attribute_rng(seed, j);
        for row in rows.iter_mut() {
            row[j] += sample_laplace(scale, &mut rng);
        }
    }
}

fn delta_f(data: &Dataset) -> Result<Vec<f64>> {
    (0..data.d())
        .map(|j| Ok(AttributeStats::from_column(&data.column(j))?.delta_f))
        .collect()
}

/// Microaggregates with cluster size `k`, then adds Laplace noise of scale
/// `delta_f'_j / epsilon_j` to every attribute. Labels are left untouched.
pub fn publish_ima_dp(
    data: &Dataset,
    k: usize,
    budget: &EpsilonBudget,
    seed: u64,
) -> Result<NoisedDataset> {
    check_budget(data, budget)?;
    let clustered = ima_cluster(data, k)?;
    let mut rows = clustered.aggregated_rows(data.m());
    let delta_f = delta_f(data)?;
    let delta_f_prime: Vec<f64> = delta_f
        .iter()
        .map(|&f| ima_sensitivity(f, k, data.m()))
        .collect();
    let scales: Vec<f64> = delta_f_prime
        .iter()
        .zip(&budget.per_attribute)
        .map(|(f, e)| f / e)
        .collect();
    add_noise(&mut rows, &scales, seed);
    Ok(NoisedDataset {
        data: data.with_rows(rows).map_err(|e| DpError::Parameter(e.to_string()))?,
        epsilon: budget.per_attribute.clone(),
        delta_f,
        delta_f_prime,
        k: Some(k),
        seed,
    })
}

/// Baseline: Laplace noise of scale `delta_f_j / epsilon_j` on the raw records.
pub fn publish_standard_dp(data: &Dataset, budget: &EpsilonBudget, seed: u64) -> Result<NoisedDataset> {
    check_budget(data, budget)?;
    let mut rows = data.to_rows();
    let delta_f = delta_f(data)?;
    let scales: Vec<f64> = delta_f
        .iter()
        .zip(&budget.per_attribute)
        .map(|(f, e)| f / e)
        .collect();
    add_noise(&mut rows, &scales, seed);
    Ok(NoisedDataset {
        data: data.with_rows(rows).map_err(|e| DpError::Parameter(e.to_string()))?,
        epsilon: budget.per_attribute.clone(),
        delta_f_prime: delta_f.clone(),
        delta_f,
        k: None,
        seed,
    })
}
