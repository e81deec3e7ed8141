use std::time::Instant;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::secure::{run_secure, FlowInput, Provider, SecureConfig, User};
use super::{Hyperparams, Result, TrainOutcome, TrainingError};
use crate::dp::{best_cluster_size, publish_ima_dp, select_epsilon, EpsilonBounds, EpsilonBudget};
use crate::features::SplitPlan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonMode {
    /// Per-attribute budget from the guessing-probability bound.
    Auto(EpsilonBounds),
    Fixed(f64),
}

impl Default for EpsilonMode {
    fn default() -> Self {
        EpsilonMode::Auto(EpsilonBounds::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DpParams {
    /// Cluster size; `floor(sqrt(m/2))` of each provider's block when absent.
    pub k: Option<usize>,
    pub epsilon: EpsilonMode,
    /// Provider `p` publishes with seed `seed + p`.
    pub seed: u64,
}

/// Mixed training: each provider publishes its low-score attributes through
/// microaggregation plus Laplace noise and keeps the high-score attributes
/// encrypted. Every iteration shares one margin per record between the two
/// parts, so the high-score coordinates come from the encrypted flow and the
/// rest are computed on the noised columns.
pub fn heda_train<R: RngCore + CryptoRng + ?Sized>(
    user: &User,
    providers: &[Provider],
    plan: &SplitPlan,
    dp: &DpParams,
    hyper: &Hyperparams,
    config: &SecureConfig,
    rng: &mut R,
) -> Result<TrainOutcome> {
    if plan.iota == 0 || plan.high.len() != plan.iota {
        return Err(TrainingError::Parameter(format!("iota {} must be at least 1", plan.iota)));
    }
    let mut inputs = Vec::with_capacity(providers.len());
    let mut releases = Vec::new();
    for (p, provider) in providers.iter().enumerate() {
        if plan.d() != provider.data().d() {
            return Err(TrainingError::Dimension(format!(
                "split covers {} attributes, provider holds {}",
                plan.d(),
                provider.data().d()
            )));
        }
        if plan.low.is_empty() {
            inputs.push(FlowInput {
                provider,
                plain: None,
                dp_secs: 0.0,
                dp_bytes: 0,
            });
            continue;
        }
        let start = Instant::now();
        let low = provider.data().select_columns(&plan.low);
        let budget = match dp.epsilon {
            EpsilonMode::Auto(bounds) => select_epsilon(&low, &bounds)?,
            EpsilonMode::Fixed(eps) => EpsilonBudget::uniform(eps, low.d())?,
        };
        let k = dp.k.unwrap_or_else(|| best_cluster_size(low.m()));
        let release = publish_ima_dp(&low, k, &budget, dp.seed.wrapping_add(p as u64))?;
        let dp_secs = start.elapsed().as_secs_f64();
        let dp_bytes = (low.m() * (8 * low.d() + 1)) as u64;
        releases.push(release.summary());
        inputs.push(FlowInput {
            provider,
            plain: Some(release.data),
            dp_secs,
            dp_bytes,
        });
    }
    let mut outcome = run_secure(user, inputs, &plan.high, &plan.low, hyper, config, rng)?;
    outcome.releases = releases;
    Ok(outcome)
}
