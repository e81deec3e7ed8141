//! Logistic regression: the plaintext baseline, secure training over
//! encrypted provider data, and the mixed encrypted/noised pipeline.

mod heda;
mod model;
mod plain;
mod secure;

use serde::{Deserialize, Serialize};

use crate::crypto::CryptoError;
use crate::dp::{DpError, PublishSummary};
use crate::features::FeatureError;
use crate::protocols::{ProtocolError, ProtocolTranscript, TranscriptStats};

pub use heda::{heda_train, DpParams, EpsilonMode};
pub use model::{accuracy, gradient, log_loss, predict, sigmoid};
pub use plain::plaintext_lr_train;
pub use secure::{
    exponent_budget, quantize_weights, secure_lr_train, IterationTrace, Provider, SecureConfig, User,
    BLIND_RANGE, FACTOR_SCALE_EXP,
};

#[derive(Debug, thiserror::Error)]
pub enum TrainingError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("no training records")]
    Empty,
}

pub type Result<T> = std::result::Result<T, TrainingError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Learning rate.
    pub alpha: f64,
    /// Maximum number of full-batch updates.
    pub cycles: usize,
    /// Stop once no coordinate moves by this much.
    pub threshold: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 0.1,
            cycles: 100,
            threshold: 1e-4,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(TrainingError::Parameter(format!("learning rate {}", self.alpha)));
        }
        if !(self.threshold >= 0.0) {
            return Err(TrainingError::Parameter(format!("threshold {}", self.threshold)));
        }
        Ok(())
    }
}

/// Weights followed by the bias, so `beta.len() == d + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: Vec<f64>,
    pub hyper: Hyperparams,
}

impl ModelParams {
    pub fn new(beta: Vec<f64>, hyper: Hyperparams) -> Result<Self> {
        if beta.is_empty() || beta.iter().any(|b| !b.is_finite()) {
            return Err(TrainingError::Parameter("beta must be finite and nonempty".into()));
        }
        Ok(ModelParams { beta, hyper })
    }

    pub fn zeros(d: usize, hyper: Hyperparams) -> Self {
        ModelParams {
            beta: vec![0.0; d + 1],
            hyper,
        }
    }

    pub fn d(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.beta[..self.d()]
    }

    pub fn bias(&self) -> f64 {
        self.beta[self.d()]
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        predict(&self.beta, x)
    }
}

// an empty f64 sum is -0.0
fn seconds(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a + b)
}

/// Busy seconds per role and path. Provider entries are per provider.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    pub provider_hc: Vec<f64>,
    pub provider_dp: Vec<f64>,
    /// User time spent inside each provider's encrypted flow.
    pub user_hc: Vec<f64>,
    pub user_dp: f64,
}

impl PhaseTimes {
    /// Every party's work run one after another, as when several providers
    /// are simulated in one process.
    pub fn serial_total(&self) -> f64 {
        seconds(&self.provider_hc)
            + seconds(&self.provider_dp)
            + seconds(&self.user_hc)
            + self.user_dp
    }

    /// Providers and the user's per-provider flows run concurrently.
    pub fn parallel_estimate(&self) -> f64 {
        let per_provider = (0..self.provider_hc.len())
            .map(|p| {
                self.provider_hc[p]
                    + self.provider_dp.get(p).copied().unwrap_or(0.0)
                    + self.user_hc.get(p).copied().unwrap_or(0.0)
            })
            .fold(0.0, f64::max);
        per_provider + self.user_dp
    }

    pub fn provider_total(&self) -> f64 {
        seconds(&self.provider_hc) + seconds(&self.provider_dp)
    }

    pub fn user_total(&self) -> f64 {
        seconds(&self.user_hc) + self.user_dp
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainMetrics {
    pub round_trips: u64,
    pub messages: u64,
    /// Bytes of encrypted-protocol traffic in both directions.
    pub bytes: u64,
    /// Bytes of plaintext noised releases, 8 per value and 1 per label.
    pub dp_bytes: u64,
    pub per_provider: Vec<TranscriptStats>,
    pub times: PhaseTimes,
    /// Iterations in which the quantized encrypted weights were scaled down
    /// to fit the exponent budget.
    pub beta_clips: u64,
    /// Records whose plaintext margin was clipped.
    pub margin_clips: u64,
    pub exponent_budget: Option<u64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelParams,
    pub iterations: usize,
    pub converged: bool,
    pub metrics: TrainMetrics,
    pub trace: Vec<IterationTrace>,
    /// Kept only when the session records full transcripts.
    pub transcripts: Vec<ProtocolTranscript>,
    pub releases: Vec<PublishSummary>,
}

impl TrainOutcome {
    pub(crate) fn plain(model: ModelParams, iterations: usize, converged: bool, wall_time: f64) -> Self {
        TrainOutcome {
            model,
            iterations,
            converged,
            metrics: TrainMetrics {
                times: PhaseTimes {
                    user_dp: wall_time,
                    ..Default::default()
                },
                wall_time,
                ..Default::default()
            },
            trace: Vec::new(),
            transcripts: Vec::new(),
            releases: Vec::new(),
        }
    }
}

/// One gradient-descent update; returns the largest coordinate change.
pub(crate) fn apply_update(beta: &mut [f64], grad_sum: &[f64], alpha: f64, m: usize) -> f64 {
    let step = alpha / m as f64;
    let mut max_delta: f64 = 0.0;
    for (b, g) in beta.iter_mut().zip(grad_sum) {
        let delta = step * g;
        *b -= delta;
        max_delta = max_delta.max(delta.abs());
    }
    max_delta
}
