//! Feature scoring, cross-provider score negotiation and the split of the
//! attributes into an encrypted (high-score) and a noised (low-score) part.

mod scores;
mod split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use scores::{average_ranks, chi2_score, kw_score, negotiate_scores, pearson_score, score, spearman_score};
pub use split::{order_and_split, SplitPlan};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("scoring needs both classes present")]
    SingleClass,
    #[error("dataset has no records")]
    Empty,
    #[error("iota {iota} outside 1..={d}")]
    IotaRange { iota: usize, d: usize },
    #[error("score vectors disagree: {0}")]
    Mismatch(String),
    #[error("unknown scoring method {0:?}")]
    UnknownMethod(String),
}

pub type Result<T> = std::result::Result<T, FeatureError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMethod {
    Kw,
    Chi2,
    Pearson,
    Spearman,
    Negotiated,
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMethod::Kw => "kw",
            ScoreMethod::Chi2 => "chi2",
            ScoreMethod::Pearson => "pearson",
            ScoreMethod::Spearman => "spearman",
            ScoreMethod::Negotiated => "negotiated",
        })
    }
}

impl FromStr for ScoreMethod {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kw" => Ok(ScoreMethod::Kw),
            "chi2" => Ok(ScoreMethod::Chi2),
            "pearson" => Ok(ScoreMethod::Pearson),
            "spearman" => Ok(ScoreMethod::Spearman),
            "negotiated" => Ok(ScoreMethod::Negotiated),
            _ => Err(FeatureError::UnknownMethod(s.to_string())),
        }
    }
}

/// Per-attribute scores and the attribute order they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScores {
    pub method: ScoreMethod,
    pub scores: Vec<f64>,
    /// Attribute indices, best first.
    pub ranking: Vec<usize>,
}

impl FeatureScores {
    /// Ranks descending by score; equal scores keep ascending index order.
    pub fn new(method: ScoreMethod, scores: Vec<f64>) -> Self {
        let mut ranking: Vec<usize> = (0..scores.len()).collect();
        ranking.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        FeatureScores {
            method,
            scores,
            ranking,
        }
    }

    pub fn d(&self) -> usize {
        self.scores.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_breaks_ties_by_index() {
        let s = FeatureScores::new(ScoreMethod::Kw, vec![1.0, 3.0, 1.0, 3.0]);
        assert_eq!(s.ranking, vec![1, 3, 0, 2]);
    }

    #[test]
    fn method_round_trip() {
        for m in [ScoreMethod::Kw, ScoreMethod::Chi2, ScoreMethod::Pearson, ScoreMethod::Spearman] {
            assert_eq!(m.to_string().parse::<ScoreMethod>().unwrap(), m);
        }
        assert!("rf".parse::<ScoreMethod>().is_err());
    }
}
