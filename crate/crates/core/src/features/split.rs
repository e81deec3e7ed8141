use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureScores, Result};
use crate::harness::Dataset;

/// Which attributes go to the encrypted path and which to the noised path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub iota: usize,
    /// Original attribute indices of the high-score part, best first.
    pub high: Vec<usize>,
    pub low: Vec<usize>,
}

impl SplitPlan {
    pub fn new(scores: &FeatureScores, iota: usize) -> Result<Self> {
        let d = scores.d();
        if iota == 0 || iota > d {
            return Err(FeatureError::IotaRange { iota, d });
        }
        Ok(SplitPlan {
            iota,
            high: scores.ranking[..iota].to_vec(),
            low: scores.ranking[iota..].to_vec(),
        })
    }

    pub fn d(&self) -> usize {
        self.high.len() + self.low.len()
    }

    /// The full column order, high part first.
    pub fn order(&self) -> Vec<usize> {
        self.high.iter().chain(&self.low).copied().collect()
    }
}

/// Reorders the columns by descending score and cuts after `iota`. Both
/// halves keep all records and labels.
pub fn order_and_split(
    data: &Dataset,
    scores: &FeatureScores,
    iota: usize,
) -> Result<(Dataset, Dataset, SplitPlan)> {
    if scores.d() != data.d() {
        return Err(FeatureError::Mismatch(format!(
            "{} scores for {} attributes",
            scores.d(),
            data.d()
        )));
    }
    let plan = SplitPlan::new(scores, iota)?;
    Ok((data.select_columns(&plan.high), data.select_columns(&plan.low), plan))
}
