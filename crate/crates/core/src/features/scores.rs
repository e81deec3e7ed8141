use std::collections::BTreeMap;

use super::{FeatureError, FeatureScores, Result, ScoreMethod};
use crate::harness::{AttributeKind, Dataset};

const CHI2_BINS: usize = 10;

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn check_classes(data: &Dataset) -> Result<()> {
    if data.m() == 0 {
        return Err(FeatureError::Empty);
    }
    let positives = data.labels().iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == data.m() {
        return Err(FeatureError::SingleClass);
    }
    Ok(())
}

fn kw_h(column: &[f64], labels: &[u8]) -> f64 {
    let n = column.len() as f64;
    let ranks = average_ranks(column);
    let mut sum = [0.0f64; 2];
    let mut count = [0usize; 2];
    for (r, &y) in ranks.iter().zip(labels) {
        sum[y as usize] += r;
        count[y as usize] += 1;
    }
    let between: f64 = (0..2)
        .filter(|&g| count[g] > 0)
        .map(|g| sum[g] * sum[g] / count[g] as f64)
        .sum();
    let h = 12.0 / (n * (n + 1.0)) * between - 3.0 * (n + 1.0);

    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut run = 1.0f64;
    for i in 1..=sorted.len() {
        if i < sorted.len() && sorted[i] == sorted[i - 1] {
            run += 1.0;
        } else {
            ties += run.powi(3) - run;
            run = 1.0;
        }
    }
    let correction = 1.0 - ties / (n.powi(3) - n);
    if correction <= 0.0 {
        0.0
    } else {
        (h / correction).max(0.0)
    }
}

/// Kruskal-Wallis H of each attribute grouped by class, tie corrected.
pub fn kw_score(data: &Dataset) -> Result<FeatureScores> {
    check_classes(data)?;
    let scores = (0..data.d())
        .map(|j| kw_h(&data.column(j), data.labels()))
        .collect();
    Ok(FeatureScores::new(ScoreMethod::Kw, scores))
}

fn bin_codes(column: &[f64], kind: AttributeKind) -> Vec<u64> {
    match kind {
        AttributeKind::Discrete => column.iter().map(|x| x.to_bits()).collect(),
        AttributeKind::Numeric => {
            let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let width = (hi - lo) / CHI2_BINS as f64;
            column
                .iter()
                .map(|&x| {
                    if width > 0.0 {
                        (((x - lo) / width) as u64).min(CHI2_BINS as u64 - 1)
                    } else {
                        0
                    }
                })
                .collect()
        }
    }
}

fn chi2_statistic(codes: &[u64], labels: &[u8]) -> f64 {
    let n = codes.len() as f64;
    let mut table: BTreeMap<u64, [f64; 2]> = BTreeMap::new();
    let mut class_totals = [0.0f64; 2];
    for (&c, &y) in codes.iter().zip(labels) {
        table.entry(c).or_insert([0.0; 2])[y as usize] += 1.0;
        class_totals[y as usize] += 1.0;
    }
    let mut stat = 0.0;
    for row in table.values() {
        let row_total = row[0] + row[1];
        for g in 0..2 {
            let expected = row_total * class_totals[g] / n;
            if expected > 0.0 {
                stat += (row[g] - expected).powi(2) / expected;
            }
        }
    }
    stat
}

/// Pearson chi-square of attribute versus class. Numeric attributes are cut
/// into 10 equal-width bins; discrete attributes use their categories.
pub fn chi2_score(data: &Dataset) -> Result<FeatureScores> {
    check_classes(data)?;
    let scores = (0..data.d())
        .map(|j| {
            let codes = bin_codes(&data.column(j), data.attributes()[j].kind);
            chi2_statistic(&codes, data.labels())
        })
        .collect();
    Ok(FeatureScores::new(ScoreMethod::Chi2, scores))
}

fn abs_correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        (sxy / (sxx.sqrt() * syy.sqrt())).abs().min(1.0)
    }
}

fn labels_f64(data: &Dataset) -> Vec<f64> {
    data.labels().iter().map(|&y| y as f64).collect()
}

/// `|corr(A_j, y)|`, zero for constant attributes.
pub fn pearson_score(data: &Dataset) -> Result<FeatureScores> {
    if data.m() == 0 {
        return Err(FeatureError::Empty);
    }
    let y = labels_f64(data);
    let scores = (0..data.d()).map(|j| abs_correlation(&data.column(j), &y)).collect();
    Ok(FeatureScores::new(ScoreMethod::Pearson, scores))
}

/// Absolute rank correlation with the label.
pub fn spearman_score(data: &Dataset) -> Result<FeatureScores> {
    if data.m() == 0 {
        return Err(FeatureError::Empty);
    }
    let y = average_ranks(&labels_f64(data));
    let scores = (0..data.d())
        .map(|j| abs_correlation(&average_ranks(&data.column(j)), &y))
        .collect();
    Ok(FeatureScores::new(ScoreMethod::Spearman, scores))
}

pub fn score(data: &Dataset, method: ScoreMethod) -> Result<FeatureScores> {
    match method {
        ScoreMethod::Kw => kw_score(data),
        ScoreMethod::Chi2 => chi2_score(data),
        ScoreMethod::Pearson => pearson_score(data),
        ScoreMethod::Spearman => spearman_score(data),
        ScoreMethod::Negotiated => Err(FeatureError::UnknownMethod(
            "negotiated scores come from negotiate_scores".into(),
        )),
    }
}

fn min_max(scores: &[f64]) -> Vec<f64> {
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .map(|s| if hi > lo { (s - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

/// Attribute-wise mean of each provider's min-max normalised scores. The
/// method tag survives when every provider used the same scorer.
pub fn negotiate_scores(providers: &[FeatureScores]) -> Result<FeatureScores> {
    let first = providers
        .first()
        .ok_or_else(|| FeatureError::Mismatch("no provider scores".into()))?;
    let d = first.d();
    if let Some(p) = providers.iter().find(|p| p.d() != d) {
        return Err(FeatureError::Mismatch(format!("{} vs {d} attributes", p.d())));
    }
    let mut mean = vec![0.0; d];
    for p in providers {
        for (acc, s) in mean.iter_mut().zip(min_max(&p.scores)) {
            *acc += s;
        }
    }
    mean.iter_mut().for_each(|s| *s /= providers.len() as f64);
    let method = if providers.iter().all(|p| p.method == first.method) {
        first.method
    } else {
        ScoreMethod::Negotiated
    };
    Ok(FeatureScores::new(method, mean))
}
