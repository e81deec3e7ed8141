use serde::Serialize;

use super::{DpError, Result};
use crate::harness::Dataset;

/// Output of insensitive microaggregation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteredDataset {
    /// Record indices per cluster, in extraction order. The final cluster
    /// holds whatever remained (fewer than `2k` records); it is absent when
    /// nothing remained.
    pub clusters: Vec<Vec<usize>>,
    pub centroids: Vec<Vec<f64>>,
    pub k: usize,
    /// The boundary points `(P, P')` computed at the start of each loop.
    pub boundaries: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ClusteredDataset {
    /// Every record replaced by its cluster centroid, in original order.
    pub fn aggregated_rows(&self, m: usize) -> Vec<Vec<f64>> {
        let mut rows = vec![Vec::new(); m];
        for (cluster, centroid) in self.clusters.iter().zip(&self.centroids) {
            for &i in cluster {
                rows[i] = centroid.clone();
            }
        }
        rows
    }

    /// Cluster index of every record.
    pub fn assignment(&self, m: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; m];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &i in cluster {
                out[i] = c;
            }
        }
        out
    }
}

/// `floor(sqrt(m / 2))`, at least 1.
pub fn best_cluster_size(m: usize) -> usize {
    ((m as f64 / 2.0).sqrt().floor() as usize).max(1)
}

/// Sensitivity after microaggregation: `(delta_f / k) * ceil(m / 2k)`.
pub fn ima_sensitivity(delta_f: f64, k: usize, m: usize) -> f64 {
    delta_f / k as f64 * m.div_ceil(2 * k) as f64
}

/// Range-normalised Euclidean distance; attributes with zero range add nothing.
pub fn normalized_distance(x: &[f64], y: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(lo.iter().zip(hi))
        .map(|((a, b), (l, h))| {
            let range = h - l;
            if range > 0.0 {
                ((a - b) / range).powi(2)
            } else {
                0.0
            }
        })
        .sum::<f64>()
        .sqrt()
}

fn bounds(data: &Dataset, remaining: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = data.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &i in remaining {
        for (j, &x) in data.row(i).iter().enumerate() {
            lo[j] = lo[j].min(x);
            hi[j] = hi[j].max(x);
        }
    }
    (hi, lo)
}

/// Removes the `k` records of `remaining` nearest to `target`; ties go to
/// the lower record index.
fn take_nearest(
    data: &Dataset,
    remaining: &mut Vec<usize>,
    target: &[f64],
    lo: &[f64],
    hi: &[f64],
    k: usize,
) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = remaining
        .iter()
        .map(|&i| (normalized_distance(data.row(i), target, lo, hi), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let chosen: Vec<usize> = scored.iter().take(k).map(|&(_, i)| i).collect();
    remaining.retain(|i| !chosen.contains(i));
    chosen
}

fn centroid(data: &Dataset, cluster: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; data.d()];
    for &i in cluster {
        for (acc, &x) in c.iter_mut().zip(data.row(i)) {
            *acc += x;
        }
    }
    c.iter_mut().for_each(|v| *v /= cluster.len() as f64);
    c
}

/// While at least `2k` records remain: compute the componentwise maximum
/// `P` and minimum `P'` of the remaining records, move the `k` nearest to
/// `P` into one cluster, then the `k` nearest to `P'` into the next. The
/// remainder forms the last cluster.
pub fn ima_cluster(data: &Dataset, k: usize) -> Result<ClusteredDataset> {
    let m = data.m();
    if k == 0 {
        return Err(DpError::Parameter("cluster size must be at least 1".into()));
    }
    if m < 2 * k {
        return Err(DpError::Parameter(format!(
            "need at least 2k = {} records, got {m}",
            2 * k
        )));
    }
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut clusters = Vec::new();
    let mut boundaries = Vec::new();
    while remaining.len() >= 2 * k {
        let (p, p_prime) = bounds(data, &remaining);
        let high = take_nearest(data, &mut remaining, &p, &p_prime, &p, k);
        let low = take_nearest(data, &mut remaining, &p_prime, &p_prime, &p, k);
        clusters.push(high);
        clusters.push(low);
        boundaries.push((p, p_prime));
    }
    if !remaining.is_empty() {
        clusters.push(remaining);
    }
    let centroids = clusters.iter().map(|c| centroid(data, c)).collect();
    Ok(ClusteredDataset {
        clusters,
        centroids,
        k,
        boundaries,
    })
}
