use super::ima::normalized_distance;
use super::{DpError, Result};
use crate::harness::Dataset;

fn same_shape(a: &Dataset, b: &Dataset) -> Result<()> {
    if a.m() != b.m() || a.d() != b.d() {
        return Err(DpError::Parameter(format!(
            "shape mismatch: {}x{} vs {}x{}",
            a.m(),
            a.d(),
            b.m(),
            b.d()
        )));
    }
    Ok(())
}

/// Sum of squared attribute differences.
pub fn sse(original: &Dataset, published: &Dataset) -> Result<f64> {
    same_shape(original, published)?;
    Ok(original
        .rows()
        .zip(published.rows())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
        .sum())
}

/// Share of published records linked back to their source by a
/// nearest-neighbour attack. Each published record `i` scores `1/|R|` when
/// original record `i` is among the set `R` of originals at minimum
/// range-normalised distance.
pub fn record_linkage(original: &Dataset, published: &Dataset) -> Result<f64> {
    same_shape(original, published)?;
    let m = original.m();
    if m == 0 {
        return Err(DpError::EmptyColumn);
    }
    let ranges = original.column_ranges();
    let lo: Vec<f64> = ranges.iter().map(|r| r.0).collect();
    let hi: Vec<f64> = ranges.iter().map(|r| r.1).collect();
    let mut total = 0.0;
    for (i, p) in published.rows().enumerate() {
        let dists: Vec<f64> = original
            .rows()
            .map(|o| normalized_distance(p, o, &lo, &hi))
            .collect();
        let best = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * best.max(1e-300);
        let nearest = dists.iter().filter(|&&d| d - best <= tol).count();
        if dists[i] - best <= tol {
            total += 1.0 / nearest as f64;
        }
    }
    Ok(total / m as f64)
}
