//! Small statistics used by the distribution checks.

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((((i + 1) as f64) / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value at level 0.01.
pub fn ks_critical_01(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
