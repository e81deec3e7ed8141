//! Seeded synthetic datasets shaped like the evaluation data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{AttributeMeta, Dataset};

/// Attributes uniform on `[0, 10)`; label 1 when the row mean exceeds 5.
pub fn uniform_dataset(m: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let row: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..10.0)).collect();
        let mean = row.iter().sum::<f64>() / d.max(1) as f64;
        labels.push(u8::from(mean > 5.0));
        rows.push(row);
    }
    Dataset::from_rows(rows, labels).expect("well-formed")
}

/// Two unit-variance Gaussian classes whose means differ by `separation`
/// along every attribute.
pub fn gaussian_classes(m: usize, d: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid");
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let y = (i % 2) as u8;
        let shift = if y == 1 { separation / 2.0 } else { -separation / 2.0 };
        rows.push((0..d).map(|_| normal.sample(&mut rng) + shift).collect());
        labels.push(y);
    }
    Dataset::from_rows(rows, labels).expect("well-formed")
}

/// Linearly separable: label is the sign of `x_0 + x_1 + ... - d/2` on
/// uniform `[0, 1)` data, with a margin band of width 0.1 removed.
pub fn separable_dataset(m: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    while rows.len() < m {
        let row: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let s = row.iter().sum::<f64>() - d as f64 / 2.0;
        if s.abs() < 0.1 {
            continue;
        }
        labels.push(u8::from(s > 0.0));
        rows.push(row);
    }
    Dataset::from_rows(rows, labels).expect("well-formed")
}

/// Discrete-valued attributes in `1..=levels` with a linear latent label
/// model. Attribute `j` carries weight `weights[j]`; the label is the sign of
/// the weighted, centred sum plus Gaussian noise of scale `noise`.
pub fn discrete_dataset(m: usize, weights: &[f64], levels: u32, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(1e-12)).expect("valid");
    let centre = (levels as f64 + 1.0) / 2.0;
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let row: Vec<f64> = weights
            .iter()
            .map(|_| rng.gen_range(1..=levels) as f64)
            .collect();
        let latent: f64 = row
            .iter()
            .zip(weights)
            .map(|(x, w)| w * (x - centre) / centre)
            .sum::<f64>()
            + normal.sample(&mut rng);
        labels.push(u8::from(latent > 0.0));
        rows.push(row);
    }
    let attributes = (0..weights.len())
        .map(|j| AttributeMeta::discrete(format!("a{j}")))
        .collect();
    Dataset::new(rows, labels, attributes).expect("well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        assert_eq!(uniform_dataset(20, 3, 1), uniform_dataset(20, 3, 1));
        let g = gaussian_classes(10, 2, 3.0, 2);
        assert_eq!(g.labels().iter().filter(|&&y| y == 1).count(), 5);
        let s = separable_dataset(50, 4, 3);
        assert_eq!((s.m(), s.d()), (50, 4));
        let d = discrete_dataset(40, &[2.0, 1.0, 0.0], 4, 0.1, 4);
        assert!(d.rows().all(|r| r.iter().all(|&x| (1.0..=4.0).contains(&x) && x.fract() == 0.0)));
    }
}
