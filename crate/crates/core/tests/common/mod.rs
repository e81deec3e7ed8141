#![allow(dead_code)]

pub mod checks;
pub mod stats;

use heda_core::harness::Dataset;

/// Plaintext replay of secure training with the same quantization: inputs on
/// the two-decimal grid, weights entering the exponent as `round(Q_e beta)`
/// (scaled toward zero past `budget`), and every `e^x` factor rounded at
/// scale `q`.
pub struct Shadow {
    pub q: f64,
    pub beta_scale: f64,
    pub budget: u64,
}

impl Shadow {
    pub fn weights(&self, beta: &[f64]) -> Vec<i64> {
        let b: Vec<i64> = beta
            .iter()
            .map(|x| (x * self.beta_scale).round_ties_even() as i64)
            .collect();
        let total: u64 = b.iter().map(|v| v.unsigned_abs()).sum();
        if total <= self.budget {
            return b;
        }
        let f = self.budget as f64 / total as f64;
        b.iter().map(|&v| (v as f64 * f).trunc() as i64).collect()
    }

    fn grid(&self, x: f64) -> f64 {
        (x.clamp(0.0, 1.0) * self.q).round_ties_even() / self.q
    }

    fn factor_ln(&self, s: f64) -> f64 {
        ((s.exp() * self.q).round_ties_even() / self.q).ln()
    }

    /// Encrypted part of the margin for one record over `[0, 1]` bounds.
    pub fn z_enc(&self, b: &[i64], x: &[f64]) -> f64 {
        let mut ln = 0.0;
        let mut offset = 0.0;
        for (&e, &v) in b.iter().zip(x) {
            let v = self.grid(v);
            if e > 0 {
                ln += e as f64 * self.factor_ln(v);
            } else if e < 0 {
                ln += (-e) as f64 * self.factor_ln(1.0 - v);
                offset += e as f64;
            }
        }
        (ln + offset) / self.beta_scale
    }

    pub fn gradient(&self, beta: &[f64], data: &Dataset) -> Vec<f64> {
        let d = data.d();
        let b = self.weights(&beta[..d]);
        let mut g = vec![0.0; d + 1];
        for (x, &y) in data.rows().zip(data.labels()) {
            let z = self.z_enc(&b, x) + beta[d];
            let err = 1.0 / (1.0 + (-z).exp()) - y as f64;
            for j in 0..d {
                g[j] += err * self.grid(x[j]);
            }
            g[d] += err;
        }
        g
    }

    /// Gradient sum of the mixed flow in split order `[high.., low.., bias]`:
    /// `high` goes through the encrypted path, `low` is the noised release,
    /// which enters at two decimals.
    pub fn mixed_gradient(&self, beta: &[f64], high: &Dataset, low: &Dataset, clip: f64) -> Vec<f64> {
        let (iota, n_low) = (high.d(), low.d());
        let b = self.weights(&beta[..iota]);
        let mut g = vec![0.0; iota + n_low + 1];
        for (i, &y) in high.labels().iter().enumerate() {
            let xl: Vec<f64> = low.row(i).iter().map(|x| (x * self.q).round_ties_even() / self.q).collect();
            let zp = (beta[iota + n_low] + xl.iter().zip(&beta[iota..]).map(|(x, w)| x * w).sum::<f64>())
                .clamp(-clip, clip);
            let z = self.z_enc(&b, high.row(i)) + zp;
            let err = 1.0 / (1.0 + (-z).exp()) - y as f64;
            for j in 0..iota {
                g[j] += err * self.grid(high.value(i, j));
            }
            for (k, x) in xl.iter().enumerate() {
                g[iota + k] += err * x;
            }
            g[iota + n_low] += err;
        }
        g
    }

    pub fn train_mixed(&self, high: &Dataset, low: &Dataset, alpha: f64, iterations: usize) -> Vec<f64> {
        let mut beta = vec![0.0; high.d() + low.d() + 1];
        for _ in 0..iterations {
            let g = self.mixed_gradient(&beta, high, low, 40.0);
            for (b, gj) in beta.iter_mut().zip(g) {
                *b -= alpha / high.m() as f64 * gj;
            }
        }
        beta
    }

    pub fn train(&self, data: &Dataset, alpha: f64, iterations: usize) -> Vec<f64> {
        let mut beta = vec![0.0; data.d() + 1];
        for _ in 0..iterations {
            let g = self.gradient(&beta, data);
            for (b, gj) in beta.iter_mut().zip(g) {
                *b -= alpha / data.m() as f64 * gj;
            }
        }
        beta
    }
}

/// Toy data on `[0, 1]^d` with a noisy linear label.
pub fn toy(m: usize, d: usize, seed: u64) -> Dataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let row: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = row
            .iter()
            .enumerate()
            .map(|(j, x)| if j % 2 == 0 { 2.0 * x } else { -x })
            .sum::<f64>()
            + rng.gen_range(-0.3..0.3);
        labels.push(u8::from(s > 0.5 * d as f64 / 2.0));
        rows.push(row);
    }
    Dataset::from_rows(rows, labels).unwrap()
}

/// Worst relative error, in vector norm, between the analytic gradient and
/// central differences of the log-loss on a random instance.
pub fn finite_difference_case(seed: u64) -> f64 {
    use heda_core::training::{gradient, log_loss};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let m = rng.gen_range(5..40);
    let d = rng.gen_range(1..8);
    let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let labels: Vec<u8> = (0..m).map(|_| rng.gen_range(0..2)).collect();
    let data = Dataset::from_rows(rows, labels).unwrap();
    let beta: Vec<f64> = (0..=d).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let g = gradient(&beta, &data);
    let h = 1e-5;
    let fd: Vec<f64> = (0..=d)
        .map(|j| {
            let mut up = beta.clone();
            let mut down = beta.clone();
            up[j] += h;
            down[j] -= h;
            (log_loss(&up, &data) - log_loss(&down, &data)) / (2.0 * h)
        })
        .collect();
    let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / norm.max(1e-3)
}
