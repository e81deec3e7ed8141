use crate::harness::Dataset;

/// Logistic function, evaluated on the side that cannot overflow.
pub fn sigmoid(z: f64) -> f64 {
    if z < 0.0 {
        let e = z.exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + (-z).exp())
    }
}

fn margin(beta: &[f64], x: &[f64]) -> f64 {
    let d = beta.len() - 1;
    beta[d] + beta[..d].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
}

/// Class 1 when `sigmoid(beta . (x, 1)) >= 0.5`.
pub fn predict(beta: &[f64], x: &[f64]) -> u8 {
    u8::from(sigmoid(margin(beta, x)) >= 0.5)
}

/// Share of correctly classified records; 0 for an empty set.
pub fn accuracy(beta: &[f64], data: &Dataset) -> f64 {
    if data.m() == 0 {
        return 0.0;
    }
    let correct = data
        .rows()
        .zip(data.labels())
        .filter(|(x, &y)| predict(beta, x) == y)
        .count();
    correct as f64 / data.m() as f64
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood.
pub fn log_loss(beta: &[f64], data: &Dataset) -> f64 {
    let total: f64 = data
        .rows()
        .zip(data.labels())
        .map(|(x, &y)| {
            let z = margin(beta, x);
            softplus(z) - y as f64 * z
        })
        .sum();
    total / data.m().max(1) as f64
}

/// Gradient of [`log_loss`]: `(1/m) sum_i (sigmoid(beta x_i) - y_i) (x_i, 1)`.
pub fn gradient(beta: &[f64], data: &Dataset) -> Vec<f64> {
    let mut g = gradient_sum(beta, data);
    g.iter_mut().for_each(|v| *v /= data.m().max(1) as f64);
    g
}

pub(crate) fn gradient_sum(beta: &[f64], data: &Dataset) -> Vec<f64> {
    let d = beta.len() - 1;
    let mut g = vec![0.0; d + 1];
    for (x, &y) in data.rows().zip(data.labels()) {
        let err = sigmoid(margin(beta, x)) - y as f64;
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += err * xj;
        }
        g[d] += err;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(1e4), 1.0);
        assert_eq!(sigmoid(-1e4), 0.0);
        assert!((sigmoid(1.0) - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn zero_beta_predicts_class_one() {
        assert_eq!(predict(&[0.0, 0.0, 0.0], &[3.0, -2.0]), 1);
    }

    #[test]
    fn zero_beta_loss_is_ln2() {
        let data = Dataset::from_rows(vec![vec![1.0], vec![2.0]], vec![0, 1]).unwrap();
        assert!((log_loss(&[0.0, 0.0], &data) - std::f64::consts::LN_2).abs() < 1e-15);
        let g = gradient(&[0.0, 0.0], &data);
        assert!((g[0] - (0.5 - 1.0) / 2.0).abs() < 1e-15);
        assert_eq!(g[1], 0.0);
    }
}
