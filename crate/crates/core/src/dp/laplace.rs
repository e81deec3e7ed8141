use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// One draw from `Laplace(0, scale)` by inverting the CDF.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        if u > -0.5 {
            return -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
        }
    }
}

pub fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

/// The generator for attribute `j` under experiment seed `seed`.
pub fn attribute_rng(seed: u64, j: usize) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed ^ j as u64)
}
