use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};

/// Miller-Rabin witness count used by [`is_probable_prime`].
pub const MILLER_RABIN_ROUNDS: usize = 64;

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Trial division by small primes followed by `MILLER_RABIN_ROUNDS` random
/// Miller-Rabin bases.
pub fn is_probable_prime<R: RngCore + CryptoRng + ?Sized>(n: &BigUint, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in SMALL_PRIMES.iter() {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }

    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;

    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
            if x.is_one() {
                return false;
            }
        }
        return false;
    }
    true
}

/// Random probable prime of exactly `bits` bits (top two bits set so the
/// product of two such primes has exactly `2 * bits` bits).
pub fn gen_prime<R: RngCore + CryptoRng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    assert!(bits >= 8, "prime size too small");
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, rng) {
            return candidate;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn classifies_small_numbers() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let primes: Vec<u32> = (0..400u32)
            .filter(|&n| is_probable_prime(&BigUint::from(n), &mut rng))
            .collect();
        let oracle: Vec<u32> = (0..400u32)
            .filter(|&n| n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect();
        assert_eq!(primes, oracle);
    }

    #[test]
    fn rejects_carmichael_numbers() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for c in [561u64, 1105, 1729, 2465, 2821, 6601, 8911, 3_215_031_751] {
            assert!(!is_probable_prime(&BigUint::from(c), &mut rng), "{c}");
        }
    }

    #[test]
    fn accepts_known_large_prime() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let m127 = (BigUint::one() << 127u32) - 1u32;
        assert!(is_probable_prime(&m127, &mut rng));
        assert!(!is_probable_prime(&(&m127 + 2u32), &mut rng));
    }

    #[test]
    fn generated_prime_has_requested_size() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let p = gen_prime(128, &mut rng);
        assert_eq!(p.bits(), 128);
        assert!(p.bit(0));
    }
}
