use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{FromPrimitive, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{CryptoError, Result};

/// Two decimal places.
pub const DEFAULT_SCALE: u64 = 100;

// Below this magnitude an f64 holds every integer exactly.
const EXACT_F64: f64 = 4_503_599_627_370_496.0; // 2^52

/// Decimal fixed-point codec: a real `x` at scale exponent `s` is the integer
/// `round(x * Q^s)`, stored in `Z_N` with negatives in the upper half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointCodec {
    scale: u64,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        FixedPointCodec {
            scale: DEFAULT_SCALE,
        }
    }
}

/// Natural log of a positive big integer, accurate to f64 precision even when
/// the integer is far outside the f64 range.
pub fn ln_biguint(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_u64().unwrap_or(u64::MAX) as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

impl FixedPointCodec {
    pub fn new(scale: u64) -> Result<Self> {
        if scale < 2 {
            return Err(CryptoError::Parameter(format!(
                "fixed-point scale must be at least 2, got {scale}"
            )));
        }
        Ok(FixedPointCodec { scale })
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// `Q^scale_exp` as a big integer.
    pub fn factor(&self, scale_exp: u32) -> BigUint {
        Pow::pow(BigUint::from(self.scale), scale_exp)
    }

    pub fn ln_scale(&self) -> f64 {
        (self.scale as f64).ln()
    }

    /// Errors unless `Q^scale_exp < N/2`, i.e. at least one unit of the value
    /// fits into the signed half of the plaintext space.
    pub fn check_scale(&self, scale_exp: u32, n: &BigUint) -> Result<()> {
        if self.factor(scale_exp) >= (n >> 1u32) {
            return Err(CryptoError::ScaleOverflow {
                scale_exp,
                key_bits: n.bits(),
            });
        }
        Ok(())
    }

    /// `round(x * Q^scale_exp)` with ties to even.
    pub fn quantize(&self, x: f64, scale_exp: u32) -> Result<BigInt> {
        if !x.is_finite() {
            return Err(CryptoError::NonFinite(x));
        }
        let factor = (self.scale as f64).powi(scale_exp as i32);
        let y = x * factor;
        if y.is_finite() && y.abs() < EXACT_F64 {
            return Ok(BigInt::from_f64(y.round_ties_even()).unwrap_or_default());
        }
        if y.is_finite() {
            return BigInt::from_f64(y.round_ties_even()).ok_or(CryptoError::NonFinite(y));
        }
        // Q^scale_exp alone overflows f64: scale in two steps.
        let mut head = 0u32;
        while head < scale_exp && (x.abs() * (self.scale as f64).powi(head as i32 + 1)) < 1e300 {
            head += 1;
        }
        let partial = BigInt::from_f64((x * (self.scale as f64).powi(head as i32)).round_ties_even())
            .ok_or(CryptoError::NonFinite(x))?;
        Ok(partial * BigInt::from_biguint(Sign::Plus, self.factor(scale_exp - head)))
    }

    /// `round(e^ln_value * Q^scale_exp)` evaluated in the log domain, so the
    /// result may exceed the f64 range.
    pub fn quantize_exp(&self, ln_value: f64, scale_exp: u32) -> Result<BigUint> {
        if !ln_value.is_finite() {
            return Err(CryptoError::NonFinite(ln_value));
        }
        let total = ln_value + scale_exp as f64 * self.ln_scale();
        if total < 600.0 {
            let v = total.exp().round_ties_even();
            return Ok(BigUint::from_f64(v).unwrap_or_default());
        }
        // e^total = m * 2^k with m kept near 2^60
        let k = ((total / std::f64::consts::LN_2) - 60.0).floor();
        let m = (total - k * std::f64::consts::LN_2).exp().round();
        let head = BigUint::from_f64(m).ok_or(CryptoError::NonFinite(m))?;
        Ok(head << (k as u64))
    }

    /// Maps a signed integer into `Z_N`, rejecting `|v| >= N/2`.
    pub fn to_residue(&self, v: &BigInt, n: &BigUint) -> Result<BigUint> {
        if v.magnitude() > &(n >> 1u32) {
            return Err(CryptoError::PlaintextRange);
        }
        Ok(match v.sign() {
            Sign::Minus => n - v.magnitude(),
            _ => v.magnitude().clone(),
        })
    }

    /// Residue in `Z_N` back to a signed integer.
    pub fn from_residue(&self, m: &BigUint, n: &BigUint) -> BigInt {
        if m > &(n >> 1u32) {
            -BigInt::from_biguint(Sign::Plus, n - m)
        } else {
            BigInt::from_biguint(Sign::Plus, m.clone())
        }
    }

    /// `fp_encode` at scale exponent 1.
    pub fn encode(&self, x: f64, n: &BigUint) -> Result<BigUint> {
        self.encode_at(x, 1, n)
    }

    pub fn encode_at(&self, x: f64, scale_exp: u32, n: &BigUint) -> Result<BigUint> {
        let v = self.quantize(x, scale_exp)?;
        self.to_residue(&v, n)
    }

    /// `fp_decode` at scale exponent 1.
    pub fn decode(&self, m: &BigUint, n: &BigUint) -> f64 {
        self.decode_at(m, 1, n)
    }

    pub fn decode_at(&self, m: &BigUint, scale_exp: u32, n: &BigUint) -> f64 {
        self.decode_signed(&self.from_residue(m, n), scale_exp)
    }

    /// Real value of a signed fixed-point integer.
    pub fn decode_signed(&self, v: &BigInt, scale_exp: u32) -> f64 {
        let factor = (self.scale as f64).powi(scale_exp as i32);
        if let Some(f) = v.to_f64() {
            if f.is_finite() && factor.is_finite() && f.abs() < 1e300 {
                return f / factor;
            }
        }
        let sign = if v.is_negative() { -1.0 } else { 1.0 };
        sign * self.ln_decode(v.magnitude(), scale_exp).exp()
    }

    /// `ln(m / Q^scale_exp)` for a positive integer, computed without leaving
    /// the log domain.
    pub fn ln_decode(&self, m: &BigUint, scale_exp: u32) -> f64 {
        ln_biguint(m) - scale_exp as f64 * self.ln_scale()
    }
}
