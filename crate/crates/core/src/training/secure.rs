//! Secure logistic regression between one user and several providers.
//!
//! Per iteration and provider the flow is:
//!
//! 1. The provider sends, for every record and encrypted attribute, RSA
//!    encryptions of `round(e^{x - lo} Q)` and `round(e^{hi - x} Q)`, plus
//!    Paillier encryptions of the column sums `sum X` and `sum XY`.
//! 2. The user raises the factors to the quantized weights `b = round(Q_e beta)`
//!    (positive weights use the first encoding, negative ones the second),
//!    pads every product to the same number of factors and converts it to
//!    `[[e^{z_enc}]]` with the root-taking RSA-to-Paillier conversion.
//! 3. The user folds in the plaintext part of the margin and a blinding
//!    exponent `r`, sending `[[e^r (e^z + 1)]]`.
//! 4. The provider decrypts, divides each attribute (and the constant 1) by
//!    the blinded denominator and returns the encrypted quotients.
//! 5. The user removes `e^r`, assembles the encrypted gradient, has it
//!    re-keyed to the user's own Paillier key, decrypts and updates `beta`.
//!
//! Steps 2 to 5 are three round trips.

use std::f64::consts::LN_2;
use std::time::Instant;

use num_bigint::BigInt;
use rand::{CryptoRng, Rng, RngCore};
use serde::Serialize;

use super::{apply_update, Hyperparams, ModelParams, PhaseTimes, Result, TrainMetrics, TrainOutcome, TrainingError};
use crate::crypto::{Ciphertext, FixedPointCodec, PaillierPublicKey};
use crate::harness::Dataset;
use crate::protocols::{
    convert_rsa_to_paillier_blinded, rekey_paillier, BlindingRange, ConvertOptions, Item, Party,
    ProtocolError, ProtocolId, Role, Session, TranscriptMode,
};

/// Scale exponent of the provider's `e^{x}` factors.
pub const FACTOR_SCALE_EXP: u32 = 1;
const BLIND_SCALE_EXP: u32 = 2;
const CONVERT_SCALE_EXP: u32 = 4;
const MARGIN_SCALE_EXP: u32 = 11;
const REPLY_SCALE_EXP: u32 = 6;
const UNBLIND_SCALE_EXP: u32 = 4;
/// Blinding exponents are drawn uniformly from this range (in margin units).
pub const BLIND_RANGE: (f64, f64) = (1.0, 4.0);

/// A data holder: owns Paillier and RSA key pairs and a record block.
#[derive(Debug, Clone)]
pub struct Provider {
    party: Party,
    data: Dataset,
}

impl Provider {
    pub fn new(party: Party, data: Dataset) -> Result<Self> {
        if party.role() != Role::Alice {
            return Err(TrainingError::Parameter("providers play the Alice role".into()));
        }
        party.rsa_public()?;
        Ok(Provider { party, data })
    }

    pub fn generate<R: RngCore + CryptoRng + ?Sized>(
        data: Dataset,
        key_bits: u64,
        codec: FixedPointCodec,
        rng: &mut R,
    ) -> Result<Self> {
        Self::new(Party::generate(Role::Alice, key_bits, true, codec, rng)?, data)
    }

    pub fn party(&self) -> &Party {
        &self.party
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }
}

/// The model owner: a Paillier key pair and, after training, `beta`.
#[derive(Debug, Clone)]
pub struct User {
    party: Party,
}

impl User {
    pub fn new(party: Party) -> Result<Self> {
        if party.role() != Role::Bob {
            return Err(TrainingError::Parameter("the user plays the Bob role".into()));
        }
        Ok(User { party })
    }

    pub fn generate<R: RngCore + CryptoRng + ?Sized>(
        key_bits: u64,
        codec: FixedPointCodec,
        rng: &mut R,
    ) -> Result<Self> {
        Self::new(Party::generate(Role::Bob, key_bits, false, codec, rng)?)
    }

    pub fn party(&self) -> &Party {
        &self.party
    }
}

#[derive(Debug, Clone)]
pub struct SecureConfig {
    /// `Q_e`: weights enter the exponent as `round(Q_e beta)`.
    pub beta_scale: u32,
    /// Public value range per attribute (original index). Defaults to
    /// `[0, 1]`, i.e. min-max normalised data.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Plaintext margins are clipped to `[-margin_clip, margin_clip]`.
    pub margin_clip: f64,
    pub transcript: TranscriptMode,
    /// Record per-iteration weights and gradients.
    pub trace: bool,
}

impl Default for SecureConfig {
    fn default() -> Self {
        SecureConfig {
            beta_scale: 10,
            bounds: None,
            margin_clip: 40.0,
            transcript: TranscriptMode::Counting,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    /// Quantized exponents of the encrypted attributes, in split order.
    pub b: Vec<i64>,
    /// Weights before the update, original attribute order, bias last.
    pub beta: Vec<f64>,
    /// Gradient sum over all providers, same order.
    pub gradient: Vec<f64>,
}

fn factor_bits(bounds: &[(f64, f64)], codec: &FixedPointCodec) -> f64 {
    let width = bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max) + 1.0 / codec.scale() as f64;
    width / LN_2 + (codec.scale() as f64).log2()
}

/// Largest total `sum |b_j|` whose padded product, times the conversion
/// blinding factor, still fits an RSA modulus of `modulus_bits`.
pub fn exponent_budget(
    modulus_bits: u64,
    bounds: &[(f64, f64)],
    beta_scale: u32,
    codec: &FixedPointCodec,
) -> Result<u64> {
    let blind = codec
        .quantize_exp(BLIND_RANGE.1 * beta_scale as f64, BLIND_SCALE_EXP)?
        .bits();
    let avail = modulus_bits as f64 - 4.0 - blind as f64;
    if avail <= 0.0 {
        return Ok(0);
    }
    Ok((avail / factor_bits(bounds, codec)).floor() as u64)
}

/// `round(Q_e beta_j)`, scaled toward zero when `sum |b_j|` exceeds the
/// budget. The flag reports whether scaling happened.
pub fn quantize_weights(beta: &[f64], beta_scale: u32, budget: u64) -> (Vec<i64>, bool) {
    let b: Vec<i64> = beta
        .iter()
        .map(|x| (x * beta_scale as f64).round_ties_even() as i64)
        .collect();
    let total: u64 = b.iter().map(|v| v.unsigned_abs()).sum();
    if total <= budget {
        return (b, false);
    }
    let f = budget as f64 / total as f64;
    (b.iter().map(|&v| (v as f64 * f).trunc() as i64).collect(), true)
}

/// What one provider contributes to a training run.
pub(crate) struct FlowInput<'a> {
    pub provider: &'a Provider,
    /// The provider's noised low-score columns, as received by the user.
    pub plain: Option<Dataset>,
    pub dp_secs: f64,
    pub dp_bytes: u64,
}

/// Fixed-point layout shared by both sides of a run.
struct Layout {
    codec: FixedPointCodec,
    beta_scale: u32,
    budget: u64,
    /// Bounds of the encrypted attributes, split order.
    bounds: Vec<(f64, f64)>,
    convert: ConvertOptions,
    /// Scale of `[[e^{z_enc}]]` after the conversion.
    ez_scale: u32,
    margin_clip: f64,
}

impl Layout {
    fn denominator_scale(&self) -> u32 {
        self.ez_scale + MARGIN_SCALE_EXP
    }

    fn gradient_scale(&self) -> u32 {
        REPLY_SCALE_EXP + UNBLIND_SCALE_EXP
    }
}

struct Link {
    alice: Party,
    bob: Party,
    session: Session,
    // provider side
    enc: Vec<Vec<f64>>,
    labels: Vec<u8>,
    shares: Option<Vec<Item>>,
    // user side
    plain_q: Vec<Vec<i64>>,
    plain_target: Vec<BigInt>,
    user_dp_secs: f64,
    dp_secs: f64,
    dp_bytes: u64,
}

struct Shares {
    factors: Vec<Ciphertext>,
    sum_x: Vec<Ciphertext>,
    sum_xy: Vec<Ciphertext>,
}

impl Link {
    fn m(&self) -> usize {
        self.labels.len()
    }

    fn iota(&self) -> usize {
        self.enc.first().map_or(0, Vec::len)
    }

    /// Provider: the cached per-record factors and column sums.
    fn send_shares<R: RngCore + CryptoRng + ?Sized>(&mut self, layout: &Layout, rng: &mut R) -> Result<()> {
        if self.shares.is_none() {
            let codec = &layout.codec;
            let rsa = self.alice.rsa_public()?;
            let sk = self.alice.paillier_secret();
            let iota = self.iota();
            let mut items = Vec::with_capacity(self.m() * 2 * iota + 2 * (iota + 1));
            let mut sum_x = vec![BigInt::from(0); iota + 1];
            let mut sum_xy = vec![BigInt::from(0); iota + 1];
            for (row, &y) in self.enc.iter().zip(&self.labels) {
                for (j, (&x, &(lo, hi))) in row.iter().zip(&layout.bounds).enumerate() {
                    let up = codec.quantize_exp(x - lo, FACTOR_SCALE_EXP)?;
                    let down = codec.quantize_exp(hi - x, FACTOR_SCALE_EXP)?;
                    items.push(Item::Cipher(rsa.encrypt_scaled(&up, FACTOR_SCALE_EXP)?));
                    items.push(Item::Cipher(rsa.encrypt_scaled(&down, FACTOR_SCALE_EXP)?));
                    let q = codec.quantize(x, 1)?;
                    if y == 1 {
                        sum_xy[j] += &q;
                    }
                    sum_x[j] += q;
                }
                let one = BigInt::from(codec.scale());
                if y == 1 {
                    sum_xy[iota] += &one;
                }
                sum_x[iota] += one;
            }
            for v in sum_x.iter().chain(&sum_xy) {
                items.push(Item::Cipher(sk.encrypt_signed(v, 1, rng)?));
            }
            self.shares = Some(items);
        }
        let payload = self.shares.clone().unwrap_or_default();
        self.session.send(Role::Alice, ProtocolId::LrShares, payload)?;
        Ok(())
    }

    fn recv_shares(&mut self) -> Result<Shares> {
        let iota = self.iota();
        let items = self.session.recv(Role::Bob, ProtocolId::LrShares)?;
        let expected = self.m() * 2 * iota + 2 * (iota + 1);
        if items.len() != expected {
            return Err(ProtocolError::DimensionMismatch {
                left: expected,
                right: items.len(),
            }
            .into());
        }
        let mut cts = items
            .into_iter()
            .map(Item::into_cipher)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let sum_xy = cts.split_off(cts.len() - (iota + 1));
        let sum_x = cts.split_off(cts.len() - (iota + 1));
        Ok(Shares {
            factors: cts,
            sum_x,
            sum_xy,
        })
    }

    /// User: `||prod_j e^{b_j x_j - offset}||` per record, padded to the budget.
    fn weighted_products(&self, layout: &Layout, b: &[i64], shares: &Shares) -> Result<Vec<Ciphertext>> {
        let pk = self.bob.peer_rsa()?;
        let iota = self.iota();
        let used: u64 = b.iter().map(|v| v.unsigned_abs()).sum();
        let pad = if layout.budget > used {
            let q = pk.encrypt_scaled(&layout.codec.factor(FACTOR_SCALE_EXP), FACTOR_SCALE_EXP)?;
            Some(pk.pow(&q, &(layout.budget - used).into())?)
        } else {
            None
        };
        (0..self.m())
            .map(|i| {
                let row = &shares.factors[i * 2 * iota..(i + 1) * 2 * iota];
                let mut acc = pk.one();
                for (j, &e) in b.iter().enumerate() {
                    if e != 0 {
                        let base = &row[2 * j + usize::from(e < 0)];
                        acc = pk.mul(&acc, &pk.pow(base, &e.unsigned_abs().into())?)?;
                    }
                }
                if let Some(p) = &pad {
                    acc = pk.mul(&acc, p)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// User: `[[e^{r_i} (e^{z_i} + 1)]]` from `[[e^{z_enc,i}]]` and the
    /// plaintext margin.
    fn blinded_denominators<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        layout: &Layout,
        ez: &[Ciphertext],
        z_plain: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let pk = self.bob.peer_paillier()?;
        let codec = &layout.codec;
        let mut blinds = Vec::with_capacity(ez.len());
        let mut payload = Vec::with_capacity(ez.len());
        for (c, &zp) in ez.iter().zip(z_plain) {
            let r = rng.gen_range(BLIND_RANGE.0..=BLIND_RANGE.1);
            let k = BigInt::from(codec.quantize_exp(zp + r, MARGIN_SCALE_EXP)?);
            let scaled = pk.scalar_mul(c, &k, MARGIN_SCALE_EXP)?;
            let one = codec.quantize_exp(r, layout.denominator_scale())?;
            payload.push(Item::Cipher(pk.add_plain(&scaled, &one)?));
            blinds.push(r);
        }
        self.session.send(Role::Bob, ProtocolId::LrSigmoid, payload)?;
        Ok(blinds)
    }

    /// Provider: decrypts each denominator and returns `[[x_ij / v_i]]` for
    /// the encrypted attributes and the constant column.
    fn reply_quotients<R: RngCore + CryptoRng + ?Sized>(&mut self, layout: &Layout, rng: &mut R) -> Result<()> {
        let received = self.session.recv(Role::Alice, ProtocolId::LrSigmoid)?;
        if received.len() != self.m() {
            return Err(ProtocolError::DimensionMismatch {
                left: self.m(),
                right: received.len(),
            }
            .into());
        }
        let sk = self.alice.paillier_secret();
        let codec = &layout.codec;
        let mut payload = Vec::with_capacity(self.m() * (self.iota() + 1));
        for (item, row) in received.into_iter().zip(&self.enc) {
            let c = item.into_cipher()?.relabel_scale(layout.denominator_scale());
            let v = sk.decrypt(&c)?;
            if v == 0u32.into() {
                return Err(ProtocolError::Range("blinded denominator is zero".into()).into());
            }
            let inv = (-codec.ln_decode(&v, layout.denominator_scale())).exp();
            for &x in row.iter().chain(std::iter::once(&1.0)) {
                let q = codec.quantize(x * inv, REPLY_SCALE_EXP)?;
                payload.push(Item::Cipher(sk.encrypt_signed(&q, REPLY_SCALE_EXP, rng)?));
            }
        }
        self.session.send(Role::Alice, ProtocolId::LrSigmoid, payload)?;
        Ok(())
    }

    /// User: encrypted gradient sums in split order (encrypted attributes,
    /// plaintext attributes, bias), under the provider's key.
    fn assemble_gradient<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        layout: &Layout,
        shares: &Shares,
        blinds: &[f64],
        rng: &mut R,
    ) -> Result<Vec<Ciphertext>> {
        let iota = self.iota();
        let width = iota + 1;
        let received = self.session.recv(Role::Bob, ProtocolId::LrSigmoid)?;
        if received.len() != self.m() * width {
            return Err(ProtocolError::DimensionMismatch {
                left: self.m() * width,
                right: received.len(),
            }
            .into());
        }
        let pk = self.bob.peer_paillier()?;
        let codec = &layout.codec;
        let gs = layout.gradient_scale();
        let n_plain = self.plain_target.len();
        let mut acc = vec![pk.zero(gs); width];
        let mut pos = vec![BitSums::default(); n_plain];
        let mut neg = vec![BitSums::default(); n_plain];
        let mut items = received.into_iter();
        for (i, &r) in blinds.iter().enumerate() {
            let u = BigInt::from(codec.quantize_exp(r, UNBLIND_SCALE_EXP)?);
            for j in 0..width {
                let c = items
                    .next()
                    .ok_or_else(|| ProtocolError::Malformed("short reply".into()))?
                    .into_cipher()?
                    .relabel_scale(REPLY_SCALE_EXP);
                let t = pk.scalar_mul(&c, &u, UNBLIND_SCALE_EXP)?;
                if j == iota {
                    for (k, &q) in self.plain_q[i].iter().enumerate() {
                        if q > 0 {
                            pos[k].add(pk, &t, q.unsigned_abs())?;
                        } else if q < 0 {
                            neg[k].add(pk, &t, q.unsigned_abs())?;
                        }
                    }
                }
                acc[j] = pk.add(&acc[j], &t)?;
            }
        }

        let lift = BigInt::from(codec.factor(gs - 1));
        let grad_of = |j: usize| -> Result<Ciphertext> {
            let diff = pk.sub(&shares.sum_x[j], &shares.sum_xy[j])?;
            Ok(pk.sub(&pk.scalar_mul(&diff, &lift, gs - 1)?, &acc[j])?)
        };
        let mut out = Vec::with_capacity(width + n_plain);
        for j in 0..iota {
            out.push(grad_of(j)?);
        }
        let target_lift = BigInt::from(codec.factor(gs));
        for k in 0..n_plain {
            let target = pk.encrypt_signed(&(&self.plain_target[k] * &target_lift), gs + 1, rng)?;
            let p = pos[k].finish(pk, gs)?.relabel_scale(gs + 1);
            let n = neg[k].finish(pk, gs)?.relabel_scale(gs + 1);
            out.push(pk.add(&pk.sub(&target, &p)?, &n)?);
        }
        out.push(grad_of(iota)?);
        Ok(out)
    }

    /// One full exchange with this provider; returns the decrypted gradient
    /// sums in split order.
    fn iterate<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        layout: &Layout,
        b: &[i64],
        offset: f64,
        z_plain: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.session.reset_clock();
        self.send_shares(layout, rng)?;
        let shares = self.recv_shares()?;
        let products = self.weighted_products(layout, b, &shares)?;
        let rhos: Vec<f64> = products
            .iter()
            .map(|_| layout.beta_scale as f64 * rng.gen_range(BLIND_RANGE.0..=BLIND_RANGE.1))
            .collect();
        let offsets = vec![offset; products.len()];
        let ez = convert_rsa_to_paillier_blinded(
            &self.alice,
            &self.bob,
            &mut self.session,
            &products,
            Some(&offsets),
            &rhos,
            &layout.convert,
            rng,
        )?;
        let blinds = self.blinded_denominators(layout, &ez, z_plain, rng)?;
        self.reply_quotients(layout, rng)?;
        let grads = self.assemble_gradient(layout, &shares, &blinds, rng)?;
        let rekeyed = rekey_paillier(&self.alice, &self.bob, &mut self.session, &grads, rng)?;
        let sk = self.bob.paillier_secret();
        let out = rekeyed
            .iter()
            .map(|c| Ok(layout.codec.decode_signed(&sk.decrypt_signed(c)?, c.scale_exp())))
            .collect::<Result<Vec<f64>>>()?;
        self.session.mark(Role::Bob);
        Ok(out)
    }
}

/// `sum_i q_i [[t_i]]` for small nonnegative integers `q_i`, kept as one
/// running sum per bit of `q_i`. Each record then costs a few ciphertext
/// products instead of an exponentiation.
#[derive(Debug, Clone, Default)]
struct BitSums {
    bits: Vec<Option<Ciphertext>>,
}

impl BitSums {
    fn add(&mut self, pk: &PaillierPublicKey, t: &Ciphertext, q: u64) -> Result<()> {
        let width = (u64::BITS - q.leading_zeros()) as usize;
        if self.bits.len() < width {
            self.bits.resize(width, None);
        }
        for b in (0..width).filter(|b| q >> b & 1 == 1) {
            self.bits[b] = Some(match &self.bits[b] {
                Some(c) => pk.add(c, t)?,
                None => t.clone(),
            });
        }
        Ok(())
    }

    /// Horner over the bit sums, most significant first.
    fn finish(&self, pk: &PaillierPublicKey, scale_exp: u32) -> Result<Ciphertext> {
        let mut acc = pk.zero(scale_exp);
        for bit in self.bits.iter().rev() {
            acc = pk.add(&acc, &acc)?;
            if let Some(c) = bit {
                acc = pk.add(&acc, c)?;
            }
        }
        Ok(acc)
    }
}

fn check_layout(user: &User, inputs: &[FlowInput<'_>], high: &[usize], low: &[usize]) -> Result<usize> {
    let first = inputs
        .first()
        .ok_or_else(|| TrainingError::Parameter("at least one provider is required".into()))?;
    let d = first.provider.data.d();
    if high.is_empty() {
        return Err(TrainingError::Parameter("at least one attribute must be encrypted".into()));
    }
    let mut seen = vec![false; d];
    for &j in high.iter().chain(low) {
        if j >= d || std::mem::replace(&mut seen[j], true) {
            return Err(TrainingError::Dimension(format!("split does not partition {d} attributes")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(TrainingError::Dimension(format!("split does not cover {d} attributes")));
    }
    for input in inputs {
        let data = &input.provider.data;
        if data.d() != d {
            return Err(TrainingError::Dimension(format!("providers hold {} and {d} attributes", data.d())));
        }
        if data.m() == 0 {
            return Err(TrainingError::Empty);
        }
        if input.provider.party.codec() != user.party.codec() {
            return Err(TrainingError::Parameter("parties use different fixed-point scales".into()));
        }
        match &input.plain {
            Some(p) if p.m() != data.m() || p.d() != low.len() => {
                return Err(TrainingError::Dimension("noised release does not match the split".into()))
            }
            None if !low.is_empty() => {
                return Err(TrainingError::Parameter("missing noised release".into()))
            }
            _ => {}
        }
    }
    Ok(d)
}

fn build_layout(
    inputs: &[FlowInput<'_>],
    codec: FixedPointCodec,
    high_bounds: Vec<(f64, f64)>,
    config: &SecureConfig,
) -> Result<Layout> {
    if config.beta_scale == 0 {
        return Err(TrainingError::Parameter("beta scale must be positive".into()));
    }
    if !(config.margin_clip > 0.0) {
        return Err(TrainingError::Parameter("margin clip must be positive".into()));
    }
    let mut budget = u64::MAX;
    let mut paillier_bits = u64::MAX;
    for input in inputs {
        let party = &input.provider.party;
        let bits = party.rsa_public()?.bits();
        budget = budget.min(exponent_budget(bits, &high_bounds, config.beta_scale, &codec)?);
        paillier_bits = paillier_bits.min(party.paillier_public().bits());
    }
    if budget == 0 {
        return Err(TrainingError::Parameter("RSA modulus too small for any weight".into()));
    }
    let qe = config.beta_scale as f64;
    let mut convert = ConvertOptions {
        root: config.beta_scale,
        blinding: BlindingRange::new(qe * BLIND_RANGE.0, qe * BLIND_RANGE.1)?,
        blind_scale_exp: BLIND_SCALE_EXP,
        out_scale_exp: CONVERT_SCALE_EXP,
        unblind_scale_exp: None,
        plain_bound_bits: Some((budget as f64 * factor_bits(&high_bounds, &codec)).ceil() as u64 + 1),
    };
    let max_abs = high_bounds
        .iter()
        .map(|(lo, hi)| lo.abs().max(hi.abs()))
        .fold(0.0, f64::max);
    let su = convert.auto_unblind_scale(-(budget as f64) * max_abs, codec.ln_scale());
    convert.unblind_scale_exp = Some(su);
    let layout = Layout {
        codec,
        beta_scale: config.beta_scale,
        budget,
        convert,
        ez_scale: CONVERT_SCALE_EXP + su,
        margin_clip: config.margin_clip,
        bounds: high_bounds,
    };

    // the blinded denominator must stay below N/2
    let width = layout.bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    let z_max = budget as f64 * (width + 1.0 / codec.scale() as f64) / qe + layout.margin_clip;
    let ln_max = z_max + LN_2 + BLIND_RANGE.1 + layout.denominator_scale() as f64 * codec.ln_scale();
    if ln_max / LN_2 >= (paillier_bits - 2) as f64 {
        return Err(TrainingError::Parameter(format!(
            "{paillier_bits}-bit Paillier keys cannot hold the blinded denominators"
        )));
    }
    Ok(layout)
}

/// Shared driver: `high` attributes are encrypted at their providers, `low`
/// attributes arrive as noised plaintext. Returns `beta` in original
/// attribute order with the bias last.
pub(crate) fn run_secure<R: RngCore + CryptoRng + ?Sized>(
    user: &User,
    inputs: Vec<FlowInput<'_>>,
    high: &[usize],
    low: &[usize],
    hyper: &Hyperparams,
    config: &SecureConfig,
    rng: &mut R,
) -> Result<TrainOutcome> {
    hyper.validate()?;
    let start = Instant::now();
    let d = check_layout(user, &inputs, high, low)?;
    let bounds = config.bounds.clone().unwrap_or_else(|| vec![(0.0, 1.0); d]);
    if bounds.len() != d || bounds.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
        return Err(TrainingError::Parameter("need one finite bound pair lo < hi per attribute".into()));
    }
    let codec = *user.party.codec();
    let layout = build_layout(&inputs, codec, high.iter().map(|&j| bounds[j]).collect(), config)?;
    let q = codec.scale() as f64;

    let mut clamped = 0u64;
    let mut links = Vec::with_capacity(inputs.len());
    for input in inputs {
        let data = &input.provider.data;
        let enc: Vec<Vec<f64>> = data
            .rows()
            .map(|row| {
                high.iter()
                    .zip(&layout.bounds)
                    .map(|(&j, &(lo, hi))| {
                        let x = row[j];
                        if x < lo || x > hi {
                            clamped += 1;
                        }
                        (x.clamp(lo, hi) * q).round_ties_even() / q
                    })
                    .collect()
            })
            .collect();
        let t = Instant::now();
        let (plain_q, plain_target) = match &input.plain {
            Some(p) => {
                let rows: Vec<Vec<i64>> = p
                    .rows()
                    .map(|r| r.iter().map(|x| (x * q).round_ties_even() as i64).collect())
                    .collect();
                let target = (0..low.len())
                    .map(|k| {
                        rows.iter()
                            .zip(p.labels())
                            .filter(|(_, &y)| y == 0)
                            .map(|(r, _)| BigInt::from(r[k]))
                            .sum()
                    })
                    .collect();
                (rows, target)
            }
            None => (vec![Vec::new(); data.m()], Vec::new()),
        };
        links.push(Link {
            alice: input.provider.party.with_peer(user.party.public_keys()),
            bob: user.party.with_peer(input.provider.party.public_keys()),
            session: Session::in_process(config.transcript),
            enc,
            labels: data.labels().to_vec(),
            shares: None,
            plain_q,
            plain_target,
            user_dp_secs: t.elapsed().as_secs_f64(),
            dp_secs: input.dp_secs,
            dp_bytes: input.dp_bytes,
        });
    }
    if clamped > 0 {
        log::warn!("{clamped} encrypted attribute values clamped into their public bounds");
    }

    let iota = high.len();
    let m_total: usize = links.iter().map(Link::m).sum();
    let mut beta = vec![0.0; d + 1];
    let mut metrics = TrainMetrics {
        exponent_budget: Some(layout.budget),
        ..Default::default()
    };
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let order: Vec<usize> = high.iter().chain(low).copied().collect();
    let to_original = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d + 1];
        for (t, &j) in order.iter().enumerate() {
            out[j] = v[t];
        }
        out[d] = v[d];
        out
    };

    while iterations < hyper.cycles {
        let (b, clipped) = quantize_weights(&beta[..iota], layout.beta_scale, layout.budget);
        if clipped {
            metrics.beta_clips += 1;
            log::debug!("iteration {iterations}: encrypted weights scaled into the exponent budget");
        }
        let offset: f64 = b
            .iter()
            .zip(&layout.bounds)
            .map(|(&e, &(lo, hi))| e as f64 * if e > 0 { lo } else { hi })
            .sum();
        let mut grad = vec![0.0; d + 1];
        for link in links.iter_mut() {
            let t = Instant::now();
            let z_plain: Vec<f64> = link
                .plain_q
                .iter()
                .map(|row| {
                    let z = beta[d]
                        + row
                            .iter()
                            .zip(&beta[iota..d])
                            .map(|(&x, w)| w * x as f64 / q)
                            .sum::<f64>();
                    if z.abs() > layout.margin_clip {
                        metrics.margin_clips += 1;
                    }
                    z.clamp(-layout.margin_clip, layout.margin_clip)
                })
                .collect();
            link.user_dp_secs += t.elapsed().as_secs_f64();
            let g = link.iterate(&layout, &b, offset, &z_plain, rng)?;
            for (acc, v) in grad.iter_mut().zip(g) {
                *acc += v;
            }
        }
        if config.trace {
            trace.push(IterationTrace {
                b: b.clone(),
                beta: to_original(&beta),
                gradient: to_original(&grad),
            });
        }
        let delta = apply_update(&mut beta, &grad, hyper.alpha, m_total);
        iterations += 1;
        if delta < hyper.threshold {
            converged = true;
            break;
        }
    }
    if metrics.margin_clips > 0 {
        log::warn!("{} plaintext margins clipped to +-{}", metrics.margin_clips, layout.margin_clip);
    }

    let mut times = PhaseTimes::default();
    let mut transcripts = Vec::new();
    for link in links {
        let stats = link.session.transcript().stats();
        metrics.round_trips += stats.round_trips;
        metrics.messages += stats.messages;
        metrics.bytes += stats.bytes_total();
        metrics.dp_bytes += link.dp_bytes;
        metrics.per_provider.push(stats);
        times.provider_hc.push(link.session.busy(Role::Alice).as_secs_f64());
        times.user_hc.push(link.session.busy(Role::Bob).as_secs_f64());
        times.provider_dp.push(link.dp_secs);
        times.user_dp += link.user_dp_secs;
        if config.transcript == TranscriptMode::Full {
            transcripts.push(link.session.into_transcript());
        }
    }
    metrics.times = times;
    metrics.wall_time = start.elapsed().as_secs_f64();
    Ok(TrainOutcome {
        model: ModelParams::new(to_original(&beta), *hyper)?,
        iterations,
        converged,
        metrics,
        trace,
        transcripts,
        releases: Vec::new(),
    })
}

/// Every attribute stays encrypted at its provider; providers hold disjoint
/// record blocks with the same attributes.
pub fn secure_lr_train<R: RngCore + CryptoRng + ?Sized>(
    user: &User,
    providers: &[Provider],
    hyper: &Hyperparams,
    config: &SecureConfig,
    rng: &mut R,
) -> Result<TrainOutcome> {
    let d = providers.first().map_or(0, |p| p.data.d());
    let inputs = providers
        .iter()
        .map(|provider| FlowInput {
            provider,
            plain: None,
            dp_secs: 0.0,
            dp_bytes: 0,
        })
        .collect();
    let high: Vec<usize> = (0..d).collect();
    run_secure(user, inputs, &high, &[], hyper, config, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_fit_the_budget() {
        let (b, clipped) = quantize_weights(&[0.26, -0.34], 10, 100);
        assert_eq!(b, vec![3, -3]);
        assert!(!clipped);
        let (b, clipped) = quantize_weights(&[4.0, -2.0], 10, 30);
        assert!(clipped);
        assert_eq!(b, vec![20, -10]);
        assert!(b.iter().map(|v| v.unsigned_abs()).sum::<u64>() <= 30);
    }

    #[test]
    fn budget_at_512_bits() {
        let codec = FixedPointCodec::new(100).unwrap();
        let f = exponent_budget(512, &[(0.0, 1.0)], 10, &codec).unwrap();
        assert!((50..=56).contains(&f), "{f}");
        assert_eq!(exponent_budget(64, &[(0.0, 1.0)], 10, &codec).unwrap(), 0);
    }
}
