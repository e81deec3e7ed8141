//! Experiment drivers. Every run is seeded; only wall times vary between
//! repetitions.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::report::{ExperimentKind, ExperimentReport, ReportRow, RunParams};
use super::{Dataset, HarnessError};
use crate::crypto::{FixedPointCodec, DEFAULT_KEY_BITS};
use crate::dp::{
    best_cluster_size, publish_ima_dp, publish_standard_dp, record_linkage, select_epsilon, sse,
    EpsilonBounds, EpsilonBudget,
};
use crate::features::{negotiate_scores, score, FeatureScores, ScoreMethod, SplitPlan};
use crate::protocols::{run_protocol, ConvertOptions, Operand, Party, PowOptions, ProtocolInput, Role, TranscriptMode};
use crate::training::{
    accuracy, heda_train, plaintext_lr_train, secure_lr_train, DpParams, Hyperparams, Provider,
    SecureConfig, TrainOutcome, User,
};

type Result<T> = std::result::Result<T, HarnessError>;

/// `y = tau x + b` by least squares, with the coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub tau: f64,
    pub b: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(HarnessError::Parameter("linear fit needs two or more paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::Parameter("linear fit needs distinct x values".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let tau = sxy / sxx;
    let b = my - tau * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - tau * x - b).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(LinearFit { tau, b, r2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub runs: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
}

impl CvSummary {
    pub fn from_runs(runs: Vec<f64>) -> Self {
        let n = runs.len() as f64;
        let mean = runs.iter().sum::<f64>() / n.max(1.0);
        let std = if runs.len() > 1 {
            (runs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        CvSummary { runs, mean, std }
    }
}

/// Runs `f` for seeds `0..runs` and summarizes the results.
pub fn cross_validate<F>(runs: usize, mut f: F) -> Result<CvSummary>
where
    F: FnMut(u64) -> Result<f64>,
{
    if runs == 0 {
        return Err(HarnessError::Parameter("need at least one run".into()));
    }
    let values = (0..runs as u64).map(&mut f).collect::<Result<Vec<_>>>()?;
    Ok(CvSummary::from_runs(values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpSweepConfig {
    /// Cluster sizes to try; `floor(sqrt(m/2))` alone when empty.
    pub k_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub bounds: EpsilonBounds,
    /// Uniform budget instead of the per-attribute bound.
    pub epsilon: Option<f64>,
}

impl Default for DpSweepConfig {
    fn default() -> Self {
        DpSweepConfig {
            k_values: Vec::new(),
            seeds: (0..20).collect(),
            bounds: EpsilonBounds::default(),
            epsilon: None,
        }
    }
}

/// SSE and record linkage of IMA-DP against Laplace noise on the raw
/// records, both under the same budget. One row per `(k, seed)`.
pub fn run_dp_sweep(data: &Dataset, name: &str, config: &DpSweepConfig) -> Result<ExperimentReport> {
    let budget = match config.epsilon {
        Some(eps) => EpsilonBudget::uniform(eps, data.d())?,
        None => select_epsilon(data, &config.bounds)?,
    };
    let ks = if config.k_values.is_empty() {
        vec![best_cluster_size(data.m())]
    } else {
        config.k_values.clone()
    };
    let mut report = ExperimentReport::new(ExperimentKind::DpSweep, name);
    report.notes.push(format!("per-attribute epsilon {:?}", budget.per_attribute));
    for &k in &ks {
        for &seed in &config.seeds {
            let ima = publish_ima_dp(data, k, &budget, seed)?;
            let standard = publish_standard_dp(data, &budget, seed)?;
            let mut row = ReportRow::new(
                ExperimentKind::DpSweep,
                name,
                RunParams {
                    k: Some(k),
                    epsilon: Some(budget.dataset_epsilon()),
                    seed: Some(seed),
                    ..Default::default()
                },
            );
            row.set("sse_ima", sse(data, &ima.data)?);
            row.set("sse_standard", sse(data, &standard.data)?);
            row.set("rl_ima", record_linkage(data, &ima.data)?);
            row.set("rl_standard", record_linkage(data, &standard.data)?);
            row.set(
                "mean_delta_f_prime",
                ima.delta_f_prime.iter().sum::<f64>() / data.d().max(1) as f64,
            );
            report.rows.push(row);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockBenchConfig {
    pub key_bits: u64,
    pub seed: u64,
}

impl Default for BlockBenchConfig {
    fn default() -> Self {
        BlockBenchConfig {
            key_bits: DEFAULT_KEY_BITS,
            seed: 0,
        }
    }
}

fn normalized(data: &Dataset) -> Dataset {
    data.normalized_with(&data.column_ranges())
}

/// Each building block once over a vector of the dataset's dimension, taken
/// from the first two normalized records.
pub fn run_block_bench(data: &Dataset, name: &str, config: &BlockBenchConfig) -> Result<ExperimentReport> {
    if data.m() < 2 || data.d() == 0 {
        return Err(HarnessError::Parameter("benchmark needs two records".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let codec = FixedPointCodec::default();
    let mut alice = Party::generate(Role::Alice, config.key_bits, true, codec, &mut rng)?;
    let mut bob = Party::generate(Role::Bob, config.key_bits, false, codec, &mut rng)?;
    Party::connect(&mut alice, &mut bob);

    let norm = normalized(data);
    let a = norm.row(0).to_vec();
    let b = norm.row(1).to_vec();
    let shifted = |v: &[f64]| v.iter().map(|x| x + 1.0).collect::<Vec<f64>>();
    let rsa = alice.rsa_public()?;
    let convert_inputs = a
        .iter()
        .map(|&x| Ok(rsa.encrypt_scaled(&codec.quantize_exp(x, 2)?, 2)?))
        .collect::<Result<Vec<_>>>()?;
    let paillier = alice.paillier_public();
    let rekey_inputs = a
        .iter()
        .map(|&x| Ok(paillier.encrypt_signed(&codec.quantize(x, 1)?, 1, &mut rng)?))
        .collect::<Result<Vec<_>>>()?;
    let cases = vec![
        ("add", ProtocolInput::Add { a: a.clone(), b: Operand::Plain(b.clone()) }),
        ("sub", ProtocolInput::Sub { a: a.clone(), b: Operand::Plain(b.clone()) }),
        ("dot", ProtocolInput::Dot { a: a.clone(), b: b.clone() }),
        ("mul", ProtocolInput::Mul { a: shifted(&a), b: Operand::Plain(shifted(&b)) }),
        (
            "pow",
            ProtocolInput::Pow {
                a: a.clone(),
                b: vec![1; a.len()],
                options: PowOptions::default(),
            },
        ),
        (
            "convert",
            ProtocolInput::Convert {
                inputs: convert_inputs,
                options: ConvertOptions::default(),
            },
        ),
        ("rekey", ProtocolInput::Rekey { inputs: rekey_inputs }),
    ];
    let mut report = ExperimentReport::new(ExperimentKind::BlockBench, name);
    for (label, input) in cases {
        let start = Instant::now();
        let (_, transcript) = run_protocol(&alice, &bob, &input, TranscriptMode::Counting, &mut rng)?;
        let secs = start.elapsed().as_secs_f64();
        let stats = transcript.stats();
        let mut row = ReportRow::new(
            ExperimentKind::BlockBench,
            name,
            RunParams {
                protocol: Some(label.to_string()),
                key_bits: Some(config.key_bits),
                seed: Some(config.seed),
                ..Default::default()
            },
        );
        row.set("seconds", secs);
        row.set("bytes", stats.bytes_total() as f64);
        row.set("round_trips", stats.round_trips as f64);
        row.set("messages", stats.messages as f64);
        row.set("dimension", data.d() as f64);
        report.rows.push(row);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum TrainMode {
    Plain,
    Secure,
    Heda { iota: usize },
}

impl TrainMode {
    fn label(&self) -> &'static str {
        match self {
            TrainMode::Plain => "plain",
            TrainMode::Secure => "secure",
            TrainMode::Heda { .. } => "heda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainCompareConfig {
    pub modes: Vec<TrainMode>,
    pub hyper: Hyperparams,
    pub key_bits: u64,
    pub providers: usize,
    pub method: ScoreMethod,
    pub dp: DpParams,
    pub train_fraction: f64,
    pub beta_scale: u32,
    /// Repeated random splits with seeds `seed, seed + 1, ...`.
    pub runs: usize,
    pub seed: u64,
}

impl Default for TrainCompareConfig {
    fn default() -> Self {
        TrainCompareConfig {
            modes: vec![TrainMode::Plain, TrainMode::Secure],
            hyper: Hyperparams::default(),
            key_bits: DEFAULT_KEY_BITS,
            providers: 1,
            method: ScoreMethod::Kw,
            dp: DpParams::default(),
            train_fraction: 0.8,
            beta_scale: SecureConfig::default().beta_scale,
            runs: 1,
            seed: 0,
        }
    }
}

/// Key material for a simulated deployment, reused across runs.
struct Parties {
    providers: Vec<Party>,
    user: User,
}

impl Parties {
    fn generate(n: usize, key_bits: u64, rng: &mut ChaCha20Rng) -> Result<Self> {
        let codec = FixedPointCodec::default();
        let providers = (0..n.max(1))
            .map(|_| Party::generate(Role::Alice, key_bits, true, codec, rng))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Parties {
            providers,
            user: User::generate(key_bits, codec, rng)?,
        })
    }

    fn providers(&self, train: &Dataset) -> Result<Vec<Provider>> {
        let blocks = train.partition_rows(self.providers.len());
        self.providers
            .iter()
            .zip(blocks)
            .map(|(p, block)| Ok(Provider::new(p.clone(), block)?))
            .collect()
    }
}

/// Provider-side scoring followed by negotiation.
fn negotiated_scores(providers: &[Provider], method: ScoreMethod) -> Result<FeatureScores> {
    let scores = providers
        .iter()
        .map(|p| score(p.data(), method))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(negotiate_scores(&scores)?)
}

struct RunContext<'a> {
    hyper: &'a Hyperparams,
    method: ScoreMethod,
    dp: &'a DpParams,
    secure: SecureConfig,
}

fn train_once(
    ctx: &RunContext<'_>,
    parties: &Parties,
    train: &Dataset,
    mode: TrainMode,
    rng: &mut ChaCha20Rng,
) -> Result<TrainOutcome> {
    Ok(match mode {
        TrainMode::Plain => plaintext_lr_train(train, ctx.hyper)?,
        TrainMode::Secure => {
            let providers = parties.providers(train)?;
            secure_lr_train(&parties.user, &providers, ctx.hyper, &ctx.secure, rng)?
        }
        TrainMode::Heda { iota } => {
            let providers = parties.providers(train)?;
            let scores = negotiated_scores(&providers, ctx.method)?;
            let plan = SplitPlan::new(&scores, iota)?;
            heda_train(&parties.user, &providers, &plan, ctx.dp, ctx.hyper, &ctx.secure, rng)?
        }
    })
}

fn outcome_row(kind: ExperimentKind, name: &str, params: RunParams, out: &TrainOutcome, acc: f64) -> ReportRow {
    let mut row = ReportRow::new(kind, name, params);
    let m = &out.metrics;
    row.set("accuracy", acc);
    row.set("iterations", out.iterations as f64);
    row.set("round_trips", m.round_trips as f64);
    row.set("bytes", m.bytes as f64);
    row.set("dp_bytes", m.dp_bytes as f64);
    row.set("beta_clips", m.beta_clips as f64);
    row.set("margin_clips", m.margin_clips as f64);
    row.set("time_total", m.times.serial_total());
    row.set("time_parallel", m.times.parallel_estimate());
    row.set("time_provider", m.times.provider_total());
    row.set("time_user", m.times.user_total());
    row.set("time_provider_hc", m.times.provider_hc.iter().fold(0.0, |a, b| a + b));
    row.set("time_provider_dp", m.times.provider_dp.iter().fold(0.0, |a, b| a + b));
    row.set("time_user_hc", m.times.user_hc.iter().fold(0.0, |a, b| a + b));
    row.set("time_user_dp", m.times.user_dp);
    row.set("wall_time", m.wall_time);
    row
}

/// Seeded split, then min-max scaling with the training ranges.
fn prepare(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = data.split_train_test(fraction, seed)?;
    let ranges = train.column_ranges();
    Ok((train.normalized_with(&ranges), test.normalized_with(&ranges)))
}

/// Accuracy, times and traffic per mode over repeated random splits.
pub fn run_train_compare(data: &Dataset, name: &str, config: &TrainCompareConfig) -> Result<ExperimentReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let needs_keys = config.modes.iter().any(|m| *m != TrainMode::Plain);
    let parties = if needs_keys {
        Some(Parties::generate(config.providers, config.key_bits, &mut rng)?)
    } else {
        None
    };
    let ctx = RunContext {
        hyper: &config.hyper,
        method: config.method,
        dp: &config.dp,
        secure: SecureConfig {
            beta_scale: config.beta_scale,
            ..Default::default()
        },
    };
    let mut report = ExperimentReport::new(ExperimentKind::TrainCompare, name);
    for run in 0..config.runs.max(1) as u64 {
        let seed = config.seed.wrapping_add(run);
        let (train, test) = prepare(data, config.train_fraction, seed)?;
        for &mode in &config.modes {
            let out = match (&parties, mode) {
                (_, TrainMode::Plain) => plaintext_lr_train(&train, &config.hyper)?,
                (Some(p), _) => train_once(&ctx, p, &train, mode, &mut rng)?,
                (None, _) => unreachable!("keys exist for encrypted modes"),
            };
            let acc = accuracy(&out.model.beta, &test);
            let iota = match mode {
                TrainMode::Plain => None,
                TrainMode::Secure => Some(data.d()),
                TrainMode::Heda { iota } => Some(iota),
            };
            let params = RunParams {
                mode: Some(mode.label().to_string()),
                iota,
                key_bits: needs_keys.then_some(config.key_bits),
                seed: Some(seed),
                ..Default::default()
            };
            report.rows.push(outcome_row(ExperimentKind::TrainCompare, name, params, &out, acc));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IotaSweepConfig {
    /// Values of iota; `1..=d` when empty.
    pub iotas: Vec<usize>,
    pub hyper: Hyperparams,
    pub key_bits: u64,
    pub providers: usize,
    pub method: ScoreMethod,
    pub dp: DpParams,
    pub train_fraction: f64,
    pub beta_scale: u32,
    /// Passes over the iota values; each point reports its fastest run.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for IotaSweepConfig {
    fn default() -> Self {
        IotaSweepConfig {
            iotas: Vec::new(),
            hyper: Hyperparams::default(),
            key_bits: DEFAULT_KEY_BITS,
            providers: 1,
            method: ScoreMethod::Kw,
            dp: DpParams::default(),
            train_fraction: 0.8,
            beta_scale: SecureConfig::default().beta_scale,
            repeats: 1,
            seed: 0,
        }
    }
}

/// Heda training for each iota on one split, plus the fit of total time
/// against `iota + 1`.
pub fn run_iota_sweep(data: &Dataset, name: &str, config: &IotaSweepConfig) -> Result<ExperimentReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let parties = Parties::generate(config.providers, config.key_bits, &mut rng)?;
    let iotas: Vec<usize> = if config.iotas.is_empty() {
        (1..=data.d()).collect()
    } else {
        config.iotas.clone()
    };
    let (train, test) = prepare(data, config.train_fraction, config.seed)?;
    let ctx = RunContext {
        hyper: &config.hyper,
        method: config.method,
        dp: &config.dp,
        secure: SecureConfig {
            beta_scale: config.beta_scale,
            ..Default::default()
        },
    };
    // whole passes over iota, alternating direction, so slow periods of the
    // machine do not line up with one end of the sweep; the fastest run of
    // each point is kept
    let mut best: Vec<Option<TrainOutcome>> = vec![None; iotas.len()];
    for pass in 0..config.repeats.max(1) {
        let mut order: Vec<usize> = (0..iotas.len()).collect();
        if pass % 2 == 1 {
            order.reverse();
        }
        for i in order {
            let (slot, iota) = (&mut best[i], iotas[i]);
            let out = train_once(&ctx, &parties, &train, TrainMode::Heda { iota }, &mut rng)?;
            let faster = slot
                .as_ref()
                .is_none_or(|b| out.metrics.times.serial_total() < b.metrics.times.serial_total());
            if faster {
                *slot = Some(out);
            }
        }
    }
    let mut report = ExperimentReport::new(ExperimentKind::IotaSweep, name);
    for (out, &iota) in best.into_iter().zip(&iotas) {
        let out = out.expect("at least one pass");
        let acc = accuracy(&out.model.beta, &test);
        let params = RunParams {
            mode: Some("heda".into()),
            iota: Some(iota),
            key_bits: Some(config.key_bits),
            seed: Some(config.seed),
            ..Default::default()
        };
        report.rows.push(outcome_row(ExperimentKind::IotaSweep, name, params, &out, acc));
    }
    if iotas.len() >= 2 {
        let xs: Vec<f64> = iotas.iter().map(|&i| i as f64 + 1.0).collect();
        let ys: Vec<f64> = report.rows.iter().filter_map(|r| r.metric("time_total")).collect();
        report.fit = Some(linear_fit(&xs, &ys)?);
    }
    Ok(report)
}
