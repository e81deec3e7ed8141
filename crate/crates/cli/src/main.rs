use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use heda_core::crypto::{KeyFile, PaillierKeypair, RsaKeypair, DEFAULT_KEY_BITS};
use heda_core::dp::{
    best_cluster_size, publish_ima_dp, publish_standard_dp, select_epsilon, EpsilonBounds, EpsilonBudget,
};
use heda_core::features::{negotiate_scores, score, FeatureScores, ScoreMethod, SplitPlan};
use heda_core::harness::{
    discrete_dataset, gaussian_classes, load_csv, run_block_bench, run_dp_sweep, run_iota_sweep,
    run_train_compare, separable_dataset, uniform_dataset, BlockBenchConfig, CsvSchema, Dataset,
    DpSweepConfig, ExperimentReport, IotaSweepConfig, TrainCompareConfig, TrainMode,
};
use heda_core::training::EpsilonMode;

#[derive(Parser)]
#[command(name = "heda", version, about = "Hybrid encrypted / differentially private logistic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate Paillier and RSA key files.
    Keygen(KeygenArgs),
    /// Score attributes and optionally split them at iota.
    Score(ScoreArgs),
    /// Publish a dataset through IMA-DP (or plain Laplace with --standard).
    DpPublish(DpPublishArgs),
    /// Train and evaluate plaintext, secure and mixed models.
    Train(TrainArgs),
    /// Time each two-party building block.
    BenchBlocks(BenchArgs),
    /// SSE and record linkage of IMA-DP against standard DP.
    SweepDp(SweepDpArgs),
    /// Mixed training for each iota with a linear fit of the total time.
    SweepIota(SweepIotaArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV input file.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Preset name (bcwd, adult, cad, car) or a JSON schema file.
    #[arg(long, requires = "data")]
    schema: Option<String>,
    /// Label column of a headered numeric CSV, used without --schema.
    #[arg(long, requires = "data")]
    label_column: Option<usize>,
    /// Generated data instead of a file: gaussian, separable, uniform or discrete.
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long, default_value_t = 200)]
    rows: usize,
    #[arg(long, default_value_t = 4)]
    cols: usize,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

#[derive(Args)]
struct OutputArgs {
    /// JSON report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the report rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long, default_value_t = DEFAULT_KEY_BITS)]
    bits: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// File name prefix.
    #[arg(long, default_value = "heda")]
    name: String,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "kw")]
    method: ScoreMethod,
    /// Row blocks scored separately and then negotiated.
    #[arg(long, default_value_t = 1)]
    providers: usize,
    #[arg(long)]
    iota: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DpPublishArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Cluster size; floor(sqrt(m/2)) when absent.
    #[arg(long)]
    k: Option<usize>,
    /// Uniform budget; the per-attribute bound when absent.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    epsilon_min: f64,
    #[arg(long, default_value_t = 10.0)]
    epsilon_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Laplace noise on the raw records, no microaggregation.
    #[arg(long)]
    standard: bool,
    /// Where to write the released records.
    #[arg(long)]
    release: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CommonRun {
    /// JSON file with the experiment configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    key_bits: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct HyperArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    providers: Option<usize>,
    #[arg(long)]
    method: Option<ScoreMethod>,
    /// Uniform DP budget for the published attributes.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: CommonRun,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Comma-separated modes: plain, secure, heda:<iota>.
    #[arg(long, value_delimiter = ',')]
    modes: Vec<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: CommonRun,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepDpArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Number of noise seeds, 0..n.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepIotaArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: CommonRun,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, value_delimiter = ',')]
    iotas: Vec<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

fn load_data(args: &DataArgs) -> Result<(Dataset, String)> {
    if let Some(kind) = &args.synthetic {
        let (m, d, seed) = (args.rows, args.cols, args.data_seed);
        let data = match kind.as_str() {
            "gaussian" => gaussian_classes(m, d, 1.0, seed),
            "separable" => separable_dataset(m, d, seed),
            "uniform" => uniform_dataset(m, d, seed),
            "discrete" => discrete_dataset(m, &vec![1.0; d], 10, 0.3, seed),
            other => bail!("unknown synthetic dataset {other:?}"),
        };
        return Ok((data, format!("{kind}-{m}x{d}")));
    }
    let path = args
        .data
        .as_ref()
        .ok_or_else(|| anyhow!("either --data or --synthetic is required"))?;
    let schema = match (&args.schema, args.label_column) {
        (Some(s), _) => match CsvSchema::preset(s) {
            Some(schema) => schema,
            None => read_json(Path::new(s)).context("reading the schema")?,
        },
        (None, Some(col)) => CsvSchema::numeric_with_header(col),
        (None, None) => bail!("--data needs --schema or --label-column"),
    };
    let data = load_csv(path, &schema).with_context(|| format!("loading {}", path.display()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    log::info!("loaded {name}: {} records, {} attributes", data.m(), data.d());
    Ok((data, name))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn config_or_default<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    path.as_deref().map(read_json).unwrap_or_else(|| Ok(T::default()))
}

fn emit_json<T: Serialize>(value: &T, out: &OutputArgs) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match &out.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn emit_report(report: &ExperimentReport, out: &OutputArgs) -> Result<()> {
    match &out.out {
        Some(json) => report.write(json, out.csv.as_deref())?,
        None => {
            println!("{}", report.to_json());
            if let Some(csv) = &out.csv {
                fs::write(csv, report.to_csv()?)?;
            }
        }
    }
    Ok(())
}

fn parse_mode(s: &str) -> Result<TrainMode> {
    match s.split_once(':') {
        None if s == "plain" => Ok(TrainMode::Plain),
        None if s == "secure" => Ok(TrainMode::Secure),
        Some(("heda", iota)) => Ok(TrainMode::Heda {
            iota: iota.parse().with_context(|| format!("iota in {s:?}"))?,
        }),
        _ => bail!("unknown mode {s:?}; expected plain, secure or heda:<iota>"),
    }
}

fn rng_from(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn keygen(args: &KeygenArgs) -> Result<()> {
    let mut rng = rng_from(args.seed);
    let paillier = PaillierKeypair::generate(args.bits, &mut rng)?;
    let rsa = RsaKeypair::generate(args.bits, &mut rng)?;
    fs::create_dir_all(&args.out_dir)?;
    let files = [
        ("paillier", KeyFile::from_paillier(&paillier)),
        ("paillier.pub", KeyFile::from_paillier_public(&paillier.public)),
        ("rsa", KeyFile::from_rsa(&rsa)),
        ("rsa.pub", KeyFile::from_rsa_public(&rsa.public)),
    ];
    let mut written = Vec::new();
    for (suffix, key) in files {
        let path = args.out_dir.join(format!("{}.{suffix}.json", args.name));
        fs::write(&path, key.to_json()).with_context(|| format!("writing {}", path.display()))?;
        written.push(path.display().to_string());
    }
    println!("{}", serde_json::json!({ "bits": args.bits, "files": written }));
    Ok(())
}

fn score_cmd(args: &ScoreArgs) -> Result<()> {
    let (data, name) = load_data(&args.data)?;
    let scores: FeatureScores = if args.providers > 1 {
        let per_provider = data
            .partition_rows(args.providers)
            .iter()
            .map(|block| score(block, args.method))
            .collect::<Result<Vec<_>, _>>()?;
        negotiate_scores(&per_provider)?
    } else {
        score(&data, args.method)?
    };
    let split = args.iota.map(|iota| SplitPlan::new(&scores, iota)).transpose()?;
    let names: Vec<&str> = data.attributes().iter().map(|a| a.name.as_str()).collect();
    emit_json(
        &serde_json::json!({ "dataset": name, "attributes": names, "scores": scores, "split": split }),
        &args.output,
    )
}

fn write_release(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header: Vec<String> = data.attributes().iter().map(|a| a.name.clone()).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (row, label) in data.rows().zip(data.labels()) {
        let mut record: Vec<String> = row.iter().map(f64::to_string).collect();
        record.push(label.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn dp_publish(args: &DpPublishArgs) -> Result<()> {
    let (data, name) = load_data(&args.data)?;
    let budget = match args.epsilon {
        Some(eps) => EpsilonBudget::uniform(eps, data.d())?,
        None => select_epsilon(
            &data,
            &EpsilonBounds {
                min: args.epsilon_min,
                max: args.epsilon_max,
            },
        )?,
    };
    let release = if args.standard {
        publish_standard_dp(&data, &budget, args.seed)?
    } else {
        let k = args.k.unwrap_or_else(|| best_cluster_size(data.m()));
        publish_ima_dp(&data, k, &budget, args.seed)?
    };
    if let Some(path) = &args.release {
        write_release(path, &release.data)?;
    }
    emit_json(
        &serde_json::json!({ "dataset": name, "records": release.data.m(), "release": release.summary() }),
        &args.output,
    )
}

fn apply_hyper(
    h: &HyperArgs,
    hyper: &mut heda_core::training::Hyperparams,
    dp: &mut heda_core::training::DpParams,
    providers: &mut usize,
    method: &mut ScoreMethod,
) {
    if let Some(v) = h.alpha {
        hyper.alpha = v;
    }
    if let Some(v) = h.cycles {
        hyper.cycles = v;
    }
    if let Some(v) = h.threshold {
        hyper.threshold = v;
    }
    if let Some(v) = h.providers {
        *providers = v;
    }
    if let Some(v) = h.method {
        *method = v;
    }
    if let Some(v) = h.epsilon {
        dp.epsilon = EpsilonMode::Fixed(v);
    }
    if h.k.is_some() {
        dp.k = h.k;
    }
}

fn train(args: &TrainArgs) -> Result<()> {
    let (data, name) = load_data(&args.data)?;
    let mut cfg: TrainCompareConfig = config_or_default(&args.run.config)?;
    apply_hyper(&args.hyper, &mut cfg.hyper, &mut cfg.dp, &mut cfg.providers, &mut cfg.method);
    if !args.modes.is_empty() {
        cfg.modes = args.modes.iter().map(|s| parse_mode(s)).collect::<Result<_>>()?;
    }
    if let Some(v) = args.runs {
        cfg.runs = v;
    }
    if let Some(v) = args.run.key_bits {
        cfg.key_bits = v;
    }
    if let Some(v) = args.run.seed {
        cfg.seed = v;
    }
    emit_report(&run_train_compare(&data, &name, &cfg)?, &args.output)
}

fn bench_blocks(args: &BenchArgs) -> Result<()> {
    let (data, name) = load_data(&args.data)?;
    let mut cfg: BlockBenchConfig = config_or_default(&args.run.config)?;
    if let Some(v) = args.run.key_bits {
        cfg.key_bits = v;
    }
    if let Some(v) = args.run.seed {
        cfg.seed = v;
    }
    emit_report(&run_block_bench(&data, &name, &cfg)?, &args.output)
}

fn sweep_dp(args: &SweepDpArgs) -> Result<()> {
    let (data, name) = load_data(&args.data)?;
    let mut cfg: DpSweepConfig = config_or_default(&args.config)?;
    if !args.k.is_empty() {
        cfg.k_values = args.k.clone();
    }
    if let Some(n) = args.seeds {
        cfg.seeds = (0..n).collect();
    }
    if args.epsilon.is_some() {
        cfg.epsilon = args.epsilon;
    }
    emit_report(&run_dp_sweep(&data, &name, &cfg)?, &args.output)
}

fn sweep_iota(args: &SweepIotaArgs) -> Result<()> {
    let (data, name) = load_data(&args.data)?;
    let mut cfg: IotaSweepConfig = config_or_default(&args.run.config)?;
    apply_hyper(&args.hyper, &mut cfg.hyper, &mut cfg.dp, &mut cfg.providers, &mut cfg.method);
    if !args.iotas.is_empty() {
        cfg.iotas = args.iotas.clone();
    }
    if let Some(v) = args.repeats {
        cfg.repeats = v;
    }
    if let Some(v) = args.run.key_bits {
        cfg.key_bits = v;
    }
    if let Some(v) = args.run.seed {
        cfg.seed = v;
    }
    emit_report(&run_iota_sweep(&data, &name, &cfg)?, &args.output)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Keygen(a) => keygen(a),
        Command::Score(a) => score_cmd(a),
        Command::DpPublish(a) => dp_publish(a),
        Command::Train(a) => train(a),
        Command::BenchBlocks(a) => bench_blocks(a),
        Command::SweepDp(a) => sweep_dp(a),
        Command::SweepIota(a) => sweep_iota(a),
    }
}
