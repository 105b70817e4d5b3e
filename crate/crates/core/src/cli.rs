//! Command-line front end: `seq`, `par`, `synth`, `nmi` and `bench`.
//!
//! Flags override values from `--config` (a TOML file with optional
//! `[params]`, `[engine]` and `[synth]` tables), which override the
//! built-in defaults. Log level comes from `MEMESTREAM_LOG`.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::cluster::{write_snapshots, ClusterSnapshot, Params, SequentialClusterer, StepReport};
use crate::error::{Error, Result};
use crate::eval::{bench_report, compare_exact, lfk_nmi, read_cover, MetricsReport};
use crate::ingest::{bucket_all, read_tweets, serialize_tweet, synth_stream, write_ground_truth, SynthConfig, TimeStepBatch};
use crate::parallel::{run_parallel, Bootstrap, EngineConfig, Strategy};
use crate::textproc::{TextOptions, STOPWORDS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "memestream", version, about = "Protomeme-based stream clustering")]
pub struct Cli {
    /// TOML config file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sequential clusterer.
    Seq(SeqArgs),
    /// Run the parallel engine after a sequential bootstrap.
    Par(ParArgs),
    /// Generate a synthetic stream with its ground-truth cover.
    Synth(SynthArgs),
    /// Compare two covers with LFK-NMI.
    Nmi(NmiArgs),
    /// Sweep worker counts and strategies.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Number of clusters [default: 20]
    #[arg(long)]
    pub k: Option<usize>,
    /// Step length in seconds [default: 30]
    #[arg(long)]
    pub step: Option<i64>,
    /// Window length in steps [default: 6]
    #[arg(long)]
    pub window: Option<u64>,
    /// Outlier threshold in standard deviations [default: 2]
    #[arg(long)]
    pub nsigma: Option<f64>,
    /// Seed for cold-start sampling [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sort phrase tokens before joining them.
    #[arg(long)]
    pub phrase_sorted: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EngineArgs {
    /// Number of workers [default: 1]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Protomemes per batch [default: 1]
    #[arg(long = "batch")]
    pub batch: Option<usize>,
    /// cluster-delta or full-centroids [default: cluster-delta]
    #[arg(long)]
    pub strategy: Option<String>,
    /// Run every role on one thread in a fixed order.
    #[arg(long)]
    pub deterministic: bool,
    /// Steps run sequentially to seed the engine [default: 1]
    #[arg(long)]
    pub bootstrap_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SeqArgs {
    /// Tweet JSONL file.
    #[arg(long, required_unless_present = "dump_stopwords")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Cluster snapshot output [default: clusters.jsonl]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run manifest output [default: <out>.manifest.json]
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Print the stopword list and exit.
    #[arg(long)]
    pub dump_stopwords: bool,
}

#[derive(Debug, Args)]
pub struct ParArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Cluster snapshot output [default: clusters.jsonl]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metrics report output [default: <out>.metrics.json]
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Run manifest output [default: <out>.manifest.json]
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of memes [default: 30]
    #[arg(long)]
    pub memes: Option<usize>,
    /// Number of tweets [default: 10000]
    #[arg(long)]
    pub tweets: Option<usize>,
    /// Seconds covered [default: 3600]
    #[arg(long)]
    pub duration: Option<i64>,
    /// [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tweet JSONL output [default: stream.jsonl]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ground-truth cover output [default: <out>.truth.jsonl]
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NmiArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Also report exact set-of-sets equality.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Tweet JSONL file; a synthetic stream is generated when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Comma-separated worker counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub workers: Vec<usize>,
    /// cluster-delta, full-centroids or both.
    #[arg(long, default_value = "both")]
    pub strategy: String,
    /// Protomemes per batch [default: 40]
    #[arg(long = "batch")]
    pub batch: Option<usize>,
    /// [default: 1]
    #[arg(long)]
    pub bootstrap_steps: Option<usize>,
    #[arg(long)]
    pub deterministic: bool,
    /// Tweets in the synthetic stream [default: 10000]
    #[arg(long)]
    pub tweets: Option<usize>,
    /// Directory for bench.txt and bench.json [default: bench]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub params: Option<Params>,
    pub text: Option<TextOptions>,
    #[serde(default)]
    pub engine: EngineSection,
    pub synth: Option<SynthConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
    pub workers: Option<usize>,
    pub batch_size: Option<usize>,
    pub strategy: Option<Strategy>,
    pub deterministic: Option<bool>,
    pub bootstrap_steps: Option<usize>,
}

pub fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn resolve_params(cfg: &ConfigFile, a: &ParamArgs) -> Result<(Params, TextOptions)> {
    let mut p = cfg.params.clone().unwrap_or_default();
    if let Some(v) = a.k {
        p.k = v;
    }
    if let Some(v) = a.step {
        p.step_seconds = v;
    }
    if let Some(v) = a.window {
        p.window_steps = v;
    }
    if let Some(v) = a.nsigma {
        p.nsigma = v;
    }
    if let Some(v) = a.seed {
        p.seed = v;
    }
    p.validate()?;
    let mut text = cfg.text.unwrap_or_default();
    text.phrase_sorted |= a.phrase_sorted;
    Ok((p, text))
}

fn resolve_engine(cfg: &ConfigFile, params: Params, a: &EngineArgs) -> Result<(EngineConfig, usize)> {
    let e = &cfg.engine;
    let strategy = match &a.strategy {
        Some(s) => s.parse()?,
        None => e.strategy.unwrap_or(Strategy::ClusterDelta),
    };
    let engine = EngineConfig {
        params,
        workers: a.workers.or(e.workers).unwrap_or(1),
        batch_size: a.batch.or(e.batch_size).unwrap_or(1),
        strategy,
        deterministic: a.deterministic || e.deterministic.unwrap_or(false),
        ..Default::default()
    };
    engine.validate()?;
    let bootstrap = a.bootstrap_steps.or(e.bootstrap_steps).unwrap_or(1);
    if bootstrap == 0 {
        return Err(Error::Config("need at least one bootstrap step".into()));
    }
    Ok((engine, bootstrap))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write via a sibling temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

struct Input {
    digest: String,
    steps: Vec<TimeStepBatch>,
    tweets: usize,
}

fn load_input(path: &Path, step_seconds: i64) -> Result<Input> {
    let bytes = fs::read(path)?;
    let digest = sha256_hex(&bytes);
    let tweets = read_tweets(BufReader::new(bytes.as_slice()))?;
    let n = tweets.len();
    Ok(Input {
        digest,
        steps: bucket_all(tweets, step_seconds)?,
        tweets: n,
    })
}

fn snapshot_bytes(snaps: &[ClusterSnapshot]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_snapshots(snaps, &mut buf)?;
    Ok(buf)
}

/// Records a run's outputs and writes them, the manifest last.
struct Manifest {
    command: &'static str,
    config: Value,
    input: Value,
    outputs: Vec<Value>,
    summary: Value,
}

impl Manifest {
    fn new(command: &'static str, config: Value) -> Self {
        Self {
            command,
            config,
            input: Value::Null,
            outputs: Vec::new(),
            summary: Value::Null,
        }
    }

    fn output(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        self.outputs.push(json!({ "path": path.display().to_string(), "sha256": sha256_hex(bytes) }));
        Ok(())
    }

    fn finish(self, path: &Path, elapsed_s: f64) -> Result<()> {
        let v = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "input": self.input,
            "outputs": self.outputs,
            "summary": self.summary,
            "timings": { "elapsed_s": elapsed_s },
        });
        let mut bytes = serde_json::to_vec_pretty(&v)?;
        bytes.push(b'\n');
        write_atomic(path, &bytes)
    }
}

fn summary_json(r: &StepReport, steps: usize, tweets: usize) -> Value {
    json!({
        "steps": steps,
        "tweets": tweets,
        "protomemes": r.protomemes,
        "marker_hits": r.marker_hits,
        "nearest": r.nearest,
        "outliers": r.outliers,
        "discarded_outliers": r.discarded,
        "expired": r.expired,
    })
}

fn cmd_seq(cfg: &ConfigFile, a: &SeqArgs) -> Result<()> {
    if a.dump_stopwords {
        let mut out = std::io::stdout().lock();
        for w in STOPWORDS {
            writeln!(out, "{w}")?;
        }
        return Ok(());
    }
    let started = Instant::now();
    let (params, text) = resolve_params(cfg, &a.params)?;
    let input_path = a.input.as_deref().expect("clap requires --input");
    let input = load_input(input_path, params.step_seconds)?;
    let mut seq = SequentialClusterer::with_text_options(params.clone(), text)?;
    for b in &input.steps {
        seq.process_step(b)?;
    }
    let snaps = seq.state.snapshots();
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("clusters.jsonl"));
    let mut m = Manifest::new("seq", json!({ "params": params, "text": text }));
    m.input = json!({ "path": input_path.display().to_string(), "sha256": input.digest });
    m.output(&out, &snapshot_bytes(&snaps)?)?;
    m.summary = summary_json(&seq.totals, input.steps.len(), input.tweets);
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "steps {}  tweets {}  protomemes {}  outliers {}  clusters {}  elapsed {:.3}s",
        input.steps.len(),
        input.tweets,
        seq.totals.protomemes,
        seq.totals.outliers,
        snaps.len(),
        elapsed
    );
    m.finish(&a.manifest.clone().unwrap_or_else(|| with_suffix(&out, ".manifest.json")), elapsed)
}

fn bootstrap(steps: &[TimeStepBatch], n: usize, params: &Params, text: TextOptions) -> Result<(Bootstrap, usize)> {
    let mut seq = SequentialClusterer::with_text_options(params.clone(), text)?;
    let mut used = 0;
    for b in steps {
        if used >= n && seq.state.initialized {
            break;
        }
        seq.process_step(b)?;
        used += 1;
    }
    if !seq.state.initialized {
        return Err(Error::Config("input has no protomemes to bootstrap from".into()));
    }
    Ok((Bootstrap::from_sequential(seq), used))
}

fn cmd_par(cfg: &ConfigFile, a: &ParArgs) -> Result<()> {
    let started = Instant::now();
    let (params, text) = resolve_params(cfg, &a.params)?;
    let (engine, boot_steps) = resolve_engine(cfg, params.clone(), &a.engine)?;
    let input = load_input(&a.input, params.step_seconds)?;
    let (boot, used) = bootstrap(&input.steps, boot_steps, &params, text)?;
    let out_run = run_parallel(&input.steps[used..], &engine, boot)?;
    let snaps = out_run.state.snapshots();
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("clusters.jsonl"));
    let metrics_path = a.metrics.clone().unwrap_or_else(|| with_suffix(&out, ".metrics.json"));
    let mut m = Manifest::new(
        "par",
        json!({ "engine": engine, "text": text, "bootstrap_steps": used }),
    );
    m.input = json!({ "path": a.input.display().to_string(), "sha256": input.digest });
    m.output(&out, &snapshot_bytes(&snaps)?)?;
    let mut mbytes = serde_json::to_vec_pretty(&out_run.metrics.to_json())?;
    mbytes.push(b'\n');
    m.output(&metrics_path, &mbytes)?;
    let agg = out_run.metrics.aggregates();
    m.summary = json!({
        "steps": input.steps.len(),
        "bootstrap_steps": used,
        "tweets": input.tweets,
        "protomemes": out_run.protomemes,
        "batches": agg.batches,
        "avg_message_bytes": agg.avg_message_bytes,
    });
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "{} W={} B={}  batches {}  protomemes {}  avg msg {:.1} B  comp/sync {:.2}  clusters {}  elapsed {:.3}s",
        engine.strategy,
        engine.workers,
        engine.batch_size,
        agg.batches,
        out_run.protomemes,
        agg.avg_message_bytes,
        agg.comp_over_sync_ratio,
        snaps.len(),
        elapsed
    );
    m.finish(&a.manifest.clone().unwrap_or_else(|| with_suffix(&out, ".manifest.json")), elapsed)
}

fn resolve_synth(cfg: &ConfigFile, a: &SynthArgs) -> Result<SynthConfig> {
    let mut s = cfg.synth.clone().unwrap_or_default();
    if let Some(v) = a.memes {
        s.num_memes = v;
    }
    if let Some(v) = a.tweets {
        s.tweets_total = v;
    }
    if let Some(v) = a.duration {
        s.duration = v;
    }
    if let Some(v) = a.seed {
        s.seed = v;
    }
    s.validate()?;
    Ok(s)
}

fn cmd_synth(cfg: &ConfigFile, a: &SynthArgs) -> Result<()> {
    let started = Instant::now();
    let sc = resolve_synth(cfg, a)?;
    let (tweets, truth) = synth_stream(&sc)?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("stream.jsonl"));
    let truth_path = a.truth.clone().unwrap_or_else(|| with_suffix(&out, ".truth.jsonl"));
    let mut buf = Vec::new();
    for t in &tweets {
        buf.extend_from_slice(serialize_tweet(t).as_bytes());
        buf.push(b'\n');
    }
    let mut tbuf = Vec::new();
    write_ground_truth(&truth, &mut tbuf)?;
    let mut m = Manifest::new("synth", json!({ "synth": sc }));
    m.output(&out, &buf)?;
    m.output(&truth_path, &tbuf)?;
    m.summary = json!({ "tweets": tweets.len(), "memes": truth.len() });
    println!("wrote {} tweets from {} memes to {}", tweets.len(), truth.len(), out.display());
    m.finish(&with_suffix(&out, ".manifest.json"), started.elapsed().as_secs_f64())
}

fn cmd_nmi(a: &NmiArgs) -> Result<()> {
    let read = |p: &Path| -> Result<_> { read_cover(BufReader::new(fs::File::open(p)?)) };
    let (ca, cb) = (read(&a.a)?, read(&a.b)?);
    if ca.is_empty() || cb.is_empty() {
        return Err(Error::Config("both covers need at least one non-empty cluster".into()));
    }
    println!("{:.6}", lfk_nmi(&ca, &cb));
    if a.exact {
        print!("{}", compare_exact(&ca, &cb).report());
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchConfig<'a> {
    params: &'a Params,
    workers: &'a [usize],
    strategies: Vec<Strategy>,
    batch_size: usize,
    bootstrap_steps: usize,
    deterministic: bool,
}

fn cmd_bench(cfg: &ConfigFile, a: &BenchArgs) -> Result<()> {
    let started = Instant::now();
    let (params, text) = resolve_params(cfg, &a.params)?;
    let strategies: Vec<Strategy> = match a.strategy.as_str() {
        "both" => Strategy::ALL.to_vec(),
        s => vec![s.parse()?],
    };
    if a.workers.is_empty() || a.workers.contains(&0) {
        return Err(Error::Config("worker counts must be positive".into()));
    }
    let engine_args = EngineArgs {
        workers: Some(1),
        batch: a.batch.or(cfg.engine.batch_size).or(Some(40)),
        strategy: None,
        deterministic: a.deterministic,
        bootstrap_steps: a.bootstrap_steps,
    };
    let (base, boot_steps) = resolve_engine(cfg, params.clone(), &engine_args)?;
    let mut m = Manifest::new(
        "bench",
        json!(BenchConfig {
            params: &params,
            workers: &a.workers,
            strategies: strategies.clone(),
            batch_size: base.batch_size,
            bootstrap_steps: boot_steps,
            deterministic: base.deterministic,
        }),
    );
    let steps = match &a.input {
        Some(p) => {
            let input = load_input(p, params.step_seconds)?;
            m.input = json!({ "path": p.display().to_string(), "sha256": input.digest });
            input.steps
        }
        None => {
            let mut sc = cfg.synth.clone().unwrap_or_default();
            if let Some(n) = a.tweets {
                sc.tweets_total = n;
            }
            sc.validate()?;
            m.input = json!({ "synth": sc });
            bucket_all(synth_stream(&sc)?.0, params.step_seconds)?
        }
    };
    let (boot, used) = bootstrap(&steps, boot_steps, &params, text)?;
    let mut runs: Vec<MetricsReport> = Vec::new();
    for &strategy in &strategies {
        for &workers in &a.workers {
            let ec = EngineConfig {
                workers,
                strategy,
                ..base.clone()
            };
            log::info!("bench run {strategy} W={workers}");
            runs.push(run_parallel(&steps[used..], &ec, boot.clone())?.metrics);
        }
    }
    let report = bench_report(&runs);
    let table = report.to_table();
    print!("{table}");
    let dir = a.out_dir.clone().unwrap_or_else(|| PathBuf::from("bench"));
    m.output(&dir.join("bench.txt"), table.as_bytes())?;
    let mut jb = serde_json::to_vec_pretty(&report.to_json(&runs))?;
    jb.push(b'\n');
    m.output(&dir.join("bench.json"), &jb)?;
    m.summary = json!({ "rows": report.rows.len() });
    m.finish(&dir.join("bench.manifest.json"), started.elapsed().as_secs_f64())
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Seq(a) => cmd_seq(&cfg, a),
        Command::Par(a) => cmd_par(&cfg, a),
        Command::Synth(a) => cmd_synth(&cfg, a),
        Command::Nmi(a) => cmd_nmi(a),
        Command::Bench(a) => cmd_bench(&cfg, a),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("MEMESTREAM_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("memestream").chain(args.iter().copied()))
    }

    #[test]
    fn benchmark_scale_params_are_accepted() {
        let cli = parse(&["seq", "--input", "g.jsonl", "--k", "240", "--step", "30", "--window", "20", "--nsigma", "2"]).unwrap();
        let Command::Seq(a) = cli.command else { panic!() };
        let (p, _) = resolve_params(&ConfigFile::default(), &a.params).unwrap();
        assert_eq!((p.k, p.step_seconds, p.window_steps, p.nsigma), (240, 30, 20, 2.0));
    }

    #[test]
    fn zero_window_is_a_usage_error() {
        let cli = parse(&["seq", "--input", "g.jsonl", "--window", "0"]).unwrap();
        let Command::Seq(a) = cli.command else { panic!() };
        let e = resolve_params(&ConfigFile::default(), &a.params).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_USAGE);
        assert_eq!(main_with_args(["memestream", "seq", "--input", "g.jsonl", "--window", "0"]), EXIT_USAGE);
        assert_eq!(main_with_args(["memestream", "seq", "--bogus"]), EXIT_USAGE);
    }

    #[test]
    fn flags_override_config() {
        let cfg: ConfigFile = toml::from_str("[params]\nk = 7\nwindow_steps = 3\n[engine]\nworkers = 3\nstrategy = \"full-centroids\"\n").unwrap();
        let cli = parse(&["par", "--input", "x", "--window", "9", "--batch", "5"]).unwrap();
        let Command::Par(a) = cli.command else { panic!() };
        let (p, _) = resolve_params(&cfg, &a.params).unwrap();
        assert_eq!((p.k, p.window_steps), (7, 9));
        let (e, boot) = resolve_engine(&cfg, p, &a.engine).unwrap();
        assert_eq!((e.workers, e.batch_size, e.strategy, boot), (3, 5, Strategy::FullCentroids, 1));
        assert!(e.validate().is_ok());
    }

    #[test]
    fn bad_strategy_is_rejected() {
        let cli = parse(&["par", "--input", "x", "--strategy", "gossip"]).unwrap();
        let Command::Par(a) = cli.command else { panic!() };
        let e = resolve_engine(&ConfigFile::default(), Params::default(), &a.engine).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_USAGE);
    }
}
