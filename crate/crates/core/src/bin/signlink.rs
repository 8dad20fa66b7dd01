use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tracing::info;

use signlink::bench::{benchmark, BenchOptions};
use signlink::dataset::{load_dataset, save_dataset};
use signlink::dtw::DtwOptions;
use signlink::lstm::{load_model, save_model, train, SequenceClassifier, TrainConfig, DEFAULT_HIDDEN};
use signlink::service::script::{format_stream, render, Script};
use signlink::service::server::{serve, AppState};
use signlink::service::{format_log, replay, run_eval, Engine, ServiceConfig, Speed};
use signlink::synth::{generate_dataset, SynthSpec};
use signlink::{Dataset, SentenceGenerator, SentenceTable};

#[derive(Parser)]
#[command(name = "signlink", version, about = "Streaming sign keyword interpretation engine")]
struct Cli {
    /// Service configuration file (TOML).
    #[arg(long, global = true, env = "SIGNLINK_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the WebSocket service.
    Serve(ServeArgs),
    /// Train an LSTM on a dataset directory.
    Train(TrainArgs),
    /// Confusion report of a model on a dataset.
    Eval(EvalArgs),
    /// Compare LSTM and DTW-kNN accuracy and latency.
    Bench(BenchArgs),
    /// Feed a recorded inbound stream through a fresh session.
    Replay(ReplayArgs),
    /// Write a scripted inbound stream built from synthetic gestures.
    Record(RecordArgs),
    /// Write a synthetic gesture dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Directory that receives one inbound recording per session.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Where to write the trained model.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_HIDDEN)]
    hidden: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Fraction of each class held out for per-epoch validation.
    #[arg(long, default_value_t = 0.0)]
    validation: f64,
    /// Stop once an epoch's training accuracy reaches this value.
    #[arg(long)]
    target_accuracy: Option<f64>,
    /// Per-epoch history as CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Evaluate only on this held-out fraction of each class.
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Split seed used with --test-fraction.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Sakoe-Chiba band half-width for DTW.
    #[arg(long)]
    band: Option<usize>,
    /// Number of queries, taken evenly across the dataset; all by default.
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Newline-delimited inbound records.
    file: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    /// `max` or a multiple of real time.
    #[arg(long, default_value = "max")]
    speed: String,
    /// Write the outbound log here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecordArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "start,blood:3,not_signing:6,generate")]
    script: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long, default_value_t = 129)]
    landmarks: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    samples_per_class: usize,
    #[arg(long, default_value_t = 30)]
    frames: usize,
    #[arg(long, default_value_t = 129)]
    landmarks: usize,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    match cli.command {
        Command::Serve(a) => cmd_serve(cli.config.as_deref(), a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Replay(a) => cmd_replay(cli.config.as_deref(), a),
        Command::Record(a) => cmd_record(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_for_model(data: &Path, model: &SequenceClassifier) -> Result<Dataset> {
    let ds = load_dataset(data, model.vocabulary(), None)?;
    if ds.is_empty() {
        bail!("no samples under {}", data.display());
    }
    Ok(ds)
}

fn build_engine(cfg: &ServiceConfig, model_flag: Option<PathBuf>) -> Result<Engine> {
    let path = model_flag
        .or_else(|| cfg.model.clone())
        .context("no model given (use --model or `model` in the config)")?;
    let model = load_model(&path)?;
    if let Some(names) = &cfg.vocabulary {
        let ours: Vec<&str> = model.vocabulary().labels().iter().map(|l| l.as_str()).collect();
        if names.iter().map(String::as_str).ne(ours.iter().copied()) {
            bail!("configured vocabulary {names:?} differs from the model's {ours:?}");
        }
    }
    let table = match &cfg.sentences {
        Some(p) => SentenceTable::load(p)?,
        None => SentenceTable::bundled(),
    };
    let generator: Box<dyn SentenceGenerator> = Box::new(table);
    Ok(Engine::new(model, generator, cfg.pipeline())?)
}

fn cmd_serve(config: Option<&Path>, a: ServeArgs) -> Result<()> {
    let mut cfg = ServiceConfig::resolve(config)?;
    if let Some(p) = a.port {
        cfg.port = p;
    }
    if a.out.is_some() {
        cfg.record_dir = a.out;
    }
    let engine = Arc::new(build_engine(&cfg, a.model)?);
    let state = Arc::new(AppState::new(engine, cfg.record_dir.clone()));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((cfg.host.as_str(), cfg.port))
            .await
            .with_context(|| format!("binding {}:{}", cfg.host, cfg.port))?;
        serve(listener, state).await?;
        Ok(())
    })
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let first = load_dataset(&a.data, &signlink::Vocabulary::default(), None)?;
    let (_, d) = first.shape().context("dataset is empty")?;
    let config = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        seed: a.seed,
        validation_fraction: a.validation,
        target_accuracy: a.target_accuracy,
        ..TrainConfig::default()
    };
    let model = SequenceClassifier::init(d, a.hidden, first.vocabulary().clone(), a.seed);
    info!(samples = first.len(), dim = d, hidden = a.hidden, "training");
    let started = Instant::now();
    let outcome = train(model, &first, &config)?;
    for s in &outcome.history {
        match s.validation_accuracy {
            Some(v) => info!(epoch = s.epoch, loss = s.loss, accuracy = s.accuracy, validation = v),
            None => info!(epoch = s.epoch, loss = s.loss, accuracy = s.accuracy),
        }
    }
    save_model(&outcome.model, &a.out)?;
    if let Some(h) = &a.history {
        let f = fs::File::create(h).with_context(|| format!("creating {}", h.display()))?;
        outcome.write_history_csv(io::BufWriter::new(f))?;
    }
    let report = run_eval(&outcome.model, &first)?;
    println!("{report}");
    println!(
        "epochs {} elapsed {:.1}s model {}",
        outcome.history.len(),
        started.elapsed().as_secs_f64(),
        a.out.display()
    );
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let mut ds = load_for_model(&a.data, &model)?;
    if let Some(f) = a.test_fraction {
        ds = ds.split(f, a.seed)?.1;
    }
    let report = run_eval(&model, &ds)?;
    write_or_print(a.out.as_deref(), &format!("{report}\n"))
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let ds = load_for_model(&a.data, &model)?;
    let queries: Vec<_> = match a.queries {
        Some(0) => bail!("--queries must be > 0"),
        Some(n) if n < ds.len() => (0..n).map(|i| ds.samples()[i * ds.len() / n].clone()).collect(),
        _ => ds.samples().to_vec(),
    };
    let opts = BenchOptions {
        k: a.k,
        dtw: DtwOptions { band: a.band },
        ..BenchOptions::default()
    };
    let report = benchmark(&ds, &queries, &model, &opts)?;
    write_or_print(a.out.as_deref(), &report.to_string())
}

fn cmd_replay(config: Option<&Path>, a: ReplayArgs) -> Result<()> {
    let cfg = ServiceConfig::resolve(config)?;
    let speed: Speed = a.speed.parse()?;
    let engine = Arc::new(build_engine(&cfg, a.model)?);
    let log = replay(engine, &a.file, speed)?;
    write_or_print(a.out.as_deref(), &format_log(&log))
}

fn cmd_record(a: RecordArgs) -> Result<()> {
    let spec = SynthSpec {
        seed: a.seed,
        landmarks: a.landmarks,
        ..SynthSpec::default()
    };
    let script: Script = a.script.parse()?;
    let records = render(&spec, &script, a.fps)?;
    fs::write(&a.out, format_stream(&records)).with_context(|| format!("writing {}", a.out.display()))?;
    info!(records = records.len(), out = %a.out.display(), "recorded");
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        seed: a.seed,
        samples_per_class: a.samples_per_class,
        frames: a.frames,
        landmarks: a.landmarks,
        noise_std: a.noise,
        ..SynthSpec::default()
    };
    let ds = generate_dataset(&spec)?;
    save_dataset(&a.out, &ds)?;
    info!(samples = ds.len(), out = %a.out.display(), "synthesized");
    Ok(())
}
