//! The `d2wgan` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input or
//! configuration, 3 training aborted on a non-finite loss.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use d2wgan_core::dataset::{
    make_synthetic_corpus, split_corpus, BatchSource, BatchStream, SegmentLayout, SplitPart,
    SplitRatios, StreamConfig, SynthSpec,
};
use d2wgan_core::dsp::Waveform;
use d2wgan_core::inpaint::{inpaint, InpaintRequest, DEFAULT_CROSSFADE};
use d2wgan_core::model::GanModel;
use d2wgan_core::training::Trainer;

use crate::checkpoint_io::load_checkpoint;
use crate::config::{PartialSettings, Preset, Settings};
use crate::corpus::{list_wavs, Corpus, CORPUS_FILE};
use crate::error::{Error, Result};
use crate::evalset::{batch_generate_eval_set, EvalOptions};
use crate::listen::{router, Catalog, ListenService, Protocol};
use crate::preprocess::{preprocess_dir, Target};
use crate::rundir::{AbortSnapshot, FileObserver, RunDir, RunManifest};
use crate::store::{PrefetchSource, WavStore};
use crate::wav::{read_wav, write_wav};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "d2wgan",
    version,
    about = "Long-gap audio inpainting with single- and dual-critic WGANs"
)]
pub struct Cli {
    /// Seed for every random choice of the command; recorded in its manifest.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a directory of WAV files to mono, normalized, low-passed and
    /// decimated files.
    Preprocess(PreprocessArgs),
    /// Partition a directory of WAV files into train / validation / test.
    Split(SplitArgs),
    /// Write a synthetic tone corpus with a split manifest.
    Synth(SynthArgs),
    /// Train a model; creates a timestamped run directory.
    Train(TrainArgs),
    /// Fill one gap of a WAV file with a trained model.
    Inpaint(InpaintArgs),
    /// Build a blinded evaluation set with metrics and spectrograms.
    Eval(EvalArgs),
    /// Serve the listening test for an evaluation manifest.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TargetName {
    Piano48k,
    Solo44k,
    Custom,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub target: TargetName,
    /// Cutoff for `--target custom`.
    #[arg(long)]
    pub cutoff_hz: Option<f64>,
    /// Decimation factor for `--target custom`.
    #[arg(long)]
    pub factor: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Directory of (preprocessed) WAV files.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub train: f64,
    #[arg(long, default_value_t = 0.1)]
    pub validation: f64,
    #[arg(long, default_value_t = 0.1)]
    pub test: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output: PathBuf,
    /// Tone recipe, e.g. `sine:440@0.5` or `sine:440+chirp:200-800/2.0@0.3`.
    #[arg(long, default_value = "sine:440@0.5")]
    pub spec: String,
    #[arg(long, default_value_t = 10)]
    pub files: usize,
    #[arg(long, default_value_t = 10.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 16_000)]
    pub rate: u32,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus manifest (`split<TAB>path` lines).
    #[arg(long, required_unless_present = "resume")]
    pub corpus: Option<PathBuf>,
    /// Parent directory for the run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// TOML configuration; command-line flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Continue from a checkpoint inside an existing run directory.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub critic_steps: Option<usize>,
    /// Weight clipping bound.
    #[arg(long, conflicts_with = "gp")]
    pub clip: Option<f64>,
    /// Gradient-penalty weight (replaces clipping).
    #[arg(long)]
    pub gp: Option<f64>,
    #[arg(long)]
    pub monitor_every: Option<u64>,
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
    /// Batches queued by the loader thread; 0 loads inline.
    #[arg(long)]
    pub prefetch: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Print trace rows to stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct InpaintArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// First gap sample.
    #[arg(long)]
    pub gap_start: usize,
    #[arg(long, default_value_t = DEFAULT_CROSSFADE)]
    pub crossfade: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, short = 'n', default_value_t = 50)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 6.5)]
    pub clip_s: f64,
    #[arg(long, default_value_t = DEFAULT_CROSSFADE)]
    pub crossfade: usize,
    /// Model name recorded in the manifest; defaults to the architecture.
    #[arg(long)]
    pub model_label: Option<String>,
    /// Dataset name recorded in the manifest; defaults to the corpus
    /// directory name.
    #[arg(long)]
    pub dataset_label: Option<String>,
    #[arg(long)]
    pub no_images: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Evaluation manifest (`eval_manifest.jsonl`).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Grade log and snapshot directory; defaults to `listen_state` beside
    /// the manifest.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, value_enum, default_value_t = Protocol::Unpaired)]
    pub protocol: Protocol,
    /// Static files (the web client) served under `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    if matches!(e, Error::Core(d2wgan_core::Error::NonFiniteLoss { .. })) {
        EXIT_ABORT
    } else if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Parse `args` and run the command.
pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Preprocess(a) => preprocess(a, seed),
        Command::Split(a) => split(a, seed),
        Command::Synth(a) => synth(a, seed),
        Command::Train(a) => train(a, seed).map(|_| ()),
        Command::Inpaint(a) => inpaint_file(a, seed),
        Command::Eval(a) => eval(a, seed),
        Command::Serve(a) => serve(a, seed),
    }
}

fn preprocess(a: PreprocessArgs, seed: Option<u64>) -> Result<()> {
    let target = match a.target {
        TargetName::Piano48k => Target::Piano48k,
        TargetName::Solo44k => Target::Solo44k,
        TargetName::Custom => Target::Custom {
            cutoff_hz: a
                .cutoff_hz
                .ok_or_else(|| Error::Config("--target custom needs --cutoff-hz".into()))?,
            factor: a
                .factor
                .ok_or_else(|| Error::Config("--target custom needs --factor".into()))?,
        },
    };
    let mut m = RunManifest::start("preprocess", seed.unwrap_or(0));
    m.config = serde_json::json!({"target": target.name(), "cutoff_hz": target.cutoff_hz(), "factor": target.factor()});
    let report = preprocess_dir(&a.input, &a.output, target)?;
    for (src, dst) in &report.written {
        m.add_input(src)?;
        m.add_output(dst);
    }
    for (src, why) in &report.skipped {
        eprintln!("skipped {}: {why}", src.display());
    }
    m.finish(if report.skipped.is_empty() {
        "ok"
    } else {
        "partial"
    });
    m.write(a.output.join("manifest.json"))?;
    println!(
        "wrote {} files to {} ({} skipped)",
        report.written.len(),
        a.output.display(),
        report.skipped.len()
    );
    Ok(())
}

fn split(a: SplitArgs, seed: Option<u64>) -> Result<()> {
    let seed = seed.unwrap_or(0);
    let files = list_wavs(&a.input)?;
    let ratios = SplitRatios {
        train: a.train,
        validation: a.validation,
        test: a.test,
    };
    let split = split_corpus(&files, ratios, seed)?;
    let corpus = Corpus::from_split(&a.input, &split);
    let path = a.input.join(CORPUS_FILE);
    corpus.write(&path)?;
    let mut m = RunManifest::start("split", seed);
    m.config = serde_json::json!({"train": a.train, "validation": a.validation, "test": a.test});
    for f in &files {
        m.add_input(a.input.join(f))?;
    }
    m.add_output(&path);
    m.finish("ok");
    m.write(a.input.join("split.manifest.json"))?;
    println!(
        "{}: {} train, {} validation, {} test",
        path.display(),
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    Ok(())
}

fn synth(a: SynthArgs, seed: Option<u64>) -> Result<()> {
    let seed = seed.unwrap_or(0);
    let spec = SynthSpec::parse(&a.spec)?;
    let files = make_synthetic_corpus(
        &spec,
        a.files,
        a.duration_s,
        a.rate,
        &SegmentLayout::standard(),
        seed,
    )?;
    let mut m = RunManifest::start("synth", seed);
    m.config = serde_json::json!({"spec": a.spec, "files": a.files, "duration_s": a.duration_s, "rate": a.rate});
    let mut names = Vec::new();
    for f in &files {
        let name = format!("{}.wav", f.id);
        let p = a.output.join(&name);
        write_wav(&p, &f.waveform)?;
        m.add_output(&p);
        names.push(name);
    }
    let split = split_corpus(&names, SplitRatios::default(), seed)?;
    let corpus_path = a.output.join(CORPUS_FILE);
    Corpus::from_split(&a.output, &split).write(&corpus_path)?;
    m.add_output(&corpus_path);
    m.finish("ok");
    m.write(a.output.join("manifest.json"))?;
    println!("wrote {} files and {}", files.len(), corpus_path.display());
    Ok(())
}

fn cli_layer(a: &TrainArgs, seed: Option<u64>) -> PartialSettings {
    let mut p = PartialSettings {
        seed,
        ..PartialSettings::default()
    };
    p.model.arch = a.arch.clone();
    p.model.preset = a.preset;
    p.train.total_steps = a.steps;
    p.train.learning_rate = a.lr;
    p.train.batch_size = a.batch;
    p.train.critic_steps = a.critic_steps;
    p.train.clip_value = a.clip;
    p.train.gp_lambda = a.gp;
    p.train.monitor_every = a.monitor_every;
    p.train.checkpoint_every = a.checkpoint_every;
    p.data.prefetch = a.prefetch;
    p.data.stride = a.stride;
    p
}

/// Outcome of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub run_dir: RunDir,
    pub final_step: u64,
    pub exhausted: bool,
}

/// Run the `train` command and return where it wrote its artifacts.
pub fn train(a: TrainArgs, seed: Option<u64>) -> Result<TrainOutcome> {
    let resume = match &a.resume {
        Some(p) => {
            let ck = load_checkpoint(p)?;
            let root = p.parent().and_then(Path::parent).ok_or_else(|| {
                Error::Config(format!("{} is not inside a run directory", p.display()))
            })?;
            Some((ck, RunDir::open(root)?, p.clone()))
        }
        None => None,
    };
    let file_layer = match (&a.config, &resume) {
        (Some(p), _) => PartialSettings::load(p)?,
        (None, Some((_, dir, _))) => PartialSettings::load(dir.config())?,
        (None, None) => PartialSettings::default(),
    };
    let settings: Settings = cli_layer(&a, seed).resolve(&file_layer)?;

    let corpus_path = match (&a.corpus, &resume) {
        (Some(c), _) => c.clone(),
        (None, Some((_, dir, _))) => {
            let m = RunManifest::read(dir.manifest())?;
            m.config["corpus"]
                .as_str()
                .map(PathBuf::from)
                .ok_or_else(|| {
                    Error::Config("run manifest does not name a corpus; pass --corpus".into())
                })?
        }
        (None, None) => unreachable!("clap requires --corpus without --resume"),
    };
    let corpus = Corpus::read(&corpus_path)?;
    let train_files = corpus.files(SplitPart::Train);
    if train_files.is_empty() {
        return Err(Error::Config(format!(
            "{} has no training files",
            corpus_path.display()
        )));
    }

    let (mut trainer, dir) = match resume {
        Some((ck, dir, _)) => {
            ck.check_config(&settings.model)?;
            (
                Trainer::from_checkpoint(&ck, settings.train.clone())?,
                (dir, ck.batches_consumed),
            )
        }
        None => (
            Trainer::init(settings.model.clone(), settings.train.clone())?,
            (RunDir::create(&a.out, settings.model.arch.name())?, 0),
        ),
    };
    let (dir, skip) = dir;

    let mut m = RunManifest::start("train", settings.train.seed);
    let mut config = settings.to_json();
    config["corpus"] = serde_json::json!(corpus_path.display().to_string());
    m.config = config;
    m.add_input(&corpus_path)?;
    for f in &train_files {
        m.add_input(f)?;
    }
    if let Some(p) = &a.resume {
        m.add_input(p)?;
    }
    crate::checkpoint_io::write_atomic(&dir.config(), settings.to_toml().as_bytes())?;
    m.write(dir.manifest())?;

    let store = WavStore::open(&train_files)?;
    let ids: Vec<String> = train_files.iter().map(|p| WavStore::id(p)).collect();
    let stream_cfg = StreamConfig {
        stride: settings.stride,
        ..StreamConfig::new(settings.train.batch_size, settings.train.seed)
    };
    let stream = BatchStream::new(store, &ids, settings.model.layout, stream_cfg)?;
    let mut source: Box<dyn BatchSource> = if settings.prefetch > 0 {
        Box::new(PrefetchSource::new(stream, settings.prefetch))
    } else {
        Box::new(stream)
    };
    source.fast_forward(skip)?;

    let mut obs = FileObserver::new(dir.clone())?;
    obs.echo = a.verbose;
    let result = trainer.run(source.as_mut(), &mut obs);
    let flushed = obs.finish();
    for (_, path) in result.iter().flat_map(|r| r.checkpoints.iter()) {
        m.add_output(path);
    }
    m.add_output(dir.trace());
    match result {
        Ok(run) => {
            flushed?;
            m.finish(if run.exhausted { "exhausted" } else { "ok" });
            m.write(dir.manifest())?;
            println!("{} (step {})", dir.root.display(), run.final_step);
            Ok(TrainOutcome {
                run_dir: dir,
                final_step: run.final_step,
                exhausted: run.exhausted,
            })
        }
        Err(e) => {
            let _ = flushed;
            if let Some(snap) = AbortSnapshot::from_error(&e, obs.last_checkpoint.clone()) {
                snap.write(dir.abort())?;
                m.add_output(dir.abort());
                eprintln!(
                    "training aborted; diagnostic snapshot at {}",
                    dir.abort().display()
                );
            }
            m.finish("aborted");
            m.write(dir.manifest())?;
            Err(e.into())
        }
    }
}

fn load_model(path: &Path) -> Result<GanModel> {
    Ok(GanModel::from_checkpoint(&load_checkpoint(path)?)?)
}

fn inpaint_file(a: InpaintArgs, seed: Option<u64>) -> Result<()> {
    let seed = seed.unwrap_or(0);
    let model = load_model(&a.checkpoint)?;
    let source: Waveform = read_wav(&a.input)?.to_mono()?;
    let req = InpaintRequest {
        crossfade_len: a.crossfade,
        ..InpaintRequest::new(source, a.gap_start, model.config.layout, seed)
    };
    let out = inpaint(&model, &req)?;
    write_wav(&a.output, &out)?;
    let mut m = RunManifest::start("inpaint", seed);
    m.config = serde_json::json!({"gap_start": a.gap_start, "crossfade": a.crossfade});
    m.add_input(&a.checkpoint)?;
    m.add_input(&a.input)?;
    m.add_output(&a.output);
    m.finish("ok");
    let mut name = a.output.clone().into_os_string();
    name.push(".manifest.json");
    m.write(PathBuf::from(name))?;
    Ok(())
}

fn eval(a: EvalArgs, seed: Option<u64>) -> Result<()> {
    let seed = seed.unwrap_or(0);
    let model = load_model(&a.checkpoint)?;
    let corpus = Corpus::read(&a.corpus)?;
    let part = SplitPart::parse(&a.split)
        .ok_or_else(|| Error::Config(format!("unknown split `{}`", a.split)))?;
    let files = corpus.files(part);
    let dataset_label = a.dataset_label.clone().unwrap_or_else(|| {
        corpus
            .base
            .file_name()
            .map_or("dataset".into(), |n| n.to_string_lossy().into_owned())
    });
    let opts = EvalOptions {
        n_samples: a.n,
        seed,
        clip_s: a.clip_s,
        crossfade_len: a.crossfade,
        model_label: a
            .model_label
            .clone()
            .unwrap_or_else(|| model.arch().name().into()),
        dataset_label,
        images: !a.no_images,
    };
    let set = batch_generate_eval_set(&model, &files, &opts, &a.out)?;
    let mut m = RunManifest::start("eval", seed);
    m.config = serde_json::json!({
        "n": a.n, "split": part.name(), "clip_s": a.clip_s, "crossfade": a.crossfade,
        "model": opts.model_label, "dataset": opts.dataset_label,
        "with_replacement": set.summary.with_replacement,
    });
    m.add_input(&a.checkpoint)?;
    for f in &files {
        m.add_input(f)?;
    }
    for o in &set.outputs {
        m.add_output(o);
    }
    m.finish("ok");
    m.write(a.out.join("manifest.json"))?;
    if set.summary.with_replacement {
        eprintln!("warning: too few test clips; sampled with replacement");
    }
    println!(
        "{} pairs, mean LSD {:.2} dB, mean SNR {:.2} dB -> {}",
        set.summary.n_pairs,
        set.summary.mean_lsd_db,
        set.summary.mean_snr_db,
        a.out.display()
    );
    Ok(())
}

fn serve(a: ServeArgs, seed: Option<u64>) -> Result<()> {
    let rows = crate::evalset::read_eval_manifest(&a.manifest)?;
    let base = a
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let state = a.state.clone().unwrap_or_else(|| base.join("listen_state"));
    let catalog = Catalog::new(rows, &base)?;
    let service = Arc::new(ListenService::open(catalog, a.protocol, &state)?);
    let mut m = RunManifest::start("serve", seed.unwrap_or(0));
    m.config =
        serde_json::json!({"host": a.host, "port": a.port, "protocol": a.protocol, "state": state});
    m.add_input(&a.manifest)?;
    m.write(state.join("manifest.json"))?;

    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::Other(e.to_string()))?;
    let app = router(service.clone(), a.static_dir.clone());
    let addr = format!("{}:{}", a.host, a.port);
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Error::Other(format!("cannot listen on {addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| Error::Other(e.to_string()))?;
        println!("listening on http://{local}");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Error::Other(e.to_string()))
    })?;
    service.snapshot()?;
    m.finish("ok");
    m.write(state.join("manifest.json"))
}
