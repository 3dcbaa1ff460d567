//! Acceptance run: one PASS/FAIL line per criterion, each with its time
//! budget. Exits non-zero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use d2wgan::cli::{self, Cli, Command};
use d2wgan::core::dataset::{
    make_synthetic_corpus, stream_batches, MemoryStore, Segment, SegmentLayout, StreamConfig,
    SynthSpec,
};
use d2wgan::core::divergences::{
    js, kl, kl_with_base, wasserstein1_empirical, DiscreteDist, EmpiricalSample, LogBase,
};
use d2wgan::core::dsp::{
    design_lowpass, stft_with, DesignWindow, SampleRate, StftParams, Waveform, DEFAULT_TAPS,
};
use d2wgan::core::evaluation::{
    log_spectral_distance, lsd_params, odg_aggregate, GradeRecord, Grouping, LabeledGrade, Odg,
    OdgStats,
};
use d2wgan::core::inpaint::{inpaint, splice, InpaintRequest};
use d2wgan::core::model::{sample_latent, Architecture, Checkpoint, GanModel, ModelConfig};
use d2wgan::core::rng::{self, tag};
use d2wgan::core::training::{
    critic_loss, generator_loss, total_critic_loss, train_toy, Lipschitz, LossWeights,
    MemoryObserver, ToyConfig, TraceRow, TrainConfig, TrainObserver, Trainer,
};
use d2wgan::preprocess::{preprocess, Target};
use d2wgan::rundir::read_trace;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn run(name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let took = t0.elapsed();
    let timing = format!("{:.2}s of {}s", took.as_secs_f64(), budget.as_secs());
    let (ok, detail) = match res {
        Ok(d) if took <= budget => (true, d),
        Ok(d) => (false, format!("{d}; over time budget")),
        Err(e) => (false, e),
    };
    println!(
        "{} {name} [{timing}] {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

// ---------------------------------------------------------------- ODG tables

/// Grades for one (model, dataset) cell; counts for 0, -1, -2, -3, -4.
fn cell(model: &str, dataset: &str, counts: [u64; 5], out: &mut Vec<LabeledGrade>) {
    for (k, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            let i = out.len();
            out.push(LabeledGrade {
                record: GradeRecord {
                    grader_id: format!("grader{}", i % 7),
                    presentation_id: format!("p{i:04}"),
                    odg: Odg::new(-(k as i32)).unwrap(),
                    timestamp_ms: i as u64,
                },
                model: model.into(),
                dataset: dataset.into(),
            });
        }
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure(
        (got - want).abs() <= tol,
        format!("{name}: {got:.4} vs {want} (tol {tol})"),
    )
}

fn table3() -> Outcome {
    let cells: [(&str, &str, [u64; 5], f64); 6] = [
        ("WGAN", "PIANO", [0, 1, 20, 29, 0], -2.56),
        ("WGAN", "SOLO", [0, 6, 16, 23, 5], -2.54),
        ("WGAN", "MAESTRO", [0, 0, 5, 29, 16], -3.2),
        ("D2WGAN", "PIANO", [0, 0, 23, 27, 0], -2.54),
        ("D2WGAN", "SOLO", [2, 4, 16, 25, 3], -2.46),
        ("D2WGAN", "MAESTRO", [0, 1, 13, 21, 15], -3.0),
    ];
    let mut grades = Vec::new();
    for (m, d, c, _) in cells {
        cell(m, d, c, &mut grades);
    }
    let table = odg_aggregate(&grades, Grouping::ModelDataset).map_err(err)?;
    let mut worst = 0.0f64;
    for (m, d, _, want) in cells {
        let row = table
            .row(Some(m), Some(d))
            .ok_or(format!("missing {m}/{d}"))?;
        close(&format!("{m}/{d}"), row.mean, want, 0.05)?;
        worst = worst.max((row.mean - want).abs());
    }
    let w = table.overall("WGAN").ok_or("missing WGAN overall")?;
    let d = table.overall("D2WGAN").ok_or("missing D2WGAN overall")?;
    close("WGAN overall", w.mean, -2.77, 0.01)?;
    close("D2WGAN overall", d.mean, -2.67, 0.01)?;
    Ok(format!(
        "max cell error {worst:.4}; overall {:.4} / {:.4}",
        w.mean, d.mean
    ))
}

fn table4() -> Outcome {
    let mut grades = Vec::new();
    cell("D2WGAN", "PIANO", [0, 27, 22, 1, 0], &mut grades);
    cell("D2WGAN", "MAESTRO", [3, 35, 12, 0, 0], &mut grades);
    let table = odg_aggregate(&grades, Grouping::ModelDataset).map_err(err)?;
    let piano = table
        .row(Some("D2WGAN"), Some("PIANO"))
        .ok_or("missing PIANO")?;
    let maestro = table
        .row(Some("D2WGAN"), Some("MAESTRO"))
        .ok_or("missing MAESTRO")?;
    close("PIANO", piano.mean, -1.48, 0.01)?;
    close("MAESTRO", maestro.mean, -1.18, 0.01)?;
    let pooled = OdgStats::pooled([piano, maestro]).map_err(err)?;
    close("pooled magnitude", pooled.mean.abs(), 1.33, 0.01)?;
    ensure(
        table.overall("D2WGAN").map(|o| o.mean) == Some(pooled.mean),
        "overall differs from pooled",
    )?;
    Ok(format!(
        "{:.3} / {:.3}, pooled {:.3}",
        piano.mean, maestro.mean, pooled.mean
    ))
}

// --------------------------------------------------------------- divergences

/// Random weights with some empty cells.
fn weights<R: Rng>(r: &mut R, k: usize) -> Vec<f64> {
    (0..k)
        .map(|_| {
            if r.random_bool(0.15) {
                0.0
            } else {
                r.random_range(0.0..1.0)
            }
        })
        .collect()
}

fn divergences() -> Outcome {
    let mut r = rng::stream(1, &[tag::EVAL]);
    let mut worst_decomp = 0.0f64;
    let mut i = 0;
    while i < 1000 {
        let k = r.random_range(2..12);
        let (wp, wq) = (weights(&mut r, k), weights(&mut r, k));
        let (Ok(p), Ok(q)) = (
            DiscreteDist::from_weights(&wp),
            DiscreteDist::from_weights(&wq),
        ) else {
            // all-zero draw
            continue;
        };
        i += 1;
        ensure(
            kl(&p, &p).map_err(err)? == 0.0,
            format!("kl(p,p) != 0 at pair {i}"),
        )?;
        let (a, b) = (js(&p, &q).map_err(err)?, js(&q, &p).map_err(err)?);
        ensure(a == b, format!("js asymmetric at pair {i}: {a} vs {b}"))?;
        ensure(
            (0.0..=1.0).contains(&a),
            format!("js out of [0,1] at pair {i}: {a}"),
        )?;
        let m = p.midpoint(&q).map_err(err)?;
        let half = 0.5 * kl_with_base(&p, &m, LogBase::Two).map_err(err)?
            + 0.5 * kl_with_base(&q, &m, LogBase::Two).map_err(err)?;
        worst_decomp = worst_decomp.max((a - half).abs());
    }
    ensure(
        worst_decomp <= 1e-12,
        format!("decomposition error {worst_decomp:e}"),
    )?;

    let closed = |p: f64, q: f64| {
        let t = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
        t(p, q) + t(1.0 - p, 1.0 - q)
    };
    let mut worst_bern = 0.0f64;
    for (p, q) in [(0.3, 0.6), (0.5, 0.5), (0.9, 0.1), (0.0, 0.5), (0.25, 0.75)] {
        let got = kl(
            &DiscreteDist::bernoulli(p).map_err(err)?,
            &DiscreteDist::bernoulli(q).map_err(err)?,
        )
        .map_err(err)?;
        worst_bern = worst_bern.max((got - closed(p, q)).abs());
    }
    ensure(
        worst_bern <= 1e-9,
        format!("Bernoulli error {worst_bern:e}"),
    )?;
    Ok(format!(
        "decomposition {worst_decomp:.1e}, Bernoulli {worst_bern:.1e}"
    ))
}

// --------------------------------------------------------------- Wasserstein

fn wasserstein() -> Outcome {
    let mut r = rng::stream(2, &[tag::EVAL]);
    let a = sample_latent(10_000, &mut r);
    let b: Vec<f64> = sample_latent(10_000, &mut r)
        .into_iter()
        .map(|v| v + 3.0)
        .collect();
    let w = wasserstein1_empirical(
        &EmpiricalSample::new(a).map_err(err)?,
        &EmpiricalSample::new(b).map_err(err)?,
    );
    close("empirical W1", w, 3.0, 0.1)?;

    let cfg = ToyConfig::default();
    ensure(cfg.steps <= 2000, format!("{} toy steps", cfg.steps))?;
    let toy = train_toy(&cfg).map_err(err)?;
    let rel = (toy.final_estimate - toy.oracle).abs() / toy.oracle;
    ensure(
        rel < 0.2,
        format!(
            "critic {:.3} vs oracle {:.3}",
            toy.final_estimate, toy.oracle
        ),
    )?;
    Ok(format!(
        "empirical {w:.4}; critic {:.3} vs oracle {:.3} ({:.1}%) after {} steps",
        toy.final_estimate,
        toy.oracle,
        100.0 * rel,
        cfg.steps
    ))
}

// ----------------------------------------------------------------------- DSP

/// Magnitude response in dB from a direct DFT of the taps.
fn response_db(taps: &[f64], freq_hz: f64, rate_hz: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * freq_hz / rate_hz;
    let (re, im) = taps
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(re, im), (n, &h)| {
            (re + h * (w * n as f64).cos(), im - h * (w * n as f64).sin())
        });
    20.0 * (re * re + im * im).sqrt().log10()
}

fn dsp() -> Outcome {
    let f = design_lowpass(13_200.0, 48_000, DEFAULT_TAPS, DesignWindow::Hamming).map_err(err)?;
    let taps = f.taps();
    let stop = response_db(taps, 20_000.0, 48_000.0);
    ensure(
        stop <= -50.0,
        format!("attenuation at 20 kHz only {:.2} dB", -stop),
    )?;
    let pass: Vec<f64> = (0..=1050)
        .map(|k| response_db(taps, 10.0 * k as f64, 48_000.0))
        .collect();
    let hi = pass.iter().cloned().fold(f64::MIN, f64::max);
    let lo = pass.iter().cloned().fold(f64::MAX, f64::min);
    ensure(hi - lo <= 0.5, format!("passband ripple {:.4} dB", hi - lo))?;
    ensure(
        (0..taps.len()).all(|i| taps[i].to_bits() == taps[taps.len() - 1 - i].to_bits()),
        "taps are not symmetric",
    )?;

    for (rate, target, want) in [
        (48_000, Target::Piano48k, 16_000),
        (44_100, Target::Solo44k, 14_700),
    ] {
        let tone: Vec<f64> = (0..rate as usize / 10)
            .map(|n| (0.01 * n as f64).sin())
            .collect();
        let out = preprocess(&[tone.clone()], rate, target).map_err(err)?;
        let got = out.sample_rate();
        ensure(
            got == SampleRate::from_hz(want) && got.is_integer() && got.numer() == want as u64,
            format!("{rate} Hz became {}/{}", got.numer(), got.denom()),
        )?;
        ensure(
            out.len() == tone.len().div_ceil(3),
            format!("{} samples from {}", out.len(), tone.len()),
        )?;
    }
    Ok(format!(
        "stopband {stop:.1} dB, ripple {:.4} dB, rates exact",
        hi - lo
    ))
}

// -------------------------------------------------------------- segmentation

fn segmentation() -> Outcome {
    let l = SegmentLayout::standard();
    ensure(
        l.total_len() == 53_248 && l.context_len() == 24_576 && l.gap_len() == 4_096,
        format!(
            "layout {} = 2 * {} + {}",
            l.total_len(),
            l.context_len(),
            l.gap_len()
        ),
    )?;
    ensure(
        2 * l.context_len() + l.gap_len() == l.total_len(),
        "2 Lc + Lg != L",
    )?;
    ensure(
        l.gap_start() == l.context_len(),
        format!("gap starts at {}", l.gap_start()),
    )?;

    let mut r = rng::stream(3, &[tag::EVAL]);
    let x: Vec<f64> = (0..4 * l.total_len())
        .map(|_| r.random_range(-1.0..1.0))
        .collect();
    for i in 0..100 {
        let off = r.random_range(0..=x.len() - l.total_len());
        let seg = Segment::cut(&x, l, "noise", off).map_err(err)?;
        let (left, right) = seg.borders2();
        let back: Vec<f64> = left.iter().chain(seg.gap()).chain(right).copied().collect();
        ensure(
            back == seg.full() && seg.full() == &x[off..off + l.total_len()],
            format!("segment {i} reassembly"),
        )?;
        let g = off + l.context_len();
        ensure(
            seg.gap() == &x[g..g + l.gap_len()],
            format!("segment {i} gap position"),
        )?;
    }
    Ok("53248 = 2*24576 + 4096; 100 segments reassembled bit-exactly".into())
}

// -------------------------------------------------------------- loss algebra

struct ClipProbe {
    updates: usize,
    worst: f64,
}

impl TrainObserver for ClipProbe {
    fn on_checkpoint(&mut self, _: Checkpoint) -> d2wgan::core::Result<String> {
        Ok(String::new())
    }

    fn after_update(&mut self, model: &GanModel) {
        self.updates += 1;
        for c in &model.critics {
            self.worst = c.params().iter().fold(self.worst, |m, p| m.max(p.abs()));
        }
        assert!(
            self.worst <= 0.01,
            "update {}: max |param| {}",
            self.updates,
            self.worst
        );
    }
}

fn small_layout() -> SegmentLayout {
    SegmentLayout::new(256, 1024, 256, 1024, 4).unwrap()
}

fn losses() -> Outcome {
    let exact = |name: &str, got: d2wgan::core::Result<f64>, want: f64| -> Result<(), String> {
        let got = got.map_err(err)?;
        ensure(
            (got - want).abs() <= 1e-12,
            format!("{name}: {got} vs {want}"),
        )
    };
    exact(
        "critic {1,1} vs {0,0}",
        critic_loss(&[1.0, 1.0], &[0.0, 0.0]),
        -1.0,
    )?;
    exact("critic equal", critic_loss(&[0.3, -0.7], &[0.3, -0.7]), 0.0)?;
    exact(
        "critic {2,4} vs {1,3}",
        critic_loss(&[2.0, 4.0], &[1.0, 3.0]),
        -1.0,
    )?;
    ensure(critic_loss(&[], &[]).is_err(), "empty batch accepted")?;
    exact(
        "total",
        total_critic_loss(-1.0, -2.0, LossWeights::default()),
        -3.0,
    )?;
    exact(
        "total identity",
        total_critic_loss(-0.25, 0.0, LossWeights::default()),
        -0.25,
    )?;
    exact(
        "total weighted",
        total_critic_loss(-1.0, -2.0, LossWeights::new(0.7, 0.3).map_err(err)?),
        -1.3,
    )?;
    exact(
        "generator",
        generator_loss(&[1.0, 1.0], Some(&[2.0, 2.0])),
        -3.0,
    )?;
    exact(
        "generator zeros",
        generator_loss(&[0.0, 0.0], Some(&[0.0, 0.0])),
        0.0,
    )?;
    exact(
        "generator single critic",
        generator_loss(&[0.5, 1.5], None),
        -1.0,
    )?;
    ensure(
        generator_loss(&[], None).is_err(),
        "empty generator batch accepted",
    )?;

    let layout = small_layout();
    let files = make_synthetic_corpus(&SynthSpec::sine(440.0, 0.5), 3, 2.0, 16_000u32, &layout, 7)
        .map_err(err)?;
    let store = MemoryStore::new(files.into_iter().map(|f| (f.id, f.waveform)).collect());
    let ids = store.ids();
    let mut src = stream_batches(store, &ids, layout, StreamConfig::new(2, 3)).map_err(err)?;
    let cfg = TrainConfig {
        batch_size: 2,
        critic_steps: 2,
        total_steps: 200,
        lipschitz: Lipschitz::Clip(0.01),
        learning_rate: 1e-3,
        ..TrainConfig::default()
    };
    let mut t = Trainer::init(ModelConfig::tiny(Architecture::D2Wgan, layout), cfg).map_err(err)?;
    let mut probe = ClipProbe {
        updates: 0,
        worst: 0.0,
    };
    let run = t.run(&mut src, &mut probe).map_err(err)?;
    ensure(
        run.final_step == 200,
        format!("stopped at step {}", run.final_step),
    )?;
    ensure(
        probe.updates == 600,
        format!("{} updates observed", probe.updates),
    )?;
    Ok(format!(
        "examples exact; max |critic param| {:.5} over {} updates",
        probe.worst, probe.updates
    ))
}

// --------------------------------------------------------------------- smoke

const RATE: u32 = 16_000;

/// Bin with the largest mean dB magnitude over all frames.
fn dominant_bin(x: &[f64]) -> Result<usize, String> {
    let s = stft_with(x, RATE.into(), StftParams::default()).map_err(err)?;
    let mean: Vec<f64> = (0..s.bins())
        .map(|b| (0..s.frames()).map(|f| s.get(f, b)).sum::<f64>())
        .collect();
    Ok((0..mean.len())
        .max_by(|&a, &b| mean[a].total_cmp(&mean[b]))
        .unwrap_or(0))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn smoke_train(
    layout: SegmentLayout,
) -> Result<(GanModel, GanModel, Vec<TraceRow>, Vec<u8>), String> {
    let files = make_synthetic_corpus(&SynthSpec::sine(440.0, 0.5), 6, 10.0, RATE, &layout, 1)
        .map_err(err)?;
    let store = MemoryStore::new(files.into_iter().map(|f| (f.id, f.waveform)).collect());
    let ids = store.ids();
    let mut src = stream_batches(store, &ids, layout, StreamConfig::new(4, 1)).map_err(err)?;
    let cfg = TrainConfig {
        batch_size: 4,
        critic_steps: 1,
        total_steps: 2000,
        monitor_every: 1,
        ..TrainConfig::default()
    };
    let mut t = Trainer::init(ModelConfig::tiny(Architecture::D2Wgan, layout), cfg).map_err(err)?;
    let untrained = t.model().clone();
    let run = t
        .run(&mut src, &mut MemoryObserver::default())
        .map_err(err)?;
    ensure(
        run.final_step == 2000,
        format!("stopped at step {}", run.final_step),
    )?;
    let bytes = t.checkpoint(0).to_bytes();
    Ok((untrained, t.into_model(), run.trace, bytes))
}

fn smoke() -> Outcome {
    let layout = SegmentLayout::standard();
    let (untrained, trained, trace, bytes) = smoke_train(layout)?;

    let test = make_synthetic_corpus(&SynthSpec::sine(440.0, 0.5), 20, 3.4, RATE, &layout, 2)
        .map_err(err)?;
    let (g, lg) = (layout.gap_start(), layout.gap_len());
    let mut hits = 0;
    let mut diffs = Vec::new();
    for (i, f) in test.iter().enumerate() {
        let src = Waveform::new(f.waveform.samples()[..layout.total_len()].to_vec(), RATE)
            .map_err(err)?;
        let req = InpaintRequest {
            crossfade_len: 0,
            ..InpaintRequest::new(src.clone(), g, layout, i as u64)
        };
        let filled = inpaint(&trained, &req).map_err(err)?;
        let baseline = inpaint(&untrained, &req).map_err(err)?;
        let gap = &filled.samples()[g..g + lg];
        let context = dominant_bin(&src.samples()[..g])?;
        if dominant_bin(gap)?.abs_diff(context) <= 1 {
            hits += 1;
        }
        let real = &src.samples()[g..g + lg];
        let lsd = |y: &Waveform| {
            log_spectral_distance(
                real,
                &y.samples()[g..g + lg],
                RATE.into(),
                0..lg,
                lsd_params(),
            )
        };
        diffs.push(lsd(&filled).map_err(err)? - lsd(&baseline).map_err(err)?);
    }
    let wins = diffs.iter().filter(|d| **d < 0.0).count();
    let paired = median(diffs);

    let (_, _, again, again_bytes) = smoke_train(layout)?;
    let same =
        trace.len() == again.len() && trace.iter().zip(&again).all(|(a, b)| a.same_losses(b));

    let detail = format!(
        "(a) {hits}/20 dominant bins within 1; (b) paired median LSD trained - untrained {paired:+.3} dB \
         ({wins}/20 gaps better); (c) {} trace rows {}",
        trace.len(),
        if same && bytes == again_bytes { "identical" } else { "differ" }
    );
    ensure(hits * 5 >= 20 * 4, format!("(a) failed: {detail}"))?;
    ensure(paired < 0.0, format!("(b) failed: {detail}"))?;
    ensure(
        same && bytes == again_bytes,
        format!("(c) failed: {detail}"),
    )?;
    Ok(detail)
}

// ------------------------------------------------------------ resume via CLI

const SMALL_LAYOUT: &str = "[layout]
gap_len = 512
context_len = 1024
border1_len = 256
border2_len = 1024
long_downsample = 4
";

fn cli_train<S: AsRef<str>>(args: &[S]) -> Result<cli::TrainOutcome, String> {
    let argv = std::iter::once("d2wgan").chain(args.iter().map(AsRef::as_ref));
    let parsed = Cli::try_parse_from(argv).map_err(err)?;
    match parsed.command {
        Command::Train(a) => cli::train(a, parsed.seed).map_err(err),
        _ => Err("not a train command".into()),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn resume() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let data = tmp.path().join("data");
    let synth = Cli::try_parse_from([
        "d2wgan",
        "--seed",
        "1",
        "synth",
        "--output",
        s(&data),
        "--files",
        "5",
        "--duration-s",
        "4",
    ])
    .map_err(err)?;
    cli::run(synth).map_err(err)?;
    let corpus = data.join("corpus.tsv");
    let cfg = tmp.path().join("small.toml");
    std::fs::write(&cfg, SMALL_LAYOUT).map_err(err)?;

    let common = [
        "--seed",
        "3",
        "train",
        "--corpus",
        s(&corpus),
        "--config",
        s(&cfg),
        "--preset",
        "tiny",
        "--batch",
        "2",
        "--critic-steps",
        "2",
        "--monitor-every",
        "50",
        "--checkpoint-every",
        "200",
        "--prefetch",
        "0",
    ];
    let with = |out: &str, steps: &str| -> Vec<String> {
        let runs = tmp.path().join(out);
        common
            .iter()
            .map(|a| a.to_string())
            .chain([
                "--out".into(),
                s(&runs).into(),
                "--steps".into(),
                steps.into(),
            ])
            .collect()
    };

    let whole = cli_train(&with("whole", "400"))?;
    let first = cli_train(&with("split", "200"))?;
    ensure(
        first.final_step == 200,
        format!("interrupted run stopped at {}", first.final_step),
    )?;
    let mid = first.run_dir.checkpoint(200);
    let resumed = cli_train(&["train", "--resume", s(&mid), "--steps", "400"])?;
    ensure(
        resumed.final_step == 400,
        format!("resumed run stopped at {}", resumed.final_step),
    )?;

    let a = std::fs::read(whole.run_dir.checkpoint(400)).map_err(err)?;
    let b = std::fs::read(resumed.run_dir.checkpoint(400)).map_err(err)?;
    ensure(a == b, "final checkpoints differ")?;
    let ta = read_trace(whole.run_dir.trace()).map_err(err)?;
    let tb = read_trace(resumed.run_dir.trace()).map_err(err)?;
    ensure(
        ta.len() == 8 && ta.len() == tb.len() && ta.iter().zip(&tb).all(|(x, y)| x.same_losses(y)),
        format!("traces differ ({} vs {} rows)", ta.len(), tb.len()),
    )?;
    Ok(format!(
        "step-400 checkpoints identical ({} bytes), {} trace rows identical",
        a.len(),
        ta.len()
    ))
}

// ------------------------------------------------------------------- inpaint

fn inpaint_contracts() -> Outcome {
    let ctx = Waveform::new(vec![0.5; 40], RATE).map_err(err)?;
    let out = splice(&ctx, &[0.3; 16], 10, 4).map_err(err)?;
    let want = [0.5, 0.45, 0.4, 0.35, 0.3];
    let got = &out.samples()[9..14];
    ensure(
        got.iter().zip(want).all(|(a, b)| (a - b).abs() <= 1e-15),
        format!("ramp {got:?}"),
    )?;
    let tail = &out.samples()[22..27];
    ensure(
        tail.iter()
            .zip(want.iter().rev())
            .all(|(a, b)| (a - b).abs() <= 1e-15),
        format!("ramp {tail:?}"),
    )?;

    let layout = small_layout();
    let mut r = rng::stream(4, &[tag::EVAL]);
    let model =
        GanModel::new(ModelConfig::tiny(Architecture::D2Wgan, layout), &mut r).map_err(err)?;
    for (i, pad) in [0usize, 1, 37, 500].into_iter().enumerate() {
        let x: Vec<f64> = (0..layout.total_len() + 2 * pad)
            .map(|_| r.random_range(-0.9..0.9))
            .collect();
        let g = pad + layout.gap_start();
        let src = Waveform::new(x.clone(), RATE).map_err(err)?;
        let y = inpaint(&model, &InpaintRequest::new(src, g, layout, i as u64)).map_err(err)?;
        let y = y.samples();
        ensure(
            y.len() == x.len(),
            format!("length {} vs {}", y.len(), x.len()),
        )?;
        let end = g + layout.gap_len();
        ensure(
            y[..g]
                .iter()
                .zip(&x[..g])
                .all(|(a, b)| a.to_bits() == b.to_bits())
                && y[end..]
                    .iter()
                    .zip(&x[end..])
                    .all(|(a, b)| a.to_bits() == b.to_bits()),
            format!("samples outside the gap changed (pad {pad})"),
        )?;
        ensure(y[g..end] != x[g..end], "gap left untouched")?;
    }
    Ok("ramp 0.5, 0.45, 0.4, 0.35, 0.3; 4 requests preserve length and context bits".into())
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        run("table3-odg-means", secs(1), table3),
        run("table4-odg-means", secs(1), table4),
        run("divergence-oracles", secs(5), divergences),
        run("wasserstein-estimation", secs(120), wasserstein),
        run("dsp-filter-and-rates", secs(10), dsp),
        run("segmentation-invariants", secs(5), segmentation),
        run("loss-algebra-and-clipping", secs(60), losses),
        run("end-to-end-smoke", secs(900), smoke),
        run("checkpoint-resume", secs(300), resume),
        run("inpaint-contracts", secs(10), inpaint_contracts),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
