//! Evaluation sets: real / reconstructed clip pairs, a blinded presentation
//! manifest, per-pair metrics and spectrogram comparisons.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use d2wgan_core::dsp::{SampleRate, StftParams, Waveform};
use d2wgan_core::evaluation::{log_spectral_distance, lsd_params, snr};
use d2wgan_core::inpaint::{inpaint, GapFiller, InpaintRequest, DEFAULT_CROSSFADE};
use d2wgan_core::rng::{self, derive_seed, tag};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::plot::comparison_image;
use crate::wav::{read_wav_range, wav_info, write_wav};

pub const EVAL_MANIFEST: &str = "eval_manifest.jsonl";
pub const REPORT_FILE: &str = "report.tsv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Real,
    Reconstructed,
}

/// One line of the eval manifest. Clip files are named after the
/// presentation id, so a path reveals neither role nor model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRow {
    pub presentation_id: String,
    pub pair_id: String,
    pub role: Role,
    /// Relative to the manifest's directory.
    pub path: String,
    pub blinded: bool,
    pub model: String,
    pub dataset: String,
}

pub fn write_eval_manifest(path: impl AsRef<Path>, rows: &[EvalRow]) -> Result<()> {
    let text: String = rows
        .iter()
        .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
        .collect();
    crate::checkpoint_io::write_atomic(path.as_ref(), text.as_bytes())
}

pub fn read_eval_manifest(path: impl AsRef<Path>) -> Result<Vec<EvalRow>> {
    let path = path.as_ref();
    let f = fs::File::open(path).at(path)?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub clip_s: f64,
    pub crossfade_len: usize,
    pub model_label: String,
    pub dataset_label: String,
    pub images: bool,
}

impl EvalOptions {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            clip_s: 6.5,
            crossfade_len: DEFAULT_CROSSFADE,
            model_label: "model".into(),
            dataset_label: "dataset".into(),
            images: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub pair_id: String,
    pub source: String,
    pub offset: usize,
    pub gap_start: usize,
    pub lsd_db: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n_pairs: usize,
    pub clip_len: usize,
    pub gap_start: usize,
    pub gap_len: usize,
    pub sample_rate_hz: f64,
    /// Fewer candidate clips than requested pairs: clips were drawn with
    /// replacement.
    pub with_replacement: bool,
    pub mean_lsd_db: f64,
    pub mean_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    pub rows: Vec<EvalRow>,
    pub pairs: Vec<PairReport>,
    pub summary: EvalSummary,
    pub outputs: Vec<PathBuf>,
}

fn report_text(pairs: &[PairReport]) -> String {
    let mut s = String::from("pair_id\tsource\toffset\tgap_start\tlsd_db\tsnr_db\n");
    for p in pairs {
        s += &format!(
            "{}\t{}\t{}\t{}\t{:.4}\t{:.4}\n",
            p.pair_id, p.source, p.offset, p.gap_start, p.lsd_db, p.snr_db
        );
    }
    s
}

/// Cut `opts.n_samples` clips from `files`, inpaint the centre gap of each
/// with `filler`, and write everything below `out_dir`.
///
/// Clips are `max(L, clip_s * rate)` samples with the gap centred, drawn
/// without replacement from non-overlapping windows; when there are too few
/// windows the draw falls back to sampling with replacement and the summary
/// says so.
pub fn batch_generate_eval_set(
    filler: &dyn GapFiller,
    files: &[PathBuf],
    opts: &EvalOptions,
    out_dir: &Path,
) -> Result<EvalSet> {
    if files.is_empty() {
        return Err(Error::Config("test split is empty".into()));
    }
    if opts.n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    let layout = filler.layout();
    let mut rate = None;
    let mut lens = Vec::new();
    for f in files {
        let (spec, frames) = wav_info(f)?;
        match rate {
            None => rate = Some(spec.sample_rate),
            Some(r) if r != spec.sample_rate => {
                return Err(Error::Config(format!(
                    "{} is {} Hz, expected {r} Hz",
                    f.display(),
                    spec.sample_rate
                )))
            }
            _ => {}
        }
        lens.push(frames);
    }
    let rate = SampleRate::from_hz(rate.expect("non-empty"));
    let clip_len = layout
        .total_len()
        .max((opts.clip_s * rate.hz()).round() as usize);
    let gap_start = (clip_len - layout.gap_len()) / 2;
    let gap = gap_start..gap_start + layout.gap_len();

    let candidates: Vec<(usize, usize)> = lens
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| {
            let count = if n < clip_len { 0 } else { n / clip_len };
            (0..count).map(move |k| (i, k * clip_len))
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::Config(format!(
            "no test file holds a {clip_len}-sample clip"
        )));
    }
    let mut rng = rng::stream(opts.seed, &[tag::EVAL, 0]);
    let with_replacement = candidates.len() < opts.n_samples;
    let picks: Vec<(usize, usize)> = if with_replacement {
        (0..opts.n_samples)
            .map(|_| candidates[rng.random_range(0..candidates.len())])
            .collect()
    } else {
        let mut c = candidates;
        c.shuffle(&mut rng);
        c.truncate(opts.n_samples);
        c
    };

    // presentation ids: a seeded permutation over all 2n clips
    let mut order: Vec<usize> = (0..2 * opts.n_samples).collect();
    order.shuffle(&mut rng::stream(opts.seed, &[tag::EVAL, 1]));
    let width = (2 * opts.n_samples).to_string().len().max(3);
    let pid = |k: usize| format!("p{:0width$}", order[k] + 1);

    let clips_dir = out_dir.join("clips");
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    let mut outputs = Vec::new();
    for (i, &(file, offset)) in picks.iter().enumerate() {
        let pair_id = format!("pair{:0w$}", i + 1, w = width);
        let real = Waveform::new(read_wav_range(&files[file], offset, clip_len)?, rate)?;
        let req = InpaintRequest {
            crossfade_len: opts.crossfade_len,
            ..InpaintRequest::new(
                real.clone(),
                gap_start,
                layout,
                derive_seed(opts.seed, &[i as u64]),
            )
        };
        let recon = inpaint(filler, &req)?;
        let lsd = log_spectral_distance(
            real.samples(),
            recon.samples(),
            rate,
            gap.clone(),
            lsd_params(),
        )?;
        let snr_db = snr(real.samples(), recon.samples(), gap.clone())?;
        for (role, w, k) in [
            (Role::Real, &real, 2 * i),
            (Role::Reconstructed, &recon, 2 * i + 1),
        ] {
            let id = pid(k);
            let rel = format!("clips/{id}.wav");
            write_wav(clips_dir.join(format!("{id}.wav")), w)?;
            outputs.push(out_dir.join(&rel));
            rows.push(EvalRow {
                presentation_id: id,
                pair_id: pair_id.clone(),
                role,
                path: rel,
                blinded: true,
                model: opts.model_label.clone(),
                dataset: opts.dataset_label.clone(),
            });
        }
        if opts.images {
            let png = out_dir.join("spectrograms").join(format!("{pair_id}.png"));
            comparison_image(
                real.samples(),
                recon.samples(),
                rate,
                gap.clone(),
                StftParams::default(),
            )?
            .write_png(&png)?;
            outputs.push(png);
        }
        pairs.push(PairReport {
            pair_id,
            source: files[file].display().to_string(),
            offset,
            gap_start,
            lsd_db: lsd,
            snr_db,
        });
    }
    rows.sort_by(|a, b| a.presentation_id.cmp(&b.presentation_id));

    let n = pairs.len() as f64;
    let summary = EvalSummary {
        n_pairs: pairs.len(),
        clip_len,
        gap_start,
        gap_len: layout.gap_len(),
        sample_rate_hz: rate.hz(),
        with_replacement,
        mean_lsd_db: pairs.iter().map(|p| p.lsd_db).sum::<f64>() / n,
        mean_snr_db: pairs.iter().map(|p| p.snr_db).sum::<f64>() / n,
    };
    let manifest = out_dir.join(EVAL_MANIFEST);
    write_eval_manifest(&manifest, &rows)?;
    let report = out_dir.join(REPORT_FILE);
    let mut f = fs::File::create(&report).at(&report)?;
    f.write_all(report_text(&pairs).as_bytes()).at(&report)?;
    let summary_path = out_dir.join(SUMMARY_FILE);
    crate::checkpoint_io::write_atomic(
        &summary_path,
        serde_json::to_string_pretty(&summary)
            .expect("summary serializes")
            .as_bytes(),
    )?;
    outputs.extend([manifest, report, summary_path]);
    Ok(EvalSet {
        rows,
        pairs,
        summary,
        outputs,
    })
}
