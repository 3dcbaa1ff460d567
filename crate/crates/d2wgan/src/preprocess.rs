//! Corpus preprocessing: mono, peak-normalize, low-pass, decimate.

use std::path::{Path, PathBuf};

use d2wgan_core::dsp::{
    apply_filter, design_lowpass, downsample, DesignWindow, Waveform, DEFAULT_TAPS,
};

use crate::corpus::list_wavs;
use crate::error::{Error, Result};
use crate::wav::{read_wav, write_wav};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// 48 kHz piano recordings: 13.2 kHz cutoff, decimate by 3 to 16 kHz.
    Piano48k,
    /// 44.1 kHz solo recordings: 11.025 kHz cutoff, decimate by 3 to 14.7 kHz.
    Solo44k,
    Custom {
        cutoff_hz: f64,
        factor: usize,
    },
}

impl Target {
    pub fn cutoff_hz(self) -> f64 {
        match self {
            Self::Piano48k => 13_200.0,
            Self::Solo44k => 11_025.0,
            Self::Custom { cutoff_hz, .. } => cutoff_hz,
        }
    }

    pub fn factor(self) -> usize {
        match self {
            Self::Piano48k | Self::Solo44k => 3,
            Self::Custom { factor, .. } => factor,
        }
    }

    /// Input rate the preset is defined for.
    pub fn input_rate(self) -> Option<u32> {
        match self {
            Self::Piano48k => Some(48_000),
            Self::Solo44k => Some(44_100),
            Self::Custom { .. } => None,
        }
    }

    pub fn name(self) -> String {
        match self {
            Self::Piano48k => "piano48k".into(),
            Self::Solo44k => "solo44k".into(),
            Self::Custom { cutoff_hz, factor } => {
                format!("custom(cutoff={cutoff_hz},factor={factor})")
            }
        }
    }
}

/// Apply the pipeline to decoded channels at `rate`.
pub fn preprocess(channels: &[Vec<f64>], rate: u32, target: Target) -> Result<Waveform> {
    if let Some(expected) = target.input_rate() {
        if rate != expected {
            return Err(Error::Config(format!(
                "preset {} expects {expected} Hz input, file is {rate} Hz",
                target.name()
            )));
        }
    }
    let mono = d2wgan_core::dsp::to_mono(channels, rate)?.normalize();
    let filter = design_lowpass(
        target.cutoff_hz(),
        rate,
        DEFAULT_TAPS,
        DesignWindow::Hamming,
    )?;
    let filtered = apply_filter(&mono, &filter)?;
    Ok(downsample(&filtered, target.factor())?)
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct PreprocessReport {
    /// `(input, output)` pairs.
    pub written: Vec<(PathBuf, PathBuf)>,
    /// `(input, reason)` for files that could not be processed.
    pub skipped: Vec<(PathBuf, String)>,
}

/// Process every WAV below `in_dir` into the same relative path under
/// `out_dir`. Unreadable files are skipped and reported; it is an error if
/// nothing was written.
pub fn preprocess_dir(in_dir: &Path, out_dir: &Path, target: Target) -> Result<PreprocessReport> {
    let files = list_wavs(in_dir)?;
    if files.is_empty() {
        return Err(Error::Config(format!(
            "no WAV files under {}",
            in_dir.display()
        )));
    }
    let mut report = PreprocessReport::default();
    for rel in files {
        let src = in_dir.join(&rel);
        let dst = out_dir.join(&rel);
        let result = read_wav(&src)
            .and_then(|a| preprocess(&a.channels, a.rate, target))
            .and_then(|w| {
                if !w.sample_rate().is_integer() {
                    return Err(Error::Config(format!(
                        "output rate {} Hz is not an integer; choose another factor",
                        w.sample_rate()
                    )));
                }
                write_wav(&dst, &w)
            });
        match result {
            Ok(()) => report.written.push((src, dst)),
            Err(e) => report.skipped.push((src, e.to_string())),
        }
    }
    if report.written.is_empty() {
        return Err(Error::Other(format!(
            "all {} files failed; first error: {}",
            report.skipped.len(),
            report.skipped[0].1
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wav::wav_info;

    fn stereo_tone(rate: u32, secs: f64) -> Vec<Vec<f64>> {
        let n = (rate as f64 * secs) as usize;
        let l = (0..n)
            .map(|i| (i as f64 * 1000.0 * 2.0 * std::f64::consts::PI / rate as f64).sin() * 0.3)
            .collect();
        let r = vec![0.1; n];
        vec![l, r]
    }

    #[test]
    fn presets_reach_the_target_rates() {
        let w = preprocess(&stereo_tone(48_000, 0.1), 48_000, Target::Piano48k).unwrap();
        assert_eq!(w.sample_rate().rounded_hz(), 16_000);
        assert_eq!(w.len(), 1600);
        let w = preprocess(&stereo_tone(44_100, 0.1), 44_100, Target::Solo44k).unwrap();
        assert_eq!(w.sample_rate().rounded_hz(), 14_700);
        assert!(preprocess(&stereo_tone(44_100, 0.1), 44_100, Target::Piano48k).is_err());
        let custom = Target::Custom {
            cutoff_hz: 30_000.0,
            factor: 2,
        };
        assert!(preprocess(&stereo_tone(48_000, 0.1), 48_000, custom)
            .unwrap_err()
            .is_validation());
    }

    #[test]
    fn directory_run_skips_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let (inp, out) = (dir.path().join("in"), dir.path().join("out"));
        std::fs::create_dir(&inp).unwrap();
        assert!(preprocess_dir(&inp, &out, Target::Piano48k).is_err());

        let ch = stereo_tone(48_000, 0.2);
        let mut wr = hound::WavWriter::create(
            inp.join("a.wav"),
            hound::WavSpec {
                channels: 2,
                sample_rate: 48_000,
                bits_per_sample: 16,
                sample_format: hound::SampleFormat::Int,
            },
        )
        .unwrap();
        for i in 0..ch[0].len() {
            for c in &ch {
                wr.write_sample((c[i] * 32767.0) as i16).unwrap();
            }
        }
        wr.finalize().unwrap();
        std::fs::write(inp.join("broken.wav"), b"not a wav").unwrap();

        let rep = preprocess_dir(&inp, &out, Target::Piano48k).unwrap();
        assert_eq!(rep.written.len(), 1);
        assert_eq!(rep.skipped.len(), 1);
        let (spec, frames) = wav_info(out.join("a.wav")).unwrap();
        assert_eq!((spec.channels, spec.sample_rate, frames), (1, 16_000, 3200));
    }
}
