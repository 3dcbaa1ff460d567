use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::layout::SegmentLayout;
use crate::dsp::{SampleRate, Waveform};
use crate::error::{invalid, Error, Result};
use crate::rng::{self, tag};

/// One additive component of a synthetic file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tone {
    Sine {
        freq_hz: f64,
        amplitude: f64,
    },
    /// Linear chirp, repeated every `period_s` seconds.
    Chirp {
        start_hz: f64,
        end_hz: f64,
        period_s: f64,
        amplitude: f64,
    },
}

impl Tone {
    fn fundamental_hz(&self) -> f64 {
        match *self {
            Tone::Sine { freq_hz, .. } => freq_hz,
            Tone::Chirp { start_hz, .. } => start_hz,
        }
    }
}

/// Recipe for a synthetic corpus: every file mixes the same components with
/// per-file random phases.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub tones: Vec<Tone>,
}

impl SynthSpec {
    pub fn sine(freq_hz: f64, amplitude: f64) -> Self {
        Self {
            tones: alloc::vec![Tone::Sine { freq_hz, amplitude }],
        }
    }

    /// Parse `sine:440[@0.8]` or `chirp:200-800/2.0[@0.5]` items joined by `+`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || invalid("synth spec", format!("cannot parse `{text}`"));
        let mut tones = Vec::new();
        for item in text.split('+') {
            let (body, amp) = match item.trim().split_once('@') {
                Some((b, a)) => (b, a.trim().parse::<f64>().map_err(|_| bad())?),
                None => (item.trim(), 0.8),
            };
            let (kind, args) = body.split_once(':').ok_or_else(bad)?;
            match kind.trim() {
                "sine" => tones.push(Tone::Sine {
                    freq_hz: args.trim().parse().map_err(|_| bad())?,
                    amplitude: amp,
                }),
                "chirp" => {
                    let (range, period) = args.split_once('/').ok_or_else(bad)?;
                    let (a, b) = range.split_once('-').ok_or_else(bad)?;
                    tones.push(Tone::Chirp {
                        start_hz: a.trim().parse().map_err(|_| bad())?,
                        end_hz: b.trim().parse().map_err(|_| bad())?,
                        period_s: period.trim().parse().map_err(|_| bad())?,
                        amplitude: amp,
                    })
                }
                _ => return Err(bad()),
            }
        }
        if tones.is_empty() {
            return Err(bad());
        }
        Ok(Self { tones })
    }
}

/// A generated file with the frequency it was built around.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFile {
    pub id: String,
    pub waveform: Waveform,
    pub fundamental_hz: f64,
}

/// Deterministic corpus of `n_files` mixtures, each `duration_s` long.
pub fn make_synthetic_corpus(
    spec: &SynthSpec,
    n_files: usize,
    duration_s: f64,
    sample_rate: impl Into<SampleRate>,
    layout: &SegmentLayout,
    seed: u64,
) -> Result<Vec<SynthFile>> {
    let rate = sample_rate.into();
    let len = libm::floor(duration_s * rate.hz()) as usize;
    if len < layout.total_len() {
        return Err(invalid(
            "duration_s",
            format!(
                "{duration_s} s gives {len} samples, shorter than one {}-sample segment",
                layout.total_len()
            ),
        ));
    }
    for t in &spec.tones {
        let f = t.fundamental_hz();
        if !(f > 0.0 && f < rate.nyquist_hz()) {
            return Err(Error::NyquistViolation {
                cutoff_hz: f,
                nyquist_hz: rate.nyquist_hz(),
            });
        }
    }
    let fs = rate.hz();
    (0..n_files)
        .map(|i| {
            let mut rng = rng::stream(seed, &[tag::SYNTH, i as u64]);
            let phases: Vec<f64> = spec
                .tones
                .iter()
                .map(|_| rng.random::<f64>() * 2.0 * PI)
                .collect();
            let samples = (0..len)
                .map(|n| {
                    let t = n as f64 / fs;
                    spec.tones
                        .iter()
                        .zip(&phases)
                        .map(|(tone, &ph)| match *tone {
                            Tone::Sine { freq_hz, amplitude } => {
                                amplitude * libm::sin(2.0 * PI * freq_hz * t + ph)
                            }
                            Tone::Chirp {
                                start_hz,
                                end_hz,
                                period_s,
                                amplitude,
                            } => {
                                let tau = t % period_s;
                                let k = (end_hz - start_hz) / period_s;
                                amplitude
                                    * libm::sin(
                                        2.0 * PI * (start_hz * tau + 0.5 * k * tau * tau) + ph,
                                    )
                            }
                        })
                        .sum::<f64>()
                })
                .collect();
            Ok(SynthFile {
                id: format!("synth_{i:03}"),
                waveform: Waveform::new(samples, rate)?,
                fundamental_hz: spec.tones[0].fundamental_hz(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::stft_magnitude_db;

    #[test]
    fn sine_corpus_peaks_at_bin_14() {
        let layout = SegmentLayout::standard();
        let files =
            make_synthetic_corpus(&SynthSpec::sine(440.0, 0.8), 1, 10.0, 16_000, &layout, 3)
                .unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(files[0].fundamental_hz, 440.0);
        let s = stft_magnitude_db(&files[0].waveform, 512, 128).unwrap();
        // round(440 * 512 / 16000) = 14
        for f in (0..s.frames()).step_by(37) {
            assert_eq!(s.argmax_bin(f), 14);
        }
    }

    #[test]
    fn silent_and_deterministic() {
        let layout = SegmentLayout::standard();
        let silent =
            make_synthetic_corpus(&SynthSpec::sine(440.0, 0.0), 2, 4.0, 16_000, &layout, 0)
                .unwrap();
        assert!(silent.iter().all(|f| f.waveform.peak() == 0.0));
        let a = make_synthetic_corpus(&SynthSpec::sine(440.0, 0.5), 2, 4.0, 16_000, &layout, 5)
            .unwrap();
        let b = make_synthetic_corpus(&SynthSpec::sine(440.0, 0.5), 2, 4.0, 16_000, &layout, 5)
            .unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].waveform, a[1].waveform);
    }

    #[test]
    fn too_short_rejected() {
        let layout = SegmentLayout::standard();
        assert!(
            make_synthetic_corpus(&SynthSpec::sine(440.0, 0.5), 1, 3.0, 16_000, &layout, 0)
                .is_err()
        );
    }

    #[test]
    fn spec_parser() {
        let s = SynthSpec::parse("sine:440@0.5 + chirp:200-800/2").unwrap();
        assert_eq!(s.tones.len(), 2);
        assert_eq!(
            s.tones[0],
            Tone::Sine {
                freq_hz: 440.0,
                amplitude: 0.5
            }
        );
        assert!(SynthSpec::parse("square:10").is_err());
        assert!(SynthSpec::parse("sine:abc").is_err());
    }
}
