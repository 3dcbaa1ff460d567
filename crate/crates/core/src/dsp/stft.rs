use alloc::vec;
use alloc::vec::Vec;

use super::fft::real_magnitudes;
use super::fir::DesignWindow;
use super::waveform::{SampleRate, Waveform};
use crate::error::{invalid, Result};

/// STFT framing and dB floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftParams {
    pub frame_len: usize,
    pub hop_len: usize,
    pub floor_db: f64,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            frame_len: 512,
            hop_len: 128,
            floor_db: -80.0,
        }
    }
}

impl StftParams {
    pub fn new(frame_len: usize, hop_len: usize) -> Self {
        Self {
            frame_len,
            hop_len,
            ..Self::default()
        }
    }

    pub fn with_floor(mut self, floor_db: f64) -> Self {
        self.floor_db = floor_db;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.hop_len == 0 || self.frame_len < self.hop_len {
            return Err(invalid("stft", "need frame_len >= hop_len >= 1"));
        }
        if !self.floor_db.is_finite() {
            return Err(invalid("floor_db", "must be finite"));
        }
        Ok(())
    }

    /// Frame count for a signal of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        if len < self.frame_len {
            1
        } else {
            (len - self.frame_len) / self.hop_len + 1
        }
    }
}

/// Magnitude spectrogram in dB, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    magnitudes_db: Vec<f64>,
    frames: usize,
    bins: usize,
    params: StftParams,
    sample_rate: SampleRate,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn params(&self) -> StftParams {
        self.params
    }

    pub fn sample_rate(&self) -> SampleRate {
        self.sample_rate
    }

    pub fn frame(&self, f: usize) -> &[f64] {
        &self.magnitudes_db[f * self.bins..(f + 1) * self.bins]
    }

    pub fn get(&self, frame: usize, bin: usize) -> f64 {
        self.magnitudes_db[frame * self.bins + bin]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.magnitudes_db
    }

    /// Loudest bin of a frame (first one on ties).
    pub fn argmax_bin(&self, frame: usize) -> usize {
        let row = self.frame(frame);
        let mut best = 0;
        for (k, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = k;
            }
        }
        best
    }

    pub fn bin_hz(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate.hz() / self.params.frame_len as f64
    }

    /// Centre sample of a frame.
    pub fn frame_center(&self, frame: usize) -> usize {
        frame * self.params.hop_len + self.params.frame_len / 2
    }
}

/// Hann-windowed magnitude STFT in dB with the default framing.
pub fn stft_magnitude_db(w: &Waveform, frame_len: usize, hop_len: usize) -> Result<Spectrogram> {
    stft_with(
        w.samples(),
        w.sample_rate(),
        StftParams::new(frame_len, hop_len),
    )
}

/// Magnitudes are normalized by the window sum, so a full-scale sinusoid
/// centred on a bin reads about -6 dB.
pub fn stft_with(samples: &[f64], rate: SampleRate, params: StftParams) -> Result<Spectrogram> {
    params.validate()?;
    let n = params.frame_len;
    let window = DesignWindow::Hann.coefficients(n);
    let norm: f64 = window.iter().sum();
    let frames = params.frames_for(samples.len());
    let bins = n / 2 + 1;
    let mut magnitudes_db = Vec::with_capacity(frames * bins);
    let mut buf = vec![0.0; n];
    for f in 0..frames {
        let start = f * params.hop_len;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = samples.get(start + i).copied().unwrap_or(0.0) * window[i];
        }
        for m in real_magnitudes(&buf) {
            let db = if m > 0.0 {
                20.0 * libm::log10(m / norm)
            } else {
                f64::NEG_INFINITY
            };
            magnitudes_db.push(db.max(params.floor_db));
        }
    }
    Ok(Spectrogram {
        magnitudes_db,
        frames,
        bins,
        params,
        sample_rate: rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn tone(freqs: &[f64], rate: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                freqs
                    .iter()
                    .map(|f| 0.5 * libm::sin(2.0 * PI * f * i as f64 / rate))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn shape_follows_framing() {
        let w = Waveform::zeros(16_000, 16_000);
        let s = stft_magnitude_db(&w, 512, 128).unwrap();
        assert_eq!(s.frames(), (16_000 - 512) / 128 + 1);
        assert_eq!(s.bins(), 257);
        assert!(s.as_slice().iter().all(|&v| v == -80.0));

        let short = Waveform::new(vec![0.5; 100], 16_000).unwrap();
        let s = stft_magnitude_db(&short, 512, 128).unwrap();
        assert_eq!(s.frames(), 1);
        assert!(s.as_slice().iter().all(|v| v.is_finite()));

        assert!(stft_magnitude_db(&w, 128, 512).is_err());
        assert!(stft_magnitude_db(&w, 128, 0).is_err());
    }

    #[test]
    fn tone_peaks_at_expected_bin() {
        // round(1000 * 512 / 16000) = 32
        let w = Waveform::new(tone(&[1_000.0], 16_000.0, 8_000), 16_000).unwrap();
        let s = stft_magnitude_db(&w, 512, 128).unwrap();
        for f in 0..s.frames() {
            assert_eq!(s.argmax_bin(f), 32);
        }
    }

    #[test]
    fn two_tones_two_peaks() {
        let w = Waveform::new(tone(&[1_000.0, 3_000.0], 16_000.0, 8_000), 16_000).unwrap();
        let s = stft_magnitude_db(&w, 512, 128).unwrap();
        for f in 0..s.frames() {
            let row = s.frame(f);
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
            // strongest two local maxima
            let peaks: Vec<usize> = idx
                .into_iter()
                .filter(|&k| {
                    k > 0 && k + 1 < row.len() && row[k] >= row[k - 1] && row[k] >= row[k + 1]
                })
                .take(2)
                .collect();
            let mut peaks = peaks;
            peaks.sort();
            assert!(
                peaks[0].abs_diff(32) <= 1 && peaks[1].abs_diff(96) <= 1,
                "{peaks:?}"
            );
        }
    }
}
