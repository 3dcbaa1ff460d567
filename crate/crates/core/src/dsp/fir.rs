use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::waveform::{SampleRate, Waveform};
use crate::error::{invalid, Error, Result};

/// Window used to taper the ideal sinc response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DesignWindow {
    #[default]
    Hamming,
    Hann,
    Blackman,
}

impl DesignWindow {
    /// Symmetric window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        let denom = (n - 1) as f64;
        let half = n.div_ceil(2);
        let mut w = vec![0.0; n];
        for i in 0..half {
            let x = 2.0 * PI * i as f64 / denom;
            let v = match self {
                Self::Hamming => 0.54 - 0.46 * libm::cos(x),
                Self::Hann => 0.5 - 0.5 * libm::cos(x),
                Self::Blackman => 0.42 - 0.5 * libm::cos(x) + 0.08 * libm::cos(2.0 * x),
            };
            w[i] = v;
            w[n - 1 - i] = v;
        }
        w
    }
}

/// Linear-phase windowed-sinc lowpass filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
    cutoff_hz: f64,
    window: DesignWindow,
    sample_rate: SampleRate,
}

pub const DEFAULT_TAPS: usize = 255;

/// Window-method lowpass design. Taps are normalized to unit DC gain and are
/// exactly symmetric.
pub fn design_lowpass(
    cutoff_hz: f64,
    sample_rate: impl Into<SampleRate>,
    num_taps: usize,
    window: DesignWindow,
) -> Result<FirFilter> {
    let sample_rate = sample_rate.into();
    let nyquist_hz = sample_rate.nyquist_hz();
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist_hz) {
        return Err(Error::NyquistViolation {
            cutoff_hz,
            nyquist_hz,
        });
    }
    if num_taps % 2 == 0 {
        return Err(Error::EvenTapCount(num_taps));
    }
    let fc = cutoff_hz / sample_rate.hz();
    let center = (num_taps - 1) / 2;
    let win = window.coefficients(num_taps);
    let mut taps = vec![0.0; num_taps];
    for i in 0..=center {
        let m = (center - i) as f64;
        let ideal = if m == 0.0 {
            2.0 * fc
        } else {
            libm::sin(2.0 * PI * fc * m) / (PI * m)
        };
        let v = ideal * win[i];
        taps[i] = v;
        taps[num_taps - 1 - i] = v;
    }
    let dc: f64 = taps.iter().sum();
    for t in taps.iter_mut() {
        *t /= dc;
    }
    Ok(FirFilter {
        taps,
        cutoff_hz,
        window,
        sample_rate,
    })
}

impl FirFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn window(&self) -> DesignWindow {
        self.window
    }

    pub fn sample_rate(&self) -> SampleRate {
        self.sample_rate
    }

    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// |H(f)| evaluated directly from the taps.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate.hz();
        let (re, im) = self
            .taps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (n, &h)| {
                let a = w * n as f64;
                (re + h * libm::cos(a), im - h * libm::sin(a))
            });
        libm::sqrt(re * re + im * im)
    }

    pub fn magnitude_db_at(&self, freq_hz: f64) -> f64 {
        20.0 * libm::log10(self.magnitude_at(freq_hz))
    }

    /// Filter `samples`, compensating the group delay so the output has
    /// the input's length and alignment.
    pub fn filter_slice(&self, samples: &[f64]) -> Vec<f64> {
        let n = samples.len();
        let delay = self.group_delay();
        let ntaps = self.taps.len();
        let mut out = vec![0.0; n];
        for (t, y) in out.iter_mut().enumerate() {
            // y[t] = sum_k h[k] x[t + delay - k]
            let hi = t + delay;
            let k_lo = hi.saturating_sub(n - 1);
            let k_hi = ntaps.min(hi + 1);
            let mut acc = 0.0;
            for k in k_lo..k_hi {
                acc += self.taps[k] * samples[hi - k];
            }
            *y = acc;
        }
        out
    }
}

/// Apply `filter` to `w`. The filter must have been designed for the
/// waveform's sample rate.
pub fn apply_filter(w: &Waveform, filter: &FirFilter) -> Result<Waveform> {
    if filter.sample_rate != w.sample_rate() {
        return Err(invalid(
            "filter",
            alloc::format!(
                "designed for {} but signal is at {}",
                filter.sample_rate,
                w.sample_rate()
            ),
        ));
    }
    Waveform::new(filter.filter_slice(w.samples()), w.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn piano_filter() -> FirFilter {
        design_lowpass(13_200.0, 48_000, DEFAULT_TAPS, DesignWindow::Hamming).unwrap()
    }

    fn tone(freq: f64, rate: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| libm::sin(2.0 * PI * freq * i as f64 / rate))
            .collect()
    }

    fn rms(x: &[f64]) -> f64 {
        libm::sqrt(x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64)
    }

    #[test]
    fn rejects_bad_designs() {
        assert!(matches!(
            design_lowpass(24_000.0, 48_000, 255, DesignWindow::Hamming),
            Err(Error::NyquistViolation { .. })
        ));
        assert!(matches!(
            design_lowpass(0.0, 48_000, 255, DesignWindow::Hamming),
            Err(Error::NyquistViolation { .. })
        ));
        assert_eq!(
            design_lowpass(1_000.0, 48_000, 254, DesignWindow::Hamming),
            Err(Error::EvenTapCount(254))
        );
    }

    #[test]
    fn unit_dc_and_symmetry() {
        for window in [
            DesignWindow::Hamming,
            DesignWindow::Hann,
            DesignWindow::Blackman,
        ] {
            for (cut, rate, n) in [
                (13_200.0, 48_000, 255),
                (11_025.0, 44_100, 255),
                (500.0, 8_000, 31),
            ] {
                let f = design_lowpass(cut, rate, n, window).unwrap();
                let dc: f64 = f.taps().iter().sum();
                assert!((dc - 1.0).abs() < 1e-3);
                assert!((f.magnitude_at(0.0) - 1.0).abs() < 1e-3);
                let t = f.taps();
                for i in 0..t.len() {
                    assert_eq!(t[i], t[t.len() - 1 - i]);
                }
            }
        }
    }

    #[test]
    fn stopband_at_20k_from_dense_response_grid() {
        let f = piano_filter();
        // scan a dense grid around 20 kHz and take the worst point
        let worst = (0..=200)
            .map(|i| 19_900.0 + i as f64)
            .map(|fr| f.magnitude_db_at(fr))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= -50.0, "worst attenuation near 20 kHz: {worst} dB");
    }

    #[test]
    fn passband_tone_preserved_and_stopband_tone_removed() {
        let f = piano_filter();
        let n = 48_000;
        let pass = tone(1_000.0, 48_000.0, n);
        let out = f.filter_slice(&pass);
        let (a, b) = (1_000, n - 1_000);
        let ratio = rms(&out[a..b]) / rms(&pass[a..b]);
        assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");

        let stop = tone(20_000.0, 48_000.0, n);
        let out = f.filter_slice(&stop);
        let atten_db = 20.0 * libm::log10(rms(&out[a..b]) / rms(&stop[a..b]));
        assert!(atten_db <= -50.0, "attenuation {atten_db} dB");
    }

    #[test]
    fn group_delay_is_compensated() {
        let f = design_lowpass(4_000.0, 16_000, 31, DesignWindow::Hamming).unwrap();
        let mut impulse = vec![0.0; 101];
        impulse[50] = 1.0;
        let out = f.filter_slice(&impulse);
        assert_eq!(out.len(), 101);
        // the response peak stays at the impulse position
        let argmax = (0..out.len())
            .max_by(|&a, &b| out[a].total_cmp(&out[b]))
            .unwrap();
        assert_eq!(argmax, 50);
        assert_eq!(&out[35..66], f.taps());
    }

    #[test]
    fn zero_and_empty_inputs() {
        let f = piano_filter();
        let z = Waveform::zeros(1000, 48_000);
        assert!(apply_filter(&z, &f)
            .unwrap()
            .samples()
            .iter()
            .all(|&s| s == 0.0));
        let e = Waveform::zeros(0, 48_000);
        assert!(apply_filter(&e, &f).unwrap().is_empty());
        let wrong_rate = Waveform::zeros(10, 44_100);
        assert!(apply_filter(&wrong_rate, &f).is_err());
    }
}
