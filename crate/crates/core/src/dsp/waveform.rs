use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error, Result};

/// A sample rate kept as an exact reduced fraction of Hz.
///
/// Integer decimation of 44.1 kHz by 3 gives exactly 14.7 kHz, but further
/// factors can leave a non-integer rate; nothing is rounded until a file is
/// written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleRate {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl SampleRate {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(invalid(
                "sample_rate",
                "numerator and denominator must be positive",
            ));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub const fn from_hz(hz: u32) -> Self {
        Self {
            num: hz as u64,
            den: 1,
        }
    }

    pub fn numer(self) -> u64 {
        self.num
    }

    pub fn denom(self) -> u64 {
        self.den
    }

    pub fn hz(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn nyquist_hz(self) -> f64 {
        self.hz() / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }

    /// Rate after keeping every `factor`-th sample.
    pub fn decimated(self, factor: usize) -> Self {
        // factor >= 1 is checked by callers
        Self::new(self.num, self.den * factor as u64).expect("positive rate")
    }

    /// Nearest integer rate, for file headers.
    pub fn rounded_hz(self) -> u32 {
        ((self.num + self.den / 2) / self.den) as u32
    }
}

impl From<u32> for SampleRate {
    fn from(hz: u32) -> Self {
        Self::from_hz(hz)
    }
}

impl fmt::Display for SampleRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{} Hz", self.num)
        } else {
            write!(f, "{}/{} Hz", self.num, self.den)
        }
    }
}

/// Mono PCM signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    rate: SampleRate,
}

impl Waveform {
    /// Rejects non-finite samples.
    pub fn new(samples: Vec<f64>, rate: impl Into<SampleRate>) -> Result<Self> {
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(invalid(
                "samples",
                alloc::format!("sample {i} is not finite"),
            ));
        }
        Ok(Self {
            samples,
            rate: rate.into(),
        })
    }

    pub fn zeros(len: usize, rate: impl Into<SampleRate>) -> Self {
        Self {
            samples: alloc::vec![0.0; len],
            rate: rate.into(),
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> SampleRate {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate.hz()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| f64::max(m, s.abs()))
    }

    /// Scale so that the peak absolute amplitude is exactly 1. Silent
    /// signals are returned unchanged.
    pub fn normalize(&self) -> Self {
        let peak = self.peak();
        if peak == 0.0 || peak == 1.0 {
            return self.clone();
        }
        let mut samples: Vec<f64> = self.samples.iter().map(|s| s / peak).collect();
        // division can land one ulp off 1.0 at the peak itself
        for s in samples.iter_mut() {
            if s.abs() > 1.0 {
                *s = s.signum();
            }
        }
        if let Some(p) = samples
            .iter_mut()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        {
            *p = p.signum();
        }
        Self {
            samples,
            rate: self.rate,
        }
    }
}

/// Average equal-length channels into one.
pub fn to_mono(channels: &[Vec<f64>], rate: impl Into<SampleRate>) -> Result<Waveform> {
    let first = channels.first().ok_or(Error::Empty("channel list"))?;
    let len = first.len();
    for (channel, c) in channels.iter().enumerate() {
        if c.len() != len {
            return Err(Error::RaggedChannels {
                channel,
                len: c.len(),
                expected: len,
            });
        }
    }
    let n = channels.len() as f64;
    let samples = (0..len)
        .map(|i| channels.iter().map(|c| c[i]).sum::<f64>() / n)
        .collect();
    Waveform::new(samples, rate)
}

/// Keep every `factor`-th sample. Anti-alias filtering is the caller's job.
pub fn downsample(w: &Waveform, factor: usize) -> Result<Waveform> {
    if factor == 0 {
        return Err(invalid("factor", "decimation factor must be at least 1"));
    }
    Ok(Waveform {
        samples: decimate(w.samples(), factor),
        rate: w.rate.decimated(factor),
    })
}

/// Slice-level decimation; output length is `ceil(len / factor)`.
pub fn decimate(samples: &[f64], factor: usize) -> Vec<f64> {
    samples.iter().step_by(factor.max(1)).copied().collect()
}
