use core::ops::Range;

use crate::dsp::{stft_with, SampleRate, StftParams};
use crate::error::{Error, Result};

fn region_slices<'a>(
    reference: &'a [f64],
    test: &'a [f64],
    region: Range<usize>,
) -> Result<(&'a [f64], &'a [f64])> {
    if reference.len() != test.len() {
        return Err(Error::LengthMismatch {
            what: "compared signals",
            expected: reference.len(),
            actual: test.len(),
        });
    }
    if region.start > region.end || region.end > reference.len() {
        return Err(Error::OutOfRange {
            start: region.start,
            end: region.end,
            len: reference.len(),
        });
    }
    Ok((&reference[region.clone()], &test[region]))
}

/// `10 log10(|ref|^2 / |ref - test|^2)` over `region`; `+inf` when the
/// signals agree there.
pub fn snr(reference: &[f64], test: &[f64], region: Range<usize>) -> Result<f64> {
    let (r, t) = region_slices(reference, test, region)?;
    let signal: f64 = r.iter().map(|v| v * v).sum();
    let noise: f64 = r.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(signal / noise))
}

/// STFT settings for spectral distance: the default frame and hop with a
/// floor far enough below any audible level that exact magnitude ratios
/// survive the dB conversion.
pub fn lsd_params() -> StftParams {
    StftParams::default().with_floor(-200.0)
}

/// Root-mean-square difference of the dB magnitude spectrograms of the two
/// signals restricted to `region`.
pub fn log_spectral_distance(
    reference: &[f64],
    test: &[f64],
    rate: SampleRate,
    region: Range<usize>,
    params: StftParams,
) -> Result<f64> {
    let (r, t) = region_slices(reference, test, region)?;
    if r.len() < params.frame_len {
        return Err(Error::LengthMismatch {
            what: "spectral distance region (needs one full frame)",
            expected: params.frame_len,
            actual: r.len(),
        });
    }
    let a = stft_with(r, rate, params)?;
    let b = stft_with(t, rate, params)?;
    let n = a.as_slice().len() as f64;
    let ss: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(libm::sqrt(ss / n))
}
