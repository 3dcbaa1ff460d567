//! Deterministic signal processing: FIR lowpass design, filtering,
//! decimation, mono mixdown, normalization and magnitude spectrograms.

mod fft;
mod fir;
mod stft;
mod waveform;

pub use fir::{apply_filter, design_lowpass, DesignWindow, FirFilter, DEFAULT_TAPS};
pub use stft::{stft_magnitude_db, stft_with, Spectrogram, StftParams};
pub use waveform::{decimate, downsample, to_mono, SampleRate, Waveform};
