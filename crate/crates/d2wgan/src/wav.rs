//! WAV reading (integer or float PCM, any channel count) and 16-bit PCM
//! writing.

use std::fs::File;
use std::io::{BufReader, Cursor, Read, Seek};
use std::path::Path;

use d2wgan_core::dsp::{to_mono, Waveform};
use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, IoContext, Result};

/// Decoded audio: one vector per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub channels: Vec<Vec<f64>>,
    pub rate: u32,
}

impl Audio {
    pub fn to_mono(&self) -> Result<Waveform> {
        Ok(to_mono(&self.channels, self.rate)?)
    }

    pub fn frames(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }
}

fn audio_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Audio {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn scale(spec: &WavSpec) -> f64 {
    1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64
}

fn decode<R: Read>(reader: WavReader<R>, path: &Path, max_frames: Option<usize>) -> Result<Audio> {
    let spec = reader.spec();
    let n_ch = spec.channels as usize;
    if n_ch == 0 {
        return Err(audio_err(path, "no channels"));
    }
    let limit = max_frames.map_or(usize::MAX, |f| f.saturating_mul(n_ch));
    let mut channels = vec![Vec::new(); n_ch];
    let mut push = |i: usize, v: f64| channels[i % n_ch].push(v);
    match spec.sample_format {
        SampleFormat::Int => {
            let s = scale(&spec);
            let mut reader = reader;
            for (i, x) in reader.samples::<i32>().take(limit).enumerate() {
                push(i, x.map_err(|e| audio_err(path, e))? as f64 * s);
            }
        }
        SampleFormat::Float => {
            let mut reader = reader;
            for (i, x) in reader.samples::<f32>().take(limit).enumerate() {
                push(i, x.map_err(|e| audio_err(path, e))? as f64);
            }
        }
    }
    Ok(Audio {
        channels,
        rate: spec.sample_rate,
    })
}

/// Read a whole WAV file. Compressed or otherwise non-PCM encodings are
/// rejected.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Audio> {
    let path = path.as_ref();
    let file = File::open(path).at(path)?;
    let reader = WavReader::new(BufReader::new(file)).map_err(|e| audio_err(path, e))?;
    decode(reader, path, None)
}

/// Header information without decoding samples.
pub fn wav_info(path: impl AsRef<Path>) -> Result<(WavSpec, usize)> {
    let path = path.as_ref();
    let file = File::open(path).at(path)?;
    let reader = WavReader::new(BufReader::new(file)).map_err(|e| audio_err(path, e))?;
    Ok((reader.spec(), reader.duration() as usize))
}

/// Read `len` mono frames starting at frame `offset`, averaging channels.
pub fn read_wav_range(path: impl AsRef<Path>, offset: usize, len: usize) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = File::open(path).at(path)?;
    let mut reader = WavReader::new(BufReader::new(file)).map_err(|e| audio_err(path, e))?;
    let total = reader.duration() as usize;
    if offset + len > total {
        return Err(d2wgan_core::Error::OutOfRange {
            start: offset,
            end: offset + len,
            len: total,
        }
        .into());
    }
    reader.seek(offset as u32).map_err(|e| audio_err(path, e))?;
    let audio = decode(reader, path, Some(len))?;
    Ok(audio.to_mono()?.into_samples())
}

fn spec_for(w: &Waveform) -> Result<WavSpec> {
    let rate = w.sample_rate();
    if !rate.is_integer() {
        return Err(Error::Config(format!(
            "sample rate {rate} Hz is not an integer"
        )));
    }
    Ok(WavSpec {
        channels: 1,
        sample_rate: rate.rounded_hz(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    })
}

fn quantize(v: f64) -> i16 {
    (v.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

fn write_to<W: std::io::Write + Seek>(
    w: &Waveform,
    sink: W,
) -> std::result::Result<(), hound::Error> {
    let mut writer = WavWriter::new(sink, spec_for(w).map_err(|_| hound::Error::Unsupported)?)?;
    {
        let mut i16w = writer.get_i16_writer(w.len() as u32);
        for &v in w.samples() {
            i16w.write_sample(quantize(v));
        }
        i16w.flush()?;
    }
    writer.finalize()
}

/// Write mono 16-bit PCM, clamping to [-1, 1].
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let path = path.as_ref();
    spec_for(w)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).at(dir)?;
    }
    let file = std::io::BufWriter::new(File::create(path).at(path)?);
    write_to(w, file).map_err(|e| audio_err(path, e))
}

/// Mono 16-bit PCM WAV file image in memory.
pub fn wav_bytes(w: &Waveform) -> Result<Vec<u8>> {
    spec_for(w)?;
    let mut cur = Cursor::new(Vec::new());
    write_to(w, &mut cur).map_err(|e| Error::Other(e.to_string()))?;
    Ok(cur.into_inner())
}

/// Round-trip quantization used by the writer, for comparisons against
/// data read back from disk.
pub fn quantized(samples: &[f64]) -> Vec<f64> {
    samples
        .iter()
        .map(|&v| quantize(v) as f64 / 32768.0)
        .collect()
}
