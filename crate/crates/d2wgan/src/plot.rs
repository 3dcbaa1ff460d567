//! Spectrogram comparison images (real above reconstruction) as PNG.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use d2wgan_core::dsp::{stft_with, SampleRate, Spectrogram, StftParams};

use crate::error::{Error, IoContext, Result};

/// RGB8 raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            rgb: vec![0; width * height * 3],
        }
    }

    pub fn put(&mut self, x: usize, y: usize, c: [u8; 3]) {
        if x < self.width && y < self.height {
            let i = (y * self.width + x) * 3;
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).at(dir)?;
        }
        let w = BufWriter::new(File::create(path).at(path)?);
        let mut enc = png::Encoder::new(w, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let png_err = |e: png::EncodingError| Error::Other(format!("{}: {e}", path.display()));
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(&self.rgb).map_err(png_err)?;
        writer.finish().map_err(png_err)
    }
}

/// Dark blue through green to yellow, `t` in [0, 1].
fn colormap(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] = [
        [0.02, 0.02, 0.20],
        [0.23, 0.18, 0.55],
        [0.13, 0.56, 0.55],
        [0.47, 0.82, 0.32],
        [0.99, 0.91, 0.14],
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let mut out = [0u8; 3];
    for (k, o) in out.iter_mut().enumerate() {
        *o = ((STOPS[i][k] * (1.0 - f) + STOPS[i + 1][k] * f) * 255.0).round() as u8;
    }
    out
}

const MARKER: [u8; 3] = [255, 255, 255];
const SEPARATOR: [u8; 3] = [0, 0, 0];

fn draw(img: &mut Image, spec: &Spectrogram, top: usize, lo_db: f64, hi_db: f64) {
    let bins = spec.bins();
    for f in 0..spec.frames() {
        for b in 0..bins {
            let t = (spec.get(f, b) - lo_db) / (hi_db - lo_db);
            // low frequencies at the bottom
            img.put(f, top + bins - 1 - b, colormap(t));
        }
    }
}

/// Stack the spectrograms of `real` and `recon`, with vertical marker lines
/// at the frames where the gap `[gap.start, gap.end)` begins and ends. The
/// colour scale spans the top 80 dB of the real signal.
pub fn comparison_image(
    real: &[f64],
    recon: &[f64],
    rate: SampleRate,
    gap: std::ops::Range<usize>,
    params: StftParams,
) -> Result<Image> {
    let a = stft_with(real, rate, params)?;
    let b = stft_with(recon, rate, params)?;
    let hi = a
        .as_slice()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = hi - 80.0;
    let bins = a.bins();
    let width = a.frames().max(b.frames());
    let mut img = Image::new(width, 2 * bins + 1);
    draw(&mut img, &a, 0, lo, hi);
    draw(&mut img, &b, bins + 1, lo, hi);
    for x in 0..width {
        img.put(x, bins, SEPARATOR);
    }
    let frame_of = |s: usize| s.saturating_sub(params.frame_len / 2) / params.hop_len;
    for x in [frame_of(gap.start), frame_of(gap.end)] {
        for y in 0..img.height {
            if y != bins {
                img.put(x.min(width - 1), y, MARKER);
            }
        }
    }
    Ok(img)
}
