//! Minimal complex FFT for real frames: iterative radix-2 for power-of-two
//! sizes, direct DFT otherwise.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Magnitudes |X[k]| for k in 0..=n/2 of a real input frame.
pub fn real_magnitudes(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    let bins = n / 2 + 1;
    if n.is_power_of_two() {
        let mut re = frame.to_vec();
        let mut im = vec![0.0; n];
        fft_in_place(&mut re, &mut im);
        (0..bins).map(|k| libm::hypot(re[k], im[k])).collect()
    } else {
        (0..bins)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, &x) in frame.iter().enumerate() {
                    let a = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    re += x * libm::cos(a);
                    im += x * libm::sin(a);
                }
                libm::hypot(re, im)
            })
            .collect()
    }
}

fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let half = len / 2;
        for k in 0..half {
            let (wr, wi) = (libm::cos(ang * k as f64), libm::sin(ang * k as f64));
            let mut start = 0;
            while start < n {
                let (a, b) = (start + k, start + k + half);
                let tr = re[b] * wr - im[b] * wi;
                let ti = re[b] * wi + im[b] * wr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                start += len;
            }
        }
        len <<= 1;
    }
}
