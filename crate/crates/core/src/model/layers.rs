//! Single-example feed-forward layers with explicit backward passes.
//!
//! Activations are flat `[channels][length]` row-major buffers. Parameters
//! of a [`Sequential`] live in one flat slice owned by the caller, so an
//! optimizer, weight clipping and checkpointing all work on plain `&[f64]`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

/// Strided 1-D convolution with zero padding.
///
/// `y[o][t] = b[o] + sum_{c,k} w[o][c][k] * x[c][t*stride + k - pad]`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub in_len: usize,
    pub out_len: usize,
}

impl Conv1d {
    /// "Same"-style padding: `out_len = ceil(in_len / stride)`.
    pub fn same(in_ch: usize, out_ch: usize, kernel: usize, stride: usize, in_len: usize) -> Self {
        let out_len = in_len.div_ceil(stride);
        let total_pad = ((out_len - 1) * stride + kernel).saturating_sub(in_len);
        Self {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad: total_pad / 2,
            in_len,
            out_len,
        }
    }

    fn weight_len(&self) -> usize {
        self.out_ch * self.in_ch * self.kernel
    }

    /// Kernel tap range valid for output position `t`, and the matching
    /// input start.
    #[inline]
    fn taps(&self, t: usize) -> (usize, usize, usize) {
        let start = (t * self.stride) as isize - self.pad as isize;
        let k0 = (-start).max(0) as usize;
        let k1 = ((self.in_len as isize - start).min(self.kernel as isize)).max(0) as usize;
        (k0, k1.max(k0), (start + k0 as isize) as usize)
    }

    /// Unfold the receptive field of every output position into a row of
    /// `in_ch * kernel` values (zero where the kernel hangs over the edge).
    fn patches(&self, x: &[f64]) -> Vec<f64> {
        let row = self.in_ch * self.kernel;
        let mut cols = vec![0.0; self.out_len * row];
        for t in 0..self.out_len {
            let (k0, k1, s) = self.taps(t);
            let r = &mut cols[t * row..(t + 1) * row];
            for c in 0..self.in_ch {
                let xc = &x[c * self.in_len..(c + 1) * self.in_len];
                r[c * self.kernel + k0..c * self.kernel + k1]
                    .copy_from_slice(&xc[s..s + (k1 - k0)]);
            }
        }
        cols
    }

    fn forward(&self, p: &[f64], x: &[f64], y: &mut [f64]) {
        let (w, b) = p.split_at(self.weight_len());
        let row = self.in_ch * self.kernel;
        let cols = self.patches(x);
        for (t, r) in cols.chunks_exact(row).enumerate() {
            for (o, wo) in w.chunks_exact(row).enumerate() {
                y[o * self.out_len + t] = b[o] + dot(wo, r);
            }
        }
    }

    fn backward(
        &self,
        p: &[f64],
        x: &[f64],
        gy: &[f64],
        gp: Option<&mut [f64]>,
        gx: Option<&mut [f64]>,
    ) {
        let w = &p[..self.weight_len()];
        let row = self.in_ch * self.kernel;
        if let Some(gp) = gp {
            let cols = self.patches(x);
            let (gw, gb) = gp.split_at_mut(self.weight_len());
            for o in 0..self.out_ch {
                gb[o] += gy[o * self.out_len..(o + 1) * self.out_len]
                    .iter()
                    .sum::<f64>();
            }
            for (t, r) in cols.chunks_exact(row).enumerate() {
                for (o, gwo) in gw.chunks_exact_mut(row).enumerate() {
                    let g = gy[o * self.out_len + t];
                    if g != 0.0 {
                        axpy(g, r, gwo);
                    }
                }
            }
        }
        if let Some(gx) = gx {
            let mut gcols = vec![0.0; self.out_len * row];
            for (t, gr) in gcols.chunks_exact_mut(row).enumerate() {
                for (o, wo) in w.chunks_exact(row).enumerate() {
                    let g = gy[o * self.out_len + t];
                    if g != 0.0 {
                        axpy(g, wo, gr);
                    }
                }
            }
            for t in 0..self.out_len {
                let (k0, k1, s) = self.taps(t);
                let r = &gcols[t * row..(t + 1) * row];
                for c in 0..self.in_ch {
                    let gxc = &mut gx[c * self.in_len..(c + 1) * self.in_len];
                    axpy(
                        1.0,
                        &r[c * self.kernel + k0..c * self.kernel + k1],
                        &mut gxc[s..s + (k1 - k0)],
                    );
                }
            }
        }
    }
}

/// Transposed convolution, the adjoint of [`Conv1d`] with the same
/// geometry: `out_len = in_len * stride`.
///
/// `y[o][t*stride + k - pad] += w[c][o][k] * x[c][t]`, plus bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvTranspose1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub in_len: usize,
    pub out_len: usize,
}

impl ConvTranspose1d {
    pub fn upsampling(
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        in_len: usize,
    ) -> Self {
        let out_len = in_len * stride;
        let total_pad = ((in_len - 1) * stride + kernel).saturating_sub(out_len);
        Self {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad: total_pad / 2,
            in_len,
            out_len,
        }
    }

    fn weight_len(&self) -> usize {
        self.in_ch * self.out_ch * self.kernel
    }

    #[inline]
    fn taps(&self, t: usize) -> (usize, usize, usize) {
        let start = (t * self.stride) as isize - self.pad as isize;
        let k0 = (-start).max(0) as usize;
        let k1 = ((self.out_len as isize - start).min(self.kernel as isize)).max(0) as usize;
        (k0, k1.max(k0), (start + k0 as isize) as usize)
    }

    fn forward(&self, p: &[f64], x: &[f64], y: &mut [f64]) {
        let (w, b) = p.split_at(self.weight_len());
        for o in 0..self.out_ch {
            y[o * self.out_len..(o + 1) * self.out_len].fill(b[o]);
        }
        for c in 0..self.in_ch {
            let xc = &x[c * self.in_len..(c + 1) * self.in_len];
            for o in 0..self.out_ch {
                let wk = &w[(c * self.out_ch + o) * self.kernel..][..self.kernel];
                let yo = &mut y[o * self.out_len..(o + 1) * self.out_len];
                for (t, &xv) in xc.iter().enumerate() {
                    if xv == 0.0 {
                        continue;
                    }
                    let (k0, k1, s) = self.taps(t);
                    axpy(xv, &wk[k0..k1], &mut yo[s..s + (k1 - k0)]);
                }
            }
        }
    }

    fn backward(
        &self,
        p: &[f64],
        x: &[f64],
        gy: &[f64],
        gp: Option<&mut [f64]>,
        gx: Option<&mut [f64]>,
    ) {
        let w = &p[..self.weight_len()];
        if let Some(gp) = gp {
            let (gw, gb) = gp.split_at_mut(self.weight_len());
            for o in 0..self.out_ch {
                gb[o] += gy[o * self.out_len..(o + 1) * self.out_len]
                    .iter()
                    .sum::<f64>();
            }
            for c in 0..self.in_ch {
                let xc = &x[c * self.in_len..(c + 1) * self.in_len];
                for o in 0..self.out_ch {
                    let gwk = &mut gw[(c * self.out_ch + o) * self.kernel..][..self.kernel];
                    let gyo = &gy[o * self.out_len..(o + 1) * self.out_len];
                    for (t, &xv) in xc.iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        let (k0, k1, s) = self.taps(t);
                        axpy(xv, &gyo[s..s + (k1 - k0)], &mut gwk[k0..k1]);
                    }
                }
            }
        }
        if let Some(gx) = gx {
            for c in 0..self.in_ch {
                let gxc = &mut gx[c * self.in_len..(c + 1) * self.in_len];
                for o in 0..self.out_ch {
                    let wk = &w[(c * self.out_ch + o) * self.kernel..][..self.kernel];
                    let gyo = &gy[o * self.out_len..(o + 1) * self.out_len];
                    for (t, g) in gxc.iter_mut().enumerate() {
                        let (k0, k1, s) = self.taps(t);
                        *g += dot(&wk[k0..k1], &gyo[s..s + (k1 - k0)]);
                    }
                }
            }
        }
    }
}

/// Fully connected layer, `y = W x + b` with `W` stored `[out][in]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    fn forward(&self, p: &[f64], x: &[f64], y: &mut [f64]) {
        let (w, b) = p.split_at(self.inputs * self.outputs);
        for (o, yv) in y.iter_mut().enumerate() {
            *yv = b[o] + dot(&w[o * self.inputs..(o + 1) * self.inputs], x);
        }
    }

    fn backward(
        &self,
        p: &[f64],
        x: &[f64],
        gy: &[f64],
        gp: Option<&mut [f64]>,
        gx: Option<&mut [f64]>,
    ) {
        let n = self.inputs * self.outputs;
        if let Some(gp) = gp {
            let (gw, gb) = gp.split_at_mut(n);
            for (o, &g) in gy.iter().enumerate() {
                gb[o] += g;
                if g != 0.0 {
                    axpy(g, x, &mut gw[o * self.inputs..(o + 1) * self.inputs]);
                }
            }
        }
        if let Some(gx) = gx {
            let w = &p[..n];
            for (o, &g) in gy.iter().enumerate() {
                if g != 0.0 {
                    axpy(g, &w[o * self.inputs..(o + 1) * self.inputs], gx);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layer {
    Conv(Conv1d),
    ConvTranspose(ConvTranspose1d),
    Dense(Dense),
    LeakyRelu { slope: f64, size: usize },
    Relu { size: usize },
    Tanh { size: usize },
}

impl Layer {
    pub fn input_size(&self) -> usize {
        match self {
            Layer::Conv(c) => c.in_ch * c.in_len,
            Layer::ConvTranspose(c) => c.in_ch * c.in_len,
            Layer::Dense(d) => d.inputs,
            Layer::LeakyRelu { size, .. } | Layer::Relu { size } | Layer::Tanh { size } => *size,
        }
    }

    pub fn output_size(&self) -> usize {
        match self {
            Layer::Conv(c) => c.out_ch * c.out_len,
            Layer::ConvTranspose(c) => c.out_ch * c.out_len,
            Layer::Dense(d) => d.outputs,
            Layer::LeakyRelu { size, .. } | Layer::Relu { size } | Layer::Tanh { size } => *size,
        }
    }

    /// (weight count, bias count).
    pub fn param_shape(&self) -> (usize, usize) {
        match self {
            Layer::Conv(c) => (c.weight_len(), c.out_ch),
            Layer::ConvTranspose(c) => (c.weight_len(), c.out_ch),
            Layer::Dense(d) => (d.inputs * d.outputs, d.outputs),
            _ => (0, 0),
        }
    }

    pub fn param_count(&self) -> usize {
        let (w, b) = self.param_shape();
        w + b
    }

    fn fan_in(&self) -> usize {
        match self {
            Layer::Conv(c) => c.in_ch * c.kernel,
            // each output sample sees about kernel/stride taps per channel
            Layer::ConvTranspose(c) => (c.in_ch * c.kernel / c.stride).max(1),
            Layer::Dense(d) => d.inputs,
            _ => 1,
        }
    }

    fn forward(&self, p: &[f64], x: &[f64], y: &mut [f64]) {
        match self {
            Layer::Conv(c) => c.forward(p, x, y),
            Layer::ConvTranspose(c) => c.forward(p, x, y),
            Layer::Dense(d) => d.forward(p, x, y),
            Layer::LeakyRelu { slope, .. } => {
                for (yv, &xv) in y.iter_mut().zip(x) {
                    *yv = if xv > 0.0 { xv } else { slope * xv };
                }
            }
            Layer::Relu { .. } => {
                for (yv, &xv) in y.iter_mut().zip(x) {
                    *yv = xv.max(0.0);
                }
            }
            Layer::Tanh { .. } => {
                for (yv, &xv) in y.iter_mut().zip(x) {
                    *yv = libm::tanh(xv);
                }
            }
        }
    }

    fn backward(
        &self,
        p: &[f64],
        x: &[f64],
        y: &[f64],
        gy: &[f64],
        gp: Option<&mut [f64]>,
        gx: Option<&mut [f64]>,
    ) {
        match self {
            Layer::Conv(c) => c.backward(p, x, gy, gp, gx),
            Layer::ConvTranspose(c) => c.backward(p, x, gy, gp, gx),
            Layer::Dense(d) => d.backward(p, x, gy, gp, gx),
            Layer::LeakyRelu { slope, .. } => {
                if let Some(gx) = gx {
                    for ((g, &xv), &gv) in gx.iter_mut().zip(x).zip(gy) {
                        *g += if xv > 0.0 { gv } else { slope * gv };
                    }
                }
            }
            Layer::Relu { .. } => {
                if let Some(gx) = gx {
                    for ((g, &xv), &gv) in gx.iter_mut().zip(x).zip(gy) {
                        if xv > 0.0 {
                            *g += gv;
                        }
                    }
                }
            }
            Layer::Tanh { .. } => {
                if let Some(gx) = gx {
                    for ((g, &yv), &gv) in gx.iter_mut().zip(y).zip(gy) {
                        *g += gv * (1.0 - yv * yv);
                    }
                }
            }
        }
    }
}

/// A chain of layers sharing one flat parameter slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequential {
    layers: Vec<Layer>,
    offsets: Vec<usize>,
    param_count: usize,
}

/// Activations recorded by [`Sequential::forward`]; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace holds the input at least")
    }

    pub fn input(&self) -> &[f64] {
        &self.acts[0]
    }
}

impl Sequential {
    /// Panics if consecutive layer sizes disagree; architectures are built
    /// from validated configs.
    pub fn new(layers: Vec<Layer>) -> Self {
        for pair in layers.windows(2) {
            assert_eq!(
                pair[0].output_size(),
                pair[1].input_size(),
                "layer sizes do not chain: {:?} -> {:?}",
                pair[0],
                pair[1]
            );
        }
        let mut offsets = Vec::with_capacity(layers.len());
        let mut total = 0;
        for l in &layers {
            offsets.push(total);
            total += l.param_count();
        }
        Self {
            layers,
            offsets,
            param_count: total,
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn input_size(&self) -> usize {
        self.layers.first().map_or(0, Layer::input_size)
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map_or(0, Layer::output_size)
    }

    fn layer_params<'p>(&self, i: usize, params: &'p [f64]) -> &'p [f64] {
        &params[self.offsets[i]..self.offsets[i] + self.layers[i].param_count()]
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.param_count);
        for l in &self.layers {
            let bound = 1.0 / libm::sqrt(l.fan_in() as f64);
            for _ in 0..l.param_count() {
                params.push(rng.random_range(-bound..bound));
            }
        }
        params
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> Trace {
        debug_assert_eq!(params.len(), self.param_count);
        debug_assert_eq!(input.len(), self.input_size());
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        for (i, l) in self.layers.iter().enumerate() {
            let mut y = vec![0.0; l.output_size()];
            l.forward(self.layer_params(i, params), &acts[i], &mut y);
            acts.push(y);
        }
        Trace { acts }
    }

    /// Output only, without keeping intermediate activations.
    pub fn infer(&self, params: &[f64], input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        for (i, l) in self.layers.iter().enumerate() {
            let mut y = vec![0.0; l.output_size()];
            l.forward(self.layer_params(i, params), &x, &mut y);
            x = y;
        }
        x
    }

    /// Backpropagate `grad_out`. Parameter gradients are accumulated into
    /// `grad_params` when given; the input gradient is returned when
    /// `want_input_grad` is set.
    pub fn backward(
        &self,
        params: &[f64],
        trace: &Trace,
        grad_out: &[f64],
        mut grad_params: Option<&mut [f64]>,
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let mut gy = grad_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            let need_gx = i > 0 || want_input_grad;
            let mut gx = if need_gx {
                vec![0.0; l.input_size()]
            } else {
                Vec::new()
            };
            let gp = grad_params
                .as_deref_mut()
                .map(|g| &mut g[self.offsets[i]..self.offsets[i] + l.param_count()]);
            l.backward(
                self.layer_params(i, params),
                &trace.acts[i],
                &trace.acts[i + 1],
                &gy,
                gp,
                need_gx.then_some(&mut gx[..]),
            );
            if !need_gx {
                return None;
            }
            gy = gx;
        }
        Some(gy)
    }

    /// `(name, offset, len)` for every weight and bias tensor.
    pub fn tensor_names(&self, prefix: &str) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            let (w, b) = l.param_shape();
            if w + b == 0 {
                continue;
            }
            out.push((format!("{prefix}l{i}.weight"), self.offsets[i], w));
            out.push((format!("{prefix}l{i}.bias"), self.offsets[i] + w, b));
        }
        out
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for j in 0..8 {
            acc[j] += x[j] * y[j];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_loss(net: &Sequential, params: &[f64], x: &[f64], weights: &[f64]) -> f64 {
        dot(&net.infer(params, x), weights)
    }

    /// Central differences on every parameter and input of a small network.
    fn check_gradients(net: &Sequential, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = net.init_params(&mut rng);
        let x: Vec<f64> = (0..net.input_size())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let w: Vec<f64> = (0..net.output_size())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let trace = net.forward(&params, &x);
        let mut gp = vec![0.0; net.param_count()];
        let gx = net
            .backward(&params, &trace, &w, Some(&mut gp), true)
            .unwrap();
        let h = 1e-6;
        for i in 0..params.len() {
            let mut p1 = params.clone();
            p1[i] += h;
            let mut p2 = params.clone();
            p2[i] -= h;
            let fd = (scalar_loss(net, &p1, &x, &w) - scalar_loss(net, &p2, &x, &w)) / (2.0 * h);
            assert!(
                (fd - gp[i]).abs() < 1e-6 * (1.0 + fd.abs()),
                "param {i}: fd {fd} vs {}",
                gp[i]
            );
        }
        for i in 0..x.len() {
            let mut x1 = x.clone();
            x1[i] += h;
            let mut x2 = x.clone();
            x2[i] -= h;
            let fd = (scalar_loss(net, &params, &x1, &w) - scalar_loss(net, &params, &x2, &w))
                / (2.0 * h);
            assert!(
                (fd - gx[i]).abs() < 1e-6 * (1.0 + fd.abs()),
                "input {i}: fd {fd} vs {}",
                gx[i]
            );
        }
    }

    #[test]
    fn conv_geometry() {
        let c = Conv1d::same(1, 8, 25, 4, 8192);
        assert_eq!(c.out_len, 2048);
        assert_eq!(c.pad, 10);
        let t = ConvTranspose1d::upsampling(8, 1, 25, 4, 1024);
        assert_eq!(t.out_len, 4096);
        assert_eq!(t.pad, 10);
    }

    #[test]
    fn conv_matches_direct_formula() {
        let c = Conv1d::same(2, 3, 5, 2, 9);
        let net = Sequential::new(vec![Layer::Conv(c)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = net.init_params(&mut rng);
        let x: Vec<f64> = (0..18).map(|i| (i as f64 * 0.3).sin()).collect();
        let y = net.infer(&p, &x);
        let (w, b) = p.split_at(30);
        for o in 0..3 {
            for t in 0..c.out_len {
                let mut acc = b[o];
                for ch in 0..2 {
                    for k in 0..5 {
                        let idx = (t * 2 + k) as isize - c.pad as isize;
                        if (0..9).contains(&idx) {
                            acc += w[(o * 2 + ch) * 5 + k] * x[ch * 9 + idx as usize];
                        }
                    }
                }
                assert!((acc - y[o * c.out_len + t]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transposed_conv_is_adjoint_of_conv() {
        // <conv(x), y> == <x, convT(y)> with shared weights and zero bias
        let c = Conv1d::same(2, 3, 7, 4, 16);
        let t = ConvTranspose1d::upsampling(3, 2, 7, 4, 4);
        assert_eq!((t.out_len, t.pad), (c.in_len, c.pad));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w: Vec<f64> = (0..42).map(|_| rng.random_range(-1.0..1.0)).collect();
        // conv weight [o][c][k] == transposed weight [c'=o][o'=c][k]
        let mut pc = w.clone();
        pc.extend([0.0; 3]);
        let mut pt = w;
        pt.extend([0.0; 2]);
        let x: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let conv = Sequential::new(vec![Layer::Conv(c)]);
        let convt = Sequential::new(vec![Layer::ConvTranspose(t)]);
        let lhs = dot(&conv.infer(&pc, &x), &y);
        let rhs = dot(&x, &convt.infer(&pt, &y));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let conv = Conv1d::same(1, 3, 5, 2, 12);
        let conv2 = Conv1d::same(3, 2, 3, 3, 6);
        let net = Sequential::new(vec![
            Layer::Conv(conv),
            Layer::LeakyRelu {
                slope: 0.2,
                size: 18,
            },
            Layer::Conv(conv2),
            Layer::Tanh { size: 4 },
            Layer::Dense(Dense {
                inputs: 4,
                outputs: 2,
            }),
        ]);
        check_gradients(&net, 3);

        let up = ConvTranspose1d::upsampling(2, 3, 5, 2, 4);
        let up2 = ConvTranspose1d::upsampling(3, 1, 7, 3, 8);
        let net = Sequential::new(vec![
            Layer::Dense(Dense {
                inputs: 3,
                outputs: 8,
            }),
            Layer::Relu { size: 8 },
            Layer::ConvTranspose(up),
            Layer::Relu { size: 24 },
            Layer::ConvTranspose(up2),
            Layer::Tanh { size: 24 },
        ]);
        check_gradients(&net, 4);
    }

    #[test]
    fn tensor_names_cover_params() {
        let net = Sequential::new(vec![
            Layer::Dense(Dense {
                inputs: 3,
                outputs: 2,
            }),
            Layer::Relu { size: 2 },
            Layer::Dense(Dense {
                inputs: 2,
                outputs: 1,
            }),
        ]);
        let names = net.tensor_names("d.");
        assert_eq!(names.len(), 4);
        assert_eq!(names[2].0, "d.l2.weight");
        assert_eq!(names.iter().map(|n| n.2).sum::<usize>(), net.param_count());
    }
}
