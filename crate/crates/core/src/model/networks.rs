use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::checkpoint::Checkpoint;
use super::config::{Architecture, CriticConfig, GeneratorConfig, ModelConfig};
use super::layers::{Conv1d, ConvTranspose1d, Dense, Layer, Sequential, Trace};
use crate::dataset::{concat, Segment, SegmentLayout};
use crate::dsp::decimate;
use crate::error::{Error, Result};

/// Border inputs of one generator call.
#[derive(Debug, Clone, Copy)]
pub struct Borders<'a> {
    pub short: (&'a [f64], &'a [f64]),
    /// Decimated long borders; absent for the single-critic model.
    pub long_ds: Option<(&'a [f64], &'a [f64])>,
}

impl<'a> Borders<'a> {
    fn inputs(&self) -> Vec<&'a [f64]> {
        let mut v = vec![self.short.0, self.short.1];
        if let Some((l, r)) = self.long_ds {
            v.extend([l, r]);
        }
        v
    }
}

/// Owned border inputs cut from a segment.
#[derive(Debug, Clone)]
pub struct Conditioning {
    short: (Vec<f64>, Vec<f64>),
    long_ds: Option<(Vec<f64>, Vec<f64>)>,
}

impl Conditioning {
    pub fn from_segment(seg: &Segment, arch: Architecture) -> Self {
        let (l, r) = seg.borders1();
        Self {
            short: (l.to_vec(), r.to_vec()),
            long_ds: (arch == Architecture::D2Wgan).then(|| seg.borders2_ds()),
        }
    }

    pub fn borders(&self) -> Borders<'_> {
        Borders {
            short: (&self.short.0, &self.short.1),
            long_ds: self.long_ds.as_ref().map(|(l, r)| (&l[..], &r[..])),
        }
    }
}

/// Gap generator: one conv encoder per border input, a dense bottleneck
/// that mixes all embeddings with the latent vector, and a transposed-conv
/// decoder ending in `tanh`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    shape: GeneratorConfig,
    encoders: Vec<Sequential>,
    decoder: Sequential,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

/// Activations of one generator call, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct GeneratorTrace {
    encoders: Vec<Trace>,
    decoder: Trace,
}

impl GeneratorTrace {
    pub fn output(&self) -> &[f64] {
        self.decoder.output()
    }
}

fn encoder_net(cfg: &ModelConfig, len: usize) -> Sequential {
    let st = &cfg.encoder;
    let mut layers = Vec::new();
    let (mut ch, mut n) = (1, len);
    for &c in &st.channels {
        let conv = Conv1d::same(ch, c, st.kernel, st.stride, n);
        layers.push(Layer::Conv(conv));
        layers.push(Layer::Relu {
            size: c * conv.out_len,
        });
        ch = c;
        n = conv.out_len;
    }
    layers.push(Layer::Dense(Dense {
        inputs: ch * n,
        outputs: cfg.embed_dim,
    }));
    layers.push(Layer::Relu {
        size: cfg.embed_dim,
    });
    Sequential::new(layers)
}

fn decoder_net(cfg: &ModelConfig, shape: &GeneratorConfig, n_borders: usize) -> Sequential {
    let st = &cfg.decoder;
    let c0 = st.channels[0];
    let mut layers = vec![
        Layer::Dense(Dense {
            inputs: n_borders * cfg.embed_dim + shape.latent.dim,
            outputs: c0 * shape.bottleneck_len,
        }),
        Layer::Relu {
            size: c0 * shape.bottleneck_len,
        },
    ];
    let mut n = shape.bottleneck_len;
    for (i, &c_in) in st.channels.iter().enumerate() {
        let c_out = st.channels.get(i + 1).copied().unwrap_or(1);
        let up = ConvTranspose1d::upsampling(c_in, c_out, st.kernel, st.stride, n);
        layers.push(Layer::ConvTranspose(up));
        n = up.out_len;
        if i + 1 < st.channels.len() {
            layers.push(Layer::Relu { size: c_out * n });
        } else {
            layers.push(Layer::Tanh { size: n });
        }
    }
    Sequential::new(layers)
}

fn shape_error(what: &'static str, expected: usize, actual: usize) -> Error {
    Error::ShapeMismatch {
        what,
        expected: vec![expected],
        actual: vec![actual],
    }
}

impl Generator {
    pub fn new<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let shape = cfg.generator_config();
        let encoders: Vec<Sequential> = shape
            .border_lens
            .iter()
            .map(|&l| encoder_net(cfg, l))
            .collect();
        let decoder = decoder_net(cfg, &shape, encoders.len());
        let mut offsets = Vec::new();
        let mut params = Vec::new();
        for net in encoders.iter().chain(core::iter::once(&decoder)) {
            offsets.push(params.len());
            params.extend(net.init_params(rng));
        }
        Ok(Self {
            shape,
            encoders,
            decoder,
            offsets,
            params,
        })
    }

    pub fn shape(&self) -> &GeneratorConfig {
        &self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn net_params(&self, i: usize) -> &[f64] {
        let net = self.encoders.get(i).unwrap_or(&self.decoder);
        &self.params[self.offsets[i]..self.offsets[i] + net.param_count()]
    }

    fn check_inputs<'b>(&self, borders: &Borders<'b>, z: &[f64]) -> Result<Vec<&'b [f64]>> {
        let inputs = borders.inputs();
        if inputs.len() != self.encoders.len() {
            return Err(Error::ShapeMismatch {
                what: "generator border inputs",
                expected: self.shape.border_lens.clone(),
                actual: inputs.iter().map(|x| x.len()).collect(),
            });
        }
        for (x, &len) in inputs.iter().zip(&self.shape.border_lens) {
            if x.len() != len {
                return Err(Error::ShapeMismatch {
                    what: "generator border inputs",
                    expected: self.shape.border_lens.clone(),
                    actual: inputs.iter().map(|x| x.len()).collect(),
                });
            }
        }
        if z.len() != self.shape.latent.dim {
            return Err(shape_error("latent vector", self.shape.latent.dim, z.len()));
        }
        Ok(inputs)
    }

    pub fn forward_trace(&self, borders: &Borders<'_>, z: &[f64]) -> Result<GeneratorTrace> {
        let inputs = self.check_inputs(borders, z)?;
        let encoders: Vec<Trace> = inputs
            .iter()
            .enumerate()
            .map(|(i, x)| self.encoders[i].forward(self.net_params(i), x))
            .collect();
        let mut bottleneck = Vec::with_capacity(self.decoder.input_size());
        for t in &encoders {
            bottleneck.extend_from_slice(t.output());
        }
        bottleneck.extend_from_slice(z);
        let decoder = self
            .decoder
            .forward(self.net_params(self.encoders.len()), &bottleneck);
        Ok(GeneratorTrace { encoders, decoder })
    }

    /// Generated gap of exactly `Lg` samples in [-1, 1].
    pub fn forward(&self, borders: &Borders<'_>, z: &[f64]) -> Result<Vec<f64>> {
        let inputs = self.check_inputs(borders, z)?;
        let mut bottleneck = Vec::with_capacity(self.decoder.input_size());
        for (i, x) in inputs.iter().enumerate() {
            bottleneck.extend(self.encoders[i].infer(self.net_params(i), x));
        }
        bottleneck.extend_from_slice(z);
        Ok(self
            .decoder
            .infer(self.net_params(self.encoders.len()), &bottleneck))
    }

    /// Accumulate parameter gradients for `d loss / d gap = grad_gap`.
    /// Returns the gradient with respect to the latent vector.
    pub fn backward(
        &self,
        trace: &GeneratorTrace,
        grad_gap: &[f64],
        grad_params: &mut [f64],
    ) -> Vec<f64> {
        let dec = self.encoders.len();
        let (enc_grads, dec_grads) = grad_params.split_at_mut(self.offsets[dec]);
        let g_bottleneck = self
            .decoder
            .backward(
                self.net_params(dec),
                &trace.decoder,
                grad_gap,
                Some(dec_grads),
                true,
            )
            .expect("input gradient requested");
        let embed = self.encoders.first().map_or(0, Sequential::output_size);
        for (i, enc) in self.encoders.iter().enumerate() {
            let lo = self.offsets[i];
            let g = &mut enc_grads[lo..lo + enc.param_count()];
            enc.backward(
                self.net_params(i),
                &trace.encoders[i],
                &g_bottleneck[i * embed..(i + 1) * embed],
                Some(g),
                false,
            );
        }
        g_bottleneck[dec * embed..].to_vec()
    }

    /// `(name, offset, len)` of every parameter tensor.
    pub fn tensor_layout(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        for (i, enc) in self.encoders.iter().enumerate() {
            for (name, off, len) in enc.tensor_names(&alloc::format!("gen.enc{i}.")) {
                out.push((name, off + self.offsets[i], len));
            }
        }
        let d = self.encoders.len();
        for (name, off, len) in self.decoder.tensor_names("gen.dec.") {
            out.push((name, off + self.offsets[d], len));
        }
        out
    }
}

/// Scalar critic: strided convs with leaky rectifiers and a dense head,
/// no output squashing.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    cfg: CriticConfig,
    net: Sequential,
    params: Vec<f64>,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(cfg: CriticConfig, rng: &mut R) -> Self {
        let st = &cfg.conv_stack;
        let mut layers = Vec::new();
        let (mut ch, mut n) = (1, cfg.input_len);
        for &c in &st.channels {
            let conv = Conv1d::same(ch, c, st.kernel, st.stride, n);
            layers.push(Layer::Conv(conv));
            layers.push(Layer::LeakyRelu {
                slope: cfg.leaky_slope,
                size: c * conv.out_len,
            });
            ch = c;
            n = conv.out_len;
        }
        layers.push(Layer::Dense(Dense {
            inputs: ch * n,
            outputs: 1,
        }));
        let net = Sequential::new(layers);
        let params = net.init_params(rng);
        Self { cfg, net, params }
    }

    pub fn config(&self) -> &CriticConfig {
        &self.cfg
    }

    pub fn input_len(&self) -> usize {
        self.cfg.input_len
    }

    pub fn net(&self) -> &Sequential {
        &self.net
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.cfg.input_len {
            return Err(shape_error("critic input", self.cfg.input_len, x.len()));
        }
        Ok(())
    }

    pub fn forward(&self, assembly: &[f64]) -> Result<f64> {
        self.check(assembly)?;
        Ok(self.net.infer(&self.params, assembly)[0])
    }

    pub fn forward_batch(&self, assemblies: &[Vec<f64>]) -> Result<Vec<f64>> {
        assemblies.iter().map(|a| self.forward(a)).collect()
    }

    pub fn forward_trace(&self, assembly: &[f64]) -> Result<Trace> {
        self.check(assembly)?;
        Ok(self.net.forward(&self.params, assembly))
    }

    /// Backpropagate `d loss / d score = grad_score`.
    pub fn backward(
        &self,
        trace: &Trace,
        grad_score: f64,
        grad_params: Option<&mut [f64]>,
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        self.net.backward(
            &self.params,
            trace,
            &[grad_score],
            grad_params,
            want_input_grad,
        )
    }

    pub fn tensor_layout(&self, index: usize) -> Vec<(String, usize, usize)> {
        self.net.tensor_names(&alloc::format!("critic{index}."))
    }
}

/// Draw one standard-normal latent vector.
pub fn sample_latent<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Critic inputs for one segment with a given gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Assemblies {
    /// `borders1.left ++ gap ++ borders1.right`.
    pub short: Vec<f64>,
    /// Decimated `borders2.left ++ gap ++ borders2.right`.
    pub long_ds: Vec<f64>,
}

/// Splice `gap` between the segment's borders for both critics.
pub fn assemble_fake(segment: &Segment, gap: &[f64]) -> Result<Assemblies> {
    let layout = segment.layout();
    if gap.len() != layout.gap_len() {
        return Err(Error::LengthMismatch {
            what: "generated gap",
            expected: layout.gap_len(),
            actual: gap.len(),
        });
    }
    let (l1, r1) = segment.borders1();
    let (l2, r2) = segment.borders2();
    Ok(Assemblies {
        short: concat(l1, gap, r1),
        long_ds: decimate(&concat(l2, gap, r2), layout.long_branch_downsample()),
    })
}

pub fn assemble_real(segment: &Segment) -> Assemblies {
    assemble_fake(segment, segment.gap()).expect("segment gap has layout length")
}

/// Fold gradients on both assemblies back onto the gap samples.
pub fn gap_gradient(
    layout: &SegmentLayout,
    g_short: &[f64],
    g_long_ds: Option<&[f64]>,
) -> Vec<f64> {
    let b1 = layout.border1_len();
    let mut g = g_short[b1..b1 + layout.gap_len()].to_vec();
    if let Some(gl) = g_long_ds {
        let (b2, ds) = (layout.border2_len(), layout.long_branch_downsample());
        for (p, gv) in g.iter_mut().enumerate() {
            let idx = b2 + p;
            if idx % ds == 0 {
                *gv += gl[idx / ds];
            }
        }
    }
    g
}

/// Generator plus its critic(s).
#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub config: ModelConfig,
    pub generator: Generator,
    pub critics: Vec<Critic>,
}

impl GanModel {
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        let generator = Generator::new(&config, rng)?;
        let critics = config
            .critic_configs()
            .into_iter()
            .map(|c| Critic::new(c, rng))
            .collect();
        Ok(Self {
            config,
            generator,
            critics,
        })
    }

    pub fn arch(&self) -> Architecture {
        self.config.arch
    }

    /// Build a model from a checkpoint's config and parameter tensors.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.check_config(&ckpt.config)?;
        let mut model = Self::new(ckpt.config.clone(), &mut crate::rng::stream(0, &[]))?;
        model.load_tensors(ckpt)?;
        Ok(model)
    }

    /// Copy every parameter tensor from `ckpt` into this model.
    pub fn load_tensors(&mut self, ckpt: &Checkpoint) -> Result<()> {
        ckpt.check_config(&self.config)?;
        let fill = |dst: &mut [f64], layout: Vec<(String, usize, usize)>| -> Result<()> {
            for (name, off, len) in layout {
                let src = ckpt.tensor(&name)?;
                if src.len() != len {
                    return Err(Error::LengthMismatch {
                        what: "checkpoint tensor",
                        expected: len,
                        actual: src.len(),
                    });
                }
                dst[off..off + len].copy_from_slice(src);
            }
            Ok(())
        };
        let gl = self.generator.tensor_layout();
        fill(self.generator.params_mut(), gl)?;
        for (i, c) in self.critics.iter_mut().enumerate() {
            let cl = c.tensor_layout(i);
            fill(c.params_mut(), cl)?;
        }
        Ok(())
    }

    /// Append every parameter tensor to `ckpt` under its layer name.
    pub fn store_tensors(&self, ckpt: &mut Checkpoint) {
        for (name, off, len) in self.generator.tensor_layout() {
            ckpt.push(name, self.generator.params()[off..off + len].to_vec());
        }
        for (i, c) in self.critics.iter().enumerate() {
            for (name, off, len) in c.tensor_layout(i) {
                ckpt.push(name, c.params()[off..off + len].to_vec());
            }
        }
    }

    /// Generate a gap for `segment` from latent `z`.
    pub fn inpaint_gap(&self, segment: &Segment, z: &[f64]) -> Result<Vec<f64>> {
        let cond = Conditioning::from_segment(segment, self.config.arch);
        self.generator.forward(&cond.borders(), z)
    }
}
