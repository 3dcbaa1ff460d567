use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use crate::dataset::SegmentLayout;
use crate::error::{invalid, Result};
use crate::kv::{join_list, KvMap};

/// Which model family to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// One critic on the short assembly; generator sees short borders only.
    Wgan,
    /// Two identical critics, on the short assembly and on the decimated
    /// long assembly; generator sees both border pairs.
    D2Wgan,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Self::Wgan => "wgan",
            Self::D2Wgan => "d2wgan",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wgan" => Some(Self::Wgan),
            "d2wgan" => Some(Self::D2Wgan),
            _ => None,
        }
    }

    pub fn critic_count(self) -> usize {
        match self {
            Self::Wgan => 1,
            Self::D2Wgan => 2,
        }
    }

    pub fn border_inputs(self) -> usize {
        2 * self.critic_count()
    }
}

/// Stack of strided 1-D convolutions sharing kernel size and stride.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConvStack {
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
}

impl ConvStack {
    pub fn new(channels: Vec<usize>, kernel: usize, stride: usize) -> Self {
        Self {
            channels,
            kernel,
            stride,
        }
    }

    fn validate(&self, what: &'static str) -> Result<()> {
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(invalid(
                what,
                "needs at least one layer and positive channel counts",
            ));
        }
        if self.kernel == 0 || self.stride == 0 {
            return Err(invalid(what, "kernel and stride must be positive"));
        }
        Ok(())
    }

    /// Spatial length after the whole stack with "same" padding.
    pub fn output_len(&self, mut len: usize) -> usize {
        for _ in &self.channels {
            len = len.div_ceil(self.stride);
        }
        len
    }
}

/// Standard-normal latent vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatentSpec {
    pub dim: usize,
}

impl Default for LatentSpec {
    fn default() -> Self {
        Self { dim: 100 }
    }
}

/// Full architecture description; everything that shapes parameter
/// tensors goes into the config hash.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub arch: Architecture,
    pub layout: SegmentLayout,
    pub latent: LatentSpec,
    /// Conv stack applied to every border input.
    pub encoder: ConvStack,
    /// Width of the dense embedding each border encoder ends in.
    pub embed_dim: usize,
    /// Transposed-conv stack; `channels[0]` is the bottleneck width and
    /// each entry adds one upsampling layer, the last one producing audio.
    pub decoder: ConvStack,
    pub critic: ConvStack,
    pub leaky_slope: f64,
}

/// Generator shape derived from a [`ModelConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub border_lens: Vec<usize>,
    pub latent: LatentSpec,
    pub bottleneck_len: usize,
    pub output_len: usize,
}

/// Critic shape: identical stacks that differ only in input length.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticConfig {
    pub input_len: usize,
    pub conv_stack: ConvStack,
    pub leaky_slope: f64,
}

impl ModelConfig {
    /// WaveGAN-sized networks: encoders 32→64→128→256, decoder
    /// 256→128→64→32→1, critics 32→…→512, kernel 25, stride 4.
    pub fn standard(arch: Architecture, layout: SegmentLayout) -> Self {
        Self {
            arch,
            layout,
            latent: LatentSpec::default(),
            encoder: ConvStack::new(vec![32, 64, 128, 256], 25, 4),
            embed_dim: 128,
            decoder: ConvStack::new(vec![256, 128, 64, 32], 25, 4),
            critic: ConvStack::new(vec![32, 64, 128, 256, 512], 25, 4),
            leaky_slope: 0.2,
        }
    }

    /// Two 8-channel layers everywhere; for tests and desk-scale runs.
    pub fn tiny(arch: Architecture, layout: SegmentLayout) -> Self {
        Self {
            arch,
            layout,
            latent: LatentSpec { dim: 16 },
            encoder: ConvStack::new(vec![8, 8], 25, 4),
            embed_dim: 16,
            decoder: ConvStack::new(vec![8, 8], 25, 4),
            critic: ConvStack::new(vec![8, 8], 25, 4),
            leaky_slope: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate("encoder")?;
        self.decoder.validate("decoder")?;
        self.critic.validate("critic")?;
        if self.latent.dim == 0 {
            return Err(invalid("latent_dim", "must be at least 1"));
        }
        if self.embed_dim == 0 {
            return Err(invalid("embed_dim", "must be at least 1"));
        }
        let up = self
            .decoder
            .stride
            .checked_pow(self.decoder.channels.len() as u32)
            .unwrap_or(usize::MAX);
        if self.layout.gap_len() % up != 0 {
            return Err(invalid(
                "decoder",
                alloc::format!(
                    "gap length {} is not divisible by total upsampling {up}",
                    self.layout.gap_len()
                ),
            ));
        }
        if !(0.0..1.0).contains(&self.leaky_slope) {
            return Err(invalid("leaky_slope", "must be in [0, 1)"));
        }
        Ok(())
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        let l = &self.layout;
        let mut border_lens = vec![l.border1_len(), l.border1_len()];
        if self.arch == Architecture::D2Wgan {
            border_lens.extend([l.border2_ds_len(), l.border2_ds_len()]);
        }
        let up = self.decoder.stride.pow(self.decoder.channels.len() as u32);
        GeneratorConfig {
            border_lens,
            latent: self.latent,
            bottleneck_len: l.gap_len() / up,
            output_len: l.gap_len(),
        }
    }

    pub fn critic_configs(&self) -> Vec<CriticConfig> {
        let mut lens = vec![self.layout.short_assembly_len()];
        if self.arch == Architecture::D2Wgan {
            lens.push(self.layout.long_assembly_len());
        }
        lens.into_iter()
            .map(|input_len| CriticConfig {
                input_len,
                conv_stack: self.critic.clone(),
                leaky_slope: self.leaky_slope,
            })
            .collect()
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("model.arch", self.arch.name());
        self.layout.write_kv(&mut kv);
        kv.set("model.latent_dim", self.latent.dim);
        for (prefix, stack) in [
            ("model.encoder", &self.encoder),
            ("model.decoder", &self.decoder),
            ("model.critic", &self.critic),
        ] {
            kv.set(
                &alloc::format!("{prefix}.channels"),
                join_list(&stack.channels),
            );
            kv.set(&alloc::format!("{prefix}.kernel"), stack.kernel);
            kv.set(&alloc::format!("{prefix}.stride"), stack.stride);
        }
        kv.set("model.embed_dim", self.embed_dim);
        kv.set("model.leaky_slope", self.leaky_slope);
        kv
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let arch_name: String = kv.require("model.arch")?;
        let arch = Architecture::parse(&arch_name).ok_or_else(|| {
            invalid(
                "model.arch",
                alloc::format!("unknown architecture `{arch_name}`"),
            )
        })?;
        let stack = |c, k, s| -> Result<ConvStack> {
            Ok(ConvStack::new(
                kv.require_list(c)?,
                kv.require(k)?,
                kv.require(s)?,
            ))
        };
        let cfg = Self {
            arch,
            layout: SegmentLayout::from_kv(kv)?,
            latent: LatentSpec {
                dim: kv.require("model.latent_dim")?,
            },
            encoder: stack(
                "model.encoder.channels",
                "model.encoder.kernel",
                "model.encoder.stride",
            )?,
            embed_dim: kv.require("model.embed_dim")?,
            decoder: stack(
                "model.decoder.channels",
                "model.decoder.kernel",
                "model.decoder.stride",
            )?,
            critic: stack(
                "model.critic.channels",
                "model.critic.kernel",
                "model.critic.stride",
            )?,
            leaky_slope: kv.require("model.leaky_slope")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical key=value text, hex encoded.
    pub fn config_hash(&self) -> String {
        let text = alloc::format!("{}", self.to_kv());
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| alloc::format!("{b:02x}")).collect()
    }
}
