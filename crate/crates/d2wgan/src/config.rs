//! Training configuration files. Values resolve as command line, then
//! TOML file, then built-in defaults.

use std::path::Path;

use d2wgan_core::dataset::SegmentLayout;
use d2wgan_core::model::{Architecture, ModelConfig};
use d2wgan_core::training::{Lipschitz, LossWeights, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Tiny,
    Standard,
}

/// Every setting optional, so one struct serves both the file layer and
/// the command-line layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialSettings {
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: PartialModel,
    #[serde(default)]
    pub layout: PartialLayout,
    #[serde(default)]
    pub train: PartialTrain,
    #[serde(default)]
    pub data: PartialData,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialModel {
    pub arch: Option<String>,
    pub preset: Option<Preset>,
    pub latent_dim: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialLayout {
    pub gap_len: Option<usize>,
    pub context_len: Option<usize>,
    pub border1_len: Option<usize>,
    pub border2_len: Option<usize>,
    pub long_downsample: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialTrain {
    pub learning_rate: Option<f64>,
    pub adam_beta1: Option<f64>,
    pub adam_beta2: Option<f64>,
    pub batch_size: Option<usize>,
    pub critic_steps: Option<usize>,
    pub clip_value: Option<f64>,
    pub gp_lambda: Option<f64>,
    pub weight_d1: Option<f64>,
    pub weight_d2: Option<f64>,
    pub monitor_every: Option<u64>,
    pub checkpoint_every: Option<u64>,
    pub total_steps: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialData {
    /// Number of batches the prefetch thread may queue; 0 disables it.
    pub prefetch: Option<usize>,
    pub stride: Option<usize>,
}

fn pick<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

impl PartialSettings {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).at(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map_or(0, |s| text[..s.start].lines().count().max(1)),
            reason: e.message().to_string(),
        })
    }

    /// Combine command-line values (`self`) with a file layer and defaults.
    pub fn resolve(&self, file: &PartialSettings) -> Result<Settings> {
        let (c, f) = (self, file);
        let arch_name = pick(c.model.arch.clone(), f.model.arch.clone(), "d2wgan".into());
        let arch = Architecture::parse(&arch_name)
            .ok_or_else(|| Error::Config(format!("unknown architecture `{arch_name}`")))?;
        let preset = pick(c.model.preset, f.model.preset, Preset::Standard);

        let p = SegmentLayout::standard();
        let layout = SegmentLayout::new(
            pick(c.layout.gap_len, f.layout.gap_len, p.gap_len()),
            pick(c.layout.context_len, f.layout.context_len, p.context_len()),
            pick(c.layout.border1_len, f.layout.border1_len, p.border1_len()),
            pick(c.layout.border2_len, f.layout.border2_len, p.border2_len()),
            pick(
                c.layout.long_downsample,
                f.layout.long_downsample,
                p.long_branch_downsample(),
            ),
        )?;
        let mut model = match preset {
            Preset::Tiny => ModelConfig::tiny(arch, layout),
            Preset::Standard => ModelConfig::standard(arch, layout),
        };
        if let Some(d) = c.model.latent_dim.or(f.model.latent_dim) {
            model.latent.dim = d;
        }
        model.validate()?;

        let d = TrainConfig::default();
        let (ct, ft) = (&c.train, &f.train);
        // An explicit clip on the command line beats a file-level penalty and
        // vice versa; within one layer the penalty wins.
        let lipschitz = match (ct.gp_lambda, ct.clip_value, ft.gp_lambda, ft.clip_value) {
            (Some(l), _, _, _) => Lipschitz::GradientPenalty { lambda: l },
            (None, Some(v), _, _) => Lipschitz::Clip(v),
            (None, None, Some(l), _) => Lipschitz::GradientPenalty { lambda: l },
            (None, None, None, v) => Lipschitz::Clip(v.unwrap_or(0.01)),
        };
        let seed = pick(c.seed, f.seed, 0);
        let train = TrainConfig {
            learning_rate: pick(ct.learning_rate, ft.learning_rate, d.learning_rate),
            adam_beta1: pick(ct.adam_beta1, ft.adam_beta1, d.adam_beta1),
            adam_beta2: pick(ct.adam_beta2, ft.adam_beta2, d.adam_beta2),
            batch_size: pick(ct.batch_size, ft.batch_size, d.batch_size),
            critic_steps: pick(ct.critic_steps, ft.critic_steps, d.critic_steps),
            lipschitz,
            loss_weights: LossWeights::new(
                pick(ct.weight_d1, ft.weight_d1, 1.0),
                pick(ct.weight_d2, ft.weight_d2, 1.0),
            )?,
            monitor_every: pick(ct.monitor_every, ft.monitor_every, d.monitor_every),
            checkpoint_every: pick(ct.checkpoint_every, ft.checkpoint_every, d.checkpoint_every),
            total_steps: pick(ct.total_steps, ft.total_steps, d.total_steps),
            seed,
        };
        train.validate()?;
        Ok(Settings {
            preset,
            model,
            train,
            prefetch: pick(c.data.prefetch, f.data.prefetch, 2),
            stride: c.data.stride.or(f.data.stride),
        })
    }
}

/// Fully resolved training settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub preset: Preset,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub prefetch: usize,
    pub stride: Option<usize>,
}

impl Settings {
    /// Fully populated file form; loading it back reproduces `self`.
    pub fn to_partial(&self) -> PartialSettings {
        let l = self.model.layout;
        let t = &self.train;
        let (clip_value, gp_lambda) = match t.lipschitz {
            Lipschitz::Clip(c) => (Some(c), None),
            Lipschitz::GradientPenalty { lambda } => (None, Some(lambda)),
        };
        PartialSettings {
            seed: Some(t.seed),
            model: PartialModel {
                arch: Some(self.model.arch.name().into()),
                preset: Some(self.preset),
                latent_dim: Some(self.model.latent.dim),
            },
            layout: PartialLayout {
                gap_len: Some(l.gap_len()),
                context_len: Some(l.context_len()),
                border1_len: Some(l.border1_len()),
                border2_len: Some(l.border2_len()),
                long_downsample: Some(l.long_branch_downsample()),
            },
            train: PartialTrain {
                learning_rate: Some(t.learning_rate),
                adam_beta1: Some(t.adam_beta1),
                adam_beta2: Some(t.adam_beta2),
                batch_size: Some(t.batch_size),
                critic_steps: Some(t.critic_steps),
                clip_value,
                gp_lambda,
                weight_d1: Some(t.loss_weights.d1),
                weight_d2: Some(t.loss_weights.d2),
                monitor_every: Some(t.monitor_every),
                checkpoint_every: Some(t.checkpoint_every),
                total_steps: Some(t.total_steps),
            },
            data: PartialData {
                prefetch: Some(self.prefetch),
                stride: self.stride,
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&self.to_partial()).expect("settings serialize")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_partial()).expect("settings serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_published_hyperparameters() {
        let s = PartialSettings::default()
            .resolve(&PartialSettings::default())
            .unwrap();
        assert_eq!(s.train.learning_rate, 1e-4);
        assert_eq!(s.train.batch_size, 64);
        assert_eq!(s.train.critic_steps, 5);
        assert_eq!(s.train.lipschitz, Lipschitz::Clip(0.01));
        assert_eq!(s.model.arch, Architecture::D2Wgan);
        assert_eq!(s.model.layout, SegmentLayout::standard());
    }

    #[test]
    fn precedence_cli_file_default() {
        let file = PartialSettings::from_toml(
            "seed = 5\n[train]\nlearning_rate = 0.001\nbatch_size = 8\ngp_lambda = 10.0\n[model]\narch = \"wgan\"\n",
        )
        .unwrap();
        let mut cli = PartialSettings::default();
        cli.train.batch_size = Some(4);
        let s = cli.resolve(&file).unwrap();
        assert_eq!(s.train.batch_size, 4);
        assert_eq!(s.train.learning_rate, 1e-3);
        assert_eq!(s.train.seed, 5);
        assert_eq!(s.train.critic_steps, 5);
        assert_eq!(s.model.arch, Architecture::Wgan);
        assert_eq!(
            s.train.lipschitz,
            Lipschitz::GradientPenalty { lambda: 10.0 }
        );
        cli.train.clip_value = Some(0.05);
        assert_eq!(
            cli.resolve(&file).unwrap().train.lipschitz,
            Lipschitz::Clip(0.05)
        );
    }

    #[test]
    fn toml_round_trip_and_rejections() {
        let mut cli = PartialSettings::default();
        cli.model.preset = Some(Preset::Tiny);
        cli.train.gp_lambda = Some(3.0);
        let s = cli.resolve(&PartialSettings::default()).unwrap();
        let back = PartialSettings::from_toml(&s.to_toml()).unwrap();
        assert_eq!(PartialSettings::default().resolve(&back).unwrap(), s);
        assert!(PartialSettings::from_toml("[train]\nlr = 1\n").is_err());
        cli.model.arch = Some("vae".into());
        assert!(matches!(
            cli.resolve(&PartialSettings::default()),
            Err(Error::Config(_))
        ));
        let mut bad = PartialSettings::default();
        bad.train.learning_rate = Some(-1.0);
        assert!(bad
            .resolve(&PartialSettings::default())
            .unwrap_err()
            .is_validation());
    }
}
