use alloc::string::String;

use super::adam::Adam;
use super::losses::LossWeights;
use crate::error::{invalid, Result};
use crate::kv::KvMap;

/// How the critic is kept (approximately) 1-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lipschitz {
    /// Clamp every critic parameter to `[-c, c]` after each update.
    Clip(f64),
    /// Add `lambda * (||grad_x D(x_hat)|| - 1)^2` on random interpolates.
    GradientPenalty { lambda: f64 },
}

impl Lipschitz {
    pub fn clip_value(&self) -> Option<f64> {
        match *self {
            Self::Clip(c) => Some(c),
            Self::GradientPenalty { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub batch_size: usize,
    pub critic_steps: usize,
    pub lipschitz: Lipschitz,
    pub loss_weights: LossWeights,
    pub monitor_every: u64,
    pub checkpoint_every: u64,
    pub total_steps: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            adam_beta1: 0.5,
            adam_beta2: 0.9,
            batch_size: 64,
            critic_steps: 5,
            lipschitz: Lipschitz::Clip(0.01),
            loss_weights: LossWeights::default(),
            monitor_every: 100,
            checkpoint_every: 1000,
            total_steps: 2000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be positive"));
        }
        for (name, b) in [
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
        ] {
            if !(0.0..1.0).contains(&b) {
                return Err(invalid(name, "must be in [0, 1)"));
            }
        }
        for (name, v) in [
            ("batch_size", self.batch_size as u64),
            ("critic_steps", self.critic_steps as u64),
            ("monitor_every", self.monitor_every),
            ("checkpoint_every", self.checkpoint_every),
            ("total_steps", self.total_steps),
        ] {
            if v == 0 {
                return Err(invalid(name, "must be at least 1"));
            }
        }
        match self.lipschitz {
            Lipschitz::Clip(c) if !(c > 0.0 && c.is_finite()) => {
                Err(invalid("clip_value", "must be positive"))
            }
            Lipschitz::GradientPenalty { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(invalid("gp_lambda", "must be positive"))
            }
            _ => Ok(()),
        }?;
        LossWeights::new(self.loss_weights.d1, self.loss_weights.d2)?;
        Ok(())
    }

    pub fn adam(&self) -> Adam {
        Adam {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: 1e-8,
        }
    }

    pub fn write_kv(&self, kv: &mut KvMap) {
        kv.set("train.learning_rate", self.learning_rate);
        kv.set("train.adam_beta1", self.adam_beta1);
        kv.set("train.adam_beta2", self.adam_beta2);
        kv.set("train.batch_size", self.batch_size);
        kv.set("train.critic_steps", self.critic_steps);
        match self.lipschitz {
            Lipschitz::Clip(c) => {
                kv.set("train.lipschitz", "clip");
                kv.set("train.clip_value", c);
            }
            Lipschitz::GradientPenalty { lambda } => {
                kv.set("train.lipschitz", "gp");
                kv.set("train.gp_lambda", lambda);
            }
        }
        kv.set("train.weight_d1", self.loss_weights.d1);
        kv.set("train.weight_d2", self.loss_weights.d2);
        kv.set("train.monitor_every", self.monitor_every);
        kv.set("train.checkpoint_every", self.checkpoint_every);
        kv.set("train.total_steps", self.total_steps);
        kv.set("train.seed", self.seed);
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let d = Self::default();
        let mode: String = kv.get_or("train.lipschitz", String::from("clip"))?;
        let lipschitz = match mode.as_str() {
            "clip" => Lipschitz::Clip(kv.get_or("train.clip_value", 0.01)?),
            "gp" => Lipschitz::GradientPenalty {
                lambda: kv.get_or("train.gp_lambda", 10.0)?,
            },
            other => {
                return Err(invalid(
                    "train.lipschitz",
                    alloc::format!("unknown mode `{other}`"),
                ))
            }
        };
        let cfg = Self {
            learning_rate: kv.get_or("train.learning_rate", d.learning_rate)?,
            adam_beta1: kv.get_or("train.adam_beta1", d.adam_beta1)?,
            adam_beta2: kv.get_or("train.adam_beta2", d.adam_beta2)?,
            batch_size: kv.get_or("train.batch_size", d.batch_size)?,
            critic_steps: kv.get_or("train.critic_steps", d.critic_steps)?,
            lipschitz,
            loss_weights: LossWeights {
                d1: kv.get_or("train.weight_d1", 1.0)?,
                d2: kv.get_or("train.weight_d2", 1.0)?,
            },
            monitor_every: kv.get_or("train.monitor_every", d.monitor_every)?,
            checkpoint_every: kv.get_or("train.checkpoint_every", d.checkpoint_every)?,
            total_steps: kv.get_or("train.total_steps", d.total_steps)?,
            seed: kv.get_or("train.seed", d.seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let d = TrainConfig::default();
        assert_eq!(d.learning_rate, 1e-4);
        assert_eq!(d.batch_size, 64);
        assert_eq!(d.monitor_every, 100);
        assert_eq!(d.checkpoint_every, 1000);
        d.validate().unwrap();
        let mut kv = KvMap::new();
        let gp = TrainConfig {
            lipschitz: Lipschitz::GradientPenalty { lambda: 10.0 },
            loss_weights: LossWeights::new(0.7, 0.3).unwrap(),
            ..d
        };
        gp.write_kv(&mut kv);
        assert_eq!(TrainConfig::from_kv(&kv).unwrap(), gp);
    }

    #[test]
    fn rejects_zero_and_bad_clip() {
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            lipschitz: Lipschitz::Clip(-1.0),
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
