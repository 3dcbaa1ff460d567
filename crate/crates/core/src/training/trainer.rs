use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::adam::{Adam, AdamState};
use super::config::{Lipschitz, TrainConfig};
use super::losses::{clip_weights, critic_loss, generator_loss, total_critic_loss};
use super::penalty::accumulate_penalty;
use crate::dataset::{BatchSource, Segment};
use crate::error::{Error, Result};
use crate::model::{
    assemble_fake, assemble_real, gap_gradient, sample_latent, Architecture, Checkpoint,
    Conditioning, GanModel,
};
use crate::rng::{self, tag};

/// Losses of one generator step (critic values from its last critic update).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub d1: f64,
    pub d2: Option<f64>,
    pub d_total: f64,
    pub g: f64,
}

/// One monitored row of the loss trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub d1: f64,
    pub d2: Option<f64>,
    pub d_total: f64,
    pub g: f64,
    /// Wall-clock duration of this step in milliseconds.
    pub wall_ms: f64,
}

impl TraceRow {
    /// Same losses at the same step, ignoring timing.
    pub fn same_losses(&self, other: &Self) -> bool {
        let bits = |v: Option<f64>| v.map(f64::to_bits);
        self.step == other.step
            && self.d1.to_bits() == other.d1.to_bits()
            && bits(self.d2) == bits(other.d2)
            && self.d_total.to_bits() == other.d_total.to_bits()
            && self.g.to_bits() == other.g.to_bits()
    }
}

/// Result of [`Trainer::run`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainRun {
    pub trace: Vec<TraceRow>,
    /// `(step, reference)` for every checkpoint handed to the observer.
    pub checkpoints: Vec<(u64, String)>,
    pub final_step: u64,
    /// The data source ran dry before `total_steps`.
    pub exhausted: bool,
}

/// Side effects of a run: timing, trace output and checkpoint storage.
pub trait TrainObserver {
    /// Monotone clock in milliseconds.
    fn now_ms(&mut self) -> f64 {
        0.0
    }

    fn on_row(&mut self, _row: &TraceRow) -> Result<()> {
        Ok(())
    }

    /// Persist a checkpoint and return a reference to it (path, key, ...).
    fn on_checkpoint(&mut self, ckpt: Checkpoint) -> Result<String>;

    /// Called after every parameter update; used by tests to probe invariants.
    fn after_update(&mut self, _model: &GanModel) {}
}

/// Observer that keeps checkpoints in memory.
#[derive(Debug, Default)]
pub struct MemoryObserver {
    pub checkpoints: Vec<Checkpoint>,
}

impl TrainObserver for MemoryObserver {
    fn on_checkpoint(&mut self, ckpt: Checkpoint) -> Result<String> {
        self.checkpoints.push(ckpt);
        Ok(alloc::format!("memory:{}", self.checkpoints.len() - 1))
    }
}

/// Alternating critic / generator optimizer.
#[derive(Debug, Clone)]
pub struct Trainer {
    model: GanModel,
    cfg: TrainConfig,
    adam: Adam,
    gen_state: AdamState,
    critic_states: Vec<AdamState>,
    step: u64,
}

fn batch_ids(batch: &[Segment]) -> Vec<String> {
    batch.iter().map(Segment::id).collect()
}

fn check_finite(step: u64, losses: StepLosses, batch: &[Segment]) -> Result<()> {
    let all = [
        losses.d1,
        losses.d2.unwrap_or(0.0),
        losses.d_total,
        losses.g,
    ];
    if all.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteLoss {
            step,
            d1: losses.d1,
            d2: losses.d2,
            g: losses.g,
            batch_ids: batch_ids(batch),
        })
    }
}

impl Trainer {
    pub fn new(model: GanModel, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let gen_state = AdamState::new(model.generator.param_count());
        let critic_states = model
            .critics
            .iter()
            .map(|c| AdamState::new(c.params().len()))
            .collect();
        let adam = cfg.adam();
        Ok(Self {
            model,
            cfg,
            adam,
            gen_state,
            critic_states,
            step: 0,
        })
    }

    /// Fresh model initialized from the run seed.
    pub fn init(model_cfg: crate::model::ModelConfig, cfg: TrainConfig) -> Result<Self> {
        let model = GanModel::new(model_cfg, &mut rng::stream(cfg.seed, &[tag::INIT]))?;
        Self::new(model, cfg)
    }

    /// Restore parameters, optimizer moments and step counter. The caller
    /// fast-forwards its batch source by `ckpt.batches_consumed`.
    pub fn from_checkpoint(ckpt: &Checkpoint, cfg: TrainConfig) -> Result<Self> {
        let model = GanModel::from_checkpoint(ckpt)?;
        let mut t = Self::new(model, cfg)?;
        let load = |name: &str, st: &mut AdamState| -> Result<()> {
            for (suffix, dst) in [("m", &mut st.m), ("v", &mut st.v)] {
                let key = alloc::format!("adam.{name}.{suffix}");
                let src = ckpt.tensor(&key)?;
                if src.len() != dst.len() {
                    return Err(Error::LengthMismatch {
                        what: "optimizer state",
                        expected: dst.len(),
                        actual: src.len(),
                    });
                }
                dst.copy_from_slice(src);
            }
            let t = ckpt.tensor(&alloc::format!("adam.{name}.t"))?;
            st.t = t.first().copied().unwrap_or(0.0) as u64;
            Ok(())
        };
        load("gen", &mut t.gen_state)?;
        for (i, st) in t.critic_states.iter_mut().enumerate() {
            load(&alloc::format!("critic{i}"), st)?;
        }
        t.step = ckpt.step;
        Ok(t)
    }

    pub fn checkpoint(&self, batches_consumed: u64) -> Checkpoint {
        let mut ck = Checkpoint::new(self.model.config.clone(), self.step, batches_consumed);
        self.cfg.write_kv(&mut ck.meta);
        self.model.store_tensors(&mut ck);
        let mut store = |name: &str, st: &AdamState| {
            ck.push(alloc::format!("adam.{name}.m"), st.m.clone());
            ck.push(alloc::format!("adam.{name}.v"), st.v.clone());
            ck.push(alloc::format!("adam.{name}.t"), vec![st.t as f64]);
        };
        store("gen", &self.gen_state);
        for (i, st) in self.critic_states.iter().enumerate() {
            store(&alloc::format!("critic{i}"), st);
        }
        ck
    }

    pub fn model(&self) -> &GanModel {
        &self.model
    }

    pub fn into_model(self) -> GanModel {
        self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Completed generator steps.
    pub fn step(&self) -> u64 {
        self.step
    }

    fn next_batch(source: &mut dyn BatchSource) -> Result<Option<Vec<Segment>>> {
        source.next_batch()
    }

    /// One critic update on `batch`; returns `(d1, d2)`.
    fn critic_update(&mut self, batch: &[Segment], iter: usize) -> Result<(f64, Option<f64>)> {
        let arch = self.model.arch();
        let b = batch.len() as f64;
        let mut rng = rng::stream(self.cfg.seed, &[tag::CRITIC_STEP, self.step, iter as u64]);
        let weights = [self.cfg.loss_weights.d1, self.cfg.loss_weights.d2];
        let n_critics = self.model.critics.len();
        let mut grads: Vec<Vec<f64>> = self
            .model
            .critics
            .iter()
            .map(|c| vec![0.0; c.params().len()])
            .collect();
        let mut real_scores = vec![Vec::with_capacity(batch.len()); n_critics];
        let mut fake_scores = vec![Vec::with_capacity(batch.len()); n_critics];
        for seg in batch {
            let z = sample_latent(self.model.generator.shape().latent.dim, &mut rng);
            let cond = Conditioning::from_segment(seg, arch);
            let gap = self.model.generator.forward(&cond.borders(), &z)?;
            let real = assemble_real(seg);
            let fake = assemble_fake(seg, &gap)?;
            let mix: f64 = rng.random();
            for (i, critic) in self.model.critics.iter().enumerate() {
                let (xr, xf) = if i == 0 {
                    (&real.short, &fake.short)
                } else {
                    (&real.long_ds, &fake.long_ds)
                };
                let w = weights[i];
                let tr = critic.forward_trace(xr)?;
                real_scores[i].push(tr.output()[0]);
                critic.backward(&tr, -w / b, Some(&mut grads[i]), false);
                let tf = critic.forward_trace(xf)?;
                fake_scores[i].push(tf.output()[0]);
                critic.backward(&tf, w / b, Some(&mut grads[i]), false);
                if let Lipschitz::GradientPenalty { lambda } = self.cfg.lipschitz {
                    let x_hat: Vec<f64> = xr
                        .iter()
                        .zip(xf.iter())
                        .map(|(r, f)| mix * r + (1.0 - mix) * f)
                        .collect();
                    accumulate_penalty(
                        critic.net(),
                        critic.params(),
                        &x_hat,
                        lambda,
                        false,
                        w / b,
                        &mut grads[i],
                    );
                }
            }
        }
        for (i, critic) in self.model.critics.iter_mut().enumerate() {
            self.adam
                .step(&mut self.critic_states[i], critic.params_mut(), &grads[i]);
            if let Lipschitz::Clip(c) = self.cfg.lipschitz {
                clip_weights(critic.params_mut(), c)?;
            }
        }
        let d1 = critic_loss(&real_scores[0], &fake_scores[0])?;
        let d2 = match arch {
            Architecture::Wgan => None,
            Architecture::D2Wgan => Some(critic_loss(&real_scores[1], &fake_scores[1])?),
        };
        Ok((d1, d2))
    }

    /// One generator update on `batch`; returns the generator loss.
    fn generator_update(&mut self, batch: &[Segment]) -> Result<f64> {
        let arch = self.model.arch();
        let layout = self.model.config.layout;
        let b = batch.len() as f64;
        let mut rng = rng::stream(self.cfg.seed, &[tag::GEN_STEP, self.step]);
        let mut grads = vec![0.0; self.model.generator.param_count()];
        let mut scores = vec![Vec::with_capacity(batch.len()); self.model.critics.len()];
        for seg in batch {
            let z = sample_latent(self.model.generator.shape().latent.dim, &mut rng);
            let cond = Conditioning::from_segment(seg, arch);
            let trace = self.model.generator.forward_trace(&cond.borders(), &z)?;
            let fake = assemble_fake(seg, trace.output())?;
            let mut input_grads: Vec<Vec<f64>> = Vec::with_capacity(2);
            for (i, critic) in self.model.critics.iter().enumerate() {
                let x = if i == 0 { &fake.short } else { &fake.long_ds };
                let t = critic.forward_trace(x)?;
                scores[i].push(t.output()[0]);
                let g = critic
                    .backward(&t, -1.0 / b, None, true)
                    .expect("input gradient requested");
                input_grads.push(g);
            }
            let g_gap = gap_gradient(&layout, &input_grads[0], input_grads.get(1).map(|v| &v[..]));
            self.model.generator.backward(&trace, &g_gap, &mut grads);
        }
        self.adam.step(
            &mut self.gen_state,
            self.model.generator.params_mut(),
            &grads,
        );
        generator_loss(&scores[0], scores.get(1).map(|v| &v[..]))
    }

    /// Run `critic_steps` critic updates and one generator update, each on
    /// its own batch. `Ok(None)` means the source ran dry.
    pub fn train_step(
        &mut self,
        source: &mut dyn BatchSource,
        observer: &mut dyn TrainObserver,
    ) -> Result<Option<StepLosses>> {
        let mut last = (0.0, None);
        for iter in 0..self.cfg.critic_steps {
            let Some(batch) = Self::next_batch(source)? else {
                return Ok(None);
            };
            last = self.critic_update(&batch, iter)?;
            let (d1, d2) = last;
            let probe = StepLosses {
                d1,
                d2,
                d_total: d1 + d2.unwrap_or(0.0),
                g: 0.0,
            };
            check_finite(self.step + 1, probe, &batch)?;
            observer.after_update(&self.model);
        }
        let Some(batch) = Self::next_batch(source)? else {
            return Ok(None);
        };
        let g = self.generator_update(&batch)?;
        let (d1, d2) = last;
        let losses = StepLosses {
            d1,
            d2,
            d_total: total_critic_loss(d1, d2.unwrap_or(0.0), self.cfg.loss_weights)
                .unwrap_or(f64::NAN),
            g,
        };
        check_finite(self.step + 1, losses, &batch)?;
        self.step += 1;
        observer.after_update(&self.model);
        Ok(Some(losses))
    }

    /// Train until `total_steps` generator steps have completed (counting
    /// any restored from a checkpoint) or the source is exhausted.
    pub fn run(
        &mut self,
        source: &mut dyn BatchSource,
        observer: &mut dyn TrainObserver,
    ) -> Result<TrainRun> {
        let mut run = TrainRun::default();
        while self.step < self.cfg.total_steps {
            let t0 = observer.now_ms();
            let Some(losses) = self.train_step(source, observer)? else {
                run.exhausted = true;
                break;
            };
            let wall_ms = observer.now_ms() - t0;
            if self.step % self.cfg.monitor_every == 0 {
                let row = TraceRow {
                    step: self.step,
                    d1: losses.d1,
                    d2: losses.d2,
                    d_total: losses.d_total,
                    g: losses.g,
                    wall_ms,
                };
                observer.on_row(&row)?;
                run.trace.push(row);
            }
            if self.step % self.cfg.checkpoint_every == 0 {
                let ck = self.checkpoint(source.batches_consumed());
                let r = observer.on_checkpoint(ck)?;
                run.checkpoints.push((self.step, r));
            }
        }
        run.final_step = self.step;
        Ok(run)
    }
}
