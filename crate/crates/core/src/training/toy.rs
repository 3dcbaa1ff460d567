//! One-dimensional Wasserstein estimation task: a small dense critic learns
//! to separate samples of a "real" Gaussian from those of a parametric
//! Gaussian generator, so that its value `E[f(real)] - E[f(fake)]` can be
//! compared with the empirical W1 between the two distributions.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::adam::{Adam, AdamState};
use super::config::Lipschitz;
use super::losses::clip_weights;
use super::penalty::accumulate_penalty;
use crate::divergences::{wasserstein1_empirical, EmpiricalSample};
use crate::error::{invalid, Result};
use crate::model::layers::{Dense, Layer, Sequential};
use crate::rng::{self, tag};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub real_mean: f64,
    pub real_std: f64,
    pub fake_mean: f64,
    pub fake_std: f64,
    pub hidden: usize,
    pub steps: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lipschitz: Lipschitz,
    /// Charge the gradient penalty only above norm 1. In one dimension the
    /// two-sided penalty walls off slope 0, so a critic initialised with the
    /// wrong slope sign can never turn around.
    pub one_sided_penalty: bool,
    /// Also update the generator's mean and log-std.
    pub train_generator: bool,
    /// Samples per side for the final estimate and the oracle.
    pub eval_samples: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            real_mean: 0.0,
            real_std: 1.0,
            fake_mean: 3.0,
            fake_std: 1.0,
            hidden: 32,
            steps: 2000,
            batch_size: 256,
            learning_rate: 1e-3,
            lipschitz: Lipschitz::GradientPenalty { lambda: 10.0 },
            one_sided_penalty: true,
            train_generator: false,
            eval_samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyRun {
    /// Batch estimate `mean f(real) - mean f(fake)` after every critic update.
    pub estimates: Vec<f64>,
    /// Critic estimate on `eval_samples` fresh draws per side.
    pub final_estimate: f64,
    /// Empirical W1 between the same fresh draws.
    pub oracle: f64,
    pub fake_mean: f64,
    pub fake_std: f64,
}

impl ToyRun {
    /// `|estimate - oracle| / oracle` for every recorded step.
    pub fn relative_errors(&self) -> Vec<f64> {
        self.estimates
            .iter()
            .map(|e| libm::fabs(e - self.oracle) / self.oracle)
            .collect()
    }
}

fn critic_net(hidden: usize) -> Sequential {
    Sequential::new(vec![
        Layer::Dense(Dense {
            inputs: 1,
            outputs: hidden,
        }),
        Layer::LeakyRelu {
            slope: 0.2,
            size: hidden,
        },
        Layer::Dense(Dense {
            inputs: hidden,
            outputs: hidden,
        }),
        Layer::LeakyRelu {
            slope: 0.2,
            size: hidden,
        },
        Layer::Dense(Dense {
            inputs: hidden,
            outputs: 1,
        }),
    ])
}

fn normals<R: Rng>(rng: &mut R, n: usize, mean: f64, std: f64) -> Vec<f64> {
    (0..n)
        .map(|_| mean + std * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn mean_score(net: &Sequential, params: &[f64], xs: &[f64]) -> f64 {
    xs.iter().map(|&x| net.infer(params, &[x])[0]).sum::<f64>() / xs.len() as f64
}

pub fn train_toy(cfg: &ToyConfig) -> Result<ToyRun> {
    if cfg.hidden == 0 || cfg.batch_size == 0 || cfg.steps == 0 || cfg.eval_samples == 0 {
        return Err(invalid(
            "toy",
            "hidden, batch_size, steps and eval_samples must be positive",
        ));
    }
    if !(cfg.real_std > 0.0 && cfg.fake_std > 0.0) {
        return Err(invalid("toy", "standard deviations must be positive"));
    }
    let net = critic_net(cfg.hidden);
    let mut params = net.init_params(&mut rng::stream(cfg.seed, &[tag::TOY, 0]));
    let adam = Adam::new(cfg.learning_rate);
    let mut state = AdamState::new(params.len());
    let mut gen = [cfg.fake_mean, libm::log(cfg.fake_std)];
    let mut gen_state = AdamState::new(2);
    let mut estimates = Vec::with_capacity(cfg.steps as usize);
    let b = cfg.batch_size as f64;

    for step in 0..cfg.steps {
        let mut rng = rng::stream(cfg.seed, &[tag::TOY, 1, step]);
        let real = normals(&mut rng, cfg.batch_size, cfg.real_mean, cfg.real_std);
        let eps = normals(&mut rng, cfg.batch_size, 0.0, 1.0);
        let sigma = libm::exp(gen[1]);
        let fake: Vec<f64> = eps.iter().map(|e| gen[0] + sigma * e).collect();
        let mut grads = vec![0.0; params.len()];
        let (mut sr, mut sf) = (0.0, 0.0);
        for (&xr, &xf) in real.iter().zip(&fake) {
            let t = net.forward(&params, &[xr]);
            sr += t.output()[0];
            net.backward(&params, &t, &[-1.0 / b], Some(&mut grads), false);
            let t = net.forward(&params, &[xf]);
            sf += t.output()[0];
            net.backward(&params, &t, &[1.0 / b], Some(&mut grads), false);
            if let Lipschitz::GradientPenalty { lambda } = cfg.lipschitz {
                let mix: f64 = rng.random();
                let x_hat = mix * xr + (1.0 - mix) * xf;
                accumulate_penalty(
                    &net,
                    &params,
                    &[x_hat],
                    lambda,
                    cfg.one_sided_penalty,
                    1.0 / b,
                    &mut grads,
                );
            }
        }
        adam.step(&mut state, &mut params, &grads);
        if let Lipschitz::Clip(c) = cfg.lipschitz {
            clip_weights(&mut params, c)?;
        }
        estimates.push((sr - sf) / b);

        if cfg.train_generator {
            // minimize -mean f(mu + sigma * eps)
            let sigma = libm::exp(gen[1]);
            let mut g = [0.0; 2];
            for &e in &eps {
                let x = gen[0] + sigma * e;
                let t = net.forward(&params, &[x]);
                let dx = net
                    .backward(&params, &t, &[-1.0 / b], None, true)
                    .expect("input gradient")[0];
                g[0] += dx;
                g[1] += dx * sigma * e;
            }
            adam.step(&mut gen_state, &mut gen, &g);
        }
    }

    let mut rng = rng::stream(cfg.seed, &[tag::TOY, 2]);
    let real = normals(&mut rng, cfg.eval_samples, cfg.real_mean, cfg.real_std);
    let fake = normals(&mut rng, cfg.eval_samples, gen[0], libm::exp(gen[1]));
    let final_estimate = mean_score(&net, &params, &real) - mean_score(&net, &params, &fake);
    let oracle = wasserstein1_empirical(&EmpiricalSample::new(real)?, &EmpiricalSample::new(fake)?);
    Ok(ToyRun {
        estimates,
        final_estimate,
        oracle,
        fake_mean: gen[0],
        fake_std: libm::exp(gen[1]),
    })
}
