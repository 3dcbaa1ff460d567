//! Wasserstein losses, Lipschitz enforcement and the alternating
//! critic / generator optimization loop.

mod adam;
mod config;
mod losses;
mod penalty;
mod toy;
mod trainer;

pub use adam::{Adam, AdamState};
pub use config::{Lipschitz, TrainConfig};
pub use losses::{
    clip_weights, critic_loss, generator_loss, gradient_penalty, total_critic_loss, LossWeights,
};
pub use toy::{train_toy, ToyConfig, ToyRun};
pub use trainer::{MemoryObserver, StepLosses, TraceRow, TrainObserver, TrainRun, Trainer};
