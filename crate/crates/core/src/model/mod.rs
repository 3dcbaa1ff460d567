//! Generator and critic networks for the single- and dual-critic models.

mod checkpoint;
mod config;
pub mod layers;
mod networks;

pub use checkpoint::{Checkpoint, NamedTensor, FORMAT_VERSION, MAGIC};
pub use config::{Architecture, ConvStack, CriticConfig, GeneratorConfig, LatentSpec, ModelConfig};
pub use networks::{
    assemble_fake, assemble_real, gap_gradient, sample_latent, Assemblies, Borders, Conditioning,
    Critic, GanModel, Generator, GeneratorTrace,
};
