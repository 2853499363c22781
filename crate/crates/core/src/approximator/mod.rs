//! Dense feedforward networks with analytic gradients and Adam.

mod adam;
pub mod checkpoint;
mod network;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use network::{Activation, ForwardCache, GradientBundle, Layer, LayerGrad, Network, LEAKY_SLOPE};
