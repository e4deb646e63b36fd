//! Feedforward networks, SGD training with cross-entropy, and the
//! single-neuron expected weight update.

mod activation;
mod expected;
mod network;
#[cfg(test)]
mod tests;

pub use activation::{ActivationKind, SHIFTED_RELU_OFFSETS};
pub use expected::{expected_update, uniform_errors, DEFAULT_ERROR_MAGNITUDE};
pub use network::{
    init_network, readout_patterns, train, train_with_hook, DenseLayer, ForwardPass, Gradient, Network, ReadoutMode,
    TrainConfig, TrainingSummary, WeightRecorder, WeightSnapshot,
};

/// Default width of every hidden layer.
pub const DEFAULT_HIDDEN_WIDTH: usize = 128;
