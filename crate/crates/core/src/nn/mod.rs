//! Policy/value network written from scratch: input encoding, a fully
//! connected residual stack, masked-softmax policy loss, Adam, checkpoints.

mod encode;
mod loss;
mod network;
mod train;

use thiserror::Error;

pub use encode::{
    encode_hypothesis, encode_state, encode_view, point_slot, EncodeMode, InputVector, HANDS_OFFSET,
    INPUT_DIM, POINTS_OFFSET, TRICK_OFFSET,
};
pub use loss::{loss, loss_and_grad, masked_policy, sample_loss_grad, LossStats, TrainingSample};
pub use network::{Activations, NetConfig, Network, PolicyValue, Scalar, POLICY_DIM, VALUE_SCALE};
pub use train::{fit_batch, train_pass, Adam, AdamConfig};

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("no legal move in mask")]
    EmptyMask,
    #[error("empty batch")]
    EmptyBatch,
    #[error("bad training target: {0}")]
    BadTarget(String),
    #[error("invalid network config: {0}")]
    Config(String),
    #[error("model corrupt: {0}")]
    ModelCorrupt(String),
    #[error("training diverged: loss {current} vs initial {initial}")]
    Diverged { initial: f64, current: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl From<std::io::Error> for NnError {
    fn from(e: std::io::Error) -> Self {
        NnError::Checkpoint(e.to_string())
    }
}

/// Anything that scores a position for search and belief weighting.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, input: &InputVector) -> PolicyValue;
}

impl<F: Scalar> Evaluator for Network<F> {
    fn evaluate(&self, input: &InputVector) -> PolicyValue {
        self.forward(input)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for std::sync::Arc<E> {
    fn evaluate(&self, input: &InputVector) -> PolicyValue {
        (**self).evaluate(input)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, input: &InputVector) -> PolicyValue {
        (**self).evaluate(input)
    }
}

/// Uniform policy and zero value. Useful as a neutral evaluator for search
/// tests.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroEvaluator;

impl Evaluator for ZeroEvaluator {
    fn evaluate(&self, _: &InputVector) -> PolicyValue {
        PolicyValue {
            logits: [0.0; POLICY_DIM],
            value: 0.0,
        }
    }
}
