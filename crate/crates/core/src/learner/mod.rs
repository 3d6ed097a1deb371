//! Per-publisher policy learners.

mod buffer;
pub mod checkpoint;
pub mod mlp;
mod optim;
mod policy;
mod ppo;

pub use buffer::RolloutBuffer;
pub use optim::Adam;
pub use policy::{
    choose_action, clipped_surrogate, clipped_surrogate_grad, gaussian_entropy, gaussian_log_prob,
    gaussian_log_prob_grad, map_raw_action, sigmoid, PolicyModel, PolicyStep, ACTION_DIM, MAX_LOG_STD, MIN_LOG_STD,
};
pub use ppo::{
    policy_loss, policy_loss_grad, standardize, update, value_loss_grad, BatchItem, Optimizers, PolicyGrad, PpoAgent,
    PpoConfig, Skipped, UpdateStats,
};

use crate::env::{Observation, Transition};

/// The agent side of the game loop. Implementations own their model, memory
/// and random stream.
pub trait Learner {
    fn act(&mut self, observation: &Observation) -> PolicyStep;
    /// Stores a completed transition.
    fn record(&mut self, transition: Transition);
    /// Returns `None` when the memory cannot fill a batch yet.
    fn update(&mut self) -> Option<UpdateStats>;
}
