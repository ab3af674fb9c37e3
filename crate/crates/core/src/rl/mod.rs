//! Actor-critic learning of a heading policy.

pub mod adam;
pub mod checkpoint;
pub mod mlp;
pub mod replay;
pub mod state;
pub mod td3;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::Checkpoint;
pub use mlp::{Mlp, MlpGrads};
pub use replay::{ReplayBuffer, Transition};
pub use state::{build_state_multimodal, reward_image, reward_multimodal, select_action, StateVector};
pub use td3::{td3_update, train, RewardKind, Td3Agent, Td3Config, TrainOutcome};
