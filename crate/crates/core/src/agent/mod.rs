//! Learning components: dense layers with hand-written gradients, the
//! strategy-conditioned attention front end, experience replay, and the TD3
//! trainer.

pub mod attention;
pub mod nn;
pub mod replay;
pub mod td3;

pub use attention::{AttentionLayer, FEATURE_CATEGORIES, FEATURE_CATEGORY_NAMES};
pub use nn::{soft_update, Adam, Mlp, OutputActivation, ParamVec};
pub use replay::{ReplayBuffer, Transition};
pub use td3::{Agent, AgentConfig, Checkpoint, TrainDiag};
