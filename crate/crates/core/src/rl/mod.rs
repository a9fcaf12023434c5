//! Learning attackers: features, exploration noise, replay, DDPG/MADDPG
//! updates, and the hierarchical trainer.

pub mod ddpg;
pub mod features;
pub mod hmarl;
pub mod maddpg;
pub mod noise;
pub mod replay;

pub use ddpg::{update_ddpg, AgentBundle, AgentConfig, Experience};
pub use features::{observe_high, observe_low, reward_high, reward_low, HighLevelObs, LowLevelObs};
pub use hmarl::{HighLevel, Hmarl, HmarlConfig, LowLevel};
pub use maddpg::{update_maddpg, CriticInput, JointExperience};
