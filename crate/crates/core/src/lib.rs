//! Road-network simulation under false travel-time injection, with
//! heuristic and hierarchical multi-agent RL attackers.
//!
//! Vehicles route along shortest paths over *observed* edge times, which an
//! attacker perturbs under a per-step L1 budget. The crate provides the
//! simulator, baseline attackers, graph decomposition, a small neural engine,
//! DDPG / MADDPG / HMARL training, and an experiment runner.

pub mod attack;
pub mod decompose;
pub mod error;
pub mod experiment;
pub mod network;
pub mod neural;
pub mod rl;
pub mod routing;
pub mod seed;
pub mod simulator;

pub use error::{Error, Result};
