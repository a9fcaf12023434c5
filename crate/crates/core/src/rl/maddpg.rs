//! Per-component agents trained on time-aligned joint records.
//!
//! By default each low-level critic sees only its own observation (which
//! already carries the allocated budget) and its own action. The joint
//! variant also feeds the global state summary and every agent's action.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rl::ddpg::{update_agent, AgentBundle, CriticSample, UpdateStats};

#[derive(Debug, Clone, PartialEq)]
pub struct JointExperience {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<Vec<f64>>,
    pub global: Vec<f64>,
    pub next_global: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticInput {
    /// `state_k ⊕ action_k`
    #[default]
    Local,
    /// `state_k ⊕ global ⊕ action_0 ⊕ … ⊕ action_{K−1}`
    Joint,
}

impl CriticInput {
    pub fn len(self, k: usize, state_dims: &[usize], action_dims: &[usize], global_len: usize) -> usize {
        match self {
            CriticInput::Local => state_dims[k] + action_dims[k],
            CriticInput::Joint => state_dims[k] + global_len + action_dims.iter().sum::<usize>(),
        }
    }
}

fn check_aligned(bundles: &[AgentBundle], batch: &[&JointExperience]) -> Result<()> {
    let k = bundles.len();
    for (i, rec) in batch.iter().enumerate() {
        let lens = [rec.states.len(), rec.actions.len(), rec.rewards.len(), rec.next_states.len()];
        if lens.iter().any(|&l| l != k) {
            return Err(Error::Contract(format!(
                "record {i} covers {lens:?} agents, expected {k} for each field"
            )));
        }
        for (j, b) in bundles.iter().enumerate() {
            if rec.actions[j].len() != b.action_dim() || rec.states[j].len() != b.actor.input_len() {
                return Err(Error::Contract(format!("record {i} is misaligned for agent {j}")));
            }
        }
    }
    Ok(())
}

fn samples_for(
    bundles: &[AgentBundle],
    next_actions: &[Vec<Vec<f64>>],
    batch: &[&JointExperience],
    k: usize,
    input: CriticInput,
) -> Vec<CriticSample> {
    batch
        .iter()
        .zip(next_actions)
        .map(|(rec, next)| {
            let (critic_input, action_offset, next_critic_input) = match input {
                CriticInput::Local => {
                    let mut c = rec.states[k].clone();
                    c.extend_from_slice(&rec.actions[k]);
                    let mut n = rec.next_states[k].clone();
                    n.extend_from_slice(&next[k]);
                    (c, rec.states[k].len(), n)
                }
                CriticInput::Joint => {
                    let mut c = rec.states[k].clone();
                    c.extend_from_slice(&rec.global);
                    let offset = c.len() + bundles[..k].iter().map(AgentBundle::action_dim).sum::<usize>();
                    rec.actions.iter().for_each(|a| c.extend_from_slice(a));
                    let mut n = rec.next_states[k].clone();
                    n.extend_from_slice(&rec.next_global);
                    next.iter().for_each(|a| n.extend_from_slice(a));
                    (c, offset, n)
                }
            };
            CriticSample {
                actor_input: rec.states[k].clone(),
                critic_input,
                action_offset,
                reward: rec.rewards[k],
                terminal: rec.terminal,
                next_critic_input,
            }
        })
        .collect()
}

/// One update of every agent on the same batch of joint records.
pub fn update_maddpg(
    bundles: &mut [AgentBundle],
    batch: &[&JointExperience],
    gamma: f64,
    input: CriticInput,
) -> Result<Vec<UpdateStats>> {
    if batch.is_empty() {
        return Err(Error::Argument("empty batch".into()));
    }
    check_aligned(bundles, batch)?;
    // target actions at the next state, per record and agent
    let next_actions: Vec<Vec<Vec<f64>>> = batch
        .iter()
        .map(|rec| {
            bundles
                .iter()
                .zip(&rec.next_states)
                .map(|(b, s)| b.actor_target.predict(s))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let samples: Vec<Vec<CriticSample>> = (0..bundles.len())
        .map(|k| samples_for(bundles, &next_actions, batch, k, input))
        .collect();
    bundles
        .iter_mut()
        .zip(&samples)
        .map(|(b, s)| update_agent(b, s, gamma))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Head;
    use crate::rl::ddpg::{update_ddpg, AgentConfig, Experience};
    use crate::rl::noise::OuNoise;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config() -> AgentConfig {
        AgentConfig {
            gamma: 0.9,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            tau: 0.1,
            hidden: vec![8],
            actor_head: Head::Linear,
            critic_head: Head::Linear,
        }
    }

    fn agent(state: usize, action: usize, critic: Option<usize>, seed: u64) -> AgentBundle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AgentBundle::new(state, action, critic, config(), OuNoise::new(action, 0.15, 0.2, seed), &mut rng).unwrap()
    }

    fn record() -> JointExperience {
        JointExperience {
            states: vec![vec![0.2, 0.4, 0.1]],
            actions: vec![vec![0.5, -0.5]],
            rewards: vec![0.7],
            next_states: vec![vec![0.3, 0.1, 0.0]],
            global: vec![1.0, 2.0],
            next_global: vec![1.5, 0.5],
            terminal: false,
        }
    }

    #[test]
    fn single_agent_matches_ddpg() {
        let mut joint = vec![agent(3, 2, None, 9)];
        let mut single = joint[0].clone();
        let rec = record();
        let exp = Experience {
            state: rec.states[0].clone(),
            action: rec.actions[0].clone(),
            reward: rec.rewards[0],
            next_state: rec.next_states[0].clone(),
            terminal: rec.terminal,
        };
        for _ in 0..5 {
            let a = update_maddpg(&mut joint, &[&rec], 0.9, CriticInput::Local).unwrap();
            let b = update_ddpg(&mut single, &[&exp], 0.9).unwrap();
            assert_eq!(a[0], b);
        }
        assert_eq!(joint[0].actor.parameters(), single.actor.parameters());
        assert_eq!(joint[0].critic_target.parameters(), single.critic_target.parameters());
    }

    #[test]
    fn joint_critic_input_layout() {
        let dims = CriticInput::Joint.len(0, &[3], &[2], 2);
        assert_eq!(dims, 7);
        let mut bundles = vec![agent(3, 2, Some(dims), 4)];
        update_maddpg(&mut bundles, &[&record()], 0.9, CriticInput::Joint).unwrap();
    }

    #[test]
    fn misaligned_batch_is_contract_error() {
        let mut bundles = vec![agent(3, 2, None, 1), agent(3, 2, None, 2)];
        let err = update_maddpg(&mut bundles, &[&record()], 0.9, CriticInput::Local).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
