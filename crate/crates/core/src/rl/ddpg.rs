//! Deterministic policy gradient agents: actor/critic pairs with target
//! copies, and the update shared by the single-agent and multi-agent cases.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{AdamConfig, Gradients, Head, MlpNet};
use crate::rl::noise::OuNoise;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub hidden: Vec<usize>,
    pub actor_head: Head,
    pub critic_head: Head,
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau = {} must lie in (0, 1]", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma = {} must lie in [0, 1]", self.gamma)));
        }
        if self.actor_lr <= 0.0 || self.critic_lr <= 0.0 {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// One critic regression sample. `critic_input` holds the taken action at
/// `action_offset..action_offset + action_len`; `next_critic_input` already
/// has the target policies' actions filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticSample {
    pub actor_input: Vec<f64>,
    pub critic_input: Vec<f64>,
    pub action_offset: usize,
    pub reward: f64,
    pub terminal: bool,
    pub next_critic_input: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic_loss: f64,
    /// Mean `Q(s, μ(s))` before the actor step.
    pub actor_objective: f64,
}

#[derive(Debug, Clone)]
pub struct AgentBundle {
    pub actor: MlpNet,
    pub critic: MlpNet,
    pub actor_target: MlpNet,
    pub critic_target: MlpNet,
    pub noise: OuNoise,
    pub config: AgentConfig,
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = vec![input];
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

impl AgentBundle {
    /// Critic input is `actor_input ⊕ action` unless `critic_input` says otherwise.
    pub fn new<R: Rng + ?Sized>(
        actor_input: usize,
        action_dim: usize,
        critic_input: Option<usize>,
        config: AgentConfig,
        noise: OuNoise,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let critic_input = critic_input.unwrap_or(actor_input + action_dim);
        let actor = MlpNet::new(&layer_sizes(actor_input, &config.hidden, action_dim), config.actor_head, rng)?;
        let critic = MlpNet::new(&layer_sizes(critic_input, &config.hidden, 1), config.critic_head, rng)?;
        Ok(AgentBundle {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            noise,
            config,
        })
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_len()
    }

    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.actor.predict(state)
    }

    /// Actor pre-head output plus one OU sample.
    pub fn noisy_logits(&mut self, state: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.actor.logits(state)?;
        for (zi, n) in z.iter_mut().zip(self.noise.sample()) {
            *zi += n;
        }
        Ok(z)
    }

    pub fn q(&self, critic_input: &[f64]) -> Result<f64> {
        Ok(self.critic.predict(critic_input)?[0])
    }

    pub fn soft_update(&mut self) -> Result<()> {
        let tau = self.config.tau;
        self.actor_target.soft_update_from(&self.actor, tau)?;
        self.critic_target.soft_update_from(&self.critic, tau)
    }

    /// Writes `<name>_actor`, `<name>_critic` and their targets under `dir`.
    pub fn save(&self, dir: &Path, name: &str) -> Result<()> {
        self.actor.save(dir.join(format!("{name}_actor")))?;
        self.critic.save(dir.join(format!("{name}_critic")))?;
        self.actor_target.save(dir.join(format!("{name}_actor_target")))?;
        self.critic_target.save(dir.join(format!("{name}_critic_target")))
    }

    pub fn load(dir: &Path, name: &str, config: AgentConfig, noise: OuNoise) -> Result<Self> {
        Ok(AgentBundle {
            actor: MlpNet::load(dir.join(format!("{name}_actor")))?,
            critic: MlpNet::load(dir.join(format!("{name}_critic")))?,
            actor_target: MlpNet::load(dir.join(format!("{name}_actor_target")))?,
            critic_target: MlpNet::load(dir.join(format!("{name}_critic_target")))?,
            noise,
            config,
        })
    }
}

/// `y = r + γ·(1 − terminal)·Q⁻(next_critic_input)`.
pub fn critic_targets(critic_target: &MlpNet, samples: &[CriticSample], gamma: f64) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|s| {
            if s.terminal {
                Ok(s.reward)
            } else {
                Ok(s.reward + gamma * critic_target.predict(&s.next_critic_input)?[0])
            }
        })
        .collect()
}

/// Mean squared Bellman error and its parameter gradient.
pub fn critic_loss_gradient(critic: &MlpNet, samples: &[CriticSample], targets: &[f64]) -> Result<(f64, Gradients)> {
    let n = samples.len() as f64;
    let mut grads = Gradients::zeros_like(critic);
    let mut loss = 0.0;
    for (s, &y) in samples.iter().zip(targets) {
        let (q, tape) = critic.forward(&s.critic_input)?;
        let err = q[0] - y;
        loss += err * err;
        critic.backward_into(tape, &[2.0 * err / n], &mut grads)?;
    }
    Ok((loss / n, grads))
}

/// `J = mean Q(s, μ(s))` with the agent's own action slot replaced by the
/// actor output, and the gradient of `−J` w.r.t. the actor parameters.
pub fn actor_objective_gradient(actor: &MlpNet, critic: &MlpNet, samples: &[CriticSample]) -> Result<(f64, Gradients)> {
    let n = samples.len() as f64;
    let dim = actor.output_len();
    let mut grads = Gradients::zeros_like(actor);
    let mut objective = 0.0;
    for s in samples {
        let (a, actor_tape) = actor.forward(&s.actor_input)?;
        let mut input = s.critic_input.clone();
        let slot = s.action_offset..s.action_offset + dim;
        if slot.end > input.len() {
            return Err(Error::Argument("action slot exceeds the critic input".into()));
        }
        input[slot.clone()].copy_from_slice(&a);
        let (q, critic_tape) = critic.forward(&input)?;
        objective += q[0];
        let dq = critic.input_gradient(critic_tape, &[1.0])?;
        let upstream: Vec<f64> = dq[slot].iter().map(|g| -g / n).collect();
        actor.backward_into(actor_tape, &upstream, &mut grads)?;
    }
    Ok((objective / n, grads))
}

/// Critic step toward the TD targets, actor step ascending the updated
/// critic, then soft target updates.
pub fn update_agent(bundle: &mut AgentBundle, samples: &[CriticSample], gamma: f64) -> Result<UpdateStats> {
    if samples.is_empty() {
        return Err(Error::Argument("empty batch".into()));
    }
    let targets = critic_targets(&bundle.critic_target, samples, gamma)?;
    let (critic_loss, cg) = critic_loss_gradient(&bundle.critic, samples, &targets)?;
    bundle.critic.adam_step(&cg, AdamConfig::with_lr(bundle.config.critic_lr))?;
    let (actor_objective, ag) = actor_objective_gradient(&bundle.actor, &bundle.critic, samples)?;
    bundle.actor.adam_step(&ag, AdamConfig::with_lr(bundle.config.actor_lr))?;
    bundle.soft_update()?;
    Ok(UpdateStats {
        critic_loss,
        actor_objective,
    })
}

/// Critic samples for a plain agent whose critic sees `state ⊕ action`.
pub fn ddpg_samples(bundle: &AgentBundle, batch: &[&Experience]) -> Result<Vec<CriticSample>> {
    batch
        .iter()
        .map(|e| {
            if e.action.len() != bundle.action_dim() {
                return Err(Error::Contract(format!(
                    "experience action has {} entries, agent acts in {}",
                    e.action.len(),
                    bundle.action_dim()
                )));
            }
            let mut critic_input = e.state.clone();
            critic_input.extend_from_slice(&e.action);
            let mut next_critic_input = e.next_state.clone();
            next_critic_input.extend(bundle.actor_target.predict(&e.next_state)?);
            Ok(CriticSample {
                actor_input: e.state.clone(),
                critic_input,
                action_offset: e.state.len(),
                reward: e.reward,
                terminal: e.terminal,
                next_critic_input,
            })
        })
        .collect()
}

pub fn update_ddpg(bundle: &mut AgentBundle, batch: &[&Experience], gamma: f64) -> Result<UpdateStats> {
    let samples = ddpg_samples(bundle, batch)?;
    update_agent(bundle, &samples, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(gamma: f64) -> AgentConfig {
        AgentConfig {
            gamma,
            actor_lr: 1e-3,
            critic_lr: 1e-2,
            tau: 0.05,
            hidden: vec![16],
            actor_head: Head::Linear,
            critic_head: Head::Linear,
        }
    }

    fn bundle(gamma: f64, seed: u64) -> AgentBundle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AgentBundle::new(2, 1, None, config(gamma), OuNoise::new(1, 0.15, 0.2, seed), &mut rng).unwrap()
    }

    #[test]
    fn terminal_target_is_reward() {
        let b = bundle(0.9, 1);
        let s = CriticSample {
            actor_input: vec![0.0, 0.0],
            critic_input: vec![0.0, 0.0, 0.0],
            action_offset: 2,
            reward: 3.5,
            terminal: true,
            next_critic_input: vec![1.0, 1.0, 1.0],
        };
        assert_eq!(critic_targets(&b.critic_target, &[s.clone()], 0.9).unwrap(), vec![3.5]);
        let live = CriticSample { terminal: false, ..s };
        let q = b.critic_target.predict(&live.next_critic_input).unwrap()[0];
        assert_eq!(critic_targets(&b.critic_target, &[live], 0.9).unwrap(), vec![3.5 + 0.9 * q]);
    }

    #[test]
    fn zero_gamma_critic_fits_reward() {
        let mut b = bundle(0.0, 2);
        let e = Experience {
            state: vec![0.3, -0.2],
            action: vec![0.7],
            reward: 1.25,
            next_state: vec![0.1, 0.1],
            terminal: false,
        };
        for _ in 0..500 {
            update_ddpg(&mut b, &[&e], 0.0).unwrap();
        }
        let q = b.q(&[0.3, -0.2, 0.7]).unwrap();
        assert!((q - 1.25).abs() < 1e-2, "q = {q}");
    }

    #[test]
    fn misshapen_action_is_contract_error() {
        let mut b = bundle(0.5, 3);
        let e = Experience {
            state: vec![0.0, 0.0],
            action: vec![0.1, 0.2],
            reward: 0.0,
            next_state: vec![0.0, 0.0],
            terminal: true,
        };
        assert!(matches!(update_ddpg(&mut b, &[&e], 0.5), Err(Error::Contract(_))));
        assert!(update_ddpg(&mut b, &[], 0.5).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let b = bundle(0.5, 4);
        let dir = tempfile::tempdir().unwrap();
        b.save(dir.path(), "agent").unwrap();
        let back = AgentBundle::load(dir.path(), "agent", b.config.clone(), b.noise.clone()).unwrap();
        assert_eq!(back.actor.parameters(), b.actor.parameters());
        assert_eq!(back.critic_target.parameters(), b.critic_target.parameters());
    }
}
