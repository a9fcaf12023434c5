//! Two-level attacker: a high-level agent splits the budget across
//! components, and one low-level agent per component spreads its share over
//! the component's edges.
//!
//! Either level can be swapped for its heuristic counterpart (proportional
//! allocation above, local greedy below), which gives the ablation variants.
//! Network-wide DDPG is the single-component case with proportional (hence
//! trivial) allocation.

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attack::{
    deciding_per_component, local_greedy, proportional_split, scatter_components, AttackContext, AttackPolicy,
    EdgeDemandCount, LocalDenominator,
};
use crate::decompose::Partition;
use crate::error::{Error, Result};
use crate::network::{scale_demand, RoadNetwork, TripTable};
use crate::neural::{Head, Normalization};
use crate::rl::ddpg::{update_ddpg, AgentBundle, AgentConfig, Experience};
use crate::rl::features::{component_vehicles, EdgeFeatures, LOW_FEATURES};
use crate::rl::maddpg::{update_maddpg, CriticInput, JointExperience};
use crate::rl::noise::OuNoise;
use crate::rl::replay::ReplayBuffer;
use crate::seed;
use crate::simulator::{discounted_sum, run_episode, step, EpisodeResult, Perturbation, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HighLevel {
    Learned,
    Proportional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LowLevel {
    Learned,
    LocalGreedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmarlConfig {
    pub budget: f64,
    pub episodes: usize,
    pub horizon: usize,
    /// Discount of the reported attack objective, independent of the agents'.
    pub gamma_eval: f64,
    pub high: AgentConfig,
    pub low: AgentConfig,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub high_noise: bool,
    pub critic_input: CriticInput,
    pub normalization: Normalization,
    pub high_level: HighLevel,
    pub low_level: LowLevel,
    /// Each trip's demand is scaled by `1 ± demand_noise` per episode.
    pub demand_noise: f64,
    /// Greedy evaluation every this many episodes, keeping the best
    /// parameters seen; 0 keeps the final parameters.
    pub eval_every: usize,
    /// Environment steps between learning updates.
    pub update_every: usize,
}

impl Default for HmarlConfig {
    fn default() -> Self {
        let normalization = Normalization::Softmax;
        HmarlConfig {
            budget: 30.0,
            episodes: 300,
            horizon: 200,
            gamma_eval: 0.99,
            high: AgentConfig {
                gamma: 0.90,
                actor_lr: 1e-3,
                critic_lr: 1e-3,
                tau: 0.01,
                hidden: vec![64, 64],
                actor_head: Head::Normalized(normalization),
                critic_head: Head::Linear,
            },
            low: AgentConfig {
                gamma: 0.99,
                actor_lr: 1e-4,
                critic_lr: 1e-3,
                tau: 0.01,
                hidden: vec![64, 64],
                actor_head: Head::Normalized(normalization),
                critic_head: Head::Linear,
            },
            buffer_capacity: 100_000,
            batch_size: 128,
            ou_theta: 0.15,
            ou_sigma: 0.2,
            high_noise: true,
            critic_input: CriticInput::Local,
            normalization,
            high_level: HighLevel::Learned,
            low_level: LowLevel::Learned,
            demand_noise: 0.05,
            eval_every: 10,
            update_every: 1,
        }
    }
}

impl HmarlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.budget >= 0.0 && self.budget.is_finite()) {
            return Err(Error::Config(format!("budget must be >= 0, got {}", self.budget)));
        }
        if self.horizon == 0 || self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return Err(Error::Config("need horizon >= 1 and buffer_capacity >= batch_size >= 1".into()));
        }
        if self.update_every == 0 {
            return Err(Error::Config("update_every must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.demand_noise) {
            return Err(Error::Config("demand_noise must lie in [0, 1)".into()));
        }
        self.high.validate()?;
        self.low.validate()
    }

    /// Orderings the two levels are expected to follow: the low level
    /// learns more slowly and looks further ahead.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.low.actor_lr >= self.high.actor_lr {
            out.push(format!(
                "low-level actor lr {} is not below high-level {}",
                self.low.actor_lr, self.high.actor_lr
            ));
        }
        if self.low.gamma <= self.high.gamma {
            out.push(format!(
                "low-level gamma {} is not above high-level {}",
                self.low.gamma, self.high.gamma
            ));
        }
        out
    }
}

/// One joint action and the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub high_input: Vec<f64>,
    /// Budget share per component, summing to one.
    pub shares: Vec<f64>,
    pub low_inputs: Vec<Vec<f64>>,
    /// Per-component edge shares, each summing to one.
    pub low_actions: Vec<Vec<f64>>,
    pub perturbation: Perturbation,
}

impl Decision {
    pub fn allocation(&self, budget: f64) -> Vec<f64> {
        self.shares.iter().map(|s| s * budget).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: usize,
    pub undiscounted_objective: f64,
    pub discounted_objective: f64,
    pub critic_loss_high: f64,
    pub mean_critic_loss_low: f64,
    pub wallclock_s: f64,
}

pub fn write_training_log<W: std::io::Write>(log: &[EpisodeLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in log {
        w.serialize(row)?;
    }
    if log.is_empty() {
        w.write_record([
            "episode",
            "steps",
            "undiscounted_objective",
            "discounted_objective",
            "critic_loss_high",
            "mean_critic_loss_low",
            "wallclock_s",
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct TrainingOutcome {
    pub log: Vec<EpisodeLog>,
    /// `(episodes completed, discounted objective)` of each greedy evaluation.
    pub evaluations: Vec<(usize, f64)>,
    pub best: Option<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct Hmarl {
    name: String,
    partition: Partition,
    config: HmarlConfig,
    /// Observations and rewards are divided by this (total base demand).
    scale: f64,
    high: Option<AgentBundle>,
    low: Vec<AgentBundle>,
}

fn noise_seed(seed: u64, agent: &str) -> u64 {
    seed::derive_seed(seed::derive_seed(seed, seed::NOISE), agent)
}

impl Hmarl {
    pub fn new(network: &RoadNetwork, trips: &TripTable, partition: Partition, config: HmarlConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        trips.check_against(network)?;
        let k = partition.k();
        if let Some(empty) = (0..k).find(|&c| partition.component_edges(c).is_empty()) {
            return Err(Error::Argument(format!("component {empty} has no edges to perturb")));
        }
        let mut init = seed::rng(seed, seed::NET_INIT);
        let high = match config.high_level {
            HighLevel::Learned => Some(AgentBundle::new(
                2 * k,
                k,
                None,
                config.high.clone(),
                OuNoise::new(k, config.ou_theta, config.ou_sigma, noise_seed(seed, "high")),
                &mut init,
            )?),
            HighLevel::Proportional => None,
        };
        let state_dims: Vec<usize> = (0..k).map(|c| LOW_FEATURES * partition.component_edges(c).len() + 1).collect();
        let action_dims: Vec<usize> = (0..k).map(|c| partition.component_edges(c).len()).collect();
        let low = match config.low_level {
            LowLevel::Learned => (0..k)
                .map(|c| {
                    AgentBundle::new(
                        state_dims[c],
                        action_dims[c],
                        Some(config.critic_input.len(c, &state_dims, &action_dims, 2 * k)),
                        config.low.clone(),
                        OuNoise::new(action_dims[c], config.ou_theta, config.ou_sigma, noise_seed(seed, &format!("low-{c}"))),
                        &mut init,
                    )
                })
                .collect::<Result<_>>()?,
            LowLevel::LocalGreedy => Vec::new(),
        };
        Ok(Hmarl {
            name: "hmarl".into(),
            partition,
            scale: trips.total_demand().max(1.0),
            config,
            high,
            low,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn config(&self) -> &HmarlConfig {
        &self.config
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn high(&self) -> Option<&AgentBundle> {
        self.high.as_ref()
    }

    pub fn low(&self) -> &[AgentBundle] {
        &self.low
    }

    /// Sets every actor weight and bias to zero, so all outputs are equal
    /// and the normalized heads split uniformly.
    pub fn zero_actor_parameters(&mut self) {
        for agent in self.high.iter_mut().chain(self.low.iter_mut()) {
            let n = agent.actor.parameter_count();
            agent.actor.set_parameters(&vec![0.0; n]).expect("length matches");
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Picks `b̂` and the per-component perturbations. With `explore` the
    /// actors' pre-normalization outputs get OU noise.
    pub fn act(&mut self, trips: &TripTable, state: &SimState, features: &EdgeFeatures, explore: bool) -> Result<Decision> {
        let k = self.partition.k();
        let budget = self.config.budget;
        let norm = self.config.normalization;
        let high_input: Vec<f64> = features.high(&self.partition).0.iter().map(|x| x / self.scale).collect();
        let shares = match self.high.as_mut() {
            Some(agent) => {
                let z = if explore && self.config.high_noise {
                    agent.noisy_logits(&high_input)?
                } else {
                    agent.actor.logits(&high_input)?
                };
                norm.apply(&z)
            }
            None => proportional_split(&deciding_per_component(trips, state, &self.partition), 1.0),
        };

        let mut low_inputs = Vec::with_capacity(k);
        let mut low_actions = Vec::with_capacity(k);
        let demand = EdgeDemandCount(features.through.clone());
        for c in 0..k {
            let mut input: Vec<f64> = features.low(&self.partition, c).0.iter().map(|x| x / self.scale).collect();
            input.push(shares[c]);
            let action = match self.low.get_mut(c) {
                Some(agent) => {
                    let z = if explore {
                        agent.noisy_logits(&input)?
                    } else {
                        agent.actor.logits(&input)?
                    };
                    norm.apply(&z)
                }
                None => local_greedy(&demand, &self.partition, c, 1.0, LocalDenominator::Component),
            };
            low_inputs.push(input);
            low_actions.push(action);
        }
        let per_component: Vec<Vec<f64>> = low_actions
            .iter()
            .zip(&shares)
            .map(|(a, s)| a.iter().map(|x| x * s * budget).collect())
            .collect();
        let perturbation = Perturbation(scatter_components(&self.partition, &per_component, features.through.len()));
        Ok(Decision {
            high_input,
            shares,
            low_inputs,
            low_actions,
            perturbation,
        })
    }

    fn reset_noise(&mut self) {
        self.high.iter_mut().chain(self.low.iter_mut()).for_each(|a| a.noise.reset());
    }

    /// Deterministic rollout on `trips` with exploration off.
    pub fn evaluate(&mut self, network: &RoadNetwork, trips: &TripTable) -> Result<EpisodeResult> {
        let (horizon, gamma) = (self.config.horizon, self.config.gamma_eval);
        run_episode(network, trips, self, horizon, gamma)
    }

    /// Trains both levels jointly. Every environment step stores one
    /// high-level and one joint low-level record, then (once the buffers
    /// hold a batch) updates every learned agent.
    pub fn train(&mut self, network: &RoadNetwork, trips: &TripTable, seed: u64) -> Result<TrainingOutcome> {
        self.train_with(network, trips, seed, |_| {})
    }

    pub fn train_with(
        &mut self,
        network: &RoadNetwork,
        trips: &TripTable,
        seed: u64,
        mut on_episode: impl FnMut(&EpisodeLog),
    ) -> Result<TrainingOutcome> {
        let cfg = self.config.clone();
        let mut outcome = TrainingOutcome::default();
        if cfg.episodes == 0 {
            return Ok(outcome);
        }
        let sampling = seed::derive_seed(seed, seed::SAMPLING);
        let mut high_buffer: ReplayBuffer<Experience> =
            ReplayBuffer::new(cfg.buffer_capacity, seed::derive_seed(sampling, "high"));
        let mut low_buffer: ReplayBuffer<JointExperience> =
            ReplayBuffer::new(cfg.buffer_capacity, seed::derive_seed(sampling, "low"));
        let mut demand_rng = seed::rng(seed, seed::DEMAND);
        let started = Instant::now();

        let mut best: Option<(usize, f64, Option<AgentBundle>, Vec<AgentBundle>)> = None;
        if cfg.eval_every > 0 {
            let score = self.evaluate(network, trips)?.discounted_objective;
            outcome.evaluations.push((0, score));
            best = Some((0, score, self.high.clone(), self.low.clone()));
        }

        let mut env_steps = 0usize;
        for episode in 0..cfg.episodes {
            let factors: Vec<f64> = (0..trips.len())
                .map(|_| {
                    if demand_rng.random::<bool>() {
                        1.0 + cfg.demand_noise
                    } else {
                        1.0 - cfg.demand_noise
                    }
                })
                .collect();
            let episode_trips = scale_demand(trips, &factors)?;
            self.reset_noise();

            let mut state = SimState::initial(&episode_trips);
            let mut features = EdgeFeatures::compute(network, &episode_trips, &state);
            let mut pending: Option<JointExperience> = None;
            let mut remaining = Vec::new();
            let (mut high_losses, mut low_losses) = (Vec::new(), Vec::new());

            while remaining.len() < cfg.horizon && !state.all_arrived() {
                let decision = self.act(&episode_trips, &state, &features, true)?;
                if let Some(mut rec) = pending.take() {
                    rec.next_states = decision.low_inputs.clone();
                    low_buffer.push(rec);
                }
                decision
                    .perturbation
                    .check(network.edge_count(), Some(cfg.budget))
                    .map_err(|e| Error::Contract(format!("training action: {e}")))?;
                let (next, metrics) = step(network, &episode_trips, &state, &decision.perturbation)?;
                remaining.push(metrics.remaining);
                let next_features = EdgeFeatures::compute(network, &episode_trips, &next);
                let terminal = next.all_arrived();
                let next_high: Vec<f64> = next_features.high(&self.partition).0.iter().map(|x| x / self.scale).collect();

                if self.high.is_some() {
                    high_buffer.push(Experience {
                        state: decision.high_input.clone(),
                        action: decision.shares.clone(),
                        reward: metrics.remaining / self.scale,
                        next_state: next_high.clone(),
                        terminal,
                    });
                }
                if !self.low.is_empty() {
                    pending = Some(JointExperience {
                        rewards: component_vehicles(&episode_trips, &next, &self.partition)
                            .into_iter()
                            .map(|v| v / self.scale)
                            .collect(),
                        states: decision.low_inputs,
                        actions: decision.low_actions,
                        next_states: Vec::new(),
                        global: decision.high_input,
                        next_global: next_high,
                        terminal,
                    });
                }
                state = next;
                features = next_features;
                env_steps += 1;

                if env_steps % cfg.update_every == 0 {
                    if let Some(agent) = self.high.as_mut() {
                        if high_buffer.len() >= cfg.batch_size {
                            let batch = high_buffer.sample(cfg.batch_size)?;
                            high_losses.push(update_ddpg(agent, &batch, agent.config.gamma)?.critic_loss);
                        }
                    }
                    if !self.low.is_empty() && low_buffer.len() >= cfg.batch_size {
                        let batch = low_buffer.sample(cfg.batch_size)?;
                        let stats = update_maddpg(&mut self.low, &batch, cfg.low.gamma, cfg.critic_input)?;
                        low_losses.push(stats.iter().map(|s| s.critic_loss).sum::<f64>() / stats.len() as f64);
                    }
                }
            }
            if let Some(mut rec) = pending.take() {
                // inputs at the final state, with the allocation the
                // deterministic high level would choose there
                rec.next_states = self.act(&episode_trips, &state, &features, false)?.low_inputs;
                low_buffer.push(rec);
            }

            let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
            let row = EpisodeLog {
                episode,
                steps: remaining.len(),
                undiscounted_objective: remaining.iter().sum(),
                discounted_objective: discounted_sum(&remaining, cfg.gamma_eval),
                critic_loss_high: mean(&high_losses),
                mean_critic_loss_low: mean(&low_losses),
                wallclock_s: started.elapsed().as_secs_f64(),
            };
            on_episode(&row);
            outcome.log.push(row);

            let done = episode + 1;
            if cfg.eval_every > 0 && (done % cfg.eval_every == 0 || done == cfg.episodes) {
                let score = self.evaluate(network, trips)?.discounted_objective;
                outcome.evaluations.push((done, score));
                if best.as_ref().is_none_or(|b| score > b.1) {
                    best = Some((done, score, self.high.clone(), self.low.clone()));
                }
            }
        }
        if let Some((episode, score, high, low)) = best {
            // keep the live noise processes; only parameters are restored
            if let (Some(live), Some(kept)) = (self.high.as_mut(), high) {
                *live = AgentBundle { noise: live.noise.clone(), ..kept };
            }
            for (live, kept) in self.low.iter_mut().zip(low) {
                *live = AgentBundle { noise: live.noise.clone(), ..kept };
            }
            outcome.best = Some((episode, score));
        }
        Ok(outcome)
    }

    /// Writes every agent, the partition and the configuration under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if let Some(h) = &self.high {
            h.save(dir, "high")?;
        }
        for (k, a) in self.low.iter().enumerate() {
            a.save(dir, &format!("low_{k}"))?;
        }
        let part = dir.join("partition.txt");
        std::fs::write(&part, self.partition.to_text_map()).map_err(|e| Error::io(&part, e))?;
        let meta = dir.join("hmarl.json");
        let body = serde_json::to_string_pretty(&SavedMeta {
            name: self.name.clone(),
            scale: self.scale,
            config: self.config.clone(),
        })?;
        std::fs::write(&meta, body).map_err(|e| Error::io(&meta, e))
    }

    pub fn load(dir: &Path, network: &RoadNetwork) -> Result<Self> {
        let meta_path = dir.join("hmarl.json");
        let meta: SavedMeta =
            serde_json::from_str(&std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?)?;
        let part_path = dir.join("partition.txt");
        let partition =
            Partition::parse_text_map(network, &std::fs::read_to_string(&part_path).map_err(|e| Error::io(&part_path, e))?)?;
        let cfg = meta.config;
        let high = match cfg.high_level {
            HighLevel::Learned => Some(AgentBundle::load(
                dir,
                "high",
                cfg.high.clone(),
                OuNoise::new(partition.k(), cfg.ou_theta, cfg.ou_sigma, 0),
            )?),
            HighLevel::Proportional => None,
        };
        let low = match cfg.low_level {
            LowLevel::Learned => (0..partition.k())
                .map(|k| {
                    let dim = partition.component_edges(k).len();
                    AgentBundle::load(
                        dir,
                        &format!("low_{k}"),
                        cfg.low.clone(),
                        OuNoise::new(dim, cfg.ou_theta, cfg.ou_sigma, 0),
                    )
                })
                .collect::<Result<_>>()?,
            LowLevel::LocalGreedy => Vec::new(),
        };
        Ok(Hmarl {
            name: meta.name,
            partition,
            config: cfg,
            scale: meta.scale,
            high,
            low,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SavedMeta {
    name: String,
    scale: f64,
    config: HmarlConfig,
}

impl AttackPolicy for Hmarl {
    fn name(&self) -> &str {
        &self.name
    }

    fn budget(&self) -> Option<f64> {
        Some(self.config.budget)
    }

    fn reset(&mut self) {
        self.reset_noise();
    }

    fn perturb(&mut self, ctx: &AttackContext<'_>) -> Result<Perturbation> {
        let features = EdgeFeatures::compute(ctx.network, ctx.trips, ctx.state);
        Ok(self.act(ctx.trips, ctx.state, &features, false)?.perturbation)
    }
}
