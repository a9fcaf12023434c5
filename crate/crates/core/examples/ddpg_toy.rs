//! Single-agent DDPG on a one-step problem with reward −(a − 0.5)². The
//! learned deterministic action should settle near 0.5.
//!
//! cargo run --release --example ddpg_toy

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use traffic_hmarl::neural::Head;
use traffic_hmarl::rl::ddpg::{update_ddpg, AgentBundle, AgentConfig, Experience};
use traffic_hmarl::rl::noise::OuNoise;
use traffic_hmarl::rl::replay::ReplayBuffer;

fn main() -> anyhow::Result<()> {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = AgentConfig {
            gamma: 0.0,
            actor_lr: 1e-3,
            critic_lr: 3e-3,
            tau: 0.05,
            hidden: vec![32, 32],
            actor_head: Head::Linear,
            critic_head: Head::Linear,
        };
        let mut agent = AgentBundle::new(1, 1, None, config, OuNoise::new(1, 0.15, 0.2, seed), &mut rng)?;
        let mut buffer = ReplayBuffer::new(10_000, seed);
        let s = vec![1.0];
        let mut trace = Vec::new();
        for t in 0..2064 {
            let a = agent.noisy_logits(&s)?[0];
            buffer.push(Experience {
                state: s.clone(),
                action: vec![a],
                reward: -(a - 0.5) * (a - 0.5),
                next_state: s.clone(),
                terminal: true,
            });
            if buffer.len() >= 64 {
                update_ddpg(&mut agent, &buffer.sample(64)?, 0.0)?;
            }
            if t % 400 == 0 {
                trace.push(format!("{:.3}", agent.act(&s)?[0]));
            }
        }
        println!("seed {seed}: μ(s) over training {} -> {:.3}", trace.join(" "), agent.act(&s)?[0]);
    }
    Ok(())
}
