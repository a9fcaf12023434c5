mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use traffic_hmarl::decompose::Partition;
use traffic_hmarl::neural::{Head, MlpNet};
use traffic_hmarl::rl::ddpg::{critic_loss_gradient, critic_targets, AgentBundle, AgentConfig, CriticSample};
use traffic_hmarl::rl::features::EdgeFeatures;
use traffic_hmarl::rl::maddpg::{update_maddpg, CriticInput, JointExperience};
use traffic_hmarl::rl::noise::OuNoise;
use traffic_hmarl::rl::{Hmarl, HmarlConfig};
use traffic_hmarl::simulator::SimState;

fn config() -> AgentConfig {
    AgentConfig {
        gamma: 0.9,
        actor_lr: 1e-4,
        critic_lr: 1e-3,
        tau: 0.05,
        hidden: vec![16, 16],
        actor_head: Head::Normalized(traffic_hmarl::neural::Normalization::Softmax),
        critic_head: Head::Linear,
    }
}

fn agents(k: usize, state: usize, action: usize, seed: u64) -> Vec<AgentBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|i| AgentBundle::new(state, action, None, config(), OuNoise::new(action, 0.15, 0.2, i as u64), &mut rng).unwrap())
        .collect()
}

fn joint_batch(rng: &mut ChaCha8Rng, n: usize, k: usize, rewards: &[f64]) -> Vec<JointExperience> {
    let vec = |rng: &mut ChaCha8Rng, len: usize| (0..len).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f64>>();
    (0..n)
        .map(|_| JointExperience {
            states: (0..k).map(|_| vec(rng, 4)).collect(),
            actions: (0..k)
                .map(|_| {
                    let a = vec(rng, 3);
                    let s: f64 = a.iter().sum();
                    a.iter().map(|x| x / s).collect()
                })
                .collect(),
            rewards: rewards.to_vec(),
            next_states: (0..k).map(|_| vec(rng, 4)).collect(),
            global: vec(rng, 2 * k),
            next_global: vec(rng, 2 * k),
            terminal: false,
        })
        .collect()
}

fn mean_q(agent: &AgentBundle, batch: &[JointExperience], k: usize) -> f64 {
    batch
        .iter()
        .map(|r| {
            let mut input = r.states[k].clone();
            input.extend_from_slice(&r.actions[k]);
            agent.q(&input).unwrap()
        })
        .sum::<f64>()
        / batch.len() as f64
}

#[test]
fn zero_rewards_drive_critics_to_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let batch = joint_batch(&mut rng, 32, 2, &[0.0, 0.0]);
    let refs: Vec<&JointExperience> = batch.iter().collect();
    let mut bundles = agents(2, 4, 3, 3);
    let q_abs = |b: &[AgentBundle]| (0..2).map(|k| mean_q(&b[k], &batch, k).abs()).sum::<f64>();
    let start = q_abs(&bundles);
    for _ in 0..300 {
        update_maddpg(&mut bundles, &refs, 0.9, CriticInput::Local).unwrap();
    }
    let end = q_abs(&bundles);
    assert!(end < start && end < 0.05, "|Q| went from {start} to {end}");
}

#[test]
fn agent_holding_the_vehicles_values_its_state_higher() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let batch = joint_batch(&mut rng, 64, 2, &[1.0, 0.0]);
    let refs: Vec<&JointExperience> = batch.iter().collect();
    for input in [CriticInput::Local, CriticInput::Joint] {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut bundles: Vec<AgentBundle> = (0..2)
            .map(|i| {
                let dims = input.len(i, &[4, 4], &[3, 3], 4);
                AgentBundle::new(4, 3, Some(dims), config(), OuNoise::new(3, 0.15, 0.2, i as u64), &mut rng).unwrap()
            })
            .collect();
        for _ in 0..400 {
            update_maddpg(&mut bundles, &refs, 0.5, input).unwrap();
        }
        let q = |k: usize| {
            batch
                .iter()
                .map(|r| {
                    let mut x = r.states[k].clone();
                    if input == CriticInput::Joint {
                        x.extend_from_slice(&r.global);
                        r.actions.iter().for_each(|a| x.extend_from_slice(a));
                    } else {
                        x.extend_from_slice(&r.actions[k]);
                    }
                    bundles[k].q(&x).unwrap()
                })
                .sum::<f64>()
                / batch.len() as f64
        };
        assert!(q(0) > q(1) + 0.5, "{input:?}: agent 0 {} vs agent 1 {}", q(0), q(1));
    }
}

#[test]
fn critic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let critic = MlpNet::new(&[5, 8, 6, 1], Head::Linear, &mut rng).unwrap();
    let target = MlpNet::new(&[5, 8, 6, 1], Head::Linear, &mut rng).unwrap();
    let samples: Vec<CriticSample> = (0..5)
        .map(|i| {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            CriticSample {
                actor_input: x[..3].to_vec(),
                critic_input: x.clone(),
                action_offset: 3,
                reward: rng.random_range(0.0..2.0),
                terminal: i == 0,
                next_critic_input: x.iter().map(|v| v * 0.5).collect(),
            }
        })
        .collect();
    let targets = critic_targets(&target, &samples, 0.9).unwrap();
    let (_, grads) = critic_loss_gradient(&critic, &samples, &targets).unwrap();
    let mut probe = critic.clone();
    let fd = common::finite_difference(&critic.parameters(), 1e-5, |p| {
        probe.set_parameters(p).unwrap();
        critic_loss_gradient(&probe, &samples, &targets).unwrap().0
    });
    assert!(common::max_relative_error(&grads.flatten(), &fd, 1e-4) < 1e-3);
}

#[test]
fn symmetric_untrained_hierarchy_spreads_uniformly() {
    let (net, trips) = common::sioux_falls();
    let partition = traffic_hmarl::decompose::kmeans_cluster(&net, 4, 0).unwrap();
    let config = HmarlConfig {
        budget: 20.0,
        ..HmarlConfig::default()
    };
    let mut agent = Hmarl::new(&net, &trips, partition.clone(), config, 0).unwrap();
    agent.zero_actor_parameters();
    let state = SimState::initial(&trips);
    let d = agent.act(&trips, &state, &EdgeFeatures::compute(&net, &trips, &state), false).unwrap();
    assert_eq!(d.allocation(20.0), vec![5.0; 4]);
    for k in 0..4 {
        let n = partition.component_edges(k).len() as f64;
        for &e in partition.component_edges(k) {
            assert!((d.perturbation.values()[e] - 5.0 / n).abs() < 1e-12);
        }
    }
}

#[test]
fn exploration_is_reproducible_per_seed() {
    let (net, trips) = common::diamond();
    let state = SimState::initial(&trips);
    let features = EdgeFeatures::compute(&net, &trips, &state);
    let run = || {
        let mut agent = Hmarl::new(&net, &trips, Partition::whole(&net), HmarlConfig::default(), 11).unwrap();
        (0..3).map(|_| agent.act(&trips, &state, &features, true).unwrap().perturbation).collect::<Vec<_>>()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_ne!(a[0], a[1]);
    for p in &a {
        assert!((p.l1_norm() - 30.0).abs() < 1e-9);
    }
}
