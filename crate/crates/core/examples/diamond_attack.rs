//! Four-node network with a fast route and a slow, congestible one. Greedy
//! spreads the budget along the routes vehicles already use and never
//! diverts anyone; the trained attacker learns to make the fast route look
//! slow enough to push traffic onto the bottleneck.
//!
//! cargo run --release --example diamond_attack

use traffic_hmarl::attack::{GreedyAttack, NullAttack};
use traffic_hmarl::decompose::Partition;
use traffic_hmarl::network::{RoadNetwork, Trip, TripTable};
use traffic_hmarl::rl::{Hmarl, HmarlConfig};
use traffic_hmarl::simulator::run_episode;

fn main() -> anyhow::Result<()> {
    let net = RoadNetwork::from_tuples(
        4,
        &[
            (0, 1, 2.0, 100.0, 0.15, 4.0),
            (1, 3, 2.0, 100.0, 0.15, 4.0),
            (0, 2, 2.0, 100.0, 0.15, 4.0),
            (2, 3, 4.0, 10.0, 0.15, 4.0),
        ],
    )?;
    let trips = TripTable::new([
        Trip { origin: 0, destination: 3, size: 10.0 },
        Trip { origin: 2, destination: 3, size: 30.0 },
    ])?;
    let budget = 40.0;

    let none = run_episode(&net, &trips, &mut NullAttack, 200, 0.99)?;
    let greedy = run_episode(&net, &trips, &mut GreedyAttack::new(budget), 200, 0.99)?;

    let mut config = HmarlConfig {
        budget,
        episodes: 300,
        batch_size: 64,
        ..HmarlConfig::default()
    };
    config.low.hidden = vec![32, 32];
    config.high.hidden = vec![32, 32];
    let mut agent = Hmarl::new(&net, &trips, Partition::whole(&net), config, 0)?;
    let outcome = agent.train(&net, &trips, 0)?;
    for (episodes, score) in outcome.evaluations.iter().step_by(5) {
        println!("after {episodes:>3} episodes: {score:.2}");
    }
    let trained = agent.evaluate(&net, &trips)?;

    println!("no attack {:>8.2} ({} steps)", none.discounted_objective, none.steps_run);
    println!("greedy    {:>8.2} ({} steps)", greedy.discounted_objective, greedy.steps_run);
    println!("trained   {:>8.2} ({} steps)", trained.discounted_objective, trained.steps_run);
    Ok(())
}
