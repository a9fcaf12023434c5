//! Trains the hierarchical attacker on Sioux Falls (K = 4) and compares the
//! best greedy evaluation with the heuristic baselines.
//!
//! cargo run --release --example train_hmarl -- [episodes] [budget]

use traffic_hmarl::attack::{GreedyAttack, NullAttack};
use traffic_hmarl::decompose::kmeans_cluster;
use traffic_hmarl::network::{load_network, load_trips};
use traffic_hmarl::rl::{Hmarl, HmarlConfig};
use traffic_hmarl::simulator::run_episode;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let budget: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30.0);
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");
    let net = load_network(format!("{root}/SiouxFalls_net.tntp"))?;
    let trips = load_trips(format!("{root}/SiouxFalls_trips.tntp"))?;

    let config = HmarlConfig {
        budget,
        episodes,
        ..HmarlConfig::default()
    };
    let partition = kmeans_cluster(&net, 4, 0)?;
    let mut agent = Hmarl::new(&net, &trips, partition, config, 0)?;
    let outcome = agent.train_with(&net, &trips, 0, |row| {
        println!(
            "episode {:3}  steps {:3}  objective {:12.1}  critic loss high {:.3e} low {:.3e}  {:6.1}s",
            row.episode, row.steps, row.discounted_objective, row.critic_loss_high, row.mean_critic_loss_low, row.wallclock_s
        );
    })?;
    if let Some((episode, score)) = outcome.best {
        println!("best greedy evaluation after {episode} episodes: {score:.1}");
    }

    let none = run_episode(&net, &trips, &mut NullAttack, 200, 0.99)?.discounted_objective;
    let greedy = run_episode(&net, &trips, &mut GreedyAttack::new(budget), 200, 0.99)?.discounted_objective;
    let learned = agent.evaluate(&net, &trips)?.discounted_objective;
    println!("no attack {none:.1}\ngreedy    {greedy:.1}\nhmarl     {learned:.1} ({:+.2}% vs greedy)", 100.0 * (learned / greedy - 1.0));
    Ok(())
}
