//! Trains a few episodes, saves the agents, reloads them into a fresh
//! attacker and checks that evaluation is unchanged.
//!
//! cargo run --release --example checkpoint_evaluate -- [dir]

use traffic_hmarl::decompose::kmeans_cluster;
use traffic_hmarl::network::{load_network, load_trips};
use traffic_hmarl::rl::hmarl::write_training_log;
use traffic_hmarl::rl::{Hmarl, HmarlConfig};

fn main() -> anyhow::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "runs/checkpoint".into());
    let dir = std::path::Path::new(&dir);
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");
    let net = load_network(format!("{data}/SiouxFalls_net.tntp"))?;
    let trips = load_trips(format!("{data}/SiouxFalls_trips.tntp"))?;

    let config = HmarlConfig {
        budget: 15.0,
        episodes: 8,
        batch_size: 64,
        ..HmarlConfig::default()
    };
    let mut agent = Hmarl::new(&net, &trips, kmeans_cluster(&net, 4, 0)?, config, 1)?;
    let outcome = agent.train(&net, &trips, 1)?;
    write_training_log(&outcome.log, std::io::stdout())?;

    agent.save(dir)?;
    let mut restored = Hmarl::load(dir, &net)?;
    let a = agent.evaluate(&net, &trips)?;
    let b = restored.evaluate(&net, &trips)?;
    println!("in memory {:.3}, reloaded {:.3}, identical: {}", a.discounted_objective, b.discounted_objective, a == b);
    Ok(())
}
