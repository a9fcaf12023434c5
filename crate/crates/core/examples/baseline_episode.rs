//! Runs Sioux Falls once without an attacker and once per greedy budget,
//! printing the discounted objective and episode length.
//!
//! cargo run --release --example baseline_episode

use traffic_hmarl::attack::{GreedyAttack, NullAttack};
use traffic_hmarl::network::{load_network, load_trips};
use traffic_hmarl::simulator::run_episode;

fn main() -> anyhow::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");
    let net = load_network(format!("{data}/SiouxFalls_net.tntp"))?;
    let trips = load_trips(format!("{data}/SiouxFalls_trips.tntp"))?;
    println!(
        "{} nodes, {} edges, {} trips, {} vehicles",
        net.node_count(),
        net.edge_count(),
        trips.len(),
        trips.total_demand()
    );

    let base = run_episode(&net, &trips, &mut NullAttack, 200, 0.99)?;
    println!(
        "none       objective {:>14.3}  steps {:>3}  all arrived {}",
        base.discounted_objective, base.steps_run, base.all_arrived
    );
    for budget in [5.0, 10.0, 15.0, 30.0] {
        let res = run_episode(&net, &trips, &mut GreedyAttack::new(budget), 200, 0.99)?;
        println!(
            "greedy {budget:>4} objective {:>14.3}  steps {:>3}  all arrived {}",
            res.discounted_objective, res.steps_run, res.all_arrived
        );
        let tail: Vec<String> = res.remaining_per_step.iter().step_by(20).map(|r| format!("{r:.0}")).collect();
        println!("    remaining every 20 steps: {}", tail.join(" "));
    }
    Ok(())
}
