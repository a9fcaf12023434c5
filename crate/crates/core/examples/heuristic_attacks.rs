//! Compares the three heuristic attackers on Sioux Falls: network-wide
//! greedy, and proportional allocation + local greedy over K = 4
//! components (with both local denominators).
//!
//! cargo run --release --example heuristic_attacks

use traffic_hmarl::attack::{
    count_edge_demand, local_greedy, proportional_allocation, scatter_components, AttackContext, AttackPolicy,
    DecomposedGreedy, GreedyAttack, LocalDenominator, NullAttack,
};
use traffic_hmarl::decompose::{kmeans_cluster, Partition};
use traffic_hmarl::network::{load_network, load_trips};
use traffic_hmarl::simulator::{run_episode, Perturbation};

/// Decomposed greedy with the network-wide denominator. Components then
/// spend less than their share, so the leftover is spread uniformly to
/// keep the total at `B`.
struct GlobalDenominator {
    partition: Partition,
    budget: f64,
}

impl AttackPolicy for GlobalDenominator {
    fn name(&self) -> &str {
        "decomposed-greedy-global"
    }

    fn budget(&self) -> Option<f64> {
        Some(self.budget)
    }

    fn perturb(&mut self, ctx: &AttackContext<'_>) -> traffic_hmarl::Result<Perturbation> {
        let alloc = proportional_allocation(ctx.trips, ctx.state, &self.partition, self.budget);
        let demand = count_edge_demand(ctx.network, ctx.trips, ctx.state);
        let parts: Vec<Vec<f64>> = (0..self.partition.k())
            .map(|k| local_greedy(&demand, &self.partition, k, alloc[k], LocalDenominator::Global))
            .collect();
        let mut a = scatter_components(&self.partition, &parts, ctx.network.edge_count());
        let spent: f64 = a.iter().sum();
        let extra = (self.budget - spent) / a.len() as f64;
        a.iter_mut().for_each(|x| *x += extra);
        Ok(Perturbation(a))
    }
}

fn main() -> anyhow::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");
    let net = load_network(format!("{data}/SiouxFalls_net.tntp"))?;
    let trips = load_trips(format!("{data}/SiouxFalls_trips.tntp"))?;
    let partition = kmeans_cluster(&net, 4, 0)?;

    let none = run_episode(&net, &trips, &mut NullAttack, 200, 0.99)?.discounted_objective;
    println!("no attack {none:.1}");
    println!("{:>6} {:>14} {:>14} {:>14}", "B", "greedy", "decomposed", "global denom.");
    for budget in [5.0, 10.0, 15.0, 30.0] {
        let greedy = run_episode(&net, &trips, &mut GreedyAttack::new(budget), 200, 0.99)?;
        let decomposed = run_episode(&net, &trips, &mut DecomposedGreedy::new(partition.clone(), budget), 200, 0.99)?;
        let global = run_episode(
            &net,
            &trips,
            &mut GlobalDenominator {
                partition: partition.clone(),
                budget,
            },
            200,
            0.99,
        )?;
        println!(
            "{budget:>6} {:>14.1} {:>14.1} {:>14.1}",
            greedy.discounted_objective, decomposed.discounted_objective, global.discounted_objective
        );
    }
    Ok(())
}
