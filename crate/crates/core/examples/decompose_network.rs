//! Splits Sioux Falls into components with k-medoids on free-flow
//! distances and prints membership, medoids and the cost trace.
//!
//! cargo run --release --example decompose_network -- [K] [seed]

use traffic_hmarl::decompose::kmeans_cluster_traced;
use traffic_hmarl::network::load_network;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let net = load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/SiouxFalls_net.tntp"))?;

    let c = kmeans_cluster_traced(&net, k, seed)?;
    println!("{} iterations, cost {:?}", c.iterations, c.cost_history);
    let p = &c.partition;
    for comp in 0..p.k() {
        let nodes: Vec<String> = (0..net.node_count())
            .filter(|&v| p.node_component(v) == comp)
            .map(|v| (v + 1).to_string())
            .collect();
        println!(
            "component {comp}: medoid {:>2}, {:>2} edges, nodes {}",
            p.medoids()[comp] + 1,
            p.component_edges(comp).len(),
            nodes.join(" ")
        );
    }
    print!("\n{}", p.to_text_map());
    Ok(())
}
