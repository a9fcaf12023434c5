//! Runs the budget × strategy grid through the experiment runner and prints
//! it as a table. Episodes default to a short run; pass a count to train
//! longer.
//!
//! cargo run --release --example ablation_grid -- [episodes] [out-dir]

use std::collections::BTreeMap;

use traffic_hmarl::experiment::{cmd_ablate, ExperimentConfig, Strategy};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let out = args.next().unwrap_or_else(|| "runs/ablation".into());
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");
    let mut config = ExperimentConfig {
        net: format!("{data}/SiouxFalls_net.tntp").into(),
        trips: format!("{data}/SiouxFalls_trips.tntp").into(),
        budgets: vec![5.0, 10.0, 15.0, 30.0],
        out: out.into(),
        ..ExperimentConfig::default()
    };
    config.rl.episodes = episodes;

    let rows = cmd_ablate(&config)?;
    let mut table: BTreeMap<u64, BTreeMap<Strategy, f64>> = BTreeMap::new();
    for r in &rows {
        table.entry(r.budget.to_bits()).or_default().insert(r.strategy, r.objective);
    }
    print!("{:>5}", "B");
    for s in Strategy::ALL {
        print!(" {:>17}", s.as_str());
    }
    println!();
    for (bits, cells) in &table {
        print!("{:>5}", f64::from_bits(*bits));
        for s in Strategy::ALL {
            print!(" {:>17.1}", cells[&s]);
        }
        println!();
    }
    println!("wrote {}", config.out.join("results.csv").display());
    Ok(())
}
