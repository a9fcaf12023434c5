use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use traffic_hmarl::experiment::{self, ExperimentConfig, Strategy};

#[derive(Parser)]
#[command(name = "hmarl", version, about = "Traffic false-information attack simulator and trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode per budget with a heuristic attacker.
    Simulate(Overrides),
    /// Train a learning attacker and write checkpoints.
    Train(Overrides),
    /// Run one deterministic episode (learned attackers load a checkpoint).
    Evaluate(Overrides),
    /// Run the budget × strategy grid and write results.csv.
    Ablate(Overrides),
    /// Cluster the network into components and write the node map.
    Decompose(Overrides),
}

/// Flags override the config file, which overrides built-in defaults.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    net: Option<PathBuf>,
    #[arg(long)]
    trips: Option<PathBuf>,
    /// One budget, or a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    budget: Option<Vec<f64>>,
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    attacker: Option<Strategy>,
    /// Comma-separated strategies for `ablate`.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn resolve(self) -> anyhow::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.net {
            c.net = v;
        }
        if let Some(v) = self.trips {
            c.trips = v;
        }
        if let Some(v) = self.budget {
            c.budgets = v;
        }
        if let Some(v) = self.components {
            c.components = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.episodes {
            c.rl.episodes = v;
        }
        if let Some(v) = self.horizon {
            c.horizon = v;
        }
        if let Some(v) = self.attacker {
            c.attacker = v;
        }
        if let Some(v) = self.strategies {
            c.strategies = v;
        }
        if let Some(v) = self.checkpoint {
            c.checkpoint = Some(v);
        }
        if let Some(v) = self.out {
            c.out = v;
        }
        for w in c.rl.warnings() {
            eprintln!("warning: {w}");
        }
        Ok(c)
    }
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Simulate(o) => {
            let c = o.resolve()?;
            for (budget, r) in experiment::cmd_simulate(&c)? {
                println!(
                    "{} B={budget}: objective {:.3} over {} steps, all arrived: {}",
                    c.attacker, r.discounted_objective, r.steps_run, r.all_arrived
                );
            }
        }
        Command::Train(o) => {
            let c = o.resolve()?;
            let (_, outcome) = experiment::cmd_train(&c, |row| {
                println!(
                    "episode {} steps {} objective {:.3} ({:.1}s)",
                    row.episode, row.steps, row.discounted_objective, row.wallclock_s
                )
            })?;
            if let Some((episode, score)) = outcome.best {
                println!("kept parameters from episode {episode}: evaluation objective {score:.3}");
            }
            println!("checkpoint written to {}", c.out.join("checkpoint").display());
        }
        Command::Evaluate(o) => {
            let c = o.resolve()?;
            let r = experiment::cmd_evaluate(&c)?;
            println!(
                "{}: objective {:.3} over {} steps, all arrived: {}",
                c.attacker, r.discounted_objective, r.steps_run, r.all_arrived
            );
        }
        Command::Ablate(o) => {
            let c = o.resolve()?;
            for row in experiment::cmd_ablate(&c)? {
                println!("B={:<5} {:<18} {:.3}", row.budget, row.strategy, row.objective);
            }
            println!("results written to {}", c.out.join("results.csv").display());
        }
        Command::Decompose(o) => {
            let c = o.resolve()?;
            let p = experiment::cmd_decompose(&c)?;
            for k in 0..p.k() {
                let nodes: Vec<String> = (0..p.node_assignment().len())
                    .filter(|&v| p.node_component(v) == k)
                    .map(|v| (v + 1).to_string())
                    .collect();
                println!("component {k}: {} edges, nodes {}", p.component_edges(k).len(), nodes.join(" "));
            }
        }
    }
    Ok(())
}
