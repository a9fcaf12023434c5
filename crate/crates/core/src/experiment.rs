//! Experiment runner behind the `hmarl` binary: configuration, the five
//! subcommands, and run manifests.
//!
//! Every command writes `manifest.json` next to its outputs with the
//! configuration, the derived sub-seeds and SHA-256 hashes of inputs and
//! outputs. Outputs carry no timestamps, so equal manifests mean equal bytes
//! (training logs excepted, which record wall-clock time).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{AttackPolicy, DecomposedGreedy, GreedyAttack, NullAttack};
use crate::decompose::{kmeans_cluster, Partition};
use crate::error::{Error, Result};
use crate::network::{parse_tntp_net, parse_tntp_trips, RoadNetwork, TripTable};
use crate::rl::hmarl::{write_training_log, HighLevel, Hmarl, HmarlConfig, LowLevel, TrainingOutcome};
use crate::seed;
use crate::simulator::{run_episode, EpisodeResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    None,
    Greedy,
    DecomposedGreedy,
    Ddpg,
    AblationLow,
    AblationHigh,
    Hmarl,
}

impl Strategy {
    /// Column order of the ablation table.
    pub const ALL: [Strategy; 7] = [
        Strategy::None,
        Strategy::Greedy,
        Strategy::Ddpg,
        Strategy::DecomposedGreedy,
        Strategy::AblationLow,
        Strategy::AblationHigh,
        Strategy::Hmarl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Greedy => "greedy",
            Strategy::DecomposedGreedy => "decomposed-greedy",
            Strategy::Ddpg => "ddpg",
            Strategy::AblationLow => "ablation-low",
            Strategy::AblationHigh => "ablation-high",
            Strategy::Hmarl => "hmarl",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(
            self,
            Strategy::Ddpg | Strategy::AblationLow | Strategy::AblationHigh | Strategy::Hmarl
        )
    }

    /// Which levels learn: `(high, low)`.
    pub fn levels(self) -> Option<(HighLevel, LowLevel)> {
        match self {
            Strategy::Ddpg | Strategy::AblationLow => Some((HighLevel::Proportional, LowLevel::Learned)),
            Strategy::AblationHigh => Some((HighLevel::Learned, LowLevel::LocalGreedy)),
            Strategy::Hmarl => Some((HighLevel::Learned, LowLevel::Learned)),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Strategy::ALL.iter().map(|x| x.as_str()).collect();
                Error::Argument(format!("unknown attacker `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub net: PathBuf,
    pub trips: PathBuf,
    /// Budgets to run; `simulate` writes one CSV per entry, `ablate` one
    /// row per entry and strategy, `train`/`evaluate` use the first.
    pub budgets: Vec<f64>,
    pub components: usize,
    pub seed: u64,
    pub horizon: usize,
    pub gamma_eval: f64,
    pub attacker: Strategy,
    pub strategies: Vec<Strategy>,
    pub out: PathBuf,
    /// Checkpoint directory for `evaluate`; defaults to `<out>/checkpoint`.
    pub checkpoint: Option<PathBuf>,
    pub rl: HmarlConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            net: PathBuf::from("data/SiouxFalls_net.tntp"),
            trips: PathBuf::from("data/SiouxFalls_trips.tntp"),
            budgets: vec![30.0],
            components: 4,
            seed: 0,
            horizon: 200,
            gamma_eval: 0.99,
            attacker: Strategy::Greedy,
            strategies: Strategy::ALL.to_vec(),
            out: PathBuf::from("runs"),
            checkpoint: None,
            rl: HmarlConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.is_empty() {
            return Err(Error::Config("at least one budget is required".into()));
        }
        if let Some(b) = self.budgets.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return Err(Error::Config(format!("budget must be >= 0, got {b}")));
        }
        if self.components == 0 {
            return Err(Error::Config("components must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if !(self.gamma_eval > 0.0 && self.gamma_eval < 1.0) {
            return Err(Error::Config("gamma_eval must lie in (0, 1)".into()));
        }
        for p in [&self.net, &self.trips] {
            if !p.is_file() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn budget(&self) -> f64 {
        self.budgets[0]
    }

    /// Trainer settings for `strategy` at `budget`, with the experiment's
    /// horizon and evaluation discount.
    pub fn hmarl_config(&self, strategy: Strategy, budget: f64) -> Result<HmarlConfig> {
        let (high_level, low_level) = strategy
            .levels()
            .ok_or_else(|| Error::Argument(format!("`{strategy}` is not a learning attacker")))?;
        Ok(HmarlConfig {
            budget,
            horizon: self.horizon,
            gamma_eval: self.gamma_eval,
            high_level,
            low_level,
            ..self.rl.clone()
        })
    }

    pub fn sub_seeds(&self) -> BTreeMap<&'static str, u64> {
        [seed::DEMAND, seed::CLUSTERING, seed::NET_INIT, seed::NOISE, seed::SAMPLING]
            .into_iter()
            .map(|name| (name, seed::derive_seed(self.seed, name)))
            .collect()
    }
}

/// Network and demand loaded once per command, with their file hashes.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub network: RoadNetwork,
    pub trips: TripTable,
    pub hashes: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_inputs(config: &ExperimentConfig) -> Result<Inputs> {
    let net_bytes = read(&config.net)?;
    let trip_bytes = read(&config.trips)?;
    let utf8 = |b: Vec<u8>, p: &Path| {
        String::from_utf8(b).map_err(|e| Error::Config(format!("{} is not UTF-8: {e}", p.display())))
    };
    let mut hashes = BTreeMap::new();
    hashes.insert(config.net.display().to_string(), sha256_hex(&net_bytes));
    hashes.insert(config.trips.display().to_string(), sha256_hex(&trip_bytes));
    let network = parse_tntp_net(&utf8(net_bytes, &config.net)?)?;
    let trips = parse_tntp_trips(&utf8(trip_bytes, &config.trips)?)?;
    trips.check_against(&network)?;
    Ok(Inputs { network, trips, hashes })
}

/// K-means partition with the clustering sub-seed, or the whole network
/// for network-wide DDPG.
pub fn partition_for(config: &ExperimentConfig, network: &RoadNetwork, strategy: Strategy) -> Result<Partition> {
    if strategy == Strategy::Ddpg {
        return Ok(Partition::whole(network));
    }
    kmeans_cluster(network, config.components, seed::derive_seed(config.seed, seed::CLUSTERING))
}

/// Non-learning attackers by name.
pub fn heuristic_policy(
    config: &ExperimentConfig,
    network: &RoadNetwork,
    strategy: Strategy,
    budget: f64,
) -> Result<Box<dyn AttackPolicy + Send>> {
    Ok(match strategy {
        Strategy::None => Box::new(NullAttack),
        Strategy::Greedy => Box::new(GreedyAttack::new(budget)),
        Strategy::DecomposedGreedy => Box::new(DecomposedGreedy::new(partition_for(config, network, strategy)?, budget)),
        learned => {
            return Err(Error::Argument(format!(
                "`{learned}` must be trained first (use `train`, then `evaluate`)"
            )))
        }
    })
}

pub fn train_strategy(
    config: &ExperimentConfig,
    inputs: &Inputs,
    strategy: Strategy,
    budget: f64,
    on_episode: impl FnMut(&crate::rl::hmarl::EpisodeLog),
) -> Result<(Hmarl, TrainingOutcome)> {
    let partition = partition_for(config, &inputs.network, strategy)?;
    let mut agent = Hmarl::new(
        &inputs.network,
        &inputs.trips,
        partition,
        config.hmarl_config(strategy, budget)?,
        config.seed,
    )?
    .with_name(strategy.as_str());
    let outcome = agent.train_with(&inputs.network, &inputs.trips, config.seed, on_episode)?;
    Ok((agent, outcome))
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    sub_seeds: BTreeMap<&'static str, u64>,
    config: &'a ExperimentConfig,
    inputs: &'a BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

fn create_out(config: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Hashes the listed files (relative to `out`) into `manifest.json`.
fn write_manifest(config: &ExperimentConfig, inputs: &Inputs, command: &str, outputs: &[String]) -> Result<PathBuf> {
    let mut hashes = BTreeMap::new();
    for name in outputs {
        hashes.insert(name.clone(), sha256_hex(&read(&config.out.join(name))?));
    }
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        sub_seeds: config.sub_seeds(),
        config,
        inputs: &inputs.hashes,
        outputs: hashes,
    };
    let path = config.out.join("manifest.json");
    write_file(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(path)
}

fn episode_csv(result: &EpisodeResult, gamma: f64) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    result.write_csv(gamma, &mut buf)?;
    Ok(buf)
}

fn budget_label(budget: f64) -> String {
    format!("{budget}")
}

/// One evaluation episode per configured budget with a non-learning
/// attacker; writes `simulate_<attacker>_B<budget>.csv` for each.
pub fn cmd_simulate(config: &ExperimentConfig) -> Result<Vec<(f64, EpisodeResult)>> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    create_out(config)?;
    let mut results = Vec::new();
    let mut outputs = Vec::new();
    for &budget in &config.budgets {
        let mut policy = heuristic_policy(config, &inputs.network, config.attacker, budget)?;
        let result = run_episode(&inputs.network, &inputs.trips, policy.as_mut(), config.horizon, config.gamma_eval)?;
        let name = format!("simulate_{}_B{}.csv", config.attacker, budget_label(budget));
        write_file(&config.out.join(&name), &episode_csv(&result, config.gamma_eval)?)?;
        outputs.push(name);
        results.push((budget, result));
    }
    write_manifest(config, &inputs, "simulate", &outputs)?;
    Ok(results)
}

/// Trains the selected learning attacker at the first budget; writes
/// `training_log.csv` and `checkpoint/`.
pub fn cmd_train(
    config: &ExperimentConfig,
    on_episode: impl FnMut(&crate::rl::hmarl::EpisodeLog),
) -> Result<(Hmarl, TrainingOutcome)> {
    config.validate()?;
    if !config.attacker.is_learned() {
        return Err(Error::Argument(format!("`{}` has nothing to train", config.attacker)));
    }
    let inputs = load_inputs(config)?;
    create_out(config)?;
    let (agent, outcome) = train_strategy(config, &inputs, config.attacker, config.budget(), on_episode)?;
    let mut log = Vec::new();
    write_training_log(&outcome.log, &mut log)?;
    write_file(&config.out.join("training_log.csv"), &log)?;
    agent.save(&config.out.join("checkpoint"))?;
    write_manifest(config, &inputs, "train", &["training_log.csv".into()])?;
    Ok((agent, outcome))
}

/// Evaluation episode without exploration: learned attackers are loaded
/// from the checkpoint, heuristics are built directly. Writes
/// `evaluate_<attacker>.csv`.
pub fn cmd_evaluate(config: &ExperimentConfig) -> Result<EpisodeResult> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    create_out(config)?;
    let result = if config.attacker.is_learned() {
        let dir = config.checkpoint.clone().unwrap_or_else(|| config.out.join("checkpoint"));
        let mut agent = Hmarl::load(&dir, &inputs.network)?;
        run_episode(&inputs.network, &inputs.trips, &mut agent, config.horizon, config.gamma_eval)?
    } else {
        let mut policy = heuristic_policy(config, &inputs.network, config.attacker, config.budget())?;
        run_episode(&inputs.network, &inputs.trips, policy.as_mut(), config.horizon, config.gamma_eval)?
    };
    let name = format!("evaluate_{}.csv", config.attacker);
    write_file(&config.out.join(&name), &episode_csv(&result, config.gamma_eval)?)?;
    write_manifest(config, &inputs, "evaluate", &[name])?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub budget: f64,
    pub strategy: Strategy,
    pub objective: f64,
    pub seed: u64,
}

/// Every (budget, strategy) cell: heuristics run one episode, learning
/// attackers train then run one greedy episode. Cells run on the rayon
/// pool; rows come back in grid order. Writes `results.csv`.
pub fn cmd_ablate(config: &ExperimentConfig) -> Result<Vec<AblationRow>> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    create_out(config)?;
    let cells: Vec<(f64, Strategy)> = config
        .budgets
        .iter()
        .flat_map(|&b| config.strategies.iter().map(move |&s| (b, s)))
        .collect();
    let rows: Vec<AblationRow> = cells
        .par_iter()
        .map(|&(budget, strategy)| {
            let result = if strategy.is_learned() {
                let (mut agent, _) = train_strategy(config, &inputs, strategy, budget, |_| {})?;
                run_episode(&inputs.network, &inputs.trips, &mut agent, config.horizon, config.gamma_eval)?
            } else {
                let mut policy = heuristic_policy(config, &inputs.network, strategy, budget)?;
                run_episode(&inputs.network, &inputs.trips, policy.as_mut(), config.horizon, config.gamma_eval)?
            };
            Ok(AblationRow {
                budget,
                strategy,
                objective: result.discounted_objective,
                seed: config.seed,
            })
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("results.csv", e.into_error()))?;
    write_file(&config.out.join("results.csv"), &bytes)?;
    write_manifest(config, &inputs, "ablate", &["results.csv".into()])?;
    Ok(rows)
}

/// K-means partition written as `partition.txt`.
pub fn cmd_decompose(config: &ExperimentConfig) -> Result<Partition> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    create_out(config)?;
    let partition = kmeans_cluster(
        &inputs.network,
        config.components,
        seed::derive_seed(config.seed, seed::CLUSTERING),
    )?;
    write_file(&config.out.join("partition.txt"), partition.to_text_map().as_bytes())?;
    write_manifest(config, &inputs, "decompose", &["partition.txt".into()])?;
    Ok(partition)
}
