mod common;

use std::path::Path;
use std::process::Command;

use traffic_hmarl::experiment::{
    cmd_ablate, cmd_decompose, cmd_evaluate, cmd_simulate, cmd_train, ExperimentConfig, Strategy,
};
use traffic_hmarl::decompose::Partition;
use traffic_hmarl::network::load_network;

fn config(out: &Path) -> ExperimentConfig {
    let data = common::data_dir();
    let mut c = ExperimentConfig {
        net: data.join("SiouxFalls_net.tntp"),
        trips: data.join("SiouxFalls_trips.tntp"),
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    };
    c.rl.episodes = 1;
    c.rl.batch_size = 16;
    c.rl.high.hidden = vec![16];
    c.rl.low.hidden = vec![16];
    c
}

#[test]
fn simulate_writes_one_csv_per_budget() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig {
        budgets: vec![5.0, 10.0, 15.0, 30.0],
        ..config(dir.path())
    };
    let results = cmd_simulate(&c).unwrap();
    assert_eq!(results.len(), 4);
    for b in ["5", "10", "15", "30"] {
        assert!(dir.path().join(format!("simulate_greedy_B{b}.csv")).is_file());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_object().unwrap().len(), 4);
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 2);
    assert_eq!(manifest["sub_seeds"].as_object().unwrap().len(), 5);
}

#[test]
fn zero_budget_greedy_equals_no_attack() {
    let dir = tempfile::tempdir().unwrap();
    let greedy = cmd_simulate(&ExperimentConfig {
        budgets: vec![0.0],
        ..config(dir.path())
    })
    .unwrap();
    let none = cmd_simulate(&ExperimentConfig {
        attacker: Strategy::None,
        ..config(dir.path())
    })
    .unwrap();
    assert_eq!(greedy[0].1, none[0].1);
    assert!(none[0].1.all_arrived);
}

#[test]
fn learned_attackers_cannot_be_simulated_without_training() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig {
        attacker: Strategy::Hmarl,
        ..config(dir.path())
    };
    assert!(cmd_simulate(&c).is_err());
}

#[test]
fn small_ablation_grid() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig {
        budgets: vec![5.0],
        strategies: vec![Strategy::None, Strategy::Greedy],
        ..config(dir.path())
    };
    let rows = cmd_ablate(&c).unwrap();
    assert_eq!(rows.len(), 2);
    let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("budget,strategy,objective,seed"));
    assert!(lines.next().unwrap().starts_with("5.0,none,"));
    assert!(lines.next().unwrap().starts_with("5.0,greedy,"));
}

#[test]
fn train_then_evaluate_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig {
        attacker: Strategy::Hmarl,
        ..config(dir.path())
    };
    let (mut agent, outcome) = cmd_train(&c, |_| {}).unwrap();
    assert_eq!(outcome.log.len(), 1);
    let ckpt = dir.path().join("checkpoint");
    assert!(ckpt.join("high_actor.bin").is_file());
    for k in 0..4 {
        assert!(ckpt.join(format!("low_{k}_critic_target.json")).is_file());
    }
    let (net, trips) = common::sioux_falls();
    let direct = agent.evaluate(&net, &trips).unwrap();
    assert_eq!(cmd_evaluate(&c).unwrap(), direct);
    assert!(dir.path().join("evaluate_hmarl.csv").is_file());
}

#[test]
fn network_wide_ddpg_acts_on_every_edge() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig {
        attacker: Strategy::Ddpg,
        ..config(dir.path())
    };
    let (agent, _) = cmd_train(&c, |_| {}).unwrap();
    assert!(agent.high().is_none());
    assert_eq!(agent.low().len(), 1);
    assert_eq!(agent.low()[0].action_dim(), 76);
}

#[test]
fn zero_episodes_leaves_an_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig {
        attacker: Strategy::AblationHigh,
        ..config(dir.path())
    };
    c.rl.episodes = 0;
    let (_, outcome) = cmd_train(&c, |_| {}).unwrap();
    assert!(outcome.log.is_empty());
    let log = std::fs::read_to_string(dir.path().join("training_log.csv")).unwrap();
    assert_eq!(
        log.trim(),
        "episode,steps,undiscounted_objective,discounted_objective,critic_loss_high,mean_critic_loss_low,wallclock_s"
    );
    assert!(dir.path().join("checkpoint/high_actor.bin").is_file());
}

#[test]
fn decompose_writes_a_parseable_map() {
    let dir = tempfile::tempdir().unwrap();
    let p = cmd_decompose(&config(dir.path())).unwrap();
    let net = load_network(common::data_dir().join("SiouxFalls_net.tntp")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("partition.txt")).unwrap();
    assert_eq!(Partition::parse_text_map(&net, &text).unwrap(), p);
}

#[test]
fn missing_input_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig {
        net: dir.path().join("absent.tntp"),
        ..config(dir.path())
    };
    assert!(cmd_simulate(&c).unwrap_err().to_string().contains("absent.tntp"));
}

#[test]
fn binary_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::data_dir();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "budgets = [99.0]\nattacker = \"none\"\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hmarl"))
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--net")
        .arg(data.join("SiouxFalls_net.tntp"))
        .arg("--trips")
        .arg(data.join("SiouxFalls_trips.tntp"))
        .args(["--attacker", "greedy", "--budget", "5,10", "--horizon", "50", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("greedy B=5"), "{stdout}");
    assert!(dir.path().join("simulate_greedy_B10.csv").is_file());
    assert!(!dir.path().join("simulate_none_B99.csv").exists());

    let bad = Command::new(env!("CARGO_BIN_EXE_hmarl"))
        .args(["simulate", "--attacker", "bogus"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}
