//! Builds a network from TNTP text, writes a custom attacker that always
//! targets the busiest edge, and runs it against the built-in ones.
//!
//! cargo run --release --example custom_network

use traffic_hmarl::attack::{count_edge_demand, AttackContext, AttackPolicy, GreedyAttack, NullAttack};
use traffic_hmarl::network::{parse_tntp_net, parse_tntp_trips};
use traffic_hmarl::simulator::{run_episode, Perturbation};

const NET: &str = "<NUMBER OF ZONES> 4
<NUMBER OF NODES> 4
<FIRST THRU NODE> 1
<NUMBER OF LINKS> 5
<END OF METADATA>
~ init term capacity length fft b power speed toll type ;
1 2 100 1 2 0.15 4 0 0 1 ;
2 4 100 1 2 0.15 4 0 0 1 ;
1 3 100 1 3 0.15 4 0 0 1 ;
3 4 50 1 3 0.15 4 0 0 1 ;
2 3 100 1 1 0.15 4 0 0 1 ;
";

const TRIPS: &str = "<NUMBER OF ZONES> 4
<TOTAL OD FLOW> 300
<END OF METADATA>
Origin 1
    4 : 200.0;
Origin 2
    4 : 100.0;
";

/// Whole budget on the edge most vehicles plan to use.
struct Busiest(f64);

impl AttackPolicy for Busiest {
    fn name(&self) -> &str {
        "busiest-edge"
    }

    fn budget(&self) -> Option<f64> {
        Some(self.0)
    }

    fn perturb(&mut self, ctx: &AttackContext<'_>) -> traffic_hmarl::Result<Perturbation> {
        let s = count_edge_demand(ctx.network, ctx.trips, ctx.state).0;
        let top = (0..s.len()).max_by(|&a, &b| s[a].total_cmp(&s[b]).then(b.cmp(&a))).unwrap_or(0);
        let mut a = Perturbation::zeros(s.len());
        a.0[top] = self.0;
        Ok(a)
    }
}

fn main() -> anyhow::Result<()> {
    let net = parse_tntp_net(NET)?;
    let trips = parse_tntp_trips(TRIPS)?;
    let mut policies: Vec<Box<dyn AttackPolicy>> =
        vec![Box::new(NullAttack), Box::new(GreedyAttack::new(6.0)), Box::new(Busiest(6.0))];
    for p in &mut policies {
        let r = run_episode(&net, &trips, p.as_mut(), 100, 0.99)?;
        println!(
            "{:<14} objective {:>9.2}  steps {:>2}  remaining {:?}",
            p.name(),
            r.discounted_objective,
            r.steps_run,
            r.remaining_per_step
        );
    }
    Ok(())
}
