//! Attacker policies: the interface the simulator calls each step, and the
//! non-learning baselines (null, network greedy, decomposed greedy).

use crate::decompose::Partition;
use crate::error::Result;
use crate::network::{RoadNetwork, TripTable};
use crate::routing::RouteCache;
use crate::simulator::{congested_times, Perturbation, SimState};

/// Everything the attacker observes at a timestep.
#[derive(Clone, Copy)]
pub struct AttackContext<'a> {
    pub network: &'a RoadNetwork,
    pub trips: &'a TripTable,
    pub state: &'a SimState,
}

pub trait AttackPolicy {
    fn name(&self) -> &str;

    /// Per-step L1 budget. `None` marks the null attacker, which must emit
    /// all zeros.
    fn budget(&self) -> Option<f64>;

    /// Called at the start of every episode.
    fn reset(&mut self) {}

    fn perturb(&mut self, ctx: &AttackContext<'_>) -> Result<Perturbation>;
}

/// Per-edge vehicle counts along unperturbed shortest routes of the vehicles
/// currently deciding.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteDemand {
    /// Σ s_r over deciding trips whose route contains the edge.
    pub through: Vec<f64>,
    /// Σ s_r over deciding trips whose route starts with the edge.
    pub first: Vec<f64>,
}

/// Routes every deciding trip under the current actual travel times.
pub fn route_demand(network: &RoadNetwork, trips: &TripTable, state: &SimState) -> RouteDemand {
    let actual = congested_times(network, state, trips);
    route_demand_under(network, trips, state, &actual)
}

pub fn route_demand_under(network: &RoadNetwork, trips: &TripTable, state: &SimState, weights: &[f64]) -> RouteDemand {
    let mut through = vec![0.0; network.edge_count()];
    let mut first = vec![0.0; network.edge_count()];
    let mut routes = RouteCache::new(network, weights);
    for (r, trip) in trips.trips().iter().enumerate() {
        if !state.is_deciding(r) {
            continue;
        }
        let crate::simulator::VehicleLocation::AtNode(v) = state.location(r) else {
            continue;
        };
        if let Some(route) = routes.edges(v, trip.destination) {
            for &e in &route {
                through[e] += trip.size;
            }
            if let Some(&e) = route.first() {
                first[e] += trip.size;
            }
        }
    }
    RouteDemand { through, first }
}

/// `s_e`: vehicles whose current unperturbed shortest route uses each edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDemandCount(pub Vec<f64>);

pub fn count_edge_demand(network: &RoadNetwork, trips: &TripTable, state: &SimState) -> EdgeDemandCount {
    EdgeDemandCount(route_demand(network, trips, state).through)
}

/// Splits `total` proportionally to `weights`; uniform when all weights are zero.
pub fn proportional_split(weights: &[f64], total: f64) -> Vec<f64> {
    if weights.is_empty() {
        return Vec::new();
    }
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 {
        weights.iter().map(|w| w / sum * total).collect()
    } else {
        vec![total / weights.len() as f64; weights.len()]
    }
}

/// Network-wide greedy: `a_e = s_e / Σ s · B`.
pub fn greedy_attack(network: &RoadNetwork, trips: &TripTable, state: &SimState, budget: f64) -> Perturbation {
    Perturbation(proportional_split(&count_edge_demand(network, trips, state).0, budget))
}

/// Budget per component, proportional to the vehicles deciding at nodes in it.
pub fn proportional_allocation(trips: &TripTable, state: &SimState, partition: &Partition, budget: f64) -> Vec<f64> {
    proportional_split(&deciding_per_component(trips, state, partition), budget)
}

pub fn deciding_per_component(trips: &TripTable, state: &SimState, partition: &Partition) -> Vec<f64> {
    let mut deciding = vec![0.0; partition.k()];
    for (r, trip) in trips.trips().iter().enumerate() {
        if let (true, crate::simulator::VehicleLocation::AtNode(v)) = (state.is_deciding(r), state.location(r)) {
            deciding[partition.node_component(v)] += trip.size;
        }
    }
    deciding
}

/// Denominator used when a component spreads its budget over its edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LocalDenominator {
    /// Σ over the component's own edges; the component spends exactly `b̂_k`.
    #[default]
    Component,
    /// Σ over every edge of the network; the component spends at most `b̂_k`.
    Global,
}

/// Spreads `component_budget` over the edges of component `k` (in
/// [`Partition::component_edges`] order) in proportion to `s_e`.
pub fn local_greedy(
    demand: &EdgeDemandCount,
    partition: &Partition,
    k: usize,
    component_budget: f64,
    denominator: LocalDenominator,
) -> Vec<f64> {
    let edges = partition.component_edges(k);
    let local: Vec<f64> = edges.iter().map(|&e| demand.0[e]).collect();
    match denominator {
        LocalDenominator::Component => proportional_split(&local, component_budget),
        LocalDenominator::Global => {
            let global: f64 = demand.0.iter().sum();
            if global > 0.0 {
                local.iter().map(|s| s / global * component_budget).collect()
            } else {
                proportional_split(&local, component_budget)
            }
        }
    }
}

/// Writes per-component edge values back into a full per-edge vector.
pub fn scatter_components(partition: &Partition, per_component: &[Vec<f64>], edge_count: usize) -> Vec<f64> {
    let mut out = vec![0.0; edge_count];
    for (k, values) in per_component.iter().enumerate() {
        for (&e, &v) in partition.component_edges(k).iter().zip(values) {
            out[e] = v;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NullAttack;

impl AttackPolicy for NullAttack {
    fn name(&self) -> &str {
        "none"
    }

    fn budget(&self) -> Option<f64> {
        None
    }

    fn perturb(&mut self, ctx: &AttackContext<'_>) -> Result<Perturbation> {
        Ok(Perturbation::zeros(ctx.network.edge_count()))
    }
}

#[derive(Debug, Clone)]
pub struct GreedyAttack {
    budget: f64,
}

impl GreedyAttack {
    pub fn new(budget: f64) -> Self {
        GreedyAttack { budget }
    }
}

impl AttackPolicy for GreedyAttack {
    fn name(&self) -> &str {
        "greedy"
    }

    fn budget(&self) -> Option<f64> {
        Some(self.budget)
    }

    fn perturb(&mut self, ctx: &AttackContext<'_>) -> Result<Perturbation> {
        Ok(greedy_attack(ctx.network, ctx.trips, ctx.state, self.budget))
    }
}

/// Proportional allocation across components, local greedy within each.
#[derive(Debug, Clone)]
pub struct DecomposedGreedy {
    partition: Partition,
    budget: f64,
}

impl DecomposedGreedy {
    pub fn new(partition: Partition, budget: f64) -> Self {
        DecomposedGreedy { partition, budget }
    }
}

impl AttackPolicy for DecomposedGreedy {
    fn name(&self) -> &str {
        "decomposed-greedy"
    }

    fn budget(&self) -> Option<f64> {
        Some(self.budget)
    }

    fn perturb(&mut self, ctx: &AttackContext<'_>) -> Result<Perturbation> {
        let alloc = proportional_allocation(ctx.trips, ctx.state, &self.partition, self.budget);
        let demand = count_edge_demand(ctx.network, ctx.trips, ctx.state);
        let per_component: Vec<Vec<f64>> = (0..self.partition.k())
            .map(|k| local_greedy(&demand, &self.partition, k, alloc[k], LocalDenominator::Component))
            .collect();
        Ok(Perturbation(scatter_components(
            &self.partition,
            &per_component,
            ctx.network.edge_count(),
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Trip;
    use crate::simulator::VehicleLocation;

    #[test]
    fn split_arithmetic() {
        assert_eq!(proportional_split(&[2.0, 3.0, 5.0], 10.0), vec![2.0, 3.0, 5.0]);
        assert_eq!(proportional_split(&[7.0, 0.0, 0.0], 4.5), vec![4.5, 0.0, 0.0]);
        assert_eq!(proportional_split(&[0.0; 3], 6.0), vec![2.0, 2.0, 2.0]);
        assert_eq!(proportional_split(&[10.0, 30.0], 8.0), vec![2.0, 6.0]);
        assert_eq!(proportional_split(&[1.0, 3.0], 8.0), vec![2.0, 6.0]);
        assert_eq!(proportional_split(&[1.0, 3.0], 0.0), vec![0.0, 0.0]);
    }

    fn chain() -> (RoadNetwork, TripTable) {
        // 0 -e0-> 1 -e1-> 2 -e2-> 3, plus a slow bypass 0 -e3-> 3
        let net = RoadNetwork::from_tuples(
            4,
            &[
                (0, 1, 1.0, 100.0, 0.15, 4.0),
                (1, 2, 1.0, 100.0, 0.15, 4.0),
                (2, 3, 1.0, 100.0, 0.15, 4.0),
                (0, 3, 10.0, 100.0, 0.15, 4.0),
            ],
        )
        .unwrap();
        let trips = TripTable::new([Trip { origin: 0, destination: 2, size: 10.0 }]).unwrap();
        (net, trips)
    }

    #[test]
    fn single_trip_demand() {
        let (net, trips) = chain();
        let s = count_edge_demand(&net, &trips, &SimState::initial(&trips));
        assert_eq!(s.0, vec![10.0, 10.0, 0.0, 0.0]);
        let arrived = SimState::from_locations(&trips, 3, vec![VehicleLocation::AtNode(2)]).unwrap();
        assert_eq!(count_edge_demand(&net, &trips, &arrived).0, vec![0.0; 4]);
    }

    #[test]
    fn greedy_spends_budget_on_routes() {
        let (net, trips) = chain();
        let a = greedy_attack(&net, &trips, &SimState::initial(&trips), 6.0);
        assert_eq!(a.0, vec![3.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn local_greedy_cases() {
        let (net, _) = chain();
        let p = Partition::from_assignment(&net, 2, vec![0, 0, 1, 1], vec![0, 2]).unwrap();
        // component 0 holds edges 0, 1, 3; component 1 holds edge 2
        let demand = EdgeDemandCount(vec![1.0, 3.0, 4.0, 0.0]);
        assert_eq!(local_greedy(&demand, &p, 0, 8.0, LocalDenominator::Component), vec![2.0, 6.0, 0.0]);
        assert_eq!(local_greedy(&demand, &p, 0, 8.0, LocalDenominator::Global), vec![1.0, 3.0, 0.0]);
        assert_eq!(local_greedy(&demand, &p, 0, 0.0, LocalDenominator::Component), vec![0.0; 3]);
        let idle = EdgeDemandCount(vec![0.0; 4]);
        assert_eq!(local_greedy(&idle, &p, 0, 3.0, LocalDenominator::Component), vec![1.0; 3]);
    }

    #[test]
    fn proportional_allocation_by_deciders() {
        let (net, _) = chain();
        let trips = TripTable::new([
            Trip { origin: 0, destination: 3, size: 10.0 },
            Trip { origin: 2, destination: 0, size: 30.0 },
        ])
        .unwrap();
        let p = Partition::from_assignment(&net, 2, vec![0, 0, 1, 1], vec![0, 2]).unwrap();
        let state = SimState::initial(&trips);
        assert_eq!(proportional_allocation(&trips, &state, &p, 8.0), vec![2.0, 6.0]);
        let none = SimState::from_locations(&trips, 1, vec![VehicleLocation::AtNode(3), VehicleLocation::AtNode(0)]).unwrap();
        assert_eq!(proportional_allocation(&trips, &none, &p, 8.0), vec![4.0, 4.0]);
    }
}
