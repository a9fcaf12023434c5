//! Observations and rewards for the two agent levels.
//!
//! Per edge `e` the low-level feature tuple is `(s, n, ŝ, m, s̃)`:
//!
//! - `s`: vehicles deciding now whose unperturbed shortest route uses `e`
//! - `n`: vehicles travelling along `e`
//! - `ŝ`: deciding vehicles whose unperturbed route starts with `e`
//! - `m`: Σ size × remaining steps over vehicles on `e`
//! - `s̃`: unarrived vehicles whose last chosen (observed-time) route uses `e`
//!
//! The high level sees, per component, Σ n and Σ ŝ over the component's edges.

use crate::attack::route_demand;
use crate::decompose::Partition;
use crate::network::{RoadNetwork, TripTable};
use crate::simulator::{edge_loads, SimState, VehicleLocation};

pub const LOW_FEATURES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatures {
    pub through: Vec<f64>,
    pub load: Vec<f64>,
    pub first: Vec<f64>,
    pub vehicle_steps: Vec<f64>,
    pub planned: Vec<f64>,
}

impl EdgeFeatures {
    pub fn compute(network: &RoadNetwork, trips: &TripTable, state: &SimState) -> Self {
        let demand = route_demand(network, trips, state);
        let load = edge_loads(network, state, trips);
        let mut vehicle_steps = vec![0.0; network.edge_count()];
        let mut planned = vec![0.0; network.edge_count()];
        for (r, trip) in trips.trips().iter().enumerate() {
            if state.arrived(r) {
                continue;
            }
            if let VehicleLocation::OnEdge { edge, remaining } = state.location(r) {
                vehicle_steps[edge] += trip.size * remaining as f64;
            }
            for &e in state.last_route(r) {
                planned[e] += trip.size;
            }
        }
        EdgeFeatures {
            through: demand.through,
            load,
            first: demand.first,
            vehicle_steps,
            planned,
        }
    }

    pub fn low(&self, partition: &Partition, k: usize) -> LowLevelObs {
        let edges = partition.component_edges(k);
        let mut v = Vec::with_capacity(LOW_FEATURES * edges.len());
        for &e in edges {
            v.extend_from_slice(&[
                self.through[e],
                self.load[e],
                self.first[e],
                self.vehicle_steps[e],
                self.planned[e],
            ]);
        }
        LowLevelObs(v)
    }

    pub fn high(&self, partition: &Partition) -> HighLevelObs {
        let mut v = vec![0.0; 2 * partition.k()];
        for k in 0..partition.k() {
            for &e in partition.component_edges(k) {
                v[2 * k] += self.load[e];
                v[2 * k + 1] += self.first[e];
            }
        }
        HighLevelObs(v)
    }
}

/// Flattened `(s, n, ŝ, m, s̃)` for each edge of one component, in edge-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct LowLevelObs(pub Vec<f64>);

impl LowLevelObs {
    pub fn edge(&self, i: usize) -> &[f64] {
        &self.0[LOW_FEATURES * i..LOW_FEATURES * (i + 1)]
    }
}

/// `(Σ n, Σ ŝ)` per component.
#[derive(Debug, Clone, PartialEq)]
pub struct HighLevelObs(pub Vec<f64>);

pub fn observe_low(network: &RoadNetwork, trips: &TripTable, state: &SimState, partition: &Partition, k: usize) -> LowLevelObs {
    EdgeFeatures::compute(network, trips, state).low(partition, k)
}

pub fn observe_high(network: &RoadNetwork, trips: &TripTable, state: &SimState, partition: &Partition) -> HighLevelObs {
    EdgeFeatures::compute(network, trips, state).high(partition)
}

/// Unarrived vehicles located in each component (at one of its nodes or on
/// one of its edges).
pub fn component_vehicles(trips: &TripTable, state: &SimState, partition: &Partition) -> Vec<f64> {
    let mut out = vec![0.0; partition.k()];
    for (r, trip) in trips.trips().iter().enumerate() {
        if state.arrived(r) {
            continue;
        }
        let k = match state.location(r) {
            VehicleLocation::AtNode(v) => partition.node_component(v),
            VehicleLocation::OnEdge { edge, .. } => partition.edge_component(edge),
        };
        out[k] += trip.size;
    }
    out
}

pub fn reward_low(trips: &TripTable, state: &SimState, partition: &Partition, k: usize) -> f64 {
    component_vehicles(trips, state, partition)[k]
}

/// Vehicles still travelling.
pub fn reward_high(trips: &TripTable, state: &SimState) -> f64 {
    state.remaining_vehicles(trips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Trip;

    fn chain() -> RoadNetwork {
        // 0 -e0-> 1 -e1-> 2, 2 -e2-> 3, 3 -e3-> 0
        RoadNetwork::from_tuples(
            4,
            &[
                (0, 1, 1.0, 100.0, 0.15, 4.0),
                (1, 2, 1.0, 100.0, 0.15, 4.0),
                (2, 3, 1.0, 100.0, 0.15, 4.0),
                (3, 0, 1.0, 100.0, 0.15, 4.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn initial_state_has_empty_edges() {
        let net = chain();
        let trips = TripTable::new([Trip { origin: 0, destination: 2, size: 10.0 }]).unwrap();
        let p = Partition::whole(&net);
        let obs = observe_low(&net, &trips, &SimState::initial(&trips), &p, 0);
        for i in 0..4 {
            assert_eq!(obs.edge(i)[1], 0.0);
            assert_eq!(obs.edge(i)[3], 0.0);
        }
        // route e0, e1: s = 10 on both, ŝ = 10 only on e0
        assert_eq!(obs.edge(0), &[10.0, 0.0, 10.0, 0.0, 0.0]);
        assert_eq!(obs.edge(1), &[10.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn on_edge_load_and_vehicle_steps() {
        let net = chain();
        let trips = TripTable::new([Trip { origin: 0, destination: 3, size: 4.0 }]).unwrap();
        let state = SimState::from_locations(&trips, 2, vec![VehicleLocation::OnEdge { edge: 1, remaining: 3 }]).unwrap();
        let obs = observe_low(&net, &trips, &state, &Partition::whole(&net), 0);
        assert_eq!(obs.edge(1)[1], 4.0);
        assert_eq!(obs.edge(1)[3], 12.0);
        assert_eq!(reward_low(&trips, &state, &Partition::whole(&net), 0), 4.0);
    }

    #[test]
    fn planned_route_feature_follows_last_decision() {
        let net = chain();
        let trips = TripTable::new([Trip { origin: 0, destination: 2, size: 10.0 }]).unwrap();
        let s0 = SimState::initial(&trips);
        let (s1, _) = crate::simulator::step(&net, &trips, &s0, &crate::simulator::Perturbation::zeros(4)).unwrap();
        let f = EdgeFeatures::compute(&net, &trips, &s1);
        assert_eq!(f.planned, vec![10.0, 10.0, 0.0, 0.0]);
        assert_eq!(f.through, vec![0.0; 4]);
    }

    #[test]
    fn high_level_sums_per_component() {
        // 6-node network, components {0,1,2} and {3,4,5}
        let net = RoadNetwork::from_tuples(
            6,
            &[
                (0, 1, 1.0, 100.0, 0.15, 4.0),
                (1, 2, 1.0, 100.0, 0.15, 4.0),
                (2, 3, 1.0, 100.0, 0.15, 4.0),
                (3, 4, 1.0, 100.0, 0.15, 4.0),
                (4, 5, 1.0, 100.0, 0.15, 4.0),
                (5, 0, 1.0, 100.0, 0.15, 4.0),
            ],
        )
        .unwrap();
        let p = Partition::from_assignment(&net, 2, vec![0, 0, 0, 1, 1, 1], vec![1, 4]).unwrap();
        let trips = TripTable::new([
            Trip { origin: 0, destination: 4, size: 3.0 },
            Trip { origin: 3, destination: 5, size: 5.0 },
            Trip { origin: 1, destination: 2, size: 7.0 },
            Trip { origin: 4, destination: 1, size: 2.0 },
        ])
        .unwrap();
        let state = SimState::from_locations(
            &trips,
            3,
            vec![
                VehicleLocation::AtNode(2),                              // deciding, first edge e2 (comp 0)
                VehicleLocation::OnEdge { edge: 3, remaining: 2 },      // on e3 (comp 1)
                VehicleLocation::OnEdge { edge: 1, remaining: 1 },      // on e1 (comp 0)
                VehicleLocation::AtNode(4),                              // deciding, first edge e4 (comp 1)
            ],
        )
        .unwrap();
        // comp 0: n = 7 (trip 2 on e1), ŝ = 3 (trip 0 enters e2)
        // comp 1: n = 5 (trip 1 on e3), ŝ = 2 (trip 3 enters e4)
        assert_eq!(observe_high(&net, &trips, &state, &p).0, vec![7.0, 3.0, 5.0, 2.0]);
        assert_eq!(component_vehicles(&trips, &state, &p), vec![10.0, 7.0]);
        assert_eq!(reward_high(&trips, &state), 17.0);
        let idle = SimState::from_locations(
            &trips,
            9,
            vec![
                VehicleLocation::AtNode(4),
                VehicleLocation::AtNode(5),
                VehicleLocation::AtNode(2),
                VehicleLocation::AtNode(1),
            ],
        )
        .unwrap();
        assert_eq!(observe_high(&net, &trips, &idle, &p).0, vec![0.0; 4]);
        assert_eq!(reward_high(&trips, &idle), 0.0);
    }
}
