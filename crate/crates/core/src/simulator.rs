//! Discrete-time vehicle simulation under perturbed travel-time information.
//!
//! Each step computes actual congested times `w` from the vehicles already on
//! edges, adds the attacker's perturbation to get observed times `ŵ`, routes
//! every deciding vehicle along a `ŵ`-shortest path, and commits it to the
//! first edge for `max(1, round(w_e))` steps. Routing sees `ŵ`; traversal
//! takes `w`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::attack::{AttackContext, AttackPolicy};
use crate::error::{Error, Result};
use crate::network::{EdgeSpec, RoadNetwork, TripTable};
use crate::routing::RouteCache;

/// Absolute tolerance on `‖a‖₁ = B`.
pub const BUDGET_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VehicleLocation {
    AtNode(usize),
    /// `remaining >= 1`; at 1 the vehicle reaches the edge head next step.
    OnEdge { edge: usize, remaining: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    timestep: usize,
    locations: Vec<VehicleLocation>,
    arrived: Vec<bool>,
    /// Edge sequence each trip chose (under observed times) the last time it
    /// decided. Empty before the first decision.
    last_route: Vec<Vec<usize>>,
}

impl SimState {
    /// Every trip at its origin at `t = 0`.
    pub fn initial(trips: &TripTable) -> Self {
        let locations = trips
            .trips()
            .iter()
            .map(|t| VehicleLocation::AtNode(t.origin))
            .collect();
        let arrived = trips.trips().iter().map(|t| t.origin == t.destination).collect();
        SimState {
            timestep: 0,
            locations,
            arrived,
            last_route: vec![Vec::new(); trips.len()],
        }
    }

    /// Builds a state directly, e.g. for tests and crafted scenarios.
    /// Arrival flags are derived from the locations.
    pub fn from_locations(trips: &TripTable, timestep: usize, locations: Vec<VehicleLocation>) -> Result<Self> {
        if locations.len() != trips.len() {
            return Err(Error::Argument(format!(
                "{} locations for {} trips",
                locations.len(),
                trips.len()
            )));
        }
        if locations
            .iter()
            .any(|l| matches!(l, VehicleLocation::OnEdge { remaining: 0, .. }))
        {
            return Err(Error::Argument("on-edge vehicle with remaining = 0".into()));
        }
        let arrived = trips
            .trips()
            .iter()
            .zip(&locations)
            .map(|(t, l)| *l == VehicleLocation::AtNode(t.destination))
            .collect();
        Ok(SimState {
            timestep,
            locations,
            arrived,
            last_route: vec![Vec::new(); trips.len()],
        })
    }

    pub fn timestep(&self) -> usize {
        self.timestep
    }

    pub fn locations(&self) -> &[VehicleLocation] {
        &self.locations
    }

    pub fn location(&self, trip: usize) -> VehicleLocation {
        self.locations[trip]
    }

    pub fn arrived(&self, trip: usize) -> bool {
        self.arrived[trip]
    }

    pub fn all_arrived(&self) -> bool {
        self.arrived.iter().all(|&a| a)
    }

    pub fn last_route(&self, trip: usize) -> &[usize] {
        &self.last_route[trip]
    }

    /// Trip is at a node short of its destination and must pick an edge.
    pub fn is_deciding(&self, trip: usize) -> bool {
        !self.arrived[trip] && matches!(self.locations[trip], VehicleLocation::AtNode(_))
    }

    /// Σ s_r over trips that have not arrived.
    pub fn remaining_vehicles(&self, trips: &TripTable) -> f64 {
        trips
            .trips()
            .iter()
            .zip(&self.arrived)
            .filter(|(_, &a)| !a)
            .map(|(t, _)| t.size)
            .sum()
    }
}

/// Nonnegative additions to observed edge times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation(pub Vec<f64>);

impl Perturbation {
    pub fn zeros(edge_count: usize) -> Self {
        Perturbation(vec![0.0; edge_count])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|a| a.abs()).sum()
    }

    /// Checks length, nonnegativity and, when `budget` is given,
    /// `‖a‖₁ = budget` within [`BUDGET_TOLERANCE`]. `None` demands all zeros.
    pub fn check(&self, edge_count: usize, budget: Option<f64>) -> Result<()> {
        if self.0.len() != edge_count {
            return Err(Error::Contract(format!(
                "perturbation has {} entries for {edge_count} edges",
                self.0.len()
            )));
        }
        if let Some((e, a)) = self.0.iter().enumerate().find(|(_, a)| !(**a >= 0.0)) {
            return Err(Error::Contract(format!("negative or NaN perturbation {a} on edge {e}")));
        }
        let norm = self.l1_norm();
        let target = budget.unwrap_or(0.0);
        if (norm - target).abs() > BUDGET_TOLERANCE {
            return Err(Error::Contract(format!("‖a‖₁ = {norm} but budget is {target}")));
        }
        Ok(())
    }
}

/// Congested traversal time `t · (1 + b · (n / c)^p)`.
pub fn edge_travel_time(edge: &EdgeSpec, load: f64) -> f64 {
    edge.free_flow_time * (1.0 + edge.b * (load / edge.capacity).powf(edge.power))
}

/// Vehicles currently travelling along each edge.
pub fn edge_loads(network: &RoadNetwork, state: &SimState, trips: &TripTable) -> Vec<f64> {
    let mut load = vec![0.0; network.edge_count()];
    for (t, loc) in trips.trips().iter().zip(state.locations()) {
        if let VehicleLocation::OnEdge { edge, .. } = *loc {
            load[edge] += t.size;
        }
    }
    load
}

/// Actual travel time of every edge given the vehicles on it.
pub fn congested_times(network: &RoadNetwork, state: &SimState, trips: &TripTable) -> Vec<f64> {
    edge_loads(network, state, trips)
        .into_iter()
        .zip(network.edges())
        .map(|(n, e)| edge_travel_time(e, n))
        .collect()
}

pub fn observed_times(actual: &[f64], perturbation: &Perturbation) -> Result<Vec<f64>> {
    if actual.len() != perturbation.0.len() {
        return Err(Error::Argument(format!(
            "{} travel times but {} perturbations",
            actual.len(),
            perturbation.0.len()
        )));
    }
    Ok(actual.iter().zip(&perturbation.0).map(|(w, a)| w + a).collect())
}

/// Steps to traverse an edge whose actual time is `w`: round half away from
/// zero, at least one.
pub fn traversal_steps(w: f64) -> u32 {
    let r = w.round();
    if r >= u32::MAX as f64 {
        u32::MAX
    } else if r < 1.0 {
        1
    } else {
        r as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepMetrics {
    pub actual: Vec<f64>,
    pub observed: Vec<f64>,
    /// Σ s_r over unarrived trips after the step.
    pub remaining: f64,
    /// Trips that could not reach their destination and stayed put.
    pub unreachable: Vec<usize>,
}

/// Advances the simulation one timestep under perturbation `a`.
pub fn step(
    network: &RoadNetwork,
    trips: &TripTable,
    state: &SimState,
    perturbation: &Perturbation,
) -> Result<(SimState, StepMetrics)> {
    let actual = congested_times(network, state, trips);
    let observed = observed_times(&actual, perturbation)?;
    let mut routes = RouteCache::new(network, &observed);

    let mut next = state.clone();
    next.timestep += 1;
    let mut unreachable = Vec::new();
    for (r, trip) in trips.trips().iter().enumerate() {
        if state.arrived[r] {
            continue;
        }
        match state.locations[r] {
            VehicleLocation::AtNode(v) => match routes.edges(v, trip.destination) {
                Some(route) if !route.is_empty() => {
                    let first = route[0];
                    next.locations[r] = VehicleLocation::OnEdge {
                        edge: first,
                        remaining: traversal_steps(actual[first]),
                    };
                    next.last_route[r] = route;
                }
                Some(_) => {
                    // at the destination but not flagged; cannot happen for
                    // states built through this module
                    next.arrived[r] = true;
                }
                None => unreachable.push(r),
            },
            VehicleLocation::OnEdge { edge, remaining } => {
                next.locations[r] = if remaining <= 1 {
                    let head = network.edge(edge).to;
                    if head == trip.destination {
                        next.arrived[r] = true;
                    }
                    VehicleLocation::AtNode(head)
                } else {
                    VehicleLocation::OnEdge {
                        edge,
                        remaining: remaining - 1,
                    }
                };
            }
        }
    }
    let remaining = next.remaining_vehicles(trips);
    Ok((
        next,
        StepMetrics {
            actual,
            observed,
            remaining,
            unreachable,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// Σ_t γ^t · remaining_per_step[t].
    pub discounted_objective: f64,
    /// Vehicles still travelling after each executed step.
    pub remaining_per_step: Vec<f64>,
    pub steps_run: usize,
    pub all_arrived: bool,
    /// Number of (step, trip) pairs where a destination was unreachable.
    pub unreachable_events: usize,
}

impl EpisodeResult {
    pub fn undiscounted_objective(&self) -> f64 {
        self.remaining_per_step.iter().sum()
    }

    /// Per-step rows `step,remaining,objective_contribution`.
    pub fn write_csv<W: Write>(&self, gamma: f64, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "remaining", "objective_contribution"])?;
        let mut discount = 1.0;
        for (t, r) in self.remaining_per_step.iter().enumerate() {
            w.write_record([t.to_string(), r.to_string(), (discount * r).to_string()])?;
            discount *= gamma;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Σ_t γ^t x_t, accumulated in step order.
pub fn discounted_sum(values: &[f64], gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for v in values {
        total += discount * v;
        discount *= gamma;
    }
    total
}

/// Runs until every trip arrives or `horizon` steps have executed. Every
/// perturbation is checked against the attacker's budget.
pub fn run_episode(
    network: &RoadNetwork,
    trips: &TripTable,
    attacker: &mut dyn AttackPolicy,
    horizon: usize,
    gamma: f64,
) -> Result<EpisodeResult> {
    if horizon == 0 {
        return Err(Error::Argument("horizon must be >= 1".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Argument(format!("gamma must be in (0, 1), got {gamma}")));
    }
    attacker.reset();
    let mut state = SimState::initial(trips);
    let mut remaining_per_step = Vec::new();
    let mut unreachable_events = 0;
    while remaining_per_step.len() < horizon && !state.all_arrived() {
        let ctx = AttackContext {
            network,
            trips,
            state: &state,
        };
        let a = attacker.perturb(&ctx)?;
        a.check(network.edge_count(), attacker.budget())
            .map_err(|e| Error::Contract(format!("attacker `{}` at step {}: {e}", attacker.name(), state.timestep())))?;
        let (next, metrics) = step(network, trips, &state, &a)?;
        unreachable_events += metrics.unreachable.len();
        remaining_per_step.push(metrics.remaining);
        state = next;
    }
    Ok(EpisodeResult {
        discounted_objective: discounted_sum(&remaining_per_step, gamma),
        steps_run: remaining_per_step.len(),
        all_arrived: state.all_arrived(),
        remaining_per_step,
        unreachable_events,
    })
}
