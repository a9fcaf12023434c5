//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use traffic_hmarl::network::{load_network, load_trips, RoadNetwork, Trip, TripTable};

pub fn data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data"))
}

pub fn sioux_falls() -> (RoadNetwork, TripTable) {
    let dir = data_dir();
    (
        load_network(dir.join("SiouxFalls_net.tntp")).unwrap(),
        load_trips(dir.join("SiouxFalls_trips.tntp")).unwrap(),
    )
}

/// Random digraph with integer-valued weights (so path sums are exact).
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> (RoadNetwork, Vec<f64>) {
    let n = rng.random_range(2..=max_nodes);
    let m = rng.random_range(n..=4 * n);
    let mut rows = Vec::new();
    for _ in 0..m {
        let from = rng.random_range(0..n);
        let mut to = rng.random_range(0..n);
        while to == from {
            to = rng.random_range(0..n);
        }
        rows.push((from, to, 1.0, 10.0, 0.15, 4.0));
    }
    let net = RoadNetwork::from_tuples(n, &rows).unwrap();
    let weights = (0..m).map(|_| rng.random_range(1..=20) as f64).collect();
    (net, weights)
}

/// Single-source costs by Bellman–Ford relaxation.
pub fn bellman_ford(net: &RoadNetwork, weights: &[f64], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.node_count()];
    dist[source] = 0.0;
    for _ in 0..net.node_count() {
        let mut changed = false;
        for e in net.edges() {
            let cand = dist[e.from] + weights[e.id];
            if cand < dist[e.to] {
                dist[e.to] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Cheapest simple path by exhaustive depth-first enumeration.
pub fn enumerate_min_cost(net: &RoadNetwork, weights: &[f64], source: usize, dest: usize) -> f64 {
    fn go(net: &RoadNetwork, w: &[f64], v: usize, dest: usize, seen: &mut Vec<bool>, cost: f64, best: &mut f64) {
        if v == dest {
            *best = best.min(cost);
            return;
        }
        for &e in net.outgoing(v) {
            let to = net.edge(e).to;
            if !seen[to] {
                seen[to] = true;
                go(net, w, to, dest, seen, cost + w[e], best);
                seen[to] = false;
            }
        }
    }
    let mut seen = vec![false; net.node_count()];
    seen[source] = true;
    let mut best = f64::INFINITY;
    go(net, weights, source, dest, &mut seen, 0.0, &mut best);
    best
}

/// Two routes from 0 to 3: a fast top route (edges 0, 1) and a bottom
/// route (edges 2, 3) whose last edge is slow and congestible. Trip A
/// (0 → 3) can take either; trip B (2 → 3) has only edge 3.
pub fn diamond() -> (RoadNetwork, TripTable) {
    let net = RoadNetwork::from_tuples(
        4,
        &[
            (0, 1, 2.0, 100.0, 0.15, 4.0),
            (1, 3, 2.0, 100.0, 0.15, 4.0),
            (0, 2, 2.0, 100.0, 0.15, 4.0),
            (2, 3, 4.0, 10.0, 0.15, 4.0),
        ],
    )
    .unwrap();
    let trips = TripTable::new([
        Trip { origin: 0, destination: 3, size: 10.0 },
        Trip { origin: 2, destination: 3, size: 30.0 },
    ])
    .unwrap();
    (net, trips)
}

/// Central finite difference of `f` along every coordinate of `x`.
pub fn finite_difference(x: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + eps;
            let up = f(&p);
            p[i] = x[i] - eps;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Largest `|a − b| / max(|a|, |b|, floor)` over paired entries.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
