//! Splits a road network into K components by clustering nodes on
//! free-flow shortest-path distance, then giving each edge to the component
//! of its source node.
//!
//! Clustering is k-medoids with Lloyd-style alternation: directed distances
//! are symmetrized as `(d(u,v) + d(v,u)) / 2`, nodes join the nearest medoid,
//! and each medoid moves to the member with the smallest summed distance to
//! its cluster.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::RoadNetwork;
use crate::routing::ShortestPathTree;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    k: usize,
    node_component: Vec<usize>,
    edge_component: Vec<usize>,
    component_edges: Vec<Vec<usize>>,
    medoids: Vec<usize>,
}

impl Partition {
    /// Derives edge membership from a node assignment. Every component must
    /// be nonempty.
    pub fn from_assignment(
        network: &RoadNetwork,
        k: usize,
        node_component: Vec<usize>,
        medoids: Vec<usize>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Argument("K must be >= 1".into()));
        }
        if node_component.len() != network.node_count() {
            return Err(Error::Argument(format!(
                "{} assignments for {} nodes",
                node_component.len(),
                network.node_count()
            )));
        }
        let mut sizes = vec![0usize; k];
        for &c in &node_component {
            if c >= k {
                return Err(Error::Argument(format!("component {c} out of range for K = {k}")));
            }
            sizes[c] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Argument(format!("component {empty} has no nodes")));
        }
        let edge_component: Vec<usize> = network.edges().iter().map(|e| node_component[e.from]).collect();
        let mut component_edges = vec![Vec::new(); k];
        for (e, &c) in edge_component.iter().enumerate() {
            component_edges[c].push(e);
        }
        Ok(Partition {
            k,
            node_component,
            edge_component,
            component_edges,
            medoids,
        })
    }

    /// Single component holding the whole network.
    pub fn whole(network: &RoadNetwork) -> Self {
        Self::from_assignment(network, 1, vec![0; network.node_count()], vec![0])
            .expect("single component is always valid")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_component(&self, node: usize) -> usize {
        self.node_component[node]
    }

    pub fn edge_component(&self, edge: usize) -> usize {
        self.edge_component[edge]
    }

    pub fn node_assignment(&self) -> &[usize] {
        &self.node_component
    }

    /// Edge ids of component `k`, ascending.
    pub fn component_edges(&self, k: usize) -> &[usize] {
        &self.component_edges[k]
    }

    pub fn medoids(&self) -> &[usize] {
        &self.medoids
    }

    /// `node component` per line, nodes 1-based as in TNTP files, components
    /// 0-based.
    pub fn to_text_map(&self) -> String {
        let mut out = String::from("# node component\n");
        let medoids: Vec<String> = self.medoids.iter().map(|m| (m + 1).to_string()).collect();
        let _ = writeln!(out, "# medoids {}", medoids.join(" "));
        for (v, c) in self.node_component.iter().enumerate() {
            let _ = writeln!(out, "{} {}", v + 1, c);
        }
        out
    }

    pub fn parse_text_map(network: &RoadNetwork, text: &str) -> Result<Self> {
        let mut assignment = vec![None; network.node_count()];
        let mut medoids = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix("# medoids") {
                for tok in rest.split_whitespace() {
                    let m: usize = tok.parse().map_err(|_| Error::parse(i + 1, format!("bad medoid {tok:?}")))?;
                    medoids.push(m.checked_sub(1).ok_or_else(|| Error::parse(i + 1, "medoid ids are 1-based"))?);
                }
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let (Some(node), Some(comp), None) = (toks.next(), toks.next(), toks.next()) else {
                return Err(Error::parse(i + 1, "expected `node component`"));
            };
            let node: usize = node.parse().map_err(|_| Error::parse(i + 1, "non-numeric node"))?;
            let comp: usize = comp.parse().map_err(|_| Error::parse(i + 1, "non-numeric component"))?;
            if node == 0 || node > network.node_count() {
                return Err(Error::parse(i + 1, format!("node {node} not in network")));
            }
            assignment[node - 1] = Some(comp);
        }
        let node_component: Vec<usize> = assignment
            .into_iter()
            .enumerate()
            .map(|(v, c)| c.ok_or_else(|| Error::Argument(format!("node {} missing from map", v + 1))))
            .collect::<Result<_>>()?;
        let k = node_component.iter().max().map_or(0, |m| m + 1);
        Self::from_assignment(network, k, node_component, medoids)
    }
}

/// All-pairs shortest-path costs under free-flow times; `∞` when unreachable.
pub fn free_flow_distances(network: &RoadNetwork) -> Vec<Vec<f64>> {
    let weights = network.free_flow_times();
    (0..network.node_count())
        .map(|s| ShortestPathTree::build(network, &weights, s).distances().to_vec())
        .collect()
}

/// Partition together with the clustering cost after each iteration.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub partition: Partition,
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

pub fn kmeans_cluster(network: &RoadNetwork, k: usize, seed: u64) -> Result<Partition> {
    Ok(kmeans_cluster_traced(network, k, seed)?.partition)
}

pub fn kmeans_cluster_traced(network: &RoadNetwork, k: usize, seed: u64) -> Result<Clustering> {
    let n = network.node_count();
    if k == 0 || k > n {
        return Err(Error::Argument(format!("K = {k} must be in 1..={n}")));
    }
    let directed = free_flow_distances(network);
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|u| (0..n).map(|v| 0.5 * (directed[u][v] + directed[v][u])).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut medoids: Vec<usize> = sample(&mut rng, n, k).into_vec();
    let mut assignment: Vec<usize> = Vec::new();
    let mut cost_history = Vec::new();
    let mut iterations = 0;

    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let mut next: Vec<usize> = (0..n)
            .map(|u| {
                (0..k)
                    .min_by(|&a, &b| dist[u][medoids[a]].total_cmp(&dist[u][medoids[b]]).then(a.cmp(&b)))
                    .expect("k >= 1")
            })
            .collect();
        reseed_empty(&dist, &mut medoids, &mut next, k);

        for (c, medoid) in medoids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&u| next[u] == c).collect();
            *medoid = *members
                .iter()
                .min_by(|&&a, &&b| {
                    let sa: f64 = members.iter().map(|&m| dist[a][m]).sum();
                    let sb: f64 = members.iter().map(|&m| dist[b][m]).sum();
                    sa.total_cmp(&sb).then(a.cmp(&b))
                })
                .expect("nonempty after reseeding");
        }
        cost_history.push((0..n).map(|u| dist[u][medoids[next[u]]]).sum());

        let stable = next == assignment;
        assignment = next;
        if stable {
            break;
        }
    }

    let partition = Partition::from_assignment(network, k, assignment, medoids)?;
    Ok(Clustering {
        partition,
        cost_history,
        iterations,
    })
}

/// Gives every empty cluster the node farthest from its current medoid
/// (taken from clusters that can spare a member).
fn reseed_empty(dist: &[Vec<f64>], medoids: &mut [usize], assignment: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let far = (0..assignment.len())
            .filter(|&u| sizes[assignment[u]] > 1)
            .max_by(|&a, &b| {
                dist[a][medoids[assignment[a]]]
                    .total_cmp(&dist[b][medoids[assignment[b]]])
                    .then(b.cmp(&a))
            })
            .expect("k <= n leaves a cluster with a spare node");
        assignment[far] = empty;
        medoids[empty] = far;
    }
}
