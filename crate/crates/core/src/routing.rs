//! Single-source shortest paths over per-edge weights.
//!
//! Ties are broken toward the lowest incoming edge id: when a relaxation
//! reaches a node at exactly its current tentative cost, the predecessor is
//! replaced if the new edge id is smaller. With strictly positive weights
//! every predecessor of a node is settled before the node itself, so the
//! resulting tree does not depend on heap order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::network::RoadNetwork;

/// A route as alternating nodes and edges: `nodes[i] --edges[i]--> nodes[i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    pub cost: f64,
}

impl Path {
    pub fn first_edge(&self) -> Option<usize> {
        self.edges.first().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    source: usize,
    dist: Vec<f64>,
    pred_edge: Vec<Option<usize>>,
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl ShortestPathTree {
    /// Dijkstra from `source`. `weights` has one nonnegative entry per edge.
    pub fn build(network: &RoadNetwork, weights: &[f64], source: usize) -> Self {
        debug_assert_eq!(weights.len(), network.edge_count());
        let n = network.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred_edge: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry { cost: 0.0, node: source });
        while let Some(Entry { cost, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            for &e in network.outgoing(node) {
                let to = network.edge(e).to;
                if done[to] {
                    continue;
                }
                let cand = cost + weights[e];
                if cand < dist[to] {
                    dist[to] = cand;
                    pred_edge[to] = Some(e);
                    heap.push(Entry { cost: cand, node: to });
                } else if cand == dist[to] && pred_edge[to].is_some_and(|p| e < p) {
                    pred_edge[to] = Some(e);
                }
            }
        }
        ShortestPathTree {
            source,
            dist,
            pred_edge,
        }
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn cost(&self, dest: usize) -> f64 {
        self.dist[dest]
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn reachable(&self, dest: usize) -> bool {
        self.dist[dest].is_finite()
    }

    /// Edge sequence from the source to `dest`; `None` when unreachable.
    pub fn edges_to(&self, network: &RoadNetwork, dest: usize) -> Option<Vec<usize>> {
        if !self.reachable(dest) {
            return None;
        }
        let mut edges = Vec::new();
        let mut v = dest;
        while v != self.source {
            let e = self.pred_edge[v].expect("reachable node has a predecessor");
            edges.push(e);
            v = network.edge(e).from;
        }
        edges.reverse();
        Some(edges)
    }

    /// First edge of the route to `dest`, without materializing the path.
    pub fn first_edge_to(&self, network: &RoadNetwork, dest: usize) -> Option<usize> {
        if dest == self.source || !self.reachable(dest) {
            return None;
        }
        let mut v = dest;
        loop {
            let e = self.pred_edge[v]?;
            let from = network.edge(e).from;
            if from == self.source {
                return Some(e);
            }
            v = from;
        }
    }

    pub fn path_to(&self, network: &RoadNetwork, dest: usize) -> Option<Path> {
        let edges = self.edges_to(network, dest)?;
        let mut nodes = Vec::with_capacity(edges.len() + 1);
        nodes.push(self.source);
        nodes.extend(edges.iter().map(|&e| network.edge(e).to));
        Some(Path {
            nodes,
            edges,
            cost: self.dist[dest],
        })
    }
}

/// Shortest route from `origin` to `dest`. `origin == dest` yields the empty
/// path; `None` means `dest` is unreachable.
pub fn shortest_path(network: &RoadNetwork, weights: &[f64], origin: usize, dest: usize) -> Option<Path> {
    ShortestPathTree::build(network, weights, origin).path_to(network, dest)
}

/// Lazily built trees for every source node under one fixed weight vector.
pub struct RouteCache<'a> {
    network: &'a RoadNetwork,
    weights: &'a [f64],
    trees: Vec<Option<ShortestPathTree>>,
}

impl<'a> RouteCache<'a> {
    pub fn new(network: &'a RoadNetwork, weights: &'a [f64]) -> Self {
        RouteCache {
            network,
            weights,
            trees: vec![None; network.node_count()],
        }
    }

    pub fn tree(&mut self, source: usize) -> &ShortestPathTree {
        let (network, weights) = (self.network, self.weights);
        self.trees[source].get_or_insert_with(|| ShortestPathTree::build(network, weights, source))
    }

    pub fn edges(&mut self, origin: usize, dest: usize) -> Option<Vec<usize>> {
        let network = self.network;
        self.tree(origin).edges_to(network, dest)
    }

    pub fn first_edge(&mut self, origin: usize, dest: usize) -> Option<usize> {
        let network = self.network;
        self.tree(origin).first_edge_to(network, dest)
    }
}
