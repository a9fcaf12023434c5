//! Road networks and trip demand, loaded from the TNTP benchmark format.
//!
//! Node ids are 1-based in TNTP files and 0-based everywhere in this crate.
//! The `length`, `speed`, `toll` and `link_type` columns are read and dropped:
//! only free-flow time, capacity and the two congestion coefficients feed the
//! travel-time function.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One directed road segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    /// Free-flow traversal time.
    pub free_flow_time: f64,
    pub capacity: f64,
    /// Multiplier of the congestion term.
    pub b: f64,
    /// Exponent of the load/capacity ratio.
    pub power: f64,
}

impl EdgeSpec {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.from == self.to {
            return Err(format!("self-loop on node {}", self.from + 1));
        }
        if !(self.free_flow_time > 0.0) || !self.free_flow_time.is_finite() {
            return Err(format!("free-flow time must be > 0, got {}", self.free_flow_time));
        }
        if !(self.capacity > 0.0) || !self.capacity.is_finite() {
            return Err(format!("capacity must be > 0, got {}", self.capacity));
        }
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return Err(format!("b must be >= 0, got {}", self.b));
        }
        if !(self.power >= 0.0) || !self.power.is_finite() {
            return Err(format!("power must be >= 0, got {}", self.power));
        }
        Ok(())
    }
}

/// Directed road graph with per-node outgoing adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    node_count: usize,
    edges: Vec<EdgeSpec>,
    outgoing: Vec<Vec<usize>>,
}

impl RoadNetwork {
    /// Builds a network from `(from, to, free_flow_time, capacity, b, power)`
    /// rows. Edge ids are assigned in row order.
    pub fn new(node_count: usize, edges: Vec<EdgeSpec>) -> Result<Self> {
        let mut outgoing = vec![Vec::new(); node_count];
        for (i, e) in edges.iter().enumerate() {
            if e.id != i {
                return Err(Error::Argument(format!("edge at position {i} has id {}", e.id)));
            }
            if e.from >= node_count || e.to >= node_count {
                return Err(Error::Argument(format!(
                    "edge {i} endpoint out of range for {node_count} nodes"
                )));
            }
            e.validate().map_err(|m| Error::Argument(format!("edge {i}: {m}")))?;
            outgoing[e.from].push(i);
        }
        Ok(RoadNetwork {
            node_count,
            edges,
            outgoing,
        })
    }

    /// Convenience constructor for hand-built graphs and tests.
    pub fn from_tuples(
        node_count: usize,
        rows: &[(usize, usize, f64, f64, f64, f64)],
    ) -> Result<Self> {
        let edges = rows
            .iter()
            .enumerate()
            .map(|(id, &(from, to, free_flow_time, capacity, b, power))| EdgeSpec {
                id,
                from,
                to,
                free_flow_time,
                capacity,
                b,
                power,
            })
            .collect();
        Self::new(node_count, edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &EdgeSpec {
        &self.edges[id]
    }

    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }

    pub fn free_flow_times(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.free_flow_time).collect()
    }

    /// True when every node reaches every other node.
    pub fn is_strongly_connected(&self) -> bool {
        if self.node_count == 0 {
            return true;
        }
        let mut incoming = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            incoming[e.to].push(e.from);
        }
        let forward: Vec<Vec<usize>> = self
            .outgoing
            .iter()
            .map(|out| out.iter().map(|&e| self.edges[e].to).collect())
            .collect();
        reaches_all(&forward) && reaches_all(&incoming)
    }

    /// Serializes to TNTP network format. Dropped columns are written as
    /// `length = free_flow_time` and zeros.
    pub fn to_tntp(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "<NUMBER OF ZONES> {}", self.node_count);
        let _ = writeln!(out, "<NUMBER OF NODES> {}", self.node_count);
        let _ = writeln!(out, "<FIRST THRU NODE> 1");
        let _ = writeln!(out, "<NUMBER OF LINKS> {}", self.edges.len());
        let _ = writeln!(out, "<END OF METADATA>");
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "~\tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;"
        );
        for e in &self.edges {
            let _ = writeln!(
                out,
                "\t{}\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t0\t0\t1\t;",
                e.from + 1,
                e.to + 1,
                e.capacity,
                e.free_flow_time,
                e.free_flow_time,
                e.b,
                e.power
            );
        }
        out
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// A block of `size` vehicles travelling from `origin` to `destination`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub origin: usize,
    pub destination: usize,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TripTable {
    trips: Vec<Trip>,
}

impl TripTable {
    /// Drops zero-size and origin = destination trips. Negative sizes are rejected.
    pub fn new(trips: impl IntoIterator<Item = Trip>) -> Result<Self> {
        let mut kept = Vec::new();
        for t in trips {
            if !(t.size >= 0.0) || !t.size.is_finite() {
                return Err(Error::Argument(format!("trip size must be >= 0, got {}", t.size)));
            }
            if t.size > 0.0 && t.origin != t.destination {
                kept.push(t);
            }
        }
        Ok(TripTable { trips: kept })
    }

    pub fn trips(&self) -> &[Trip] {
        &self.trips
    }

    pub fn len(&self) -> usize {
        self.trips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trips.is_empty()
    }

    pub fn total_demand(&self) -> f64 {
        self.trips.iter().map(|t| t.size).sum()
    }

    /// Checks that every trip endpoint is a node of `network`.
    pub fn check_against(&self, network: &RoadNetwork) -> Result<()> {
        for (i, t) in self.trips.iter().enumerate() {
            if t.origin >= network.node_count() || t.destination >= network.node_count() {
                return Err(Error::Argument(format!(
                    "trip {i} references a node outside the {}-node network",
                    network.node_count()
                )));
            }
        }
        Ok(())
    }
}

/// Multiplies every trip size by its factor.
pub fn scale_demand(trips: &TripTable, factors: &[f64]) -> Result<TripTable> {
    if factors.len() != trips.len() {
        return Err(Error::Argument(format!(
            "{} factors for {} trips",
            factors.len(),
            trips.len()
        )));
    }
    let mut scaled = Vec::with_capacity(trips.len());
    for (t, &f) in trips.trips.iter().zip(factors) {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Argument(format!("scale factor must be > 0, got {f}")));
        }
        scaled.push(Trip {
            size: t.size * f,
            ..*t
        });
    }
    Ok(TripTable { trips: scaled })
}

/// Reads the `<KEY> value` block that opens every TNTP file. Returns the
/// metadata and the 0-based index of the first line after `<END OF METADATA>`.
fn read_metadata(lines: &[&str]) -> Result<(BTreeMap<String, String>, usize)> {
    let mut meta = BTreeMap::new();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        if !line.starts_with('<') {
            return Err(Error::parse(i + 1, "expected metadata line or <END OF METADATA>"));
        }
        let close = line
            .find('>')
            .ok_or_else(|| Error::parse(i + 1, "unterminated metadata tag"))?;
        let key = line[1..close].trim().to_ascii_uppercase();
        if key == "END OF METADATA" {
            return Ok((meta, i + 1));
        }
        meta.insert(key, line[close + 1..].trim().to_string());
    }
    Err(Error::parse(lines.len(), "missing <END OF METADATA>"))
}

fn meta_count(meta: &BTreeMap<String, String>, key: &str, line: usize) -> Result<usize> {
    let raw = meta
        .get(key)
        .ok_or_else(|| Error::parse(line, format!("missing <{key}> header")))?;
    raw.parse::<usize>()
        .map_err(|_| Error::parse(line, format!("<{key}> is not a count: {raw:?}")))
}

/// Parses a TNTP `_net.tntp` file.
pub fn parse_tntp_net(text: &str) -> Result<RoadNetwork> {
    let lines: Vec<&str> = text.lines().collect();
    let (meta, body_start) = read_metadata(&lines)?;
    let node_count = meta_count(&meta, "NUMBER OF NODES", body_start)?;
    let link_count = meta_count(&meta, "NUMBER OF LINKS", body_start)?;

    let mut edges = Vec::with_capacity(link_count);
    for (offset, raw) in lines[body_start..].iter().enumerate() {
        let lineno = body_start + offset + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        let line = line.trim_end_matches(';');
        let fields: Vec<&str> = line.split_whitespace().filter(|f| *f != ";").collect();
        if fields.len() < 7 {
            return Err(Error::parse(
                lineno,
                format!("expected at least 7 columns, found {}", fields.len()),
            ));
        }
        let node = |col: usize| -> Result<usize> {
            let v: usize = fields[col]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric node id {:?}", fields[col])))?;
            if v == 0 || v > node_count {
                return Err(Error::parse(
                    lineno,
                    format!("node id {v} outside declared range 1..={node_count}"),
                ));
            }
            Ok(v - 1)
        };
        let num = |col: usize| -> Result<f64> {
            fields[col]
                .parse::<f64>()
                .map_err(|_| Error::parse(lineno, format!("non-numeric field {:?}", fields[col])))
        };
        // Trailing columns (speed, toll, link_type) are optional and unused,
        // but must still be numeric when present.
        for col in 7..fields.len() {
            num(col)?;
        }
        let edge = EdgeSpec {
            id: edges.len(),
            from: node(0)?,
            to: node(1)?,
            capacity: num(2)?,
            free_flow_time: num(4)?,
            b: num(5)?,
            power: num(6)?,
        };
        edge.validate().map_err(|m| Error::parse(lineno, m))?;
        edges.push(edge);
    }
    if edges.len() != link_count {
        return Err(Error::parse(
            lines.len(),
            format!(
                "link count mismatch: metadata declares {link_count}, file contains {}",
                edges.len()
            ),
        ));
    }
    RoadNetwork::new(node_count, edges)
}

/// Parses a TNTP `_trips.tntp` file. Zone `z` is node `z - 1`.
pub fn parse_tntp_trips(text: &str) -> Result<TripTable> {
    let lines: Vec<&str> = text.lines().collect();
    let (meta, body_start) = read_metadata(&lines)?;
    let zones = meta_count(&meta, "NUMBER OF ZONES", body_start)?;

    let zone = |raw: &str, lineno: usize| -> Result<usize> {
        let z: usize = raw
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("non-numeric zone id {raw:?}")))?;
        if z == 0 || z > zones {
            return Err(Error::parse(lineno, format!("unknown zone {z} (zones 1..={zones})")));
        }
        Ok(z - 1)
    };

    let mut trips = Vec::new();
    let mut origin: Option<usize> = None;
    for (offset, raw) in lines[body_start..].iter().enumerate() {
        let lineno = body_start + offset + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("Origin") {
            origin = Some(zone(rest, lineno)?);
            continue;
        }
        let o = origin.ok_or_else(|| Error::parse(lineno, "destination entry before any Origin"))?;
        for entry in line.split(';') {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let (dest, flow) = entry
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, format!("expected `dest : flow`, got {entry:?}")))?;
            let d = zone(dest, lineno)?;
            let flow: f64 = flow
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric flow {:?}", flow.trim())))?;
            if flow < 0.0 || !flow.is_finite() {
                return Err(Error::parse(lineno, format!("negative or non-finite flow {flow}")));
            }
            if flow > 0.0 && o != d {
                trips.push(Trip {
                    origin: o,
                    destination: d,
                    size: flow,
                });
            }
        }
    }
    TripTable::new(trips)
}

pub fn load_network(path: impl AsRef<Path>) -> Result<RoadNetwork> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tntp_net(&text)
}

pub fn load_trips(path: impl AsRef<Path>) -> Result<TripTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tntp_trips(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net_text(nodes: usize, links: usize, rows: &[&str]) -> String {
        let mut s = format!(
            "<NUMBER OF ZONES> {nodes}\n<NUMBER OF NODES> {nodes}\n<FIRST THRU NODE> 1\n<NUMBER OF LINKS> {links}\n<END OF METADATA>\n\n~ init term cap len fft b power speed toll type ;\n"
        );
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn single_link_maps_fields() {
        let net = parse_tntp_net(&net_text(2, 1, &["1 2 100 1 2 0.15 4 0 0 1"])).unwrap();
        assert_eq!(net.node_count(), 2);
        let e = net.edge(0);
        assert_eq!((e.from, e.to), (0, 1));
        assert_eq!(e.capacity, 100.0);
        assert_eq!(e.free_flow_time, 2.0);
        assert_eq!(e.b, 0.15);
        assert_eq!(e.power, 4.0);
        assert_eq!(net.outgoing(0), &[0]);
    }

    #[test]
    fn link_count_mismatch_is_reported() {
        let err = parse_tntp_net(&net_text(3, 3, &["1 2 100 1 2 0.15 4 0 0 1 ;", "2 3 100 1 2 0.15 4 0 0 1 ;"]))
            .unwrap_err();
        assert!(err.to_string().contains("link count mismatch"), "{err}");
    }

    #[test]
    fn node_out_of_range_names_line() {
        let err = parse_tntp_net(&net_text(2, 1, &["1 3 100 1 2 0.15 4 0 0 1"])).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 8);
                assert!(message.contains("outside declared range"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_numeric_and_zero_capacity() {
        assert!(parse_tntp_net(&net_text(2, 1, &["1 2 abc 1 2 0.15 4 0 0 1"])).is_err());
        let err = parse_tntp_net(&net_text(2, 1, &["1 2 0 1 2 0.15 4 0 0 1"])).unwrap_err();
        assert!(err.to_string().contains("capacity"));
        assert!(parse_tntp_net(&net_text(2, 1, &["1 1 10 1 2 0.15 4 0 0 1"])).is_err());
    }

    #[test]
    fn missing_end_of_metadata() {
        assert!(matches!(
            parse_tntp_net("<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 0\n"),
            Err(Error::Parse { .. })
        ));
        assert!(parse_tntp_net("<NUMBER OF LINKS> 0\n<END OF METADATA>\n").is_err());
    }

    const TRIPS_HEAD: &str = "<NUMBER OF ZONES> 3\n<TOTAL OD FLOW> 0\n<END OF METADATA>\n\n";

    #[test]
    fn trips_single_pair() {
        let t = parse_tntp_trips(&format!("{TRIPS_HEAD}Origin 1 \n 2 : 100.0;\n")).unwrap();
        assert_eq!(
            t.trips(),
            &[Trip {
                origin: 0,
                destination: 1,
                size: 100.0
            }]
        );
    }

    #[test]
    fn trips_drop_zero_and_diagonal() {
        let t = parse_tntp_trips(&format!("{TRIPS_HEAD}Origin 1\n 1 : 50.0; 2 : 0.0; 3 : 7.5;\n")).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.trips()[0].destination, 2);
    }

    #[test]
    fn trips_errors() {
        assert!(parse_tntp_trips(&format!("{TRIPS_HEAD}Origin 1\n 4 : 1.0;\n")).is_err());
        assert!(parse_tntp_trips(&format!("{TRIPS_HEAD}Origin 9\n 2 : 1.0;\n")).is_err());
        assert!(parse_tntp_trips(&format!("{TRIPS_HEAD}Origin 1\n 2 : -1.0;\n")).is_err());
    }

    #[test]
    fn scaling() {
        let trips = TripTable::new([
            Trip { origin: 0, destination: 1, size: 100.0 },
            Trip { origin: 1, destination: 0, size: 100.0 },
        ])
        .unwrap();
        let s = scale_demand(&trips, &[1.05, 0.95]).unwrap();
        assert_eq!(s.trips()[0].size, 105.0);
        assert_eq!(s.trips()[1].size, 95.0);
        assert_eq!(scale_demand(&trips, &[1.0, 1.0]).unwrap(), trips);
        assert!(scale_demand(&trips, &[1.0, 0.0]).is_err());
        assert!(scale_demand(&trips, &[1.0]).is_err());
    }

    #[test]
    fn connectivity() {
        let line = RoadNetwork::from_tuples(2, &[(0, 1, 1.0, 1.0, 0.0, 0.0)]).unwrap();
        assert!(!line.is_strongly_connected());
        let both = RoadNetwork::from_tuples(2, &[(0, 1, 1.0, 1.0, 0.0, 0.0), (1, 0, 1.0, 1.0, 0.0, 0.0)])
            .unwrap();
        assert!(both.is_strongly_connected());
    }
}
