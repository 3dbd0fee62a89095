//! Expanded port/proxy graph used by the flow heuristic.
//!
//! Every (port, service) call gets a proxy node. Cargo enters and leaves
//! the network through access edges between a port node and its proxies
//! (weight = move cost), changes service through transship edges between
//! proxies of the same port (weight = transshipment cost), and travels on
//! zero-weight sail edges whose capacity is the service's vessel capacity.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Instance, Service};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Capacity {
    Unbounded,
    Finite(f64),
}

impl Capacity {
    pub fn min(self, other: Capacity) -> Capacity {
        match (self, other) {
            (Capacity::Unbounded, c) | (c, Capacity::Unbounded) => c,
            (Capacity::Finite(a), Capacity::Finite(b)) => Capacity::Finite(a.min(b)),
        }
    }

    pub fn is_positive(self) -> bool {
        match self {
            Capacity::Unbounded => true,
            Capacity::Finite(c) => c > 0.0,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Capacity::Finite(c) => Some(c),
            Capacity::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Access,
    Transship,
    Sail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Port(usize),
    Proxy {
        port: usize,
        service: usize,
        position: usize,
    },
}

impl Node {
    pub fn port(self) -> usize {
        match self {
            Node::Port(p) | Node::Proxy { port: p, .. } => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    /// $ per FFE.
    pub weight: f64,
    /// FFE per week.
    pub capacity: Capacity,
    /// Service of the tail proxy.
    pub service: usize,
    /// Rotation position of the tail proxy.
    pub position: usize,
}

#[derive(Debug, Clone)]
pub struct ExpandedGraph {
    pub nodes: Vec<Node>,
    /// Sorted by (kind, service, position, head service).
    pub edges: Vec<Edge>,
    port_nodes: Vec<Option<usize>>,
    out_start: Vec<usize>,
    out_edges: Vec<usize>,
    /// `sail[s][i]` is the edge leaving rotation position `i` of service `s`.
    pub sail: Vec<Vec<usize>>,
}

impl ExpandedGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn port_node(&self, port: usize) -> Option<usize> {
        self.port_nodes.get(port).copied().flatten()
    }

    pub fn proxy_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Proxy { .. }))
            .count()
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[self.out_start[node]..self.out_start[node + 1]]
    }

    pub fn capacities(&self) -> Vec<Capacity> {
        self.edges.iter().map(|e| e.capacity).collect()
    }

    /// Graphviz rendering for debugging.
    pub fn to_dot(&self, instance: &Instance) -> String {
        let mut out = String::from("digraph expanded {\n  rankdir=LR;\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let _ = match *node {
                Node::Port(p) => writeln!(
                    out,
                    "  n{i} [label=\"{}\", shape=box];",
                    instance.ports[p].id
                ),
                Node::Proxy { port, service, .. } => writeln!(
                    out,
                    "  n{i} [label=\"{}/s{service}\", shape=ellipse];",
                    instance.ports[port].id
                ),
            };
        }
        for e in &self.edges {
            let cap = match e.capacity {
                Capacity::Unbounded => "inf".to_string(),
                Capacity::Finite(c) => c.to_string(),
            };
            let style = match e.kind {
                EdgeKind::Access => "dotted",
                EdgeKind::Transship => "dashed",
                EdgeKind::Sail => "solid",
            };
            let _ = writeln!(
                out,
                "  n{} -> n{} [label=\"w={} c={cap}\", style={style}];",
                e.from, e.to, e.weight
            );
        }
        out.push_str("}\n");
        out
    }
}

pub fn build_expanded_graph(instance: &Instance, services: &[Service]) -> Result<ExpandedGraph> {
    let n_ports = instance.port_count();
    for s in services {
        let class = instance
            .fleet
            .get(s.vessel_class)
            .ok_or(Error::VesselClassIndex(s.vessel_class))?;
        debug_assert!(class.capacity > 0.0);
        for (o, d) in s.legs() {
            instance.require_distance(o, d)?;
        }
    }

    let mut touched = vec![false; n_ports];
    for s in services {
        for &p in &s.ports {
            touched[p] = true;
        }
    }
    let mut nodes = Vec::new();
    let mut port_nodes = vec![None; n_ports];
    for p in 0..n_ports {
        if touched[p] {
            port_nodes[p] = Some(nodes.len());
            nodes.push(Node::Port(p));
        }
    }
    let mut proxy_of: Vec<Vec<usize>> = Vec::with_capacity(services.len());
    // services calling each port, in service order, with their proxy node
    let mut callers: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_ports];
    for (si, s) in services.iter().enumerate() {
        let mut ids = Vec::with_capacity(s.ports.len());
        for (pos, &p) in s.ports.iter().enumerate() {
            let id = nodes.len();
            nodes.push(Node::Proxy {
                port: p,
                service: si,
                position: pos,
            });
            ids.push(id);
            callers[p].push((si, id));
        }
        proxy_of.push(ids);
    }

    let mut edges = Vec::new();
    for (si, s) in services.iter().enumerate() {
        for (pos, &p) in s.ports.iter().enumerate() {
            let port_node = port_nodes[p].expect("touched port has a node");
            let proxy = proxy_of[si][pos];
            let w = instance.ports[p].move_cost;
            for (from, to) in [(port_node, proxy), (proxy, port_node)] {
                edges.push(Edge {
                    from,
                    to,
                    kind: EdgeKind::Access,
                    weight: w,
                    capacity: Capacity::Unbounded,
                    service: si,
                    position: pos,
                });
            }
        }
    }
    for (si, s) in services.iter().enumerate() {
        for (pos, &p) in s.ports.iter().enumerate() {
            let proxy = proxy_of[si][pos];
            for &(other, other_proxy) in &callers[p] {
                if other == si {
                    continue;
                }
                edges.push(Edge {
                    from: proxy,
                    to: other_proxy,
                    kind: EdgeKind::Transship,
                    weight: instance.ports[p].transshipment_cost,
                    capacity: Capacity::Unbounded,
                    service: si,
                    position: pos,
                });
            }
        }
    }
    let mut sail = Vec::with_capacity(services.len());
    for (si, s) in services.iter().enumerate() {
        let cap = instance.fleet[s.vessel_class].capacity;
        let n = s.ports.len();
        let mut ids = Vec::with_capacity(n);
        for pos in 0..n {
            ids.push(edges.len());
            edges.push(Edge {
                from: proxy_of[si][pos],
                to: proxy_of[si][(pos + 1) % n],
                kind: EdgeKind::Sail,
                weight: 0.0,
                capacity: Capacity::Finite(cap),
                service: si,
                position: pos,
            });
        }
        sail.push(ids);
    }
    debug_assert!(edges.windows(2).all(|w| edge_order(&w[0], &w[1], &nodes) != Ordering::Greater));

    // CSR adjacency; edge ids stay in list order within each node.
    let mut out_start = vec![0usize; nodes.len() + 1];
    for e in &edges {
        out_start[e.from + 1] += 1;
    }
    for i in 0..nodes.len() {
        out_start[i + 1] += out_start[i];
    }
    let mut fill = out_start.clone();
    let mut out_edges = vec![0usize; edges.len()];
    for (id, e) in edges.iter().enumerate() {
        out_edges[fill[e.from]] = id;
        fill[e.from] += 1;
    }

    Ok(ExpandedGraph {
        nodes,
        edges,
        port_nodes,
        out_start,
        out_edges,
        sail,
    })
}

fn edge_order(a: &Edge, b: &Edge, nodes: &[Node]) -> Ordering {
    let head_service = |e: &Edge| match nodes[e.to] {
        Node::Proxy { service, .. } => service,
        Node::Port(_) => usize::MAX,
    };
    (a.kind, a.service, a.position)
        .cmp(&(b.kind, b.service, b.position))
        .then_with(|| match a.kind {
            EdgeKind::Transship => head_service(a).cmp(&head_service(b)),
            _ => Ordering::Equal,
        })
}

/// Splits a closed walk into simple cycles whose legs, taken together,
/// are exactly the legs of the walk.
///
/// The walk closes implicitly from the last element back to the first; an
/// explicit repeat of the first port at the end and consecutive duplicate
/// calls are dropped first. Cycles are emitted when a port repeats, by
/// popping the stack back to its previous occurrence.
pub fn decompose_to_simple<T: PartialEq + Clone>(rotation: &[T]) -> Result<Vec<Vec<T>>> {
    let mut walk: Vec<T> = Vec::with_capacity(rotation.len());
    for p in rotation {
        if walk.last() != Some(p) {
            walk.push(p.clone());
        }
    }
    while walk.len() > 1 && walk.first() == walk.last() {
        walk.pop();
    }
    let distinct = walk
        .iter()
        .enumerate()
        .filter(|(i, p)| !walk[..*i].contains(p))
        .count();
    if distinct < 2 {
        return Err(Error::InvalidRotation(format!(
            "needs at least 2 distinct ports, got {distinct}"
        )));
    }

    let mut cycles = Vec::new();
    let mut stack: Vec<T> = Vec::with_capacity(walk.len());
    for p in walk {
        if let Some(at) = stack.iter().position(|q| *q == p) {
            let cycle: Vec<T> = stack.drain(at..).collect();
            cycles.push(cycle);
        }
        stack.push(p);
    }
    cycles.push(stack);
    Ok(cycles)
}
