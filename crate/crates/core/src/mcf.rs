//! Greedy revenue-prioritized multi-commodity flow.
//!
//! Demands are routed one at a time in descending revenue order. Each
//! demand repeatedly takes the cheapest path with spare capacity, pushes as
//! much as the bottleneck allows and updates the residual capacities, until
//! it is fully served or no path remains. Whatever is left is missed.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::Result;
use crate::graph::{build_expanded_graph, Capacity, EdgeKind, ExpandedGraph, Node};
use crate::model::{Instance, Service};

/// A priced path from an origin port node to a destination port node.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub edges: Vec<usize>,
    /// $ per FFE.
    pub unit_cost: f64,
    pub bottleneck: Capacity,
}

/// Flow pushed for one demand along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFlow {
    pub demand: usize,
    pub edges: Vec<usize>,
    pub amount: f64,
    pub unit_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment {
    /// In routing order.
    pub paths: Vec<PathFlow>,
    /// FFE per week delivered, per demand.
    pub served: Vec<f64>,
    /// FFE per week rejected, per demand.
    pub missed: Vec<f64>,
    /// Remaining capacity per edge after the run.
    pub residual: Vec<Capacity>,
}

impl FlowAssignment {
    pub fn total_served(&self) -> f64 {
        self.served.iter().sum()
    }

    pub fn total_missed(&self) -> f64 {
        self.missed.iter().sum()
    }

    /// Total flow per edge.
    pub fn edge_flows(&self, edge_count: usize) -> Vec<f64> {
        let mut out = vec![0.0; edge_count];
        for p in &self.paths {
            for &e in &p.edges {
                out[e] += p.amount;
            }
        }
        out
    }

    /// Sparse per-demand per-edge flow.
    pub fn demand_edge_flows(&self) -> BTreeMap<(usize, usize), f64> {
        let mut out = BTreeMap::new();
        for p in &self.paths {
            for &e in &p.edges {
                *out.entry((p.demand, e)).or_insert(0.0) += p.amount;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    // Reversed so the max-heap pops the smallest (dist, node).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable Dijkstra buffers so repeated searches do not reallocate.
#[derive(Debug, Default)]
pub struct PathFinder {
    dist: Vec<f64>,
    pred: Vec<usize>,
    done: Vec<bool>,
    heap: BinaryHeap<HeapItem>,
}

const NO_PRED: usize = usize::MAX;

impl PathFinder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cheapest origin→destination path using only edges with positive
    /// residual capacity.
    ///
    /// Port nodes other than the origin are never expanded, so cargo cannot
    /// leave one service at a port and board another without paying the
    /// transshipment cost.
    pub fn cheapest_path(
        &mut self,
        graph: &ExpandedGraph,
        residual: &[Capacity],
        origin: usize,
        destination: usize,
    ) -> Option<Path> {
        if origin == destination {
            return None;
        }
        let source = graph.port_node(origin)?;
        let target = graph.port_node(destination)?;
        let n = graph.node_count();
        self.dist.clear();
        self.dist.resize(n, f64::INFINITY);
        self.pred.clear();
        self.pred.resize(n, NO_PRED);
        self.done.clear();
        self.done.resize(n, false);
        self.heap.clear();

        self.dist[source] = 0.0;
        self.heap.push(HeapItem {
            dist: 0.0,
            node: source,
        });
        while let Some(HeapItem { dist, node }) = self.heap.pop() {
            if self.done[node] {
                continue;
            }
            self.done[node] = true;
            if node == target {
                break;
            }
            if node != source && matches!(graph.nodes[node], Node::Port(_)) {
                continue;
            }
            for &e in graph.out_edges(node) {
                if !residual[e].is_positive() {
                    continue;
                }
                let edge = &graph.edges[e];
                let v = edge.to;
                if self.done[v] {
                    continue;
                }
                let nd = dist + edge.weight;
                let better = match nd.total_cmp(&self.dist[v]) {
                    Ordering::Less => true,
                    Ordering::Equal => graph.edges[self.pred[v]].from > node,
                    Ordering::Greater => false,
                };
                if better {
                    self.dist[v] = nd;
                    self.pred[v] = e;
                    self.heap.push(HeapItem { dist: nd, node: v });
                }
            }
        }
        if !self.done[target] {
            return None;
        }
        let mut edges = Vec::new();
        let mut bottleneck = Capacity::Unbounded;
        let mut at = target;
        while at != source {
            let e = self.pred[at];
            edges.push(e);
            bottleneck = bottleneck.min(residual[e]);
            at = graph.edges[e].from;
        }
        edges.reverse();
        Some(Path {
            edges,
            unit_cost: self.dist[target],
            bottleneck,
        })
    }
}

pub fn cheapest_path(
    graph: &ExpandedGraph,
    residual: &[Capacity],
    origin: usize,
    destination: usize,
) -> Option<Path> {
    PathFinder::new().cheapest_path(graph, residual, origin, destination)
}

/// Demand indices in routing order: revenue descending, then origin id,
/// then destination id, then file order.
pub fn demand_order(instance: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.demands.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&instance.demands[a], &instance.demands[b]);
        db.revenue
            .total_cmp(&da.revenue)
            .then_with(|| instance.ports[da.origin].id.cmp(&instance.ports[db.origin].id))
            .then_with(|| {
                instance.ports[da.destination]
                    .id
                    .cmp(&instance.ports[db.destination].id)
            })
            .then_with(|| a.cmp(&b))
    });
    order
}

pub fn solve_mcf(instance: &Instance, services: &[Service]) -> Result<FlowAssignment> {
    let graph = build_expanded_graph(instance, services)?;
    Ok(solve_on_graph(instance, &graph))
}

pub fn solve_on_graph(instance: &Instance, graph: &ExpandedGraph) -> FlowAssignment {
    let mut residual = graph.capacities();
    let n = instance.demands.len();
    let mut served = vec![0.0; n];
    let mut missed = vec![0.0; n];
    let mut paths = Vec::new();
    let mut finder = PathFinder::new();
    for d in demand_order(instance) {
        let demand = &instance.demands[d];
        let mut remaining = demand.quantity;
        if graph.port_node(demand.origin).is_some() && graph.port_node(demand.destination).is_some() {
            while remaining > 0.0 {
                let Some(path) =
                    finder.cheapest_path(graph, &residual, demand.origin, demand.destination)
                else {
                    break;
                };
                let amount = match path.bottleneck {
                    Capacity::Finite(c) => c.min(remaining),
                    Capacity::Unbounded => remaining,
                };
                for &e in &path.edges {
                    if let Capacity::Finite(c) = residual[e] {
                        residual[e] = Capacity::Finite(c - amount);
                    }
                }
                remaining -= amount;
                served[d] += amount;
                paths.push(PathFlow {
                    demand: d,
                    edges: path.edges,
                    amount,
                    unit_cost: path.unit_cost,
                });
            }
        }
        missed[d] = remaining;
    }
    FlowAssignment {
        paths,
        served,
        missed,
        residual,
    }
}

/// Checks accounting, capacity and per-demand conservation. Returns a
/// description of the first violation.
pub fn check_feasibility(
    instance: &Instance,
    graph: &ExpandedGraph,
    flow: &FlowAssignment,
) -> std::result::Result<(), String> {
    const TOL: f64 = 1e-9;
    let close = |a: f64, b: f64| (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()));
    for (d, demand) in instance.demands.iter().enumerate() {
        if flow.served[d] < 0.0 || flow.missed[d] < 0.0 {
            return Err(format!("demand {d}: negative served or missed"));
        }
        if !close(flow.served[d] + flow.missed[d], demand.quantity) {
            return Err(format!(
                "demand {d}: served {} + missed {} != quantity {}",
                flow.served[d], flow.missed[d], demand.quantity
            ));
        }
    }
    let totals = flow.edge_flows(graph.edges.len());
    for (e, edge) in graph.edges.iter().enumerate() {
        if totals[e] < 0.0 {
            return Err(format!("edge {e}: negative flow"));
        }
        if let Capacity::Finite(cap) = edge.capacity {
            if totals[e] > cap * (1.0 + TOL) + TOL {
                return Err(format!("edge {e}: flow {} exceeds capacity {cap}", totals[e]));
            }
            let left = flow.residual[e].finite().unwrap_or(f64::NAN);
            if left < 0.0 || !close(cap - totals[e], left) {
                return Err(format!("edge {e}: residual {left} inconsistent with flow"));
            }
        }
    }
    let mut served_by_paths = vec![0.0; instance.demands.len()];
    for (i, p) in flow.paths.iter().enumerate() {
        let demand = &instance.demands[p.demand];
        if !(p.amount > 0.0) {
            return Err(format!("path {i}: non-positive amount"));
        }
        let first = p.edges.first().map(|&e| graph.edges[e].from);
        let last = p.edges.last().map(|&e| graph.edges[e].to);
        if first != graph.port_node(demand.origin) || last != graph.port_node(demand.destination) {
            return Err(format!("path {i}: does not join the demand's ports"));
        }
        for w in p.edges.windows(2) {
            if graph.edges[w[0]].to != graph.edges[w[1]].from {
                return Err(format!("path {i}: edges are not contiguous"));
            }
        }
        let cost: f64 = p.edges.iter().map(|&e| graph.edges[e].weight).sum();
        if !close(cost, p.unit_cost) {
            return Err(format!("path {i}: unit cost {} != edge sum {cost}", p.unit_cost));
        }
        served_by_paths[p.demand] += p.amount;
    }
    for (d, s) in served_by_paths.iter().enumerate() {
        if !close(*s, flow.served[d]) {
            return Err(format!("demand {d}: paths carry {s}, served {}", flow.served[d]));
        }
    }
    // Node balance per demand: only the two endpoint port nodes may be unbalanced.
    let mut balance: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for ((d, e), f) in flow.demand_edge_flows() {
        let edge = &graph.edges[e];
        *balance.entry((d, edge.from)).or_insert(0.0) -= f;
        *balance.entry((d, edge.to)).or_insert(0.0) += f;
    }
    for ((d, node), b) in balance {
        let demand = &instance.demands[d];
        let want = if Some(node) == graph.port_node(demand.origin) {
            -flow.served[d]
        } else if Some(node) == graph.port_node(demand.destination) {
            flow.served[d]
        } else {
            0.0
        };
        if !close(b, want) {
            return Err(format!("demand {d}: node {node} unbalanced ({b} vs {want})"));
        }
    }
    Ok(())
}

/// Splits a path's unit cost into (load/unload, transshipment) $ per FFE.
pub fn handling_split(graph: &ExpandedGraph, edges: &[usize]) -> (f64, f64) {
    let mut access = 0.0;
    let mut transship = 0.0;
    for &e in edges {
        let edge = &graph.edges[e];
        match edge.kind {
            EdgeKind::Access => access += edge.weight,
            EdgeKind::Transship => transship += edge.weight,
            EdgeKind::Sail => {}
        }
    }
    (access, transship)
}
