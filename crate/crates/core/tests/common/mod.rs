//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lsndp::graph::{Capacity, ExpandedGraph, Node};
use lsndp::mcf::FlowAssignment;
use lsndp::model::Instance;

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/toy")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// LINERLIB checkout: `$LINERLIB_DIR`, else `<workspace>/LINERLIB`.
pub fn linerlib_dir() -> Option<PathBuf> {
    let candidate = match std::env::var_os("LINERLIB_DIR") {
        Some(dir) => PathBuf::from(dir),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../LINERLIB"),
    };
    candidate.is_dir().then_some(candidate)
}

/// Revenue minus reject penalty minus handling for a flow assignment.
pub fn variable_profit(instance: &Instance, flow: &FlowAssignment) -> f64 {
    let mut total = 0.0;
    for (d, demand) in instance.demands.iter().enumerate() {
        total += flow.served[d] * demand.revenue - flow.missed[d] * demand.reject_penalty;
    }
    for p in &flow.paths {
        total -= p.amount * p.unit_cost;
    }
    total
}

/// Every simple path between two port nodes that does not pass through a
/// third port node. This is the path set the greedy router draws from.
pub fn simple_paths(graph: &ExpandedGraph, origin: usize, destination: usize) -> Vec<Vec<usize>> {
    let (Some(src), Some(dst)) = (graph.port_node(origin), graph.port_node(destination)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut visited = vec![false; graph.node_count()];
    let mut stack = Vec::new();
    visited[src] = true;
    extend(graph, src, dst, &mut visited, &mut stack, &mut out);
    out
}

fn extend(
    graph: &ExpandedGraph,
    node: usize,
    dst: usize,
    visited: &mut [bool],
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    for &e in graph.out_edges(node) {
        let next = graph.edges[e].to;
        if visited[next] {
            continue;
        }
        if next == dst {
            stack.push(e);
            out.push(stack.clone());
            stack.pop();
            continue;
        }
        if matches!(graph.nodes[next], Node::Port(_)) {
            continue;
        }
        visited[next] = true;
        stack.push(e);
        extend(graph, next, dst, visited, stack, out);
        stack.pop();
        visited[next] = false;
    }
}

struct Item {
    demand: usize,
    edges: Vec<usize>,
    /// Profit per unit relative to rejecting it.
    gain: f64,
}

/// Best variable profit over all integer path flows, found by exhaustive
/// branch and bound. Requires integer quantities and capacities.
pub fn exhaustive_variable_profit(instance: &Instance, graph: &ExpandedGraph) -> f64 {
    let mut items = Vec::new();
    for (d, demand) in instance.demands.iter().enumerate() {
        for edges in simple_paths(graph, demand.origin, demand.destination) {
            let cost: f64 = edges.iter().map(|&e| graph.edges[e].weight).sum();
            items.push(Item {
                demand: d,
                edges,
                gain: demand.revenue - cost + demand.reject_penalty,
            });
        }
    }
    let base: f64 = instance.demands.iter().map(|d| -d.quantity * d.reject_penalty).sum();
    let mut search = Search {
        items: &items,
        residual: graph.capacities(),
        remaining: instance.demands.iter().map(|d| d.quantity).collect(),
        best: 0.0,
    };
    search.run(0, 0.0);
    base + search.best
}

struct Search<'a> {
    items: &'a [Item],
    residual: Vec<Capacity>,
    remaining: Vec<f64>,
    best: f64,
}

impl Search<'_> {
    fn bound(&self, from: usize) -> f64 {
        let mut best_gain = vec![0.0f64; self.remaining.len()];
        for item in &self.items[from..] {
            best_gain[item.demand] = best_gain[item.demand].max(item.gain);
        }
        best_gain.iter().zip(&self.remaining).map(|(g, q)| g * q).sum()
    }

    fn run(&mut self, index: usize, value: f64) {
        if value > self.best {
            self.best = value;
        }
        if index == self.items.len() || value + self.bound(index) <= self.best {
            return;
        }
        let item = &self.items[index];
        let mut cap = self.remaining[item.demand];
        for &e in &item.edges {
            if let Capacity::Finite(c) = self.residual[e] {
                cap = cap.min(c);
            }
        }
        let max_units = cap.max(0.0).round() as u64;
        for units in (0..=max_units).rev() {
            let amount = units as f64;
            self.shift(index, -amount);
            self.run(index + 1, value + amount * self.items[index].gain);
            self.shift(index, amount);
        }
    }

    fn shift(&mut self, index: usize, delta: f64) {
        let item = &self.items[index];
        self.remaining[item.demand] += delta;
        for &e in &item.edges {
            if let Capacity::Finite(c) = self.residual[e] {
                self.residual[e] = Capacity::Finite(c + delta);
            }
        }
    }
}
