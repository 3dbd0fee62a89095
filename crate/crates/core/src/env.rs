//! Network design as a sequential decision process.
//!
//! Each step adds one whole service (vessel class plus port rotation),
//! re-solves the flow on the full network and rewards the change in weekly
//! profit, scaled by the magnitude of the profit after the first step.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::costs::{evaluate, Evaluation, VoyageCostMode};
use crate::error::{Error, Result};
use crate::graph::Capacity;
use crate::model::{Instance, Service, VESSEL_FEATURES};

/// Rows of the edge feature matrix before the service-membership rows.
pub const EDGE_BASE_ROWS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub vessel: usize,
    /// Port indices of one simple rotation.
    pub ports: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct EnvState {
    pub step: usize,
    pub seed: u64,
    pub services: Vec<Service>,
    /// Per fleet class; may go negative when the fleet is overdrawn.
    pub remaining_vessels: Vec<f64>,
    /// Per demand, unserved FFE after the last flow solve.
    pub remaining_demand: Vec<f64>,
    /// Profit after each step, starting with the empty network.
    pub profit_history: Vec<f64>,
    pub done: bool,
    evaluation: Arc<Evaluation>,
}

impl EnvState {
    pub fn evaluation(&self) -> &Evaluation {
        &self.evaluation
    }

    pub fn profit(&self) -> f64 {
        *self.profit_history.last().expect("history starts with the empty network")
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: EnvState,
    pub reward: f64,
    pub done: bool,
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            shape: [rows, cols],
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.shape[1] + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.shape[1] + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.shape[1]..(r + 1) * self.shape[1]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFeatures {
    /// (P + 1) x 2: incoming and outgoing remaining demand per port; the
    /// last row is the global node and stays zero.
    pub port_features: Matrix,
    /// (6 + max_services) x E over ordered port pairs with a distance.
    pub edge_features: Matrix,
    /// V x 11, column 0 is the remaining vessel count.
    pub vessel_features: Matrix,
}

/// Stateless transition function over one shared instance.
#[derive(Debug, Clone)]
pub struct Environment {
    instance: Arc<Instance>,
    mode: VoyageCostMode,
    pairs: Vec<(usize, usize)>,
    pair_index: Vec<Option<usize>>,
    /// Origin, destination, distance and revenue rows; they never change.
    static_rows: [Vec<f64>; 4],
    pair_demands: Vec<Vec<usize>>,
}

impl Environment {
    pub fn new(instance: Arc<Instance>) -> Environment {
        Environment::with_mode(instance, VoyageCostMode::default())
    }

    pub fn with_mode(instance: Arc<Instance>, mode: VoyageCostMode) -> Environment {
        let n = instance.port_count();
        let mut pairs = Vec::new();
        let mut pair_index = vec![None; n * n];
        for e in instance.distance_entries() {
            if e.origin != e.destination {
                pair_index[e.origin * n + e.destination] = Some(pairs.len());
                pairs.push((e.origin, e.destination));
            }
        }
        let mut pair_demands = vec![Vec::new(); pairs.len()];
        for (d, demand) in instance.demands.iter().enumerate() {
            if let Some(i) = pair_index[demand.origin * n + demand.destination] {
                pair_demands[i].push(d);
            }
        }
        let mut static_rows: [Vec<f64>; 4] = Default::default();
        for (i, &(o, d)) in pairs.iter().enumerate() {
            static_rows[0].push(o as f64);
            static_rows[1].push(d as f64);
            static_rows[2].push(instance.distance(o, d).map_or(0.0, |e| e.distance));
            static_rows[3].push(
                pair_demands[i]
                    .first()
                    .map_or(0.0, |&k| instance.demands[k].revenue),
            );
        }
        Environment {
            instance,
            mode,
            pairs,
            pair_index,
            static_rows,
            pair_demands,
        }
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn mode(&self) -> VoyageCostMode {
        self.mode
    }

    /// Ordered port pairs backing the columns of the edge features.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_index(&self, origin: usize, destination: usize) -> Option<usize> {
        let n = self.instance.port_count();
        if origin >= n || destination >= n {
            return None;
        }
        self.pair_index[origin * n + destination]
    }

    /// Empty network. The seed is recorded for the caller; the transition
    /// itself is deterministic.
    pub fn reset(&self, seed: u64) -> EnvState {
        let evaluation = evaluate(&self.instance, &[], self.mode).expect("empty network always evaluates");
        EnvState {
            step: 0,
            seed,
            services: Vec::new(),
            remaining_vessels: self.instance.fleet.iter().map(|v| v.count as f64).collect(),
            remaining_demand: evaluation.flow.missed.clone(),
            profit_history: vec![evaluation.breakdown.profit],
            done: false,
            evaluation: Arc::new(evaluation),
        }
    }

    pub fn step(&self, state: &EnvState, action: &Action) -> Result<StepOutcome> {
        let mut next = state.clone();
        let (reward, done) = self.step_in_place(&mut next, action)?;
        Ok(StepOutcome {
            state: next,
            reward,
            done,
        })
    }

    /// Applies `action` to `state`, returning (reward, done). On error the
    /// state is left untouched.
    pub fn step_in_place(&self, state: &mut EnvState, action: &Action) -> Result<(f64, bool)> {
        if state.done {
            return Err(Error::EpisodeDone);
        }
        let service = Service::new(&self.instance, action.vessel, action.ports.clone())?;
        let mut services = state.services.clone();
        services.push(service);
        let evaluation = evaluate(&self.instance, &services, self.mode)?;

        let n_vessels = services.last().map_or(0.0, |s| s.n_vessels);
        state.remaining_vessels[action.vessel] -= n_vessels;
        state.services = services;
        state.remaining_demand = evaluation.flow.missed.clone();
        let eta = evaluation.breakdown.profit;
        let prev = state.profit();
        state.profit_history.push(eta);
        state.evaluation = Arc::new(evaluation);
        state.step += 1;

        let reward = (eta - prev) / reward_scale(&state.profit_history);
        let all_served = state.remaining_demand.iter().all(|&q| q <= 0.0);
        let fleet_exhausted = state.remaining_vessels.iter().all(|&v| v <= 0.0);
        state.done = state.step >= self.instance.max_services || all_served || fleet_exhausted;
        Ok((reward, state.done))
    }

    pub fn featurize(&self, state: &EnvState) -> StateFeatures {
        let inst = &*self.instance;
        let p = inst.port_count();
        let mut port_features = Matrix::zeros(p + 1, 2);
        for (d, demand) in inst.demands.iter().enumerate() {
            let q = state.remaining_demand[d];
            port_features.data[demand.destination * 2] += q;
            port_features.data[demand.origin * 2 + 1] += q;
        }

        let e = self.pairs.len();
        let rows = EDGE_BASE_ROWS + inst.max_services;
        let mut edge_features = Matrix::zeros(rows, e);
        for (r, values) in self.static_rows.iter().enumerate() {
            edge_features.data[r * e..(r + 1) * e].copy_from_slice(values);
        }
        for (i, demands) in self.pair_demands.iter().enumerate() {
            let q: f64 = demands.iter().map(|&d| state.remaining_demand[d]).sum();
            edge_features.set(4, i, q);
        }
        let graph = &state.evaluation.graph;
        let residual = &state.evaluation.flow.residual;
        for (s, service) in state.services.iter().enumerate() {
            for (pos, (o, d)) in service.legs().enumerate() {
                let Some(i) = self.pair_index(o, d) else { continue };
                if let Capacity::Finite(c) = residual[graph.sail[s][pos]] {
                    edge_features.data[5 * e + i] += c;
                }
                if s < inst.max_services {
                    edge_features.set(EDGE_BASE_ROWS + s, i, 1.0);
                }
            }
        }

        let mut vessel_features = Matrix::zeros(inst.fleet.len(), VESSEL_FEATURES);
        for (v, class) in inst.fleet.iter().enumerate() {
            let row = class.features(state.remaining_vessels[v]);
            vessel_features.data[v * VESSEL_FEATURES..(v + 1) * VESSEL_FEATURES].copy_from_slice(&row);
        }
        StateFeatures {
            port_features,
            edge_features,
            vessel_features,
        }
    }
}

/// |η_1|, or 1 when the first step left the profit at exactly zero.
pub fn reward_scale(profit_history: &[f64]) -> f64 {
    match profit_history.get(1) {
        Some(&eta1) if eta1 != 0.0 => eta1.abs(),
        _ => 1.0,
    }
}
