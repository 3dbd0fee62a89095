//! Policy-free rollout search: the largest available vessel, a sampled
//! port subset ordered by the tour heuristic, repeated until the episode
//! ends; best of many seeded rollouts.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::{profit_with, ProfitBreakdown, VoyageCostMode};
use crate::env::{Action, EnvState, Environment};
use crate::error::{Error, Result};
use crate::model::{Instance, Service};
use crate::tsp::order_ports;

/// Subset draws before falling back to the two most likely ports.
const MAX_RESAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub rollouts_per_restart: usize,
    /// Baseline probability of including a port in a service.
    pub port_inclusion_prior: f64,
    pub rng_seed: u64,
    /// Overrides the instance's bound on services per network.
    pub max_services: Option<usize>,
    /// Score every intermediate network of a rollout, not only the last.
    pub best_prefix: bool,
    /// Run restarts on the rayon thread pool.
    pub parallel: bool,
    pub voyage_cost_mode: VoyageCostMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 1,
            rollouts_per_restart: 100,
            port_inclusion_prior: 0.3,
            rng_seed: 0,
            max_services: None,
            best_prefix: true,
            parallel: true,
            voyage_cost_mode: VoyageCostMode::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.rollouts_per_restart == 0 {
            return Err(Error::Config("restarts and rollouts must be at least 1".into()));
        }
        if !(self.port_inclusion_prior > 0.0 && self.port_inclusion_prior <= 1.0) {
            return Err(Error::Config(format!(
                "port inclusion prior {} outside (0, 1]",
                self.port_inclusion_prior
            )));
        }
        if self.max_services == Some(0) {
            return Err(Error::Config("max services must be positive".into()));
        }
        Ok(())
    }

    pub fn total_rollouts(&self) -> usize {
        self.restarts * self.rollouts_per_restart
    }
}

/// Wall-clock split between choosing actions and simulating them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub inference: Duration,
    pub environment: Duration,
}

impl Timings {
    fn add(&mut self, other: Timings) {
        self.inference += other.inference;
        self.environment += other.environment;
    }
}

#[derive(Debug, Clone)]
pub struct RolloutResult {
    pub services: Vec<Service>,
    pub profit_history: Vec<f64>,
    pub breakdown: ProfitBreakdown,
    pub timings: Timings,
}

impl RolloutResult {
    /// Number of leading services giving the highest profit seen; the
    /// earliest wins ties.
    pub fn best_prefix_len(&self) -> usize {
        let mut best = 0;
        for (t, &eta) in self.profit_history.iter().enumerate() {
            if eta > self.profit_history[best] {
                best = t;
            }
        }
        best
    }

    fn score(&self, best_prefix: bool) -> (f64, usize) {
        if best_prefix {
            let t = self.best_prefix_len();
            (self.profit_history[t], t)
        } else {
            (self.breakdown.profit, self.services.len())
        }
    }
}

/// Largest-capacity class with vessels left; ties go to the lower index.
pub fn select_vessel(instance: &Instance, state: &EnvState) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (v, class) in instance.fleet.iter().enumerate() {
        if state.remaining_vessels[v] > 0.0 && best.is_none_or(|b| class.capacity > instance.fleet[b].capacity) {
            best = Some(v);
        }
    }
    best
}

/// Inclusion probability per port. Ports carrying more of the remaining
/// demand get a larger exponent weight; the weights average to 1, and a
/// prior of 1 includes every port.
pub fn inclusion_probabilities(instance: &Instance, state: &EnvState, prior: f64) -> Vec<f64> {
    let p = instance.port_count();
    let mut mass = vec![0.0; p];
    for (d, demand) in instance.demands.iter().enumerate() {
        let q = state.remaining_demand[d];
        mass[demand.origin] += q;
        mass[demand.destination] += q;
    }
    let total: f64 = mass.iter().sum();
    (0..p)
        .map(|i| {
            let share = if total > 0.0 { mass[i] / total } else { 1.0 / p as f64 };
            let w = 0.5 + 0.5 * p as f64 * share;
            1.0 - (1.0 - prior).powf(w)
        })
        .collect()
}

/// Independent Bernoulli draws, redrawn while fewer than two ports are
/// chosen; after the last redraw the two most likely ports are used.
pub fn sample_ports(probabilities: &[f64], rng: &mut impl Rng) -> Vec<usize> {
    for _ in 0..MAX_RESAMPLES {
        let chosen: Vec<usize> = probabilities
            .iter()
            .enumerate()
            .filter(|&(_, &p)| rng.random::<f64>() < p)
            .map(|(i, _)| i)
            .collect();
        if chosen.len() >= 2 {
            return chosen;
        }
    }
    let mut idx: Vec<usize> = (0..probabilities.len()).collect();
    idx.sort_by(|&a, &b| probabilities[b].total_cmp(&probabilities[a]).then(a.cmp(&b)));
    idx.truncate(2);
    idx.sort_unstable();
    idx
}

fn environment_for(instance: &Arc<Instance>, config: &SearchConfig) -> Environment {
    let instance = match config.max_services {
        Some(m) if m != instance.max_services => Arc::new((**instance).clone().with_max_services(m)),
        _ => Arc::clone(instance),
    };
    Environment::with_mode(instance, config.voyage_cost_mode)
}

/// One episode with the given generator.
pub fn rollout(env: &Environment, config: &SearchConfig, rng: &mut ChaCha8Rng) -> Result<RolloutResult> {
    let instance = Arc::clone(env.instance());
    let mut timings = Timings::default();
    let mut state = env.reset(config.rng_seed);
    while !state.done {
        let started = Instant::now();
        let Some(vessel) = select_vessel(&instance, &state) else {
            break;
        };
        let probs = inclusion_probabilities(&instance, &state, config.port_inclusion_prior);
        let subset = sample_ports(&probs, rng);
        let ports = order_ports(&instance, &subset)?;
        let chosen = Instant::now();
        env.step_in_place(&mut state, &Action { vessel, ports })?;
        timings.inference += chosen - started;
        timings.environment += chosen.elapsed();
    }
    let breakdown = state.evaluation().breakdown.clone();
    Ok(RolloutResult {
        services: state.services,
        profit_history: state.profit_history,
        breakdown,
        timings,
    })
}

/// Generator for global rollout number `g`. Each rollout has its own
/// stream, so any rollout can be replayed on its own.
pub fn rollout_rng(seed: u64, g: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(g);
    rng
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub services: Vec<Service>,
    pub breakdown: ProfitBreakdown,
    /// Global index (restart * rollouts_per_restart + k) of the winner.
    pub best_rollout: usize,
    /// Score of every rollout by global index.
    pub rollout_profits: Vec<f64>,
    pub timings: Timings,
    pub wall: Duration,
}

impl SearchOutcome {
    /// Best profit among the first `n` rollouts in global order.
    pub fn best_of_first(&self, n: usize) -> f64 {
        self.rollout_profits[..n.min(self.rollout_profits.len())]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

struct Best {
    g: usize,
    score: f64,
    services: Vec<Service>,
}

fn better(a: &Best, b: &Best) -> bool {
    a.score > b.score || (a.score == b.score && a.g < b.g)
}

pub fn solve(instance: Arc<Instance>, config: &SearchConfig) -> Result<SearchOutcome> {
    config.validate()?;
    let started = Instant::now();
    let env = environment_for(&instance, config);
    let run_restart = |r: usize| -> Result<(Best, Vec<f64>, Timings)> {
        let mut best: Option<Best> = None;
        let mut scores = Vec::with_capacity(config.rollouts_per_restart);
        let mut timings = Timings::default();
        for k in 0..config.rollouts_per_restart {
            let g = r * config.rollouts_per_restart + k;
            let mut rng = rollout_rng(config.rng_seed, g as u64);
            let result = rollout(&env, config, &mut rng)?;
            timings.add(result.timings);
            let (score, len) = result.score(config.best_prefix);
            scores.push(score);
            let candidate = Best {
                g,
                score,
                services: result.services[..len].to_vec(),
            };
            if best.as_ref().is_none_or(|b| better(&candidate, b)) {
                best = Some(candidate);
            }
        }
        Ok((best.expect("at least one rollout"), scores, timings))
    };
    let per_restart: Vec<(Best, Vec<f64>, Timings)> = if config.parallel {
        (0..config.restarts).into_par_iter().map(run_restart).collect::<Result<_>>()?
    } else {
        (0..config.restarts).map(run_restart).collect::<Result<_>>()?
    };

    let mut timings = Timings::default();
    let mut rollout_profits = Vec::with_capacity(config.total_rollouts());
    let mut best: Option<Best> = None;
    for (b, scores, t) in per_restart {
        timings.add(t);
        rollout_profits.extend(scores);
        if best.as_ref().is_none_or(|cur| better(&b, cur)) {
            best = Some(b);
        }
    }
    let best = best.expect("at least one restart");
    let breakdown = profit_with(env.instance(), &best.services, config.voyage_cost_mode)?;
    Ok(SearchOutcome {
        services: best.services,
        breakdown,
        best_rollout: best.g,
        rollout_profits,
        timings,
        wall: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{demand, dense_distances, line_instance, port, vessel};

    fn state_with(env: &Environment, remaining: &[f64]) -> EnvState {
        let mut s = env.reset(0);
        s.remaining_vessels = remaining.to_vec();
        s
    }

    fn two_class_env() -> Environment {
        let inst = Instance::new(
            "Two",
            vec![port("A", 0.0, 0.0), port("B", 0.0, 0.0)],
            vec![vessel("Feeder_450", 450.0, 3, 1.0), vessel("Feeder_800", 800.0, 1, 1.0)],
            dense_distances(2, |_, _| 10.0),
            vec![],
            4,
        )
        .unwrap();
        Environment::new(Arc::new(inst))
    }

    #[test]
    fn largest_available_vessel() {
        let env = two_class_env();
        let inst = env.instance().clone();
        assert_eq!(select_vessel(&inst, &state_with(&env, &[3.0, 1.0])), Some(1));
        assert_eq!(select_vessel(&inst, &state_with(&env, &[3.0, 0.0])), Some(0));
        assert_eq!(select_vessel(&inst, &state_with(&env, &[0.0, -0.5])), None);
    }

    #[test]
    fn capacity_ties_go_to_lower_index() {
        let inst = Instance::new(
            "Tie",
            vec![port("A", 0.0, 0.0), port("B", 0.0, 0.0)],
            vec![vessel("X", 500.0, 1, 1.0), vessel("Y", 500.0, 1, 1.0)],
            dense_distances(2, |_, _| 10.0),
            vec![],
            4,
        )
        .unwrap();
        let env = Environment::new(Arc::new(inst));
        assert_eq!(select_vessel(env.instance(), &env.reset(0)), Some(0));
    }

    #[test]
    fn full_prior_includes_every_port() {
        let env = Environment::new(Arc::new(line_instance(3)));
        let config = SearchConfig {
            port_inclusion_prior: 1.0,
            ..SearchConfig::default()
        };
        let result = rollout(&env, &config, &mut rollout_rng(5, 0)).unwrap();
        assert!(!result.services.is_empty());
        for s in &result.services {
            assert_eq!(s.ports.len(), 3);
        }
    }

    #[test]
    fn probabilities_follow_demand_mass() {
        let env = Environment::new(Arc::new(line_instance(4)));
        let s = env.reset(0);
        let p = inclusion_probabilities(env.instance(), &s, 0.3);
        // End ports touch one neighbour pair, inner ports two.
        assert!(p[1] > p[0] && p[2] > p[3]);
        assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn degenerate_probabilities_fall_back_to_top_two() {
        let mut rng = rollout_rng(1, 1);
        assert_eq!(sample_ports(&[0.0, 0.2, 0.0, 0.1], &mut rng), vec![1, 3]);
    }

    #[test]
    fn rollout_replays_identically() {
        let env = Environment::new(Arc::new(line_instance(6)));
        let config = SearchConfig::default();
        let a = rollout(&env, &config, &mut rollout_rng(9, 3)).unwrap();
        let b = rollout(&env, &config, &mut rollout_rng(9, 3)).unwrap();
        assert_eq!(a.services, b.services);
        assert_eq!(a.profit_history, b.profit_history);
    }

    #[test]
    fn single_rollout_solve_equals_rollout() {
        let inst = Arc::new(line_instance(5));
        let config = SearchConfig {
            rollouts_per_restart: 1,
            best_prefix: false,
            rng_seed: 4,
            ..SearchConfig::default()
        };
        let out = solve(Arc::clone(&inst), &config).unwrap();
        let env = Environment::new(inst);
        let direct = rollout(&env, &config, &mut rollout_rng(4, 0)).unwrap();
        assert_eq!(out.services, direct.services);
        assert_eq!(out.breakdown, direct.breakdown);
    }

    #[test]
    fn best_so_far_is_monotone_and_solve_is_deterministic() {
        let inst = Arc::new(line_instance(6));
        let config = SearchConfig {
            restarts: 3,
            rollouts_per_restart: 5,
            rng_seed: 2,
            ..SearchConfig::default()
        };
        let a = solve(Arc::clone(&inst), &config).unwrap();
        let b = solve(Arc::clone(&inst), &SearchConfig { parallel: false, ..config.clone() }).unwrap();
        assert_eq!(a.services, b.services);
        assert_eq!(a.rollout_profits, b.rollout_profits);
        let mut prev = f64::NEG_INFINITY;
        for n in 1..=15 {
            let cur = a.best_of_first(n);
            assert!(cur >= prev);
            prev = cur;
        }
        assert_eq!(a.breakdown.profit, a.best_of_first(15));
        assert_eq!(a.rollout_profits[a.best_rollout], a.breakdown.profit);
    }

    #[test]
    fn finds_the_profitable_lane() {
        // One lane worth 200 FFE at $5000 beats the cost of a short service.
        let mut v = vessel("Feeder", 300.0, 1, 1000.0);
        v.fuel_design = 100.0;
        v.fuel_idle = 10.0;
        let inst = Instance::new(
            "Lane",
            vec![port("A", 10.0, 10.0), port("B", 10.0, 10.0), port("C", 10.0, 10.0)],
            vec![v],
            dense_distances(3, |_, _| 288.0),
            vec![demand(0, 1, 200.0, 5000.0)],
            2,
        )
        .unwrap();
        let eta0 = inst.empty_network_profit();
        let config = SearchConfig {
            rollouts_per_restart: 20,
            ..SearchConfig::default()
        };
        let out = solve(Arc::new(inst), &config).unwrap();
        assert!(out.breakdown.profit > eta0);
        assert!(out.breakdown.served > 0.0);
    }

    #[test]
    fn bad_config_is_rejected() {
        let inst = Arc::new(line_instance(3));
        for config in [
            SearchConfig { restarts: 0, ..SearchConfig::default() },
            SearchConfig { port_inclusion_prior: 0.0, ..SearchConfig::default() },
            SearchConfig { max_services: Some(0), ..SearchConfig::default() },
        ] {
            assert!(solve(Arc::clone(&inst), &config).is_err());
        }
    }
}
