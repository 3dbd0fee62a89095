//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria that need the LINERLIB Baltic or WorldSmall instances read them
//! from `$LINERLIB_DIR` (or `<workspace>/LINERLIB`). When the data is absent
//! those criteria print FAIL with the reason but do not abort the run; every
//! criterion whose inputs are present must pass or the process exits non-zero.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use lsndp::costs::{evaluate, rotation_vessels, VoyageCostMode};
use lsndp::env::{reward_scale, Action, Environment};
use lsndp::graph::build_expanded_graph;
use lsndp::linerlib::parse_instance;
use lsndp::mcf::{check_feasibility, solve_on_graph};
use lsndp::model::{Instance, Service, DEFAULT_MAX_SERVICES};
use lsndp::perturb::{perturb_demands, perturbed_quantities, PerturbSpec};
use lsndp::report::{parse_kv, RunReport};
use lsndp::schedule::ScheduleEntry;
use lsndp::search::{rollout, rollout_rng, solve, SearchConfig};
use lsndp::synth::{demand, line_instance, random_instance, random_rotation, RandomSpec};

const RL_PROFIT: f64 = 42.32e6;
const LINERLIB_PROFIT: f64 = 32.28e6;
const RL_VESSELS: f64 = 282.30;
const LINERLIB_VESSELS: f64 = 242.64;
const BALTIC_BENCHMARK: f64 = 0.26e6;

enum Verdict {
    Pass(String),
    Fail(String),
    NoData(String),
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("WorldSmall vessel counts", worldsmall_vessel_counts),
        ("WorldSmall profits", worldsmall_profits),
        ("WorldSmall vessel usage totals", worldsmall_vessel_totals),
        ("Baltic vessel-used row and identity", baltic_vessel_row),
        ("MCF oracle and feasibility", mcf_oracle),
        ("Reward telescoping and determinism", telescoping),
        ("Baltic episode latency", latency),
        ("Baltic baseline search", baseline_search),
        ("Perturbation statistics", perturbation),
    ];
    let mut failed = 0;
    let mut missing = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let verdict = check();
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Verdict::Pass(detail) => println!("PASS  {name}: {detail} ({secs:.1}s)"),
            Verdict::Fail(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} ({secs:.1}s)");
            }
            Verdict::NoData(detail) => {
                missing += 1;
                println!("FAIL  {name}: data not found, {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed, {missing} not runnable without LINERLIB data",
        criteria.len() - failed - missing
    );
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn load(name: &str) -> Result<Instance, Verdict> {
    let Some(dir) = common::linerlib_dir() else {
        return Err(Verdict::NoData(format!(
            "set LINERLIB_DIR to a LINERLIB checkout to load {name}"
        )));
    };
    parse_instance(&dir, name, DEFAULT_MAX_SERVICES)
        .map_err(|e| Verdict::Fail(format!("cannot load {name} from {}: {e}", dir.display())))
}

macro_rules! instance_or_return {
    ($name:expr) => {
        match load($name) {
            Ok(inst) => inst,
            Err(verdict) => return verdict,
        }
    };
}

#[derive(Deserialize)]
struct FixtureEntry {
    vessel_class: String,
    ports: Vec<String>,
    vessels: f64,
}

fn fixture_entries(file: &str) -> Vec<FixtureEntry> {
    let text = std::fs::read_to_string(common::fixture(file)).expect("fixture present");
    serde_json::from_str(&text).expect("fixture parses")
}

fn fixture_schedule(file: &str) -> Vec<ScheduleEntry> {
    fixture_entries(file)
        .into_iter()
        .map(|e| ScheduleEntry {
            vessel_class: e.vessel_class,
            ports: e.ports,
        })
        .collect()
}

fn within(actual: f64, target: f64, tol: f64) -> bool {
    (actual - target).abs() <= tol * target.abs()
}

fn worldsmall_vessel_counts() -> Verdict {
    let inst = instance_or_return!("WorldSmall");
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for file in ["worldsmall_rl.json", "worldsmall_linerlib.json"] {
        for (i, entry) in fixture_entries(file).iter().enumerate() {
            let class = match inst.class_index(&entry.vessel_class) {
                Some(c) => &inst.fleet[c],
                None => return Verdict::Fail(format!("{file}[{i}]: unknown class {}", entry.vessel_class)),
            };
            let ports: Result<Vec<usize>, _> = entry.ports.iter().map(|p| inst.require_port(p)).collect();
            let n = match ports.and_then(|p| rotation_vessels(&inst, class, &p)) {
                Ok(n) => n,
                Err(e) => return Verdict::Fail(format!("{file}[{i}]: {e}")),
            };
            let rel = (n - entry.vessels).abs() / entry.vessels;
            worst = worst.max(rel);
            if rel > 0.05 {
                return Verdict::Fail(format!(
                    "{file}[{i}]: computed {n:.2} vessels, expected {:.2}",
                    entry.vessels
                ));
            }
            checked += 1;
        }
    }
    Verdict::Pass(format!("{checked} services within 5%, worst deviation {:.2}%", worst * 100.0))
}

fn worldsmall_profits() -> Verdict {
    let inst = instance_or_return!("WorldSmall");
    let mode = VoyageCostMode::default();
    let mut profits = Vec::new();
    for file in ["worldsmall_rl.json", "worldsmall_linerlib.json"] {
        let services = match lsndp::schedule::services_from_entries(&fixture_schedule(file), &inst) {
            Ok(s) => s,
            Err(e) => return Verdict::Fail(format!("{file}: {e}")),
        };
        match evaluate(&inst, &services, mode) {
            Ok(ev) => profits.push(ev.breakdown.profit),
            Err(e) => return Verdict::Fail(format!("{file}: {e}")),
        }
    }
    let (rl, ll) = (profits[0], profits[1]);
    let detail = format!(
        "RL {:.2} M (target 42.32), LINERLIB {:.2} M (target 32.28), mode {mode}",
        rl / 1e6,
        ll / 1e6
    );
    if within(rl, RL_PROFIT, 0.15) && within(ll, LINERLIB_PROFIT, 0.15) && rl > ll {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn worldsmall_vessel_totals() -> Verdict {
    let inst = instance_or_return!("WorldSmall");
    let mut totals = Vec::new();
    for file in ["worldsmall_rl.json", "worldsmall_linerlib.json"] {
        let services = match lsndp::schedule::services_from_entries(&fixture_schedule(file), &inst) {
            Ok(s) => s,
            Err(e) => return Verdict::Fail(format!("{file}: {e}")),
        };
        totals.push(services.iter().map(|s| s.n_vessels).sum::<f64>());
    }
    let detail = format!(
        "RL {:.2} (target {RL_VESSELS:.2}), LINERLIB {:.2} (target {LINERLIB_VESSELS:.2})",
        totals[0], totals[1]
    );
    if within(totals[0], RL_VESSELS, 0.05) && within(totals[1], LINERLIB_VESSELS, 0.05) {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

/// Looks for one or two services of `class` whose vessel counts add up to
/// `target` at two decimals.
fn services_summing_to(inst: &Instance, class: usize, target: f64, rng: &mut ChaCha8Rng) -> Option<Vec<Service>> {
    let n = inst.port_count();
    let mut pool: Vec<Service> = Vec::new();
    for _ in 0..20_000 {
        let Ok(service) = Service::new(inst, class, random_rotation(rng, n.min(8))) else {
            continue;
        };
        if (service.n_vessels - target).abs() < 0.004 {
            return Some(vec![service]);
        }
        if let Some(other) = pool.iter().find(|o| (o.n_vessels + service.n_vessels - target).abs() < 0.004) {
            return Some(vec![other.clone(), service]);
        }
        if service.n_vessels < target {
            pool.push(service);
        }
    }
    None
}

fn baltic_vessel_row() -> Verdict {
    let inst = instance_or_return!("Baltic");
    let (Some(f800), Some(f450)) = (inst.class_index("Feeder_800"), inst.class_index("Feeder_450")) else {
        return Verdict::Fail("Baltic fleet lacks Feeder_800 or Feeder_450".into());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(634);
    let Some(mut services) = services_summing_to(&inst, f800, 2.03, &mut rng) else {
        return Verdict::Fail("no Feeder_800 services summing to 2.03 found".into());
    };
    let Some(more) = services_summing_to(&inst, f450, 4.31, &mut rng) else {
        return Verdict::Fail("no Feeder_450 services summing to 4.31 found".into());
    };
    services.extend(more);
    let ev = match evaluate(&inst, &services, VoyageCostMode::default()) {
        Ok(ev) => ev,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let report = RunReport::new(&inst, "evaluate", ev.breakdown.clone(), services.len());
    let table = report.to_table();
    let row = table.lines().find(|l| l.starts_with("Vessel used")).unwrap_or("").to_string();
    let kv = parse_kv(&report.to_kv());
    let f = |k: &str| kv[k].parse::<f64>().unwrap_or(f64::NAN);
    let sum = f("revenue") - f("reject_penalty") - f("handling") - f("service_cost") - f("unused_vessel")
        - f("voyage_cost");
    let residual = (sum - f("profit")).abs();
    if row.ends_with(" 6.34") && residual < 0.005 && ev.breakdown.identity_residual().abs() < 0.005 {
        Verdict::Pass(format!("`{}`, identity residual {residual:.2e}", row.trim()))
    } else {
        Verdict::Fail(format!("row `{row}`, identity residual {residual}"))
    }
}

fn mcf_oracle() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut single = 0;
    let mut routed = 0;
    for case in 0..200 {
        let inst = random_instance(&mut rng, RandomSpec::default());
        let services = random_services(&inst, &mut rng, 2);
        let graph = build_expanded_graph(&inst, &services).expect("graph builds");
        let flow = solve_on_graph(&inst, &graph);
        let greedy = common::variable_profit(&inst, &flow);
        let best = common::exhaustive_variable_profit(&inst, &graph);
        if flow.total_served() > 0.0 {
            routed += 1;
        }
        if greedy > best + 1e-6 {
            return Verdict::Fail(format!("case {case}: greedy {greedy} exceeds optimum {best}"));
        }
        if inst.demands.len() == 1 {
            single += 1;
            if (greedy - best).abs() > 1e-6 {
                return Verdict::Fail(format!("case {case}: single demand, greedy {greedy} vs optimum {best}"));
            }
        }
    }
    for case in 0..10_000 {
        let inst = random_instance(&mut rng, RandomSpec::default());
        let services = random_services(&inst, &mut rng, 3);
        let graph = build_expanded_graph(&inst, &services).expect("graph builds");
        let flow = solve_on_graph(&inst, &graph);
        if let Err(e) = check_feasibility(&inst, &graph, &flow) {
            return Verdict::Fail(format!("feasibility case {case}: {e}"));
        }
    }
    let elapsed = started.elapsed();
    let detail = format!("200 oracle cases ({single} single-demand, {routed} with routed flow), 10000 feasibility cases");
    if elapsed < Duration::from_secs(120) {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}, but took {:.1}s", elapsed.as_secs_f64()))
    }
}

fn random_services(inst: &Instance, rng: &mut ChaCha8Rng, max: usize) -> Vec<Service> {
    (0..rng.random_range(0..=max))
        .map(|_| {
            let class = rng.random_range(0..inst.fleet.len());
            Service::new(inst, class, random_rotation(rng, inst.port_count())).expect("valid rotation")
        })
        .collect()
}

/// Plays a random episode and returns the actions and rewards.
struct Episode {
    actions: Vec<Action>,
    rewards: Vec<f64>,
    history: Vec<f64>,
}

fn random_episode(env: &Environment, seed: u64) -> Result<Episode, String> {
    let inst = env.instance();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = env.reset(seed);
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    while !state.done {
        let available: Vec<usize> = (0..inst.fleet.len()).filter(|&v| state.remaining_vessels[v] > 0.0).collect();
        let vessel = if available.is_empty() {
            rng.random_range(0..inst.fleet.len())
        } else {
            available[rng.random_range(0..available.len())]
        };
        let action = Action {
            vessel,
            ports: random_rotation(&mut rng, inst.port_count().min(8)),
        };
        let (reward, _) = env.step_in_place(&mut state, &action).map_err(|e| e.to_string())?;
        actions.push(action);
        rewards.push(reward);
    }
    Ok(Episode {
        actions,
        rewards,
        history: state.profit_history,
    })
}

fn telescoping() -> Verdict {
    let inst = Arc::new(instance_or_return!("Baltic"));
    let env = Environment::new(inst);
    let mut worst: f64 = 0.0;
    for episode in 0..1000u64 {
        let Episode { actions, rewards, history } = match random_episode(&env, episode) {
            Ok(r) => r,
            Err(e) => return Verdict::Fail(format!("episode {episode}: {e}")),
        };
        let scale = reward_scale(&history);
        let lhs: f64 = rewards.iter().sum::<f64>() * scale;
        let rhs = history[history.len() - 1] - history[0];
        let rel = (lhs - rhs).abs() / rhs.abs().max(1.0);
        worst = worst.max(rel);
        if rel > 1e-6 {
            return Verdict::Fail(format!("episode {episode}: sum {lhs} vs difference {rhs}"));
        }
        let mut replay = env.reset(episode);
        let mut replay_rewards = Vec::new();
        for action in &actions {
            let (r, _) = env.step_in_place(&mut replay, action).expect("replayed action is valid");
            replay_rewards.push(r);
        }
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        if bits(&replay_rewards) != bits(&rewards) || bits(&replay.profit_history) != bits(&history) {
            return Verdict::Fail(format!("episode {episode}: replay differs"));
        }
    }
    Verdict::Pass(format!("1000 episodes, worst relative error {worst:.1e}, replays bit-identical"))
}

fn latency() -> Verdict {
    let inst = Arc::new(instance_or_return!("Baltic"));
    let config = SearchConfig::default();
    let mut slowest = Duration::ZERO;
    for g in 0..20 {
        let started = Instant::now();
        let env = Environment::new(inst.clone());
        if let Err(e) = rollout(&env, &config, &mut rollout_rng(config.rng_seed, g)) {
            return Verdict::Fail(e.to_string());
        }
        slowest = slowest.max(started.elapsed());
    }
    let detail = format!("slowest of 20 episodes {:.3}s", slowest.as_secs_f64());
    if slowest < Duration::from_secs(1) {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn baseline_search() -> Verdict {
    let inst = Arc::new(instance_or_return!("Baltic"));
    let config = SearchConfig {
        restarts: 10,
        rollouts_per_restart: 1000,
        ..SearchConfig::default()
    };
    let outcome = match solve(inst.clone(), &config) {
        Ok(o) => o,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let eta = outcome.breakdown.profit;
    let gap = BALTIC_BENCHMARK - eta;
    let report = RunReport::new(&inst, "solve", outcome.breakdown.clone(), outcome.services.len())
        .note("benchmark", BALTIC_BENCHMARK)
        .note("gap_to_benchmark", gap);
    let detail = format!(
        "10000 rollouts, profit {eta:.2}, gap to 0.26 M benchmark {gap:.2} ({:.1}%)",
        100.0 * gap / BALTIC_BENCHMARK
    );
    if eta > 0.0 && report.to_kv().contains("gap_to_benchmark=") {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn perturbation() -> Verdict {
    let base = 100.0;
    let mut inst = line_instance(2);
    inst.demands = vec![demand(0, 1, base, 1000.0)];
    let draws: Vec<f64> = (0..10_000u64)
        .map(|k| perturbed_quantities(&inst, 0.1, 17, k).expect("valid level")[0])
        .collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mean_ok = within(mean, base, 0.01);
    let sd_ok = within(sd, 0.1 * base, 0.05);

    let toy = match lsndp::linerlib::parse_instance(&common::toy_dir(), "Toy", DEFAULT_MAX_SERVICES) {
        Ok(t) => t,
        Err(e) => return Verdict::Fail(format!("toy instance: {e}")),
    };
    let spec = PerturbSpec {
        level: 0.5,
        count: 10_000 / toy.demands.len().max(1) + 1,
        seed: 5,
    };
    let copies = match perturb_demands(&toy, &spec) {
        Ok(c) => c,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let negatives = copies
        .iter()
        .flat_map(|c| c.demands.iter())
        .filter(|d| d.quantity < 0.0)
        .count();
    let level_half_draws: usize = copies.iter().map(|c| c.demands.len()).sum();
    let written = written_negatives(&copies[0]);
    let detail = format!(
        "level 0.1 mean {mean:.3} sd {sd:.3} (targets {base}, {}); level 0.5: {negatives} negatives in {level_half_draws} draws",
        0.1 * base
    );
    if mean_ok && sd_ok && negatives == 0 && written == 0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

/// Negative quantities in the written demand file of `inst`.
fn written_negatives(inst: &Instance) -> usize {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join(format!("Demand_{}", inst.name));
    lsndp::linerlib::write_demands(inst, &path).expect("demand file written");
    let reparsed = read_quantities(&path);
    reparsed.into_iter().filter(|q| *q < 0.0).count()
}

fn read_quantities(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).expect("written file readable");
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split([',', '\t', ';']).map(str::trim).collect();
    let col = header
        .iter()
        .position(|h| h.eq_ignore_ascii_case("FFEPerWeek"))
        .expect("quantity column present");
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split([',', '\t', ';']).nth(col).and_then(|v| v.trim().parse().ok()).unwrap_or(f64::NAN))
        .collect()
}
