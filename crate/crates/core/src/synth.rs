//! Small synthetic instances for tests, benchmarks and demos.

use rand::Rng;

use crate::model::{Demand, DistanceEntry, Instance, PortSpec, VesselClass, DEFAULT_REJECT_PENALTY};

pub fn port(id: &str, move_cost: f64, transshipment_cost: f64) -> PortSpec {
    PortSpec {
        id: id.to_string(),
        name: id.to_string(),
        fixed_call_cost: 1000.0,
        variable_call_cost: 1.0,
        transshipment_cost,
        move_cost,
        latitude: 0.0,
        longitude: 0.0,
    }
}

pub fn vessel(name: &str, capacity: f64, count: u32, tc_rate: f64) -> VesselClass {
    VesselClass {
        name: name.to_string(),
        capacity,
        count,
        tc_rate,
        draft: 10.0,
        min_speed: 10.0,
        max_speed: 14.0,
        design_speed: 12.0,
        fuel_design: 2000.0,
        fuel_idle: 500.0,
        suez_fee: 0.0,
        panama_fee: 0.0,
    }
}

pub fn demand(origin: usize, destination: usize, quantity: f64, revenue: f64) -> Demand {
    Demand {
        origin,
        destination,
        revenue,
        quantity,
        reject_penalty: DEFAULT_REJECT_PENALTY,
        transit_time: None,
    }
}

pub fn leg(origin: usize, destination: usize, distance: f64) -> DistanceEntry {
    DistanceEntry {
        origin,
        destination,
        distance,
        draft: 15.0,
        suez: false,
        panama: false,
    }
}

/// Every ordered pair of distinct ports with the given distance function.
pub fn dense_distances(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Vec<DistanceEntry> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for o in 0..n {
        for d in 0..n {
            if o != d {
                out.push(leg(o, d, f(o, d)));
            }
        }
    }
    out
}

/// `n` ports `P0..` on a line 100 nm apart, two vessel classes
/// (`Small` 100 FFE, `Large` 300 FFE) and a demand between each pair of
/// neighbours in both directions.
pub fn line_instance(n: usize) -> Instance {
    let ports = (0..n).map(|i| port(&format!("P{i}"), 50.0, 30.0)).collect();
    let fleet = vec![
        vessel("Small", 100.0, 5, 1000.0),
        vessel("Large", 300.0, 2, 2500.0),
    ];
    let distances = dense_distances(n, |o, d| 100.0 * o.abs_diff(d) as f64);
    let mut demands = Vec::new();
    for i in 0..n.saturating_sub(1) {
        demands.push(demand(i, i + 1, 40.0, 1500.0));
        demands.push(demand(i + 1, i, 20.0, 1200.0));
    }
    Instance::new(format!("Line{n}"), ports, fleet, distances, demands, 4).expect("line instance is valid")
}

/// Three ports where only the legs between `P0` and `P1` have distances.
pub fn sparse_pair_instance() -> Instance {
    let ports = (0..3).map(|i| port(&format!("P{i}"), 50.0, 30.0)).collect();
    Instance::new(
        "SparsePair",
        ports,
        vec![vessel("Small", 100.0, 1, 1000.0)],
        vec![leg(0, 1, 100.0), leg(1, 0, 100.0)],
        vec![demand(0, 1, 10.0, 1500.0)],
        4,
    )
    .expect("sparse instance is valid")
}

/// Bounds for [`random_instance`].
#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub max_ports: usize,
    pub max_demands: usize,
    pub max_classes: usize,
    pub max_quantity: u32,
    pub max_capacity: u32,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            max_ports: 4,
            max_demands: 3,
            max_classes: 2,
            max_quantity: 5,
            max_capacity: 5,
        }
    }
}

/// Random instance with integer costs, capacities and quantities.
pub fn random_instance(rng: &mut impl Rng, spec: RandomSpec) -> Instance {
    let n = rng.random_range(2..=spec.max_ports.max(2));
    let ports = (0..n)
        .map(|i| {
            port(
                &format!("R{i}"),
                rng.random_range(0..=20) as f64,
                rng.random_range(0..=20) as f64,
            )
        })
        .collect();
    let fleet = (0..rng.random_range(1..=spec.max_classes.max(1)))
        .map(|i| {
            vessel(
                &format!("C{i}"),
                rng.random_range(1..=spec.max_capacity.max(1)) as f64,
                rng.random_range(0..4),
                rng.random_range(0..=10) as f64,
            )
        })
        .collect();
    let distances = dense_distances(n, |_, _| rng.random_range(0..=500) as f64);
    let demands = (0..rng.random_range(1..=spec.max_demands.max(1)))
        .map(|_| {
            let o = rng.random_range(0..n);
            let d = (o + rng.random_range(1..n)) % n;
            demand(
                o,
                d,
                rng.random_range(0..=spec.max_quantity) as f64,
                rng.random_range(0..=200) as f64,
            )
        })
        .collect();
    Instance::new("Random", ports, fleet, distances, demands, 4).expect("random instance is valid")
}

/// Random simple rotation over `n` ports: a shuffled subset of size ≥ 2.
pub fn random_rotation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut ports: Vec<usize> = (0..n).collect();
    ports.shuffle(rng);
    let k = rng.random_range(2..=n.max(2));
    ports.truncate(k);
    ports
}
