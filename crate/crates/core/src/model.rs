//! In-memory problem model: ports, fleet, sailing distances, demands and
//! the services that make up a candidate network.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::costs;
use crate::error::{Error, Result};

/// Penalty charged per rejected FFE unless configured otherwise.
pub const DEFAULT_REJECT_PENALTY: f64 = 1000.0;

/// Default bound on the number of services in a network.
pub const DEFAULT_MAX_SERVICES: usize = 20;

/// Number of numeric features exposed per vessel class.
pub const VESSEL_FEATURES: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortSpec {
    /// Upper-case UNLOCODE.
    pub id: String,
    pub name: String,
    /// $ per port call.
    pub fixed_call_cost: f64,
    /// $ per FFE of calling vessel capacity.
    pub variable_call_cost: f64,
    /// $ per FFE moved between two services at this port.
    pub transshipment_cost: f64,
    /// $ per FFE loaded or unloaded.
    pub move_cost: f64,
    pub latitude: f64,
    pub longitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselClass {
    pub name: String,
    /// FFE.
    pub capacity: f64,
    pub count: u32,
    /// $ per day.
    pub tc_rate: f64,
    pub draft: f64,
    pub min_speed: f64,
    pub max_speed: f64,
    /// Knots.
    pub design_speed: f64,
    /// $ per day sailing at design speed.
    pub fuel_design: f64,
    /// $ per day idle in port.
    pub fuel_idle: f64,
    pub suez_fee: f64,
    pub panama_fee: f64,
}

impl VesselClass {
    /// Feature row for this class. Column 0 is the remaining vessel count.
    pub fn features(&self, remaining: f64) -> [f64; VESSEL_FEATURES] {
        [
            remaining,
            self.capacity,
            self.tc_rate,
            self.draft,
            self.min_speed,
            self.max_speed,
            self.design_speed,
            self.fuel_design,
            self.fuel_idle,
            self.suez_fee,
            self.panama_fee,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEntry {
    pub origin: usize,
    pub destination: usize,
    /// Nautical miles.
    pub distance: f64,
    pub draft: f64,
    pub suez: bool,
    pub panama: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub origin: usize,
    pub destination: usize,
    /// $ per FFE delivered.
    pub revenue: f64,
    /// FFE per week.
    pub quantity: f64,
    /// $ per FFE rejected.
    pub reject_penalty: f64,
    /// Carried for re-serialization only.
    pub transit_time: Option<f64>,
}

/// A complete problem instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub ports: Vec<PortSpec>,
    pub fleet: Vec<VesselClass>,
    pub demands: Vec<Demand>,
    pub max_services: usize,
    distances: Vec<Option<DistanceEntry>>,
    port_lookup: HashMap<String, usize>,
}

impl Instance {
    /// Builds an instance from already-resolved parts. Port ids are
    /// normalized to upper case; distance and demand endpoints are indices
    /// into `ports`.
    pub fn new(
        name: impl Into<String>,
        mut ports: Vec<PortSpec>,
        fleet: Vec<VesselClass>,
        distances: Vec<DistanceEntry>,
        demands: Vec<Demand>,
        max_services: usize,
    ) -> Result<Self> {
        if max_services == 0 {
            return Err(Error::Config("max_services must be positive".into()));
        }
        let mut port_lookup = HashMap::with_capacity(ports.len());
        for (idx, port) in ports.iter_mut().enumerate() {
            port.id = normalize_port_id(&port.id);
            if port_lookup.insert(port.id.clone(), idx).is_some() {
                return Err(Error::Config(format!("duplicate port id `{}`", port.id)));
            }
            let costs = [
                port.fixed_call_cost,
                port.variable_call_cost,
                port.transshipment_cost,
                port.move_cost,
            ];
            if costs.iter().any(|c| !(*c >= 0.0)) {
                return Err(Error::Config(format!("negative cost at port `{}`", port.id)));
            }
        }
        for class in &fleet {
            if !(class.capacity > 0.0) {
                return Err(Error::Config(format!(
                    "vessel class `{}` needs positive capacity",
                    class.name
                )));
            }
            if !(class.design_speed > 0.0) {
                return Err(Error::ZeroSpeed(class.name.clone()));
            }
        }
        let n = ports.len();
        let mut table = vec![None; n * n];
        for entry in distances {
            if entry.origin >= n || entry.destination >= n {
                return Err(Error::Config("distance entry references unknown port".into()));
            }
            if !(entry.distance >= 0.0) {
                return Err(Error::Config(format!(
                    "negative distance {} -> {}",
                    ports[entry.origin].id, ports[entry.destination].id
                )));
            }
            let slot = &mut table[entry.origin * n + entry.destination];
            if slot.is_some() {
                return Err(Error::Config(format!(
                    "duplicate distance entry {} -> {}",
                    ports[entry.origin].id, ports[entry.destination].id
                )));
            }
            *slot = Some(entry);
        }
        for d in &demands {
            if d.origin >= n || d.destination >= n {
                return Err(Error::Config("demand references unknown port".into()));
            }
            if d.origin == d.destination {
                return Err(Error::Config(format!(
                    "demand with identical origin and destination `{}`",
                    ports[d.origin].id
                )));
            }
            if !(d.quantity >= 0.0) {
                return Err(Error::Config("negative demand quantity".into()));
            }
        }
        Ok(Instance {
            name: name.into(),
            ports,
            fleet,
            demands,
            max_services,
            distances: table,
            port_lookup,
        })
    }

    pub fn port_count(&self) -> usize {
        self.ports.len()
    }

    pub fn port_index(&self, id: &str) -> Option<usize> {
        self.port_lookup.get(&normalize_port_id(id)).copied()
    }

    pub fn require_port(&self, id: &str) -> Result<usize> {
        self.port_index(id)
            .ok_or_else(|| Error::UnknownPort(id.to_string()))
    }

    /// Class lookup by name; case and `_`/space/`-` separators are ignored.
    pub fn class_index(&self, name: &str) -> Option<usize> {
        let key = normalize_class_name(name);
        self.fleet
            .iter()
            .position(|c| normalize_class_name(&c.name) == key)
    }

    pub fn distance(&self, origin: usize, destination: usize) -> Option<&DistanceEntry> {
        let n = self.ports.len();
        if origin >= n || destination >= n {
            return None;
        }
        self.distances[origin * n + destination].as_ref()
    }

    pub fn require_distance(&self, origin: usize, destination: usize) -> Result<&DistanceEntry> {
        self.distance(origin, destination)
            .ok_or_else(|| Error::MissingDistance {
                from: self.port_label(origin),
                to: self.port_label(destination),
            })
    }

    /// Every stored distance entry, ordered by (origin, destination).
    pub fn distance_entries(&self) -> impl Iterator<Item = &DistanceEntry> {
        self.distances.iter().flatten()
    }

    /// First ordered pair of distinct ports with no distance entry.
    pub fn missing_distance(&self) -> Option<(usize, usize)> {
        let n = self.ports.len();
        (0..n)
            .flat_map(|o| (0..n).map(move |d| (o, d)))
            .find(|&(o, d)| o != d && self.distances[o * n + d].is_none())
    }

    pub fn total_demand(&self) -> f64 {
        self.demands.iter().map(|d| d.quantity).sum()
    }

    /// Profit of the network with no services: every FFE rejected and
    /// every vessel chartered out.
    pub fn empty_network_profit(&self) -> f64 {
        let reject: f64 = self
            .demands
            .iter()
            .map(|d| d.reject_penalty * d.quantity)
            .sum();
        let charter: f64 = self
            .fleet
            .iter()
            .map(|v| v.count as f64 * v.tc_rate * 7.0)
            .sum();
        -reject + charter
    }

    /// Copy of this instance with different demand quantities.
    pub fn with_quantities(&self, name: impl Into<String>, quantities: &[f64]) -> Instance {
        assert_eq!(quantities.len(), self.demands.len());
        let mut out = self.clone();
        out.name = name.into();
        for (d, q) in out.demands.iter_mut().zip(quantities) {
            d.quantity = *q;
        }
        out
    }

    pub fn with_max_services(mut self, max_services: usize) -> Instance {
        self.max_services = max_services.max(1);
        self
    }

    fn port_label(&self, idx: usize) -> String {
        self.ports
            .get(idx)
            .map(|p| p.id.clone())
            .unwrap_or_else(|| format!("#{idx}"))
    }
}

pub fn normalize_port_id(id: &str) -> String {
    id.trim().to_ascii_uppercase()
}

fn normalize_class_name(name: &str) -> String {
    name.chars()
        .filter(|c| !matches!(c, '_' | ' ' | '-'))
        .flat_map(char::to_lowercase)
        .collect()
}

/// One cyclic rotation sailed at weekly frequency by a single vessel class.
#[derive(Debug, Clone, PartialEq)]
pub struct Service {
    pub vessel_class: usize,
    /// Port indices in call order; the closing leg back to `ports[0]` is implicit.
    pub ports: Vec<usize>,
    /// Fractional vessel count needed for weekly frequency.
    pub n_vessels: f64,
}

impl Service {
    /// Validates a simple rotation and derives its vessel count.
    pub fn new(instance: &Instance, vessel_class: usize, ports: Vec<usize>) -> Result<Service> {
        let class = instance
            .fleet
            .get(vessel_class)
            .ok_or(Error::VesselClassIndex(vessel_class))?;
        if ports.len() < 2 {
            return Err(Error::InvalidService(format!(
                "rotation needs at least 2 ports, got {}",
                ports.len()
            )));
        }
        for (i, &p) in ports.iter().enumerate() {
            if p >= instance.port_count() {
                return Err(Error::InvalidService(format!("port index {p} out of range")));
            }
            if ports[..i].contains(&p) {
                return Err(Error::InvalidService(format!(
                    "port `{}` repeats within rotation",
                    instance.ports[p].id
                )));
            }
        }
        let n_vessels = costs::rotation_vessels(instance, class, &ports)?;
        Ok(Service {
            vessel_class,
            ports,
            n_vessels,
        })
    }

    /// Resolves class name and UNLOCODEs against `instance`.
    pub fn from_ids<S: AsRef<str>>(instance: &Instance, class: &str, ports: &[S]) -> Result<Service> {
        let vessel_class = instance
            .class_index(class)
            .ok_or_else(|| Error::UnknownVesselClass(class.to_string()))?;
        let ports = ports
            .iter()
            .map(|p| instance.require_port(p.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Service::new(instance, vessel_class, ports)
    }

    /// Directed legs including the closing leg.
    pub fn legs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.ports.len();
        (0..n).map(move |i| (self.ports[i], self.ports[(i + 1) % n]))
    }

    pub fn port_ids<'a>(&self, instance: &'a Instance) -> Vec<&'a str> {
        self.ports
            .iter()
            .map(|&p| instance.ports[p].id.as_str())
            .collect()
    }
}
