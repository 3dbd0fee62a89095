//! Vessel requirements and the weekly profit breakdown of a network.
//!
//! All money terms are $ per week. Daily rates (time charter, fuel) are
//! multiplied by 7 where they accrue per vessel-day.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_expanded_graph, ExpandedGraph};
use crate::mcf::{handling_split, solve_on_graph, FlowAssignment};
use crate::model::{Instance, Service, VesselClass};

/// How the per-rotation voyage terms (port calls, fuel) are charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoyageCostMode {
    /// The fleet on a service completes one rotation per week between
    /// them, so each rotation's port calls and fuel are paid once a week.
    #[default]
    PerRotationWeek,
    /// Port calls and fuel are additionally multiplied by the fractional
    /// vessel count of the service. Canal fees are never multiplied.
    Literal,
}

impl fmt::Display for VoyageCostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VoyageCostMode::PerRotationWeek => "per_rotation_week",
            VoyageCostMode::Literal => "literal",
        })
    }
}

impl FromStr for VoyageCostMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "per_rotation_week" => Ok(VoyageCostMode::PerRotationWeek),
            "literal" => Ok(VoyageCostMode::Literal),
            other => Err(Error::Config(format!("unknown voyage cost mode `{other}`"))),
        }
    }
}

/// Fractional vessels needed to sail `ports` weekly at design speed, with
/// one day spent in each port.
pub fn rotation_vessels(instance: &Instance, class: &VesselClass, ports: &[usize]) -> Result<f64> {
    if !(class.design_speed > 0.0) {
        return Err(Error::ZeroSpeed(class.name.clone()));
    }
    let sailing_days = sailing_days(instance, class, ports)?;
    Ok((sailing_days + ports.len() as f64) / 7.0)
}

fn sailing_days(instance: &Instance, class: &VesselClass, ports: &[usize]) -> Result<f64> {
    let n = ports.len();
    let mut nm = 0.0;
    for i in 0..n {
        nm += instance.require_distance(ports[i], ports[(i + 1) % n])?.distance;
    }
    Ok(nm / (class.design_speed * 24.0))
}

pub fn vessels_required(service: &Service, instance: &Instance) -> Result<f64> {
    let class = instance
        .fleet
        .get(service.vessel_class)
        .ok_or(Error::VesselClassIndex(service.vessel_class))?;
    rotation_vessels(instance, class, &service.ports)
}

/// Cost terms that depend only on the services.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedCosts {
    pub service_cost: f64,
    /// Negative when vessels are left over and chartered out.
    pub unused_vessel: f64,
    pub port_call: f64,
    pub fuel: f64,
    pub canal: f64,
    /// Fractional vessels in use, per fleet class.
    pub vessels_used: Vec<f64>,
}

impl FixedCosts {
    pub fn voyage(&self) -> f64 {
        self.port_call + self.fuel + self.canal
    }
}

pub fn fixed_cost(instance: &Instance, services: &[Service], mode: VoyageCostMode) -> Result<FixedCosts> {
    let mut used = vec![0.0; instance.fleet.len()];
    let mut service_cost = 0.0;
    let mut port_call = 0.0;
    let mut fuel = 0.0;
    let mut canal = 0.0;
    for s in services {
        let class = instance
            .fleet
            .get(s.vessel_class)
            .ok_or(Error::VesselClassIndex(s.vessel_class))?;
        let n = vessels_required(s, instance)?;
        used[s.vessel_class] += n;
        service_cost += n * class.tc_rate * 7.0;

        let factor = match mode {
            VoyageCostMode::PerRotationWeek => 1.0,
            VoyageCostMode::Literal => n,
        };
        let calls: f64 = s
            .ports
            .iter()
            .map(|&p| {
                let port = &instance.ports[p];
                port.fixed_call_cost + port.variable_call_cost * class.capacity
            })
            .sum();
        port_call += factor * calls;
        let days = sailing_days(instance, class, &s.ports)?;
        fuel += factor * (days * class.fuel_design + s.ports.len() as f64 * class.fuel_idle);
        for (o, d) in s.legs() {
            let e = instance.require_distance(o, d)?;
            if e.suez {
                canal += class.suez_fee;
            }
            if e.panama {
                canal += class.panama_fee;
            }
        }
    }
    let unused_vessel = -instance
        .fleet
        .iter()
        .zip(&used)
        .map(|(v, u)| (v.count as f64 - u) * v.tc_rate * 7.0)
        .sum::<f64>();
    Ok(FixedCosts {
        service_cost,
        unused_vessel,
        port_call,
        fuel,
        canal,
        vessels_used: used,
    })
}

/// Demand-driven terms of the flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableTerms {
    pub revenue: f64,
    pub reject_penalty: f64,
    pub load_unload: f64,
    pub transshipment: f64,
}

pub fn variable_terms(instance: &Instance, graph: &ExpandedGraph, flow: &FlowAssignment) -> VariableTerms {
    let mut revenue = 0.0;
    let mut reject_penalty = 0.0;
    for (d, demand) in instance.demands.iter().enumerate() {
        revenue += demand.revenue * flow.served[d];
        reject_penalty += demand.reject_penalty * flow.missed[d];
    }
    let mut load_unload = 0.0;
    let mut transshipment = 0.0;
    for p in &flow.paths {
        let (access, transship) = handling_split(graph, &p.edges);
        load_unload += p.amount * access;
        transshipment += p.amount * transship;
    }
    VariableTerms {
        revenue,
        reject_penalty,
        load_unload,
        transshipment,
    }
}

/// Every term of the weekly profit. `profit` is computed from the stored
/// parts, so [`ProfitBreakdown::identity_residual`] is exactly zero for a
/// breakdown built by [`ProfitBreakdown::assemble`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    pub revenue: f64,
    pub reject_penalty: f64,
    pub handling_load_unload: f64,
    pub handling_transshipment: f64,
    pub handling: f64,
    pub service_cost: f64,
    pub unused_vessel: f64,
    pub voyage_port_call: f64,
    pub voyage_fuel: f64,
    pub voyage_canal: f64,
    pub voyage_cost: f64,
    pub fixed: f64,
    pub profit: f64,
    pub served: f64,
    pub missed: f64,
    pub vessels_used: f64,
    pub vessels_used_per_class: Vec<f64>,
    pub voyage_cost_mode: VoyageCostMode,
}

impl ProfitBreakdown {
    pub fn assemble(
        fixed: &FixedCosts,
        variable: &VariableTerms,
        flow: &FlowAssignment,
        mode: VoyageCostMode,
    ) -> ProfitBreakdown {
        let handling = variable.load_unload + variable.transshipment;
        let voyage_cost = fixed.voyage();
        let fixed_total = fixed.service_cost + fixed.unused_vessel + voyage_cost;
        let profit = variable.revenue
            - variable.reject_penalty
            - handling
            - fixed.service_cost
            - fixed.unused_vessel
            - voyage_cost;
        ProfitBreakdown {
            revenue: variable.revenue,
            reject_penalty: variable.reject_penalty,
            handling_load_unload: variable.load_unload,
            handling_transshipment: variable.transshipment,
            handling,
            service_cost: fixed.service_cost,
            unused_vessel: fixed.unused_vessel,
            voyage_port_call: fixed.port_call,
            voyage_fuel: fixed.fuel,
            voyage_canal: fixed.canal,
            voyage_cost,
            fixed: fixed_total,
            profit,
            served: flow.total_served(),
            missed: flow.total_missed(),
            vessels_used: fixed.vessels_used.iter().sum(),
            vessels_used_per_class: fixed.vessels_used.clone(),
            voyage_cost_mode: mode,
        }
    }

    /// `profit` minus the signed sum of the six top-level parts.
    pub fn identity_residual(&self) -> f64 {
        self.profit
            - (self.revenue
                - self.reject_penalty
                - self.handling
                - self.service_cost
                - self.unused_vessel
                - self.voyage_cost)
    }

    /// Table rows as (label, value), top-level terms in the order they
    /// enter the profit. Costs are printed as positive numbers; the
    /// unused-vessel row is printed as a profit.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("Revenue", self.revenue),
            ("Rejected demand penalty", self.reject_penalty),
            ("Load/unload cost", self.handling_load_unload),
            ("Transshipment cost", self.handling_transshipment),
            ("Vessel service cost", self.service_cost),
            ("Unused vessel profit", -self.unused_vessel),
            ("Port call cost", self.voyage_port_call),
            ("Fuel cost", self.voyage_fuel),
            ("Canal cost", self.voyage_canal),
            ("Profit", self.profit),
        ]
    }
}

/// Everything produced by evaluating one network.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub graph: ExpandedGraph,
    pub flow: FlowAssignment,
    pub breakdown: ProfitBreakdown,
}

pub fn evaluate(instance: &Instance, services: &[Service], mode: VoyageCostMode) -> Result<Evaluation> {
    let graph = build_expanded_graph(instance, services)?;
    let flow = solve_on_graph(instance, &graph);
    let fixed = fixed_cost(instance, services, mode)?;
    let variable = variable_terms(instance, &graph, &flow);
    let breakdown = ProfitBreakdown::assemble(&fixed, &variable, &flow, mode);
    Ok(Evaluation {
        graph,
        flow,
        breakdown,
    })
}

pub fn profit(instance: &Instance, services: &[Service]) -> Result<ProfitBreakdown> {
    profit_with(instance, services, VoyageCostMode::default())
}

pub fn profit_with(instance: &Instance, services: &[Service], mode: VoyageCostMode) -> Result<ProfitBreakdown> {
    Ok(evaluate(instance, services, mode)?.breakdown)
}
