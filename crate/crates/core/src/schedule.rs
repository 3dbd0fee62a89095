//! Schedule files: a JSON array of `{"vessel_class": .., "ports": [..]}`
//! entries. Each rotation is the listed order with an implicit closing leg.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::decompose_to_simple;
use crate::model::{Instance, Service};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub vessel_class: String,
    pub ports: Vec<String>,
}

pub fn read_schedule_entries(path: &Path) -> Result<Vec<ScheduleEntry>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Loads a schedule of simple services; any repeated port is an error.
pub fn load_schedule(path: &Path, instance: &Instance) -> Result<Vec<Service>> {
    read_schedule_entries(path)?
        .iter()
        .map(|e| Service::from_ids(instance, &e.vessel_class, &e.ports))
        .collect()
}

/// Loads a schedule, splitting multi-loop rotations (butterfly, pendulum,
/// ...) into simple services that keep the original vessel class.
pub fn load_schedule_decomposed(path: &Path, instance: &Instance) -> Result<Vec<Service>> {
    services_from_entries(&read_schedule_entries(path)?, instance)
}

pub fn services_from_entries(entries: &[ScheduleEntry], instance: &Instance) -> Result<Vec<Service>> {
    let mut out = Vec::with_capacity(entries.len());
    for entry in entries {
        let class = instance
            .class_index(&entry.vessel_class)
            .ok_or_else(|| Error::UnknownVesselClass(entry.vessel_class.clone()))?;
        let ports = entry
            .ports
            .iter()
            .map(|p| instance.require_port(p))
            .collect::<Result<Vec<_>>>()?;
        for cycle in decompose_to_simple(&ports)? {
            out.push(Service::new(instance, class, cycle)?);
        }
    }
    Ok(out)
}

pub fn schedule_entries(services: &[Service], instance: &Instance) -> Result<Vec<ScheduleEntry>> {
    services
        .iter()
        .map(|s| {
            let class = instance
                .fleet
                .get(s.vessel_class)
                .ok_or(Error::VesselClassIndex(s.vessel_class))?;
            let ports = s
                .ports
                .iter()
                .map(|&p| {
                    instance
                        .ports
                        .get(p)
                        .map(|spec| spec.id.clone())
                        .ok_or_else(|| Error::UnknownPort(format!("#{p}")))
                })
                .collect::<Result<Vec<_>>>()?;
            // Re-validate: refuse to persist something that will not load.
            Service::from_ids(instance, &class.name, &ports)?;
            Ok(ScheduleEntry {
                vessel_class: class.name.clone(),
                ports,
            })
        })
        .collect()
}

pub fn write_schedule(services: &[Service], instance: &Instance, path: &Path) -> Result<()> {
    let entries = schedule_entries(services, instance)?;
    let mut body = serde_json::to_string_pretty(&entries)?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))
}
