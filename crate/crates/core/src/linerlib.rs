//! Reader for LINERLIB-style instance directories.
//!
//! Files are delimited text with a header row (tab-separated upstream,
//! comma accepted). Columns are located by header name, so reordered or
//! extra columns are tolerated. Lookup for a file stem `X` tries `X`,
//! `X.csv`, `data/X` and `data/X.csv` under the given directory.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{
    normalize_port_id, Demand, DistanceEntry, Instance, PortSpec, VesselClass,
    DEFAULT_MAX_SERVICES, DEFAULT_REJECT_PENALTY,
};

pub const PORTS_FILE: &str = "ports";
pub const DISTANCE_FILE: &str = "dist_dense";
pub const FLEET_DATA_FILE: &str = "fleet_data";

/// Knobs that LINERLIB files do not carry.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub max_services: usize,
    pub reject_penalty: f64,
    /// $ per ton, applied to fuel columns given in tons per day.
    pub bunker_price: f64,
    /// Read demands from this file instead of `Demand_<name>`.
    pub demand_file: Option<PathBuf>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_services: DEFAULT_MAX_SERVICES,
            reject_penalty: DEFAULT_REJECT_PENALTY,
            bunker_price: 600.0,
            demand_file: None,
        }
    }
}

pub fn parse_instance(dir: &Path, instance_name: &str, max_services: usize) -> Result<Instance> {
    parse_instance_with(
        dir,
        instance_name,
        &ParseOptions {
            max_services,
            ..ParseOptions::default()
        },
    )
}

pub fn parse_instance_with(dir: &Path, instance_name: &str, opts: &ParseOptions) -> Result<Instance> {
    let demand_path = match &opts.demand_file {
        Some(p) if p.is_file() => p.clone(),
        Some(p) => return Err(Error::MissingFile(p.clone())),
        None => locate(dir, &format!("Demand_{instance_name}"))?,
    };
    let ports_path = locate(dir, PORTS_FILE)?;
    let dist_path = locate(dir, DISTANCE_FILE)?;
    let fleet_data_path = locate(dir, FLEET_DATA_FILE)?;
    let fleet_path = locate(dir, &format!("fleet_{instance_name}"))?;

    let all_ports = read_ports(&ports_path)?;
    let global: HashMap<String, usize> = all_ports
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.clone(), i))
        .collect();

    let raw_demands = read_demands(&demand_path, &global, opts.reject_penalty)?;

    // Instance ports: every demand endpoint, in ports-file order.
    let mut used = vec![false; all_ports.len()];
    for d in &raw_demands {
        used[d.origin] = true;
        used[d.destination] = true;
    }
    let mut remap = vec![usize::MAX; all_ports.len()];
    let mut ports = Vec::new();
    for (g, port) in all_ports.into_iter().enumerate() {
        if used[g] {
            remap[g] = ports.len();
            ports.push(port);
        }
    }
    let demands = raw_demands
        .into_iter()
        .map(|mut d| {
            d.origin = remap[d.origin];
            d.destination = remap[d.destination];
            d
        })
        .collect();

    let distances = read_distances(&dist_path, &global, &remap)?;
    let fleet = read_fleet(&fleet_data_path, &fleet_path, opts.bunker_price)?;

    let instance = Instance::new(
        instance_name,
        ports,
        fleet,
        distances,
        demands,
        opts.max_services,
    )?;
    if let Some((o, d)) = instance.missing_distance() {
        return Err(Error::MissingDistance {
            from: instance.ports[o].id.clone(),
            to: instance.ports[d].id.clone(),
        });
    }
    Ok(instance)
}

/// Finds `stem` (optionally with `.csv`, optionally under `data/`).
pub fn locate(dir: &Path, stem: &str) -> Result<PathBuf> {
    let candidates = [
        dir.join(stem),
        dir.join(format!("{stem}.csv")),
        dir.join("data").join(stem),
        dir.join("data").join(format!("{stem}.csv")),
    ];
    candidates
        .iter()
        .find(|p| p.is_file())
        .cloned()
        .ok_or_else(|| Error::MissingFile(dir.join(format!("{stem}.csv"))))
}

/// Writes the demands of `instance` in the LINERLIB demand layout.
pub fn write_demands(instance: &Instance, path: &Path) -> Result<()> {
    fs::write(path, demand_file_body(instance)).map_err(|e| Error::io(path, e))
}

/// Canonical text of a demand file for `instance`.
pub fn demand_file_body(instance: &Instance) -> String {
    let mut out = String::from("Origin\tDestination\tFFEPerWeek\tRevenue_1\tTransitTime\n");
    for d in &instance.demands {
        let tt = d.transit_time.map(|t| t.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            instance.ports[d.origin].id, instance.ports[d.destination].id, d.quantity, d.revenue, tt
        );
    }
    out
}

struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Table> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let first = text.lines().next().unwrap_or("");
        let delimiter = if first.contains('\t') {
            b'\t'
        } else if first.contains(';') {
            b';'
        } else {
            b','
        };
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Format {
                file: path.to_path_buf(),
                message: e.to_string(),
            })?
            .iter()
            .map(normalize_header)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Format {
                file: path.to_path_buf(),
                message: e.to_string(),
            })?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, record));
        }
        Ok(Table {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    fn optional(&self, aliases: &[&str]) -> Option<usize> {
        aliases
            .iter()
            .find_map(|a| self.headers.iter().position(|h| h == a))
    }

    fn column(&self, aliases: &[&str]) -> Result<usize> {
        self.optional(aliases).ok_or_else(|| Error::Format {
            file: self.path.clone(),
            message: format!("no column matching any of {aliases:?}"),
        })
    }

    fn text<'r>(&self, row: &'r (u64, csv::StringRecord), col: usize) -> Result<&'r str> {
        row.1.get(col).filter(|s| !s.is_empty()).ok_or_else(|| Error::Field {
            file: self.path.clone(),
            line: row.0,
            column: col + 1,
            name: self.headers[col].clone(),
            message: "missing value".into(),
        })
    }

    fn number(&self, row: &(u64, csv::StringRecord), col: usize) -> Result<f64> {
        let raw = self.text(row, col)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Field {
                file: self.path.clone(),
                line: row.0,
                column: col + 1,
                name: self.headers[col].clone(),
                message: format!("not a number: `{raw}`"),
            }),
        }
    }

    fn optional_number(&self, row: &(u64, csv::StringRecord), col: Option<usize>) -> Result<Option<f64>> {
        match col {
            Some(c) if row.1.get(c).is_some_and(|s| !s.is_empty()) => self.number(row, c).map(Some),
            _ => Ok(None),
        }
    }

    fn flag(&self, row: &(u64, csv::StringRecord), col: Option<usize>) -> Result<bool> {
        let Some(col) = col else { return Ok(false) };
        match row.1.get(col).unwrap_or("").to_ascii_lowercase().as_str() {
            "" | "0" | "false" | "no" => Ok(false),
            "1" | "true" | "yes" => Ok(true),
            other => Err(Error::Field {
                file: self.path.clone(),
                line: row.0,
                column: col + 1,
                name: self.headers[col].clone(),
                message: format!("expected 0/1 flag, got `{other}`"),
            }),
        }
    }

    fn port(&self, row: &(u64, csv::StringRecord), col: usize, lookup: &HashMap<String, usize>) -> Result<usize> {
        let id = normalize_port_id(self.text(row, col)?);
        lookup
            .get(id.as_str())
            .copied()
            .ok_or_else(|| Error::UnknownPortInFile {
                file: self.path.clone(),
                line: row.0,
                port: id,
            })
    }
}

fn normalize_header(h: &str) -> String {
    h.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

fn read_ports(path: &Path) -> Result<Vec<PortSpec>> {
    let t = Table::read(path)?;
    let id = t.column(&["unlocode", "portid", "port", "id"])?;
    let name = t.optional(&["name", "portname"]);
    let lat = t.optional(&["latitude", "lat"]);
    let lon = t.optional(&["longitude", "lon", "lng"]);
    let fixed = t.column(&["portcallcostfixed", "fixedcallcost", "fixedcost"])?;
    let variable = t.column(&["portcallcostperffe", "variablecallcost", "variablecost"])?;
    let transship = t.column(&[
        "costperfulltrnsf",
        "costperfulltransshipment",
        "transshipmentcost",
        "transshipcost",
    ])?;
    let moves = t.column(&["costperfull", "movecost", "handlingcost", "loadcost"])?;

    let mut seen = HashMap::new();
    let mut ports = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        let port = PortSpec {
            id: normalize_port_id(t.text(row, id)?),
            name: name
                .and_then(|c| row.1.get(c))
                .unwrap_or_default()
                .to_string(),
            fixed_call_cost: t.number(row, fixed)?,
            variable_call_cost: t.number(row, variable)?,
            transshipment_cost: t.number(row, transship)?,
            move_cost: t.number(row, moves)?,
            latitude: t.optional_number(row, lat)?.unwrap_or(0.0),
            longitude: t.optional_number(row, lon)?.unwrap_or(0.0),
        };
        if seen.insert(port.id.clone(), row.0).is_some() {
            return Err(Error::Format {
                file: t.path.clone(),
                message: format!("line {}: duplicate port `{}`", row.0, port.id),
            });
        }
        ports.push(port);
    }
    Ok(ports)
}

fn read_demands(path: &Path, global: &HashMap<String, usize>, reject_penalty: f64) -> Result<Vec<Demand>> {
    let t = Table::read(path)?;
    let origin = t.column(&["origin", "from", "fromunlocode"])?;
    let destination = t.column(&["destination", "to", "tounlocode"])?;
    let quantity = t.column(&["ffeperweek", "quantity", "ffe"])?;
    let revenue = t.column(&["revenue1", "revenue", "rate"])?;
    let transit = t.optional(&["transittime"]);
    let mut out = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        let d = Demand {
            origin: t.port(row, origin, global)?,
            destination: t.port(row, destination, global)?,
            revenue: t.number(row, revenue)?,
            quantity: t.number(row, quantity)?,
            reject_penalty,
            transit_time: t.optional_number(row, transit)?,
        };
        if d.origin == d.destination {
            return Err(Error::Format {
                file: t.path.clone(),
                message: format!("line {}: origin equals destination", row.0),
            });
        }
        if d.quantity < 0.0 {
            return Err(Error::Field {
                file: t.path.clone(),
                line: row.0,
                column: quantity + 1,
                name: t.headers[quantity].clone(),
                message: "negative quantity".into(),
            });
        }
        out.push(d);
    }
    Ok(out)
}

fn read_distances(path: &Path, global: &HashMap<String, usize>, remap: &[usize]) -> Result<Vec<DistanceEntry>> {
    let t = Table::read(path)?;
    let from = t.column(&["fromunlocode", "from", "origin"])?;
    let to = t.column(&["tounlocode", "to", "destination"])?;
    let distance = t.column(&["distance", "distancenm", "dist"])?;
    let draft = t.optional(&["draft"]);
    let suez = t.optional(&["issuez", "suez"]);
    let panama = t.optional(&["ispanama", "panama"]);
    let mut out = Vec::new();
    for row in &t.rows {
        let o = t.port(row, from, global)?;
        let d = t.port(row, to, global)?;
        let (o, d) = (remap[o], remap[d]);
        if o == usize::MAX || d == usize::MAX || o == d {
            continue;
        }
        out.push(DistanceEntry {
            origin: o,
            destination: d,
            distance: t.number(row, distance)?,
            draft: t.optional_number(row, draft)?.unwrap_or(0.0),
            suez: t.flag(row, suez)?,
            panama: t.flag(row, panama)?,
        });
    }
    Ok(out)
}

fn read_fleet(data_path: &Path, counts_path: &Path, bunker_price: f64) -> Result<Vec<VesselClass>> {
    let t = Table::read(data_path)?;
    let name = t.column(&["vesselclass", "class", "classname", "name"])?;
    let capacity = t.column(&["capacityffe", "capacity"])?;
    let tc = t.column(&["tcratedailyfixedcost", "tcratedaily", "tcrate", "tc"])?;
    let draft = t.optional(&["draft"]);
    let min_speed = t.optional(&["minspeed"]);
    let max_speed = t.optional(&["maxspeed"]);
    let design_speed = t.column(&["designspeed"])?;
    let fuel_design = t.column(&[
        "bunkertonperdayatdesignspeed",
        "bunkerconsumptionatdesignspeed",
        "fuelatdesignspeed",
        "fuelatdesign",
        "fueldesign",
    ])?;
    let fuel_idle = t.column(&[
        "idleconsumptiontonday",
        "idleconsumption",
        "fuelidle",
        "bunkeridle",
    ])?;
    let suez = t.column(&["suezfee", "suez"])?;
    let panama = t.column(&["panamafee", "panama"])?;
    let design_factor = fuel_factor(&t.headers[fuel_design], bunker_price);
    let idle_factor = fuel_factor(&t.headers[fuel_idle], bunker_price);

    let mut specs: HashMap<String, VesselClass> = HashMap::new();
    for row in &t.rows {
        let class = VesselClass {
            name: t.text(row, name)?.to_string(),
            capacity: t.number(row, capacity)?,
            count: 0,
            tc_rate: t.number(row, tc)?,
            draft: t.optional_number(row, draft)?.unwrap_or(0.0),
            min_speed: t.optional_number(row, min_speed)?.unwrap_or(0.0),
            max_speed: t.optional_number(row, max_speed)?.unwrap_or(0.0),
            design_speed: t.number(row, design_speed)?,
            fuel_design: t.number(row, fuel_design)? * design_factor,
            fuel_idle: t.number(row, fuel_idle)? * idle_factor,
            suez_fee: t.number(row, suez)?,
            panama_fee: t.number(row, panama)?,
        };
        specs.insert(class_key(&class.name), class);
    }

    let c = Table::read(counts_path)?;
    let cname = c.column(&["vesselclass", "class", "classname", "name"])?;
    let count = c.column(&["quantity", "count", "number", "vessels"])?;
    let mut fleet = Vec::with_capacity(c.rows.len());
    for row in &c.rows {
        let class_name = c.text(row, cname)?;
        let mut class = specs
            .get(&class_key(class_name))
            .cloned()
            .ok_or_else(|| Error::UnknownVesselClass(class_name.to_string()))?;
        let n = c.number(row, count)?;
        if n < 0.0 || n.fract() != 0.0 {
            return Err(Error::Field {
                file: c.path.clone(),
                line: row.0,
                column: count + 1,
                name: c.headers[count].clone(),
                message: format!("vessel count must be a non-negative integer, got {n}"),
            });
        }
        class.count = n as u32;
        fleet.push(class);
    }
    Ok(fleet)
}

fn fuel_factor(header: &str, bunker_price: f64) -> f64 {
    if header.contains("ton") {
        bunker_price
    } else {
        1.0
    }
}

fn class_key(name: &str) -> String {
    normalize_header(name)
}
