//! Run reports: an aligned table for people and `key=value` lines for
//! scripts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use crate::costs::ProfitBreakdown;
use crate::model::Instance;

#[derive(Debug, Clone)]
pub struct RunReport {
    pub instance: String,
    pub command: String,
    /// Echo of the effective configuration, in insertion order.
    pub config: Vec<(String, String)>,
    pub breakdown: ProfitBreakdown,
    pub class_names: Vec<String>,
    pub services: usize,
    pub inference: Option<Duration>,
    pub environment: Option<Duration>,
    pub wall: Duration,
    pub schedule_path: Option<String>,
    /// Extra lines appended verbatim to both forms, e.g. benchmark gaps.
    pub notes: Vec<(String, String)>,
}

impl RunReport {
    pub fn new(instance: &Instance, command: &str, breakdown: ProfitBreakdown, services: usize) -> RunReport {
        RunReport {
            instance: instance.name.clone(),
            command: command.to_string(),
            config: Vec::new(),
            breakdown,
            class_names: instance.fleet.iter().map(|v| v.name.clone()).collect(),
            services,
            inference: None,
            environment: None,
            wall: Duration::ZERO,
            schedule_path: None,
            notes: Vec::new(),
        }
    }

    pub fn config(mut self, key: &str, value: impl ToString) -> Self {
        self.config.push((key.to_string(), value.to_string()));
        self
    }

    pub fn note(mut self, key: &str, value: impl ToString) -> Self {
        self.notes.push((key.to_string(), value.to_string()));
        self
    }

    /// Machine-readable form. Money values use the shortest exact decimal
    /// representation, so the parts re-add to `profit`.
    pub fn to_kv(&self) -> String {
        let b = &self.breakdown;
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("instance", &self.instance);
        kv("command", &self.command);
        for (k, v) in &self.config {
            kv(&format!("config.{k}"), v);
        }
        kv("services", &self.services);
        kv("revenue", &b.revenue);
        kv("reject_penalty", &b.reject_penalty);
        kv("handling", &b.handling);
        kv("handling.load_unload", &b.handling_load_unload);
        kv("handling.transshipment", &b.handling_transshipment);
        kv("service_cost", &b.service_cost);
        kv("unused_vessel", &b.unused_vessel);
        kv("voyage_cost", &b.voyage_cost);
        kv("voyage_cost.port_call", &b.voyage_port_call);
        kv("voyage_cost.fuel", &b.voyage_fuel);
        kv("voyage_cost.canal", &b.voyage_canal);
        kv("fixed", &b.fixed);
        kv("profit", &b.profit);
        kv("served_ffe", &b.served);
        kv("missed_ffe", &b.missed);
        kv("vessels_used", &b.vessels_used);
        for (name, used) in self.class_names.iter().zip(&b.vessels_used_per_class) {
            kv(&format!("vessels_used.{name}"), used);
        }
        kv("voyage_cost_mode", &b.voyage_cost_mode);
        if let Some(t) = self.inference {
            kv("time.inference_s", &t.as_secs_f64());
        }
        if let Some(t) = self.environment {
            kv("time.environment_s", &t.as_secs_f64());
        }
        kv("time.wall_s", &self.wall.as_secs_f64());
        if let Some(p) = &self.schedule_path {
            kv("schedule", p);
        }
        for (k, v) in &self.notes {
            kv(k, v);
        }
        out
    }

    /// Human-readable table: weekly dollar figures, costs as positive
    /// numbers, leftover vessels shown as a profit.
    pub fn to_table(&self) -> String {
        let b = &self.breakdown;
        let mut rows: Vec<(String, String)> = Vec::new();
        let money = |v: f64| format!("{v:.2}");
        for (label, value) in b.rows() {
            rows.push((label.to_string(), money(value)));
        }
        rows.push(("Vessel used".into(), format!("{:.2}", b.vessels_used)));
        for (name, used) in self.class_names.iter().zip(&b.vessels_used_per_class) {
            if *used != 0.0 {
                rows.push((format!("  {name}"), format!("{used:.2}")));
            }
        }
        rows.push(("Services".into(), self.services.to_string()));
        rows.push(("Served FFE/week".into(), format!("{:.2}", b.served)));
        rows.push(("Rejected FFE/week".into(), format!("{:.2}", b.missed)));
        if let (Some(i), Some(e)) = (self.inference, self.environment) {
            rows.push(("Inference time (s)".into(), format!("{:.3}", i.as_secs_f64())));
            rows.push(("Environment time (s)".into(), format!("{:.3}", e.as_secs_f64())));
        }
        rows.push(("Wall time (s)".into(), format!("{:.3}", self.wall.as_secs_f64())));
        for (k, v) in &self.notes {
            rows.push((k.clone(), v.clone()));
        }
        let width = rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
        let vwidth = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        let mut out = format!("{} / {} ({})\n", self.instance, self.command, b.voyage_cost_mode);
        for (label, value) in rows {
            let _ = writeln!(out, "{label:<width$}  {value:>vwidth$}");
        }
        out
    }
}

/// Parses `key=value` lines; later keys win.
pub fn parse_kv(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}
