//! Newline-delimited JSON front end to the environment.
//!
//! Each request line is one JSON object with a `cmd` field; each reply is
//! one JSON object on its own line. Failures are reported as
//! `{"error": "..."}` and never end the session.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::costs::VoyageCostMode;
use crate::env::{Action, EnvState, Environment, Matrix, StateFeatures};
use crate::error::{Error, Result};
use crate::linerlib::{parse_instance_with, ParseOptions};
use crate::model::Instance;
use crate::perturb::perturbed_quantities;
use crate::tsp::order_ports;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    Reset {
        instance: String,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        perturb: f64,
    },
    Step {
        state_id: u64,
        vessel: usize,
        ports: Vec<String>,
    },
    OrderPorts {
        ports: Vec<String>,
        #[serde(default)]
        state_id: Option<u64>,
        #[serde(default)]
        instance: Option<String>,
    },
    Close {
        state_id: u64,
    },
}

/// Features as sent on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireFeatures {
    pub port_features: Matrix,
    pub edge_features: Matrix,
    pub vessel_features: Matrix,
    pub port_ids: Vec<String>,
    pub step: usize,
}

impl WireFeatures {
    fn new(features: StateFeatures, instance: &Instance, state: &EnvState) -> WireFeatures {
        WireFeatures {
            port_features: features.port_features,
            edge_features: features.edge_features,
            vessel_features: features.vessel_features,
            port_ids: instance.ports.iter().map(|p| p.id.clone()).collect(),
            step: state.step,
        }
    }
}

/// Where `reset` finds instances by name.
#[derive(Debug, Clone)]
pub struct InstanceSource {
    pub data_dir: Option<PathBuf>,
    pub options: ParseOptions,
    cache: Arc<Mutex<HashMap<String, Arc<Instance>>>>,
}

impl InstanceSource {
    pub fn directory(data_dir: PathBuf, options: ParseOptions) -> InstanceSource {
        InstanceSource {
            data_dir: Some(data_dir),
            options,
            cache: Arc::default(),
        }
    }

    /// A fixed set of instances; nothing is read from disk.
    pub fn preloaded(instances: impl IntoIterator<Item = Instance>) -> InstanceSource {
        let map = instances
            .into_iter()
            .map(|i| (i.name.clone(), Arc::new(i)))
            .collect();
        InstanceSource {
            data_dir: None,
            options: ParseOptions::default(),
            cache: Arc::new(Mutex::new(map)),
        }
    }

    pub fn get(&self, name: &str) -> Result<Arc<Instance>> {
        let mut cache = self.cache.lock().expect("instance cache poisoned");
        if let Some(inst) = cache.get(name) {
            return Ok(Arc::clone(inst));
        }
        let dir = self
            .data_dir
            .as_ref()
            .ok_or_else(|| Error::Config(format!("unknown instance `{name}`")))?;
        let inst = Arc::new(parse_instance_with(dir, name, &self.options)?);
        cache.insert(name.to_string(), Arc::clone(&inst));
        Ok(inst)
    }

    fn only(&self) -> Option<Arc<Instance>> {
        let cache = self.cache.lock().expect("instance cache poisoned");
        if cache.len() == 1 {
            cache.values().next().cloned()
        } else {
            None
        }
    }
}

struct Session {
    env: Environment,
    state: EnvState,
}

/// One protocol session. State ids are unique within the session.
pub struct Server {
    source: InstanceSource,
    mode: VoyageCostMode,
    sessions: HashMap<u64, Session>,
    next_id: u64,
}

impl Server {
    pub fn new(source: InstanceSource, mode: VoyageCostMode) -> Server {
        Server {
            source,
            mode,
            sessions: HashMap::new(),
            next_id: 1,
        }
    }

    /// Handles one request line and returns the reply line (no newline).
    pub fn handle_line(&mut self, line: &str) -> String {
        let reply = match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(req).unwrap_or_else(|e| json!({ "error": e.to_string() })),
            Err(e) => json!({ "error": format!("bad request: {e}") }),
        };
        reply.to_string()
    }

    pub fn handle(&mut self, request: Request) -> Result<Value> {
        match request {
            Request::Reset { instance, seed, perturb } => {
                let base = self.source.get(&instance)?;
                let inst = if perturb > 0.0 {
                    let q = perturbed_quantities(&base, perturb, seed, 0)?;
                    Arc::new(base.with_quantities(base.name.clone(), &q))
                } else if perturb == 0.0 {
                    base
                } else {
                    return Err(Error::Config(format!("perturbation level {perturb} must be >= 0")));
                };
                let env = Environment::with_mode(Arc::clone(&inst), self.mode);
                let state = env.reset(seed);
                let features = WireFeatures::new(env.featurize(&state), &inst, &state);
                let eta0 = state.profit();
                let id = self.next_id;
                self.next_id += 1;
                self.sessions.insert(id, Session { env, state });
                Ok(json!({ "state_id": id, "features": features, "eta0": eta0 }))
            }
            Request::Step { state_id, vessel, ports } => {
                let session = self
                    .sessions
                    .get_mut(&state_id)
                    .ok_or(Error::UnknownState(state_id))?;
                let inst = Arc::clone(session.env.instance());
                let ports = ports
                    .iter()
                    .map(|p| inst.require_port(p))
                    .collect::<Result<Vec<_>>>()?;
                let (reward, done) = session.env.step_in_place(&mut session.state, &Action { vessel, ports })?;
                let features = WireFeatures::new(session.env.featurize(&session.state), &inst, &session.state);
                Ok(json!({
                    "features": features,
                    "reward": reward,
                    "done": done,
                    "profit": session.state.profit(),
                }))
            }
            Request::OrderPorts { ports, state_id, instance } => {
                let inst = match (state_id, instance) {
                    (Some(id), _) => Arc::clone(
                        self.sessions
                            .get(&id)
                            .ok_or(Error::UnknownState(id))?
                            .env
                            .instance(),
                    ),
                    (None, Some(name)) => self.source.get(&name)?,
                    (None, None) => self
                        .sessions
                        .values()
                        .next()
                        .map(|s| Arc::clone(s.env.instance()))
                        .or_else(|| self.source.only())
                        .ok_or_else(|| Error::Config("order_ports needs a state_id or instance".into()))?,
                };
                let idx = ports
                    .iter()
                    .map(|p| inst.require_port(p))
                    .collect::<Result<Vec<_>>>()?;
                let ordered: Vec<&str> = order_ports(&inst, &idx)?
                    .into_iter()
                    .map(|p| inst.ports[p].id.as_str())
                    .collect();
                Ok(json!({ "ports": ordered }))
            }
            Request::Close { state_id } => {
                self.sessions
                    .remove(&state_id)
                    .ok_or(Error::UnknownState(state_id))?;
                Ok(json!({ "ok": true }))
            }
        }
    }

    /// Serves until the reader is exhausted. Blank lines are ignored.
    pub fn serve<R: BufRead, W: Write>(&mut self, reader: R, mut writer: W) -> std::io::Result<()> {
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let reply = self.handle_line(&line);
            writer.write_all(reply.as_bytes())?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        Ok(())
    }
}

/// Accepts TCP connections forever, one thread and one session per
/// connection. Instances are parsed once and shared.
pub fn serve_tcp(addr: impl ToSocketAddrs, source: InstanceSource, mode: VoyageCostMode) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    serve_listener(listener, source, mode)
}

pub fn serve_listener(listener: TcpListener, source: InstanceSource, mode: VoyageCostMode) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let source = source.clone();
        std::thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(s) => BufReader::new(s),
                Err(_) => return,
            };
            let _ = Server::new(source, mode).serve(reader, stream);
        });
    }
    Ok(())
}
