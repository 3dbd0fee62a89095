use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use lsndp::costs::{evaluate, VoyageCostMode};
use lsndp::linerlib::{demand_file_body, parse_instance_with, ParseOptions};
use lsndp::mcf::check_feasibility;
use lsndp::model::{Instance, DEFAULT_MAX_SERVICES, DEFAULT_REJECT_PENALTY};
use lsndp::perturb::{write_perturbed, PerturbSpec};
use lsndp::protocol::{serve_tcp, InstanceSource, Server};
use lsndp::report::RunReport;
use lsndp::schedule::{load_schedule, load_schedule_decomposed, write_schedule};
use lsndp::search::{solve, SearchConfig};

/// Published reference profits ($/week) used to report a gap after `solve`.
const BENCHMARKS: &[(&str, f64)] = &[("Baltic", 260_000.0), ("WorldSmall", 32_280_000.0)];

#[derive(Parser)]
#[command(name = "lsndp", version, about = "Liner shipping network design toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an instance and print a summary.
    Validate(InstanceArgs),
    /// Evaluate a schedule: flow, costs and weekly profit.
    Evaluate(EvaluateArgs),
    /// Search for a profitable network with seeded rollouts.
    Solve(SolveArgs),
    /// Write demand files with normally perturbed quantities.
    Perturb(PerturbArgs),
    /// Serve the environment as newline-delimited JSON.
    Serve(ServeArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    #[arg(long, default_value = "./LINERLIB")]
    data_dir: PathBuf,
    #[arg(long)]
    instance: String,
    #[arg(long, default_value_t = DEFAULT_MAX_SERVICES)]
    max_services: usize,
    /// $ per rejected FFE.
    #[arg(long, default_value_t = DEFAULT_REJECT_PENALTY)]
    reject_penalty: f64,
    /// $ per ton for fuel columns given in tons per day.
    #[arg(long, default_value_t = 600.0)]
    bunker_price: f64,
    /// Demand file to use instead of `Demand_<instance>`.
    #[arg(long)]
    demand: Option<PathBuf>,
}

impl InstanceArgs {
    fn options(&self) -> ParseOptions {
        ParseOptions {
            max_services: self.max_services,
            reject_penalty: self.reject_penalty,
            bunker_price: self.bunker_price,
            demand_file: self.demand.clone(),
        }
    }

    fn load(&self) -> Result<Instance, Failure> {
        parse_instance_with(&self.data_dir, &self.instance, &self.options())
            .with_context(|| format!("loading instance `{}` from {}", self.instance, self.data_dir.display()))
            .map_err(Failure::Input)
    }
}

#[derive(Args)]
struct CostArgs {
    /// per_rotation_week or literal.
    #[arg(long, default_value = "per_rotation_week", value_parser = parse_mode)]
    voyage_cost_mode: VoyageCostMode,
}

fn parse_mode(s: &str) -> Result<VoyageCostMode, String> {
    s.parse().map_err(|e: lsndp::Error| e.to_string())
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    cost: CostArgs,
    /// Schedule JSON file.
    #[arg(long)]
    schedule: PathBuf,
    /// Refuse multi-loop rotations instead of splitting them.
    #[arg(long)]
    strict: bool,
    /// Write the key=value report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the expanded graph in DOT format here.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    cost: CostArgs,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 100)]
    rollouts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Base probability of including a port in a sampled service.
    #[arg(long, default_value_t = 0.3)]
    prior: f64,
    /// Score only complete episodes, not their intermediate networks.
    #[arg(long)]
    final_only: bool,
    /// Worker threads for restarts; 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    /// Reference profit for the gap line; defaults to a published value when known.
    #[arg(long)]
    benchmark: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    level: f64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "./LINERLIB")]
    data_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_SERVICES)]
    max_services: usize,
    #[arg(long, default_value_t = DEFAULT_REJECT_PENALTY)]
    reject_penalty: f64,
    #[arg(long, default_value_t = 600.0)]
    bunker_price: f64,
    #[command(flatten)]
    cost: CostArgs,
    /// Listen on this address instead of stdin/stdout.
    #[arg(long)]
    tcp: Option<String>,
}

enum Failure {
    Input(anyhow::Error),
    Invariant(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.into())
    }
}

trait InputContext<T> {
    fn input(self, what: impl FnOnce() -> String) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> InputContext<T> for Result<T, E> {
    fn input(self, what: impl FnOnce() -> String) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into().context(what())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Perturb(a) => cmd_perturb(&a),
        Command::Serve(a) => cmd_serve(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("internal invariant violated: {msg}");
            ExitCode::from(3)
        }
    }
}

fn cmd_validate(args: &InstanceArgs) -> Result<(), Failure> {
    let inst = args.load()?;
    println!("instance      {}", inst.name);
    println!("ports         {}", inst.port_count());
    println!("vessel classes {}", inst.fleet.len());
    for v in &inst.fleet {
        println!("  {:<16} capacity {:>6} count {}", v.name, v.capacity, v.count);
    }
    println!("demands       {}", inst.demands.len());
    println!("total FFE     {}", inst.total_demand());
    println!("max services  {}", inst.max_services);
    println!("empty profit  {:.2}", inst.empty_network_profit());
    Ok(())
}

fn write_report(report: &RunReport, path: Option<&Path>) -> Result<(), Failure> {
    print!("{}", report.to_table());
    if let Some(path) = path {
        fs::write(path, report.to_kv()).input(|| format!("writing report {}", path.display()))?;
    }
    Ok(())
}

fn check_identity(b: &lsndp::costs::ProfitBreakdown) -> Result<(), Failure> {
    let r = b.identity_residual();
    if r != 0.0 {
        return Err(Failure::Invariant(format!("profit breakdown off by {r}")));
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let inst = args.instance.load()?;
    let services = if args.strict {
        load_schedule(&args.schedule, &inst)
    } else {
        load_schedule_decomposed(&args.schedule, &inst)
    }
    .input(|| format!("loading schedule {}", args.schedule.display()))?;
    let mode = args.cost.voyage_cost_mode;
    let ev = evaluate(&inst, &services, mode).input(|| "evaluating schedule".to_string())?;
    check_feasibility(&inst, &ev.graph, &ev.flow).map_err(Failure::Invariant)?;
    check_identity(&ev.breakdown)?;
    if let Some(dot) = &args.dot {
        fs::write(dot, ev.graph.to_dot(&inst)).input(|| format!("writing {}", dot.display()))?;
    }
    let mut report = RunReport::new(&inst, "evaluate", ev.breakdown, services.len())
        .config("voyage_cost_mode", mode)
        .config("max_services", inst.max_services);
    report.schedule_path = Some(args.schedule.display().to_string());
    report.wall = started.elapsed();
    write_report(&report, args.report.as_deref())
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let inst = Arc::new(args.instance.load()?);
    let config = SearchConfig {
        restarts: args.restarts,
        rollouts_per_restart: args.rollouts,
        port_inclusion_prior: args.prior,
        rng_seed: args.seed,
        max_services: Some(args.instance.max_services),
        best_prefix: !args.final_only,
        parallel: args.threads != Some(1),
        voyage_cost_mode: args.cost.voyage_cost_mode,
    };
    let run = || solve(Arc::clone(&inst), &config);
    let outcome = match args.threads {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Input(anyhow!(e)))?
            .install(run),
        _ => run(),
    }
    .input(|| "search".to_string())?;
    check_identity(&outcome.breakdown)?;
    if let Some(out) = &args.out {
        write_schedule(&outcome.services, &inst, out).input(|| format!("writing {}", out.display()))?;
    }
    let benchmark = args
        .benchmark
        .or_else(|| BENCHMARKS.iter().find(|(n, _)| *n == inst.name).map(|&(_, v)| v));
    let profit = outcome.breakdown.profit;
    let mut report = RunReport::new(&inst, "solve", outcome.breakdown, outcome.services.len())
        .config("restarts", config.restarts)
        .config("rollouts", config.rollouts_per_restart)
        .config("seed", config.rng_seed)
        .config("prior", config.port_inclusion_prior)
        .config("max_services", args.instance.max_services)
        .config("best_prefix", config.best_prefix)
        .config("voyage_cost_mode", config.voyage_cost_mode)
        .note("best_rollout", outcome.best_rollout);
    if let Some(b) = benchmark {
        report = report
            .note("benchmark", b)
            .note("gap_to_benchmark", b - profit)
            .note("gap_to_benchmark_pct", 100.0 * (b - profit) / b.abs());
    }
    report.inference = Some(outcome.timings.inference);
    report.environment = Some(outcome.timings.environment);
    report.schedule_path = args.out.as_ref().map(|p| p.display().to_string());
    report.wall = started.elapsed();
    write_report(&report, args.report.as_deref())
}

fn cmd_perturb(args: &PerturbArgs) -> Result<(), Failure> {
    let inst = args.instance.load()?;
    let spec = PerturbSpec {
        level: args.level,
        count: args.count,
        seed: args.seed,
    };
    let paths = write_perturbed(&inst, &spec, &args.out_dir).input(|| "perturbing demands".to_string())?;
    if args.level == 0.0 {
        let canonical = demand_file_body(&inst);
        for p in &paths {
            let written = fs::read_to_string(p)?;
            if written != canonical {
                return Err(Failure::Invariant(format!("{} differs from the input demand", p.display())));
            }
        }
    }
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_serve(args: &ServeArgs) -> Result<(), Failure> {
    let options = ParseOptions {
        max_services: args.max_services,
        reject_penalty: args.reject_penalty,
        bunker_price: args.bunker_price,
        demand_file: None,
    };
    let source = InstanceSource::directory(args.data_dir.clone(), options);
    let mode = args.cost.voyage_cost_mode;
    match &args.tcp {
        Some(addr) => {
            eprintln!("listening on {addr}");
            serve_tcp(addr.as_str(), source, mode).input(|| format!("serving on {addr}"))
        }
        None => {
            let stdin = io::stdin();
            Server::new(source, mode).serve(stdin.lock(), io::stdout().lock())?;
            Ok(())
        }
    }
}
