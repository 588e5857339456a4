//! `mincap`: generate grid worlds, compute minimal capacities, plan target
//! allocation and routing, simulate plans and time the pipeline.
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible instance, 4 internal
//! error.

mod bench;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mincap_core::gridworld::{cell_name, current_field_csv, grid_description};
use mincap_core::planner::apply_variants;
use mincap_core::{
    min_cap, min_cap_matrix, min_cap_sequence, min_cost_scc_decomposition, min_cost_scc_matching, simulate_policy,
    solve, ConsumptionMdp, CostGraph, CostMode, GridSpec, PlanReport, PlanRequest, Problem, SearchMode,
    SimulationConfig, SimulationStats, StateId, VariantConstraints,
};
use serde::Serialize;

use manifest::{ConfigHasher, PhaseTimings, RunManifest};

#[derive(Parser)]
#[command(name = "mincap", version, about = "Minimal-capacity planning for consumption MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a grid-world model from a grid spec.
    GenGrid(GenGridArgs),
    /// Minimal capacity for one pair of states.
    MinCap(MinCapArgs),
    /// Minimal capacities for all pairs, as CSV.
    Matrix(MatrixArgs),
    /// Solve target allocation or routing.
    Solve(SolveArgs),
    /// Simulate the agent routes of a plan.
    Simulate(SimulateArgs),
    /// Time the pipeline over a suite of generated instances.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenGridArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the current field as CSV.
    #[arg(long)]
    currents_csv: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct MinCapArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
    /// Reload state to pass through first.
    #[arg(long)]
    via: Option<String>,
    /// Write the witness strategy as JSON.
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long)]
    model: PathBuf,
    /// Defaults to every state.
    #[arg(long, value_delimiter = ',')]
    rows: Vec<String>,
    /// Defaults to the rows.
    #[arg(long, value_delimiter = ',')]
    cols: Vec<String>,
    /// Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum ProblemArg {
    Alloc,
    Routing,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum CostArg {
    Exact,
    Heuristic,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum SearchArg {
    Linear,
    Binary,
}

#[derive(Args)]
struct SolveArgs {
    /// Consumption MDP in JSON.
    #[arg(long, required_unless_present = "graph", conflicts_with = "graph")]
    model: Option<PathBuf>,
    /// Cost graph as an edge list; skips capacity computation.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Grid spec; supplies heuristic costs and default targets and initials.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    initials: Vec<String>,
    #[arg(long, value_enum, default_value = "alloc")]
    problem: ProblemArg,
    #[arg(long, default_value_t = 1)]
    agents: usize,
    #[arg(long, value_enum, default_value = "exact")]
    cost: CostArg,
    #[arg(long, value_enum, default_value = "binary")]
    search: SearchArg,
    /// Same-agent groups and visit sequences, in JSON.
    #[arg(long)]
    variants: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Steps per run; defaults to ten times capacity times legs per agent.
    #[arg(long)]
    horizon: Option<usize>,
    /// Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    /// Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_model(path: &Path, hash: &mut ConfigHasher) -> Result<ConsumptionMdp> {
    let text = read(path)?;
    hash.field(text.as_bytes());
    ConsumptionMdp::from_json(&text).with_context(|| format!("loading model {}", path.display()))
}

fn states(model: &ConsumptionMdp, names: &[String]) -> Result<Vec<StateId>> {
    Ok(names.iter().map(|n| model.state(n)).collect::<mincap_core::Result<_>>()?)
}

fn finish_manifest(
    path: Option<&Path>,
    command: &str,
    hash: ConfigHasher,
    seeds: Vec<u64>,
    timings: PhaseTimings,
    mut outputs: Vec<PathBuf>,
) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    outputs.push(path.to_owned());
    RunManifest { command: command.into(), config_hash: hash.finish(), seeds, timings, outputs }.write(path)
}

fn total_only(started: Instant) -> PhaseTimings {
    PhaseTimings { total_seconds: started.elapsed().as_secs_f64(), ..Default::default() }
}

fn gen_grid_cmd(a: &GenGridArgs) -> Result<()> {
    let started = Instant::now();
    let text = read(&a.config)?;
    let mut hash = ConfigHasher::new("gen-grid");
    hash.field(text.as_bytes());
    let spec = GridSpec::from_json(&text)?;
    let desc = grid_description(&spec)?;
    write(&a.out, &(desc.to_json() + "\n"))?;
    let mut outputs = vec![a.out.clone()];
    if let Some(p) = &a.currents_csv {
        let Some(csv) = current_field_csv(&spec) else { bail!("the grid spec has no current_seed") };
        write(p, &csv)?;
        outputs.push(p.clone());
    }
    let seeds = spec.current_seed.into_iter().collect();
    finish_manifest(a.manifest.as_deref(), "gen-grid", hash, seeds, total_only(started), outputs)
}

#[derive(Serialize)]
struct MinCapOutput<'a> {
    source: &'a str,
    target: &'a str,
    via: Option<&'a str>,
    capacity: Option<u32>,
}

fn min_cap_cmd(a: &MinCapArgs) -> Result<()> {
    let started = Instant::now();
    let mut hash = ConfigHasher::new("min-cap");
    let model = load_model(&a.model, &mut hash)?;
    hash.setting("pair", (&a.from, &a.to, &a.via));
    let (s, t) = (model.state(&a.from)?, model.state(&a.to)?);
    let (capacity, witness) = match &a.via {
        Some(v) => {
            let r = min_cap_sequence(&model, s, model.state(v)?, t)?;
            let w = r.witness.map(|w| {
                serde_json::json!({ "before": w.before.to_json(&model), "after": w.after.to_json(&model) })
            });
            (r.value, w)
        }
        None => {
            let r = min_cap(&model, s, t)?;
            (r.value, r.witness.map(|w| w.to_json(&model)))
        }
    };
    let out = MinCapOutput { source: &a.from, target: &a.to, via: a.via.as_deref(), capacity };
    println!("{}", serde_json::to_string(&out)?);
    let mut outputs = Vec::new();
    if let Some(p) = &a.witness {
        let Some(w) = witness else { bail!("no witness: `{}` cannot safely reach `{}`", a.from, a.to) };
        write(p, &(serde_json::to_string_pretty(&w)? + "\n"))?;
        outputs.push(p.clone());
    }
    finish_manifest(a.manifest.as_deref(), "min-cap", hash, Vec::new(), total_only(started), outputs)
}

fn matrix_cmd(a: &MatrixArgs) -> Result<()> {
    let started = Instant::now();
    let mut hash = ConfigHasher::new("matrix");
    let model = load_model(&a.model, &mut hash)?;
    hash.setting("rows", &a.rows);
    hash.setting("cols", &a.cols);
    let rows = if a.rows.is_empty() { model.states().collect() } else { states(&model, &a.rows)? };
    let cols = if a.cols.is_empty() { rows.clone() } else { states(&model, &a.cols)? };
    let m = min_cap_matrix(&model, &rows, &cols)?;
    emit(a.out.as_deref(), &m.to_csv())?;
    let timings = PhaseTimings { matrix_seconds: started.elapsed().as_secs_f64(), ..total_only(started) };
    finish_manifest(a.manifest.as_deref(), "matrix", hash, Vec::new(), timings, a.out.iter().cloned().collect())
}

fn search_mode(s: SearchArg) -> SearchMode {
    match s {
        SearchArg::Linear => SearchMode::Linear,
        SearchArg::Binary => SearchMode::Binary,
    }
}

/// Plans directly on a given cost graph.
fn solve_graph(a: &SolveArgs, text: &str, variants: &VariantConstraints) -> Result<(PlanReport, String, PhaseTimings)> {
    let started = Instant::now();
    if a.cost == CostArg::Heuristic {
        bail!("--cost heuristic needs --model and --grid");
    }
    let g = CostGraph::parse_edge_list(text)?;
    let routing = a.problem == ProblemArg::Routing;
    let initials: &[String] = if routing { &a.initials } else { &[] };
    if routing && initials.is_empty() {
        bail!("routing needs --initials");
    }
    let targets: Vec<String> = if a.targets.is_empty() {
        g.names().iter().filter(|n| !initials.contains(n)).cloned().collect()
    } else {
        a.targets.clone()
    };
    if let Some(x) = targets.iter().find(|t| initials.contains(t)) {
        bail!("`{x}` is both a target and an initial state");
    }
    let keep: Vec<&String> = targets.iter().chain(initials).collect();
    let sub = g.induced_subgraph_named(&keep)?;
    let (sub, overrides) = apply_variants(&sub, variants, None)?;
    let result = if routing {
        let ids = initials.iter().map(|n| sub.vertex(n)).collect::<mincap_core::Result<Vec<_>>>()?;
        min_cost_scc_matching(&sub, &ids, search_mode(a.search))?
    } else {
        min_cost_scc_decomposition(&sub, a.agents, search_mode(a.search))?
    };
    let problem = if routing { Problem::Routing } else { Problem::Allocation };
    let mut report = PlanReport::from_result(problem, &result)?;
    report.overrides = overrides;
    let dot = result.graph.to_dot(Some(&result.retained), Some(&result.components));
    let timings = PhaseTimings {
        matrix_seconds: 0.0,
        scc_seconds: result.stats.scc_seconds,
        matching_seconds: result.stats.matching_seconds,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((report, dot, timings))
}

fn solve_model(
    a: &SolveArgs,
    model: &ConsumptionMdp,
    grid: Option<GridSpec>,
    variants: VariantConstraints,
) -> Result<(PlanReport, String, PhaseTimings)> {
    let routing = a.problem == ProblemArg::Routing;
    let cells = |c: &[(u32, u32)]| c.iter().map(|&c| cell_name(c)).collect::<Vec<_>>();
    let targets = match (&grid, a.targets.is_empty()) {
        (Some(spec), true) => cells(&spec.target_cells),
        (None, true) => bail!("--targets is required without --grid"),
        (_, false) => a.targets.clone(),
    };
    let initials = match (&grid, a.initials.is_empty()) {
        (Some(spec), true) if routing => cells(&spec.initial_cells),
        _ => a.initials.clone(),
    };
    let mut req = if routing {
        PlanRequest::routing(states(model, &targets)?, states(model, &initials)?)
    } else {
        PlanRequest::allocation(states(model, &targets)?, a.agents)
    };
    req.search = search_mode(a.search);
    req.variants = variants;
    if a.cost == CostArg::Heuristic {
        let Some(spec) = grid else { bail!("--cost heuristic needs --grid") };
        req.cost = CostMode::Heuristic(spec);
    }
    let plan = solve(model, &req)?;
    let t = &plan.timings;
    let timings = PhaseTimings {
        matrix_seconds: t.matrix_seconds,
        scc_seconds: t.scc_seconds,
        matching_seconds: t.matching_seconds,
        total_seconds: t.total_seconds,
    };
    Ok((plan.report()?, plan.to_dot(), timings))
}

fn solve_cmd(a: &SolveArgs) -> Result<()> {
    let started = Instant::now();
    if a.problem == ProblemArg::Alloc && a.agents == 0 {
        bail!(mincap_core::Error::InvalidInput("--agents must be at least 1".into()));
    }
    let mut hash = ConfigHasher::new("solve");
    hash.setting("targets", &a.targets);
    hash.setting("initials", &a.initials);
    hash.setting("problem", a.problem);
    hash.setting("agents", a.agents);
    hash.setting("cost", a.cost);
    hash.setting("search", a.search);
    let grid = match &a.grid {
        Some(p) => {
            let text = read(p)?;
            hash.field(text.as_bytes());
            Some(GridSpec::from_json(&text)?)
        }
        None => None,
    };
    let variants = match &a.variants {
        Some(p) => {
            let text = read(p)?;
            hash.field(text.as_bytes());
            serde_json::from_str(&text).with_context(|| format!("parsing variants {}", p.display()))?
        }
        None => VariantConstraints::default(),
    };
    let (report, dot, mut timings) = match (&a.model, &a.graph) {
        (Some(p), _) => {
            let model = load_model(p, &mut hash)?;
            solve_model(a, &model, grid, variants)?
        }
        (None, Some(p)) => {
            let text = read(p)?;
            hash.field(text.as_bytes());
            solve_graph(a, &text, &variants)?
        }
        (None, None) => bail!("one of --model or --graph is required"),
    };
    timings.total_seconds = timings.total_seconds.max(started.elapsed().as_secs_f64());

    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let plan_path = a.out_dir.join("plan.json");
    let dot_path = a.out_dir.join("plan.dot");
    write(&plan_path, &(report.to_json() + "\n"))?;
    write(&dot_path, &dot)?;
    println!("capacity {}", report.capacity);
    let manifest_path = a.out_dir.join("manifest.json");
    finish_manifest(Some(&manifest_path), "solve", hash, Vec::new(), timings, vec![plan_path, dot_path])
}

#[derive(Serialize)]
struct AgentStats {
    agent: String,
    start: String,
    capacity: u32,
    horizon: usize,
    seed: u64,
    stats: SimulationStats,
}

#[derive(Serialize)]
struct SimulationReport {
    runs: usize,
    seed: u64,
    agents: Vec<AgentStats>,
    aggregate: SimulationStats,
}

fn aggregate(agents: &[AgentStats]) -> SimulationStats {
    let covered: usize = agents.iter().map(|a| a.stats.covered_runs).sum();
    let steps: f64 = agents.iter().filter_map(|a| Some(a.stats.mean_steps_to_cover? * a.stats.covered_runs as f64)).sum();
    SimulationStats {
        runs: agents.iter().map(|a| a.stats.runs).sum(),
        depletion_count: agents.iter().map(|a| a.stats.depletion_count).sum(),
        covered_runs: covered,
        mean_steps_to_cover: (covered > 0).then(|| steps / covered as f64),
        min_level_observed: agents.iter().filter_map(|a| a.stats.min_level_observed).min(),
    }
}

fn simulate_cmd(a: &SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let mut hash = ConfigHasher::new("simulate");
    let model = load_model(&a.model, &mut hash)?;
    let plan_text = read(&a.plan)?;
    hash.field(plan_text.as_bytes());
    hash.setting("runs", a.runs);
    hash.setting("horizon", a.horizon);
    let plan = PlanReport::from_json(&plan_text).with_context(|| format!("loading plan {}", a.plan.display()))?;
    if a.runs == 0 {
        bail!(mincap_core::Error::InvalidInput("--runs must be positive".into()));
    }
    if plan.agents.is_empty() {
        bail!(mincap_core::Error::InvalidInput("the plan has no agent routes; solve it with --model".into()));
    }
    let mut agents = Vec::new();
    let mut seeds = Vec::new();
    for (k, ap) in plan.agents.iter().enumerate() {
        let start = model.state(&ap.start)?;
        let targets = ap.target_states(&model)?;
        let capacity = match ap.witness_capacity {
            Some(c) => c,
            None => ap.required_capacity(&model)?,
        };
        let mut policy = ap.policy(&model, capacity)?;
        let horizon = a.horizon.unwrap_or(10 * capacity.max(1) as usize * ap.legs.len().max(1));
        let seed = a.seed.wrapping_add(k as u64);
        let config = SimulationConfig { runs: a.runs, horizon, seed };
        let stats = simulate_policy(&model, &mut policy, start, capacity, &targets, config)?;
        seeds.push(seed);
        agents.push(AgentStats { agent: ap.agent.clone(), start: ap.start.clone(), capacity, horizon, seed, stats });
    }
    let report = SimulationReport { runs: a.runs, seed: a.seed, aggregate: aggregate(&agents), agents };
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    finish_manifest(a.manifest.as_deref(), "simulate", hash, seeds, total_only(started), a.out.iter().cloned().collect())
}

fn bench_cmd(a: &BenchArgs) -> Result<()> {
    let started = Instant::now();
    let text = read(&a.suite)?;
    let mut hash = ConfigHasher::new("bench");
    hash.field(text.as_bytes());
    let suite: bench::Suite =
        serde_json::from_str(&text).with_context(|| format!("parsing suite {}", a.suite.display()))?;
    let csv = suite.run()?;
    emit(a.out.as_deref(), &csv)?;
    finish_manifest(a.manifest.as_deref(), "bench", hash, suite.seeds(), total_only(started), a.out.iter().cloned().collect())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("MINCAP_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).with_context(|| format!("MINCAP_THREADS=`{v}` is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::GenGrid(a) => gen_grid_cmd(a),
        Command::MinCap(a) => min_cap_cmd(a),
        Command::Matrix(a) => matrix_cmd(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<mincap_core::Error>() {
            return match err {
                mincap_core::Error::Infeasible { .. } => 3,
                mincap_core::Error::Internal(_) => 4,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(4),
    }
}
