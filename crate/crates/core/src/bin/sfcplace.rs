use std::error::Error;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sfcplace::exact::{self, lp, ExactLimits};
use sfcplace::harness::{self, ExperimentPlan, Overrides, PlanAlgorithm};
use sfcplace::state::{self, PlacementState};
use sfcplace::tiny::{tiny_instance, TinyConfig};
use sfcplace::topology::{load_topology, CatalogConfig, NetworkModel, NET44, NET7};
use sfcplace::workload::{self, ChainMode, Scenario};
use sfcplace::{cost, Scalar};

type Res<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "sfcplace", version, about = "Hybrid VM/container SFC placement on an edge-cloud network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the two-phase protocol over a grid of lengths, modes, algorithms and seeds.
    Run(RunArgs),
    /// Write the scenario document of one (length, mode, seed) cell.
    Scenario(ScenarioArgs),
    /// Write the placement problem as an LP file.
    ExportMilp(ExportArgs),
    /// Read a `name value` solution of the exported LP and evaluate it.
    ImportSolution(ImportArgs),
    /// Check a placement document against every constraint.
    Validate(ValidateArgs),
    /// Solve a small placement problem exactly.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Args, Clone, Default)]
struct OverrideArgs {
    /// Probability that a demand belongs to the initial subset.
    #[arg(long = "r")]
    initial_selection_prob: Option<f64>,
    /// Fraction of the chain price charged per unit of delay excess.
    #[arg(long)]
    penalty_fraction: Option<f64>,
    /// Network delay allowance per chain (ms).
    #[arg(long)]
    d_net: Option<f64>,
    /// Downtime per migrated VNF (ms).
    #[arg(long)]
    d_dwt: Option<f64>,
}

impl OverrideArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            initial_selection_prob: self.initial_selection_prob,
            penalty_fraction: self.penalty_fraction,
            d_net: self.d_net,
            d_dwt: self.d_dwt,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// net7, net44 or a topology file.
    #[arg(long, default_value = "net7")]
    topology: String,
    /// Chain lengths, e.g. `1..10` or `1,2,4`.
    #[arg(long, default_value = "1..10")]
    lengths: String,
    #[arg(long, default_value = "vm-only,ct-only,vm-ct")]
    modes: String,
    /// Algorithms among ff, rf, grd and exact.
    #[arg(long, default_value = "grd")]
    alg: String,
    /// Master seeds, e.g. `1..10`.
    #[arg(long, default_value = "1..10")]
    seeds: String,
    #[arg(long)]
    out: PathBuf,
    /// Local search repetitions (default: one per chain).
    #[arg(long)]
    sweeps: Option<usize>,
    /// Worker threads (default: the SFCPLACE_WORKERS variable, then the core count).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, default_value = "net7")]
    topology: String,
    #[arg(long)]
    length: usize,
    #[arg(long)]
    mode: ChainMode,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    overrides: OverrideArgs,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Where the placement problem comes from: a seeded tiny instance, or a
/// topology plus a scenario document.
#[derive(Args)]
struct ProblemArgs {
    /// Seed of a tiny instance.
    #[arg(long, conflicts_with_all = ["topology", "scenario", "prior"])]
    tiny: Option<u64>,
    /// Tiny instance with a snapshot taken from an earlier placement.
    #[arg(long, requires = "tiny")]
    snapshot: bool,
    /// Tiny instance with binding capacities.
    #[arg(long, requires = "tiny")]
    tight: bool,
    #[arg(long, default_value = "net7")]
    topology: String,
    #[arg(long, required_unless_present = "tiny")]
    scenario: Option<PathBuf>,
    /// Phase-1 placement whose instances become the snapshot; without it
    /// the initial demands are placed with one instance per VNF.
    #[arg(long)]
    prior: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImportArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Solution file with one `name value` pair per line.
    #[arg(long)]
    solution: PathBuf,
    /// Write the imported placement document here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    state: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Write the optimal placement document here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the optimum as an LP solution here.
    #[arg(long)]
    solution_out: Option<PathBuf>,
    /// Refuse problems with more complete assignments than this.
    #[arg(long, default_value_t = ExactLimits::default().max_assignments)]
    max_assignments: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => match a.precision {
            Precision::F64 => run::<f64>(&a),
            Precision::F32 => run::<f32>(&a),
        },
        Command::Scenario(a) => scenario(&a),
        Command::ExportMilp(a) => export(&a),
        Command::ImportSolution(a) => import(&a),
        Command::Validate(a) => validate(&a),
        Command::Oracle(a) => oracle(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Parses `a..b` (inclusive) and comma-separated mixes of values and ranges.
fn parse_list(text: &str) -> Res<Vec<u64>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().trim_start_matches('=').parse()?);
                if a > b {
                    return Err(format!("empty range {part:?}").into());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse()?),
        }
    }
    if out.is_empty() {
        return Err(format!("empty list {text:?}").into());
    }
    Ok(out)
}

fn parse_names<T: std::str::FromStr>(text: &str) -> Res<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| e.to_string().into()))
        .collect()
}

fn topology_text(name: &str) -> Res<String> {
    Ok(match name {
        "net7" => NET7.to_string(),
        "net44" => NET44.to_string(),
        path => std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?,
    })
}

fn topology_label(name: &str) -> String {
    Path::new(name).file_stem().map_or_else(|| name.to_string(), |s| s.to_string_lossy().into_owned())
}

fn network<S: Scalar>(name: &str, config: CatalogConfig) -> Res<Arc<NetworkModel<S>>> {
    Ok(Arc::new(load_topology(&topology_text(name)?, config)?))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Res<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => {
            // a closed reader (e.g. `| head`) ends the output quietly
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn run<S: Scalar>(a: &RunArgs) -> Res<ExitCode> {
    let plan = ExperimentPlan::<S> {
        topology_name: topology_label(&a.topology),
        network: network(&a.topology, CatalogConfig::default())?,
        chain_lengths: parse_list(&a.lengths)?.into_iter().map(|n| n as usize).collect(),
        modes: parse_names(&a.modes)?,
        algorithms: parse_names::<PlanAlgorithm>(&a.alg)?,
        seeds: parse_list(&a.seeds)?,
        overrides: a.overrides.overrides(),
        sweeps: a.sweeps,
        exact_limits: ExactLimits::default(),
    };
    let workers = a.workers.unwrap_or_else(harness::worker_count);
    let rows = harness::run_plan(&plan, workers)?;
    harness::write_outputs(&a.out, &plan.topology_name, &rows)?;
    let bad = rows.iter().filter(|r| r.status != harness::RowStatus::Ok).count();
    eprintln!("{} rows ({} not ok) written to {}", rows.len(), bad, a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn scenario(a: &ScenarioArgs) -> Res<ExitCode> {
    let net = network::<f64>(&a.topology, CatalogConfig::default())?;
    let (scn, _) = harness::cell_scenario(net, a.length, a.mode, a.seed, &a.overrides.overrides())?;
    write_or_print(a.out.as_deref(), &workload::write_scenario(&scn))?;
    Ok(ExitCode::SUCCESS)
}

fn load_scenario(topology: &str, path: &Path) -> Res<Scenario<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let net = network(topology, workload::scenario_catalog_config(&text)?)?;
    Ok(workload::parse_scenario(&text, net)?)
}

fn load_state(path: &Path) -> Res<PlacementState> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(state::parse_placement(&text)?)
}

fn problem(a: &ProblemArgs) -> Res<(Scenario<f64>, PlacementState)> {
    if let Some(seed) = a.tiny {
        let config = TinyConfig { ample: !a.tight, with_snapshot: a.snapshot, ..TinyConfig::default() };
        let inst = tiny_instance::<f64>(seed, config);
        return Ok((inst.scenario, inst.template));
    }
    let path = a.scenario.as_deref().ok_or("--scenario or --tiny is required")?;
    let scn = load_scenario(&a.topology, path)?;
    let template = match &a.prior {
        Some(p) => harness::phase2_template(&scn, &load_state(p)?),
        None => harness::phase1_template(&scn),
    };
    Ok((scn, template))
}

fn print_cost(scn: &Scenario<f64>, st: &PlacementState) -> Res<()> {
    let c = cost::total_cost(scn, st)?;
    println!("total {:.12}", c.total);
    println!("edge_opex {:.12}", c.edge_opex);
    println!("cloud_charges {:.12}", c.cloud_charges);
    println!("penalties {:.12}", c.penalties);
    println!("n_mgr {}", c.n_mgr);
    println!("n_rep {}", c.n_rep);
    Ok(())
}

fn export(a: &ExportArgs) -> Res<ExitCode> {
    let (scn, template) = problem(&a.problem)?;
    write_or_print(a.out.as_deref(), &lp::export_milp(&scn, &template))?;
    Ok(ExitCode::SUCCESS)
}

fn import(a: &ImportArgs) -> Res<ExitCode> {
    let (scn, template) = problem(&a.problem)?;
    let text = std::fs::read_to_string(&a.solution).map_err(|e| format!("{}: {e}", a.solution.display()))?;
    let imported = lp::import_solution(&scn, &template, &text)?;
    let violations = state::validate_all(&scn, &imported.state);
    println!("lp_objective {:.12}", imported.objective);
    if !violations.is_empty() {
        for v in &violations {
            println!("violation {v:?}");
        }
        return Ok(ExitCode::FAILURE);
    }
    print_cost(&scn, &imported.state)?;
    if let Some(out) = &a.out {
        write_or_print(Some(out), &state::write_placement(&imported.state))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(a: &ValidateArgs) -> Res<ExitCode> {
    let (scn, _) = problem(&a.problem)?;
    let st = load_state(&a.state)?;
    let violations = state::validate_all(&scn, &st);
    if violations.is_empty() {
        println!("valid");
        print_cost(&scn, &st)?;
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            println!("violation {v:?}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn oracle(a: &OracleArgs) -> Res<ExitCode> {
    let (scn, template) = problem(&a.problem)?;
    let limits = ExactLimits { max_assignments: a.max_assignments, ..ExactLimits::default() };
    let r = exact::solve_exact(&scn, &template, limits)?;
    println!("nodes {}", r.nodes_explored);
    println!("proven_optimal {}", r.proven_optimal);
    print_cost(&scn, &r.best_state)?;
    if let Some(out) = &a.out {
        write_or_print(Some(out), &state::write_placement(&r.best_state))?;
    }
    if let Some(out) = &a.solution_out {
        write_or_print(Some(out), &lp::write_solution(&lp::solution_from_state(&scn, &template, &r.best_state)))?;
    }
    Ok(ExitCode::SUCCESS)
}
